#include "codress/mlp.hpp"

#include "codress/errors.hpp"

#include <cmath>

namespace codress::rl {

namespace {

using ConstMap = Eigen::Map<const MatX>;
using ConstVecMap = Eigen::Map<const VecX>;

}  // namespace

Mlp::Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw ArgumentError("Mlp needs at least input and output sizes");
  for (int s : sizes_) {
    if (s <= 0) throw ArgumentError("Mlp layer sizes must be positive");
  }
  int offset = 0;
  for (int l = 0; l < layers(); ++l) {
    offsets_.push_back(offset);
    offset += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
  }
  num_params_ = offset;
}

VecX Mlp::forward(const VecX& x, std::span<const double> params) const {
  if (x.size() != input_size()) {
    throw ArgumentError("Mlp input has " + std::to_string(x.size()) + " values, expected " +
                        std::to_string(input_size()));
  }
  VecX a = x;
  for (int l = 0; l < layers(); ++l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    ConstMap W(params.data() + offsets_[l], out, in);
    ConstVecMap b(params.data() + offsets_[l] + out * in, out);
    VecX z = W * a + b;
    if (l + 1 < layers()) z = z.array().tanh();
    a = std::move(z);
  }
  return a;
}

MatX Mlp::forward(const MatX& X, std::span<const double> params) const {
  Cache cache;
  return forward(X, params, cache);
}

MatX Mlp::forward(const MatX& X, std::span<const double> params, Cache& cache) const {
  if (X.rows() != input_size()) throw ArgumentError("Mlp batch input has wrong row count");
  if (static_cast<int>(params.size()) < num_params_) throw ArgumentError("Mlp parameter vector too short");
  cache.activations.clear();
  cache.activations.push_back(X);
  MatX a = X;
  for (int l = 0; l < layers(); ++l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    ConstMap W(params.data() + offsets_[l], out, in);
    ConstVecMap b(params.data() + offsets_[l] + out * in, out);
    MatX z = W * a;
    z.colwise() += b;
    if (l + 1 < layers()) {
      z = z.array().tanh();
      cache.activations.push_back(z);
    }
    a = std::move(z);
  }
  return a;
}

VecX Mlp::backward(const Cache& cache, std::span<const double> params, const MatX& dY) const {
  VecX grad = VecX::Zero(num_params_);
  MatX delta = dY;
  for (int l = layers() - 1; l >= 0; --l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    const MatX& a_in = cache.activations[l];
    Eigen::Map<MatX> gW(grad.data() + offsets_[l], out, in);
    Eigen::Map<VecX> gb(grad.data() + offsets_[l] + out * in, out);
    gW.noalias() = delta * a_in.transpose();
    gb = delta.rowwise().sum();
    if (l > 0) {
      ConstMap W(params.data() + offsets_[l], out, in);
      MatX back = W.transpose() * delta;
      delta = back.array() * (1.0 - a_in.array().square());
    }
  }
  return grad;
}

MatX Mlp::jvp(const Cache& cache, std::span<const double> params, std::span<const double> v) const {
  const Eigen::Index n = cache.activations.front().cols();
  MatX da = MatX::Zero(sizes_[0], n);
  for (int l = 0; l < layers(); ++l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    ConstMap W(params.data() + offsets_[l], out, in);
    ConstMap dW(v.data() + offsets_[l], out, in);
    ConstVecMap db(v.data() + offsets_[l] + out * in, out);
    MatX dz = dW * cache.activations[l];
    if (l > 0) dz.noalias() += W * da;
    dz.colwise() += db;
    if (l + 1 < layers()) {
      da = dz.array() * (1.0 - cache.activations[l + 1].array().square());
    } else {
      da = std::move(dz);
    }
  }
  return da;
}

VecX Mlp::initial_params(Rng& rng, double output_scale) const {
  VecX p = VecX::Zero(num_params_);
  for (int l = 0; l < layers(); ++l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    const double bound = l + 1 < layers() ? std::sqrt(6.0 / (in + out)) : output_scale;
    for (int i = 0; i < out * in; ++i) {
      p[offsets_[l] + i] = bound * (2.0 * std::generate_canonical<double, 53>(rng) - 1.0);
    }
  }
  return p;
}

}  // namespace codress::rl
