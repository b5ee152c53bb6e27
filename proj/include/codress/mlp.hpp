#pragma once

#include "codress/body_sim.hpp"
#include "codress/geometry.hpp"

#include <span>
#include <vector>

namespace codress::rl {

/// Fully connected network with tanh hidden layers and a linear output.
///
/// Parameters live in a caller-owned flat vector. For every layer, in order,
/// the weight matrix (out x in, column-major) is followed by the bias (out).
/// Batched calls take samples as columns.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<int> sizes);

  [[nodiscard]] const std::vector<int>& sizes() const { return sizes_; }
  [[nodiscard]] int input_size() const { return sizes_.front(); }
  [[nodiscard]] int output_size() const { return sizes_.back(); }
  [[nodiscard]] int num_params() const { return num_params_; }
  [[nodiscard]] int layers() const { return static_cast<int>(sizes_.size()) - 1; }

  /// Offset of layer l's weights in the flat vector; bias follows at +out*in.
  [[nodiscard]] int weight_offset(int layer) const { return offsets_[layer]; }

  struct Cache {
    std::vector<MatX> activations;  // input, then every hidden post-activation
  };

  VecX forward(const VecX& x, std::span<const double> params) const;
  MatX forward(const MatX& X, std::span<const double> params) const;
  MatX forward(const MatX& X, std::span<const double> params, Cache& cache) const;

  /// Gradient of sum(dY .* Y) with respect to the parameters.
  VecX backward(const Cache& cache, std::span<const double> params, const MatX& dY) const;

  /// Directional derivative dY = (dY/dparams) v.
  MatX jvp(const Cache& cache, std::span<const double> params, std::span<const double> v) const;

  /// Glorot-uniform hidden weights, output weights uniform in +-output_scale, zero biases.
  VecX initial_params(Rng& rng, double output_scale) const;

 private:
  std::vector<int> sizes_;
  std::vector<int> offsets_;
  int num_params_ = 0;
};

}  // namespace codress::rl
