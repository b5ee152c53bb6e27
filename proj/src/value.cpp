#include "codress/value.hpp"

#include "codress/errors.hpp"

#include <cmath>

namespace codress::rl {

ValueFunction ValueFunction::create(int obs_dim, Rng& rng, double scale,
                                    const std::vector<int>& hidden) {
  if (!(scale > 0.0)) throw ArgumentError("value scale must be positive");
  std::vector<int> sizes{obs_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  ValueFunction vf;
  vf.net = Mlp(sizes);
  vf.params = vf.net.initial_params(rng, 0.05);
  vf.scale = scale;
  return vf;
}

double ValueFunction::predict(const VecX& obs) const {
  return scale * net.forward(obs, {params.data(), static_cast<size_t>(params.size())})[0];
}

VecX ValueFunction::predict(const MatX& obs) const {
  const MatX y = net.forward(obs, {params.data(), static_cast<size_t>(params.size())});
  return scale * y.row(0).transpose();
}

std::vector<double> fit_value(ValueFunction& vf, const MatX& obs, const VecX& targets,
                              const ValueFitConfig& cfg) {
  if (obs.cols() != targets.size()) throw ArgumentError("fit_value: observation/target count mismatch");
  if (obs.cols() == 0) throw ArgumentError("fit_value: empty batch");
  const double n = static_cast<double>(obs.cols());
  const std::span<const double> p{vf.params.data(), static_cast<size_t>(vf.params.size())};
  // Regress in network units so the loss does not depend on the output scale.
  const VecX y = targets / vf.scale;

  auto loss_and_grad = [&](VecX* grad) {
    Mlp::Cache cache;
    const MatX pred = vf.net.forward(obs, p, cache);
    const VecX err = pred.row(0).transpose() - y;
    if (grad) {
      MatX dY(1, obs.cols());
      dY.row(0) = (2.0 / n) * err.transpose();
      *grad = vf.net.backward(cache, p, dY);
    }
    return err.squaredNorm() / n;
  };

  std::vector<double> history;
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  VecX m = VecX::Zero(vf.params.size());
  VecX v = VecX::Zero(vf.params.size());
  VecX g;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    // The loss at the current parameters is the previous epoch's post-update loss.
    history.push_back(loss_and_grad(&g));
    if (!g.allFinite()) throw NumericError("fit_value: non-finite gradient");
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
    const double c1 = 1.0 - std::pow(beta1, epoch);
    const double c2 = 1.0 - std::pow(beta2, epoch);
    vf.params.array() -= cfg.step_size * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
  history.push_back(loss_and_grad(nullptr));
  return history;
}

}  // namespace codress::rl
