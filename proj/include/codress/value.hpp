#pragma once

#include "codress/mlp.hpp"

#include <vector>

namespace codress::rl {

inline const std::vector<int> kValueHidden = {64, 64};

/// State-value baseline over the joint observation. The network output is
/// multiplied by `scale` so that it can represent returns in the hundreds.
struct ValueFunction {
  Mlp net;
  VecX params;
  double scale = 100.0;

  static ValueFunction create(int obs_dim, Rng& rng, double scale = 100.0,
                              const std::vector<int>& hidden = kValueHidden);

  [[nodiscard]] double predict(const VecX& obs) const;
  [[nodiscard]] VecX predict(const MatX& obs) const;
};

struct ValueFitConfig {
  int epochs = 20;
  double step_size = 3e-3;
};

/// Full-batch Adam regression on mean squared error. Returns the loss before
/// the first epoch followed by the loss after every epoch.
std::vector<double> fit_value(ValueFunction& vf, const MatX& obs, const VecX& targets,
                              const ValueFitConfig& cfg);

}  // namespace codress::rl
