#include "codress/trpo.hpp"

#include "codress/errors.hpp"

#include <cmath>

namespace codress::rl {

void TrpoConfig::validate() const {
  if (!(kl_delta > 0.0)) throw ConfigError("trpo.kl_delta must be positive");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("trpo.gamma must lie in (0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw ConfigError("trpo.gae_lambda must lie in [0, 1]");
  if (cg_iterations < 1) throw ConfigError("trpo.cg_iterations must be at least 1");
  if (cg_damping < 0.0) throw ConfigError("trpo.cg_damping must be non-negative");
  if (!(backtrack_ratio > 0.0 && backtrack_ratio < 1.0)) throw ConfigError("trpo.backtrack_ratio must lie in (0, 1)");
  if (max_backtracks < 0) throw ConfigError("trpo.max_backtracks must be non-negative");
  if (fisher_stride < 1) throw ConfigError("trpo.fisher_stride must be at least 1");
}

CgResult conjugate_gradient(const std::function<VecX(const VecX&)>& product, const VecX& b,
                            int max_iterations, double residual_tol) {
  CgResult out;
  out.x = VecX::Zero(b.size());
  VecX r = b;
  VecX p = b;
  double rr = r.squaredNorm();
  out.initial_residual = std::sqrt(rr);
  for (int i = 0; i < max_iterations && rr > residual_tol; ++i) {
    const VecX Ap = product(p);
    const double pAp = p.dot(Ap);
    if (!(pAp > 0.0)) break;
    const double alpha = rr / pAp;
    out.x += alpha * p;
    r -= alpha * Ap;
    const double rr_new = r.squaredNorm();
    p = r + (rr_new / rr) * p;
    rr = rr_new;
    out.iterations = i + 1;
  }
  out.residual = std::sqrt(rr);
  return out;
}

double surrogate(const JointPolicy& policy, const JointPolicy::Forward& f, const MatX& actions,
                 const VecX& old_log_prob, const VecX& advantages) {
  const VecX lp = policy.log_prob(f, actions);
  return ((lp - old_log_prob).array().exp() * advantages.array()).mean();
}

VecX surrogate_gradient(const JointPolicy& policy, const JointPolicy::Forward& f,
                        const MatX& actions, const VecX& advantages) {
  const double n = static_cast<double>(actions.cols());
  const VecX inv_var = (-2.0 * f.log_std).array().exp();
  const MatX diff = actions - f.mean;
  // d logp / d mean = (a - mu) / sigma^2
  const MatX dmean =
      (diff.array().colwise() * inv_var.array()).rowwise() * (advantages.transpose().array() / n);
  VecX grad = policy.mean_vjp(f, dmean);
  // d logp / d log_std = (a - mu)^2 / sigma^2 - 1
  const MatX z2 = diff.array().square().colwise() * inv_var.array();
  const VecX dls = ((z2.array() - 1.0).rowwise() * advantages.transpose().array()).rowwise().sum() / n;
  const auto idx = policy.log_std_indices();
  for (size_t k = 0; k < idx.size(); ++k) {
    grad[idx[k]] = f.log_std[k] > kMinLogStd ? dls[k] : 0.0;
  }
  return grad;
}

double mean_kl(const JointPolicy::Forward& old_f, const JointPolicy::Forward& new_f) {
  const VecX var_old = (2.0 * old_f.log_std).array().exp();
  const VecX inv_var_new = (-2.0 * new_f.log_std).array().exp();
  const double const_term =
      (new_f.log_std - old_f.log_std).sum() + 0.5 * (var_old.array() * inv_var_new.array()).sum() -
      0.5 * static_cast<double>(old_f.log_std.size());
  const MatX d2 = (old_f.mean - new_f.mean).array().square();
  const double quad = 0.5 * (d2.array().colwise() * inv_var_new.array()).sum() /
                      static_cast<double>(old_f.mean.cols());
  return const_term + quad;
}

VecX kl_gradient(const JointPolicy& policy, const JointPolicy::Forward& old_f,
                 const JointPolicy::Forward& new_f) {
  const double n = static_cast<double>(old_f.mean.cols());
  const VecX inv_var_new = (-2.0 * new_f.log_std).array().exp();
  const MatX diff = new_f.mean - old_f.mean;
  const MatX dmean = (diff.array().colwise() * inv_var_new.array()) / n;
  VecX grad = policy.mean_vjp(new_f, dmean);
  const VecX var_old = (2.0 * old_f.log_std).array().exp();
  const VecX mean_d2 = diff.array().square().rowwise().sum() / n;
  const VecX dls = 1.0 - ((var_old + mean_d2).array() * inv_var_new.array());
  const auto idx = policy.log_std_indices();
  for (size_t k = 0; k < idx.size(); ++k) grad[idx[k]] = dls[k];
  return grad;
}

VecX fisher_vector_product(const JointPolicy& policy, const JointPolicy::Forward& f, const VecX& v,
                           double damping) {
  const double n = static_cast<double>(f.mean.cols());
  const VecX inv_var = (-2.0 * f.log_std).array().exp();
  const MatX jv = policy.mean_jvp(f, v);
  const MatX weighted = (jv.array().colwise() * inv_var.array()) / n;
  VecX out = policy.mean_vjp(f, weighted);
  const auto idx = policy.log_std_indices();
  for (int k : idx) out[k] = 2.0 * v[k];
  out += damping * v;
  return out;
}

TrpoDiagnostics trpo_update(JointPolicy& policy, const MatX& obs, const MatX& actions,
                            const VecX& advantages, const TrpoConfig& cfg) {
  TrpoDiagnostics diag;
  const VecX theta_old = policy.flat_params();
  const JointPolicy::Forward old_f = policy.forward(obs, theta_old);
  const VecX old_lp = policy.log_prob(old_f, actions);
  const double surr_old = advantages.mean();

  const VecX g = surrogate_gradient(policy, old_f, actions, advantages);
  diag.gradient_norm = g.norm();
  if (!g.allFinite()) {
    diag.aborted = true;
    diag.message = "non-finite policy gradient; update skipped";
    return diag;
  }
  if (diag.gradient_norm == 0.0) {
    diag.message = "zero policy gradient";
    return diag;
  }

  JointPolicy::Forward fisher_f;
  if (cfg.fisher_stride > 1 && obs.cols() > cfg.fisher_stride) {
    const Eigen::Index m = (obs.cols() + cfg.fisher_stride - 1) / cfg.fisher_stride;
    MatX sub(obs.rows(), m);
    for (Eigen::Index i = 0; i < m; ++i) sub.col(i) = obs.col(i * cfg.fisher_stride);
    fisher_f = policy.forward(sub, theta_old);
  } else {
    fisher_f = old_f;
  }
  auto fvp = [&](const VecX& v) { return fisher_vector_product(policy, fisher_f, v, cfg.cg_damping); };

  const CgResult cg = conjugate_gradient(fvp, g, cfg.cg_iterations, cfg.cg_residual_tol);
  diag.cg_residual = cg.residual;
  if (!(cg.residual < cg.initial_residual)) {
    diag.cg_warning = true;
    diag.message = "conjugate gradient did not reduce the residual";
  }
  const double shs = cg.x.dot(fvp(cg.x));
  if (!(shs > 0.0) || !std::isfinite(shs)) {
    diag.aborted = true;
    diag.message = "non-positive curvature along the natural gradient";
    return diag;
  }
  const VecX full_step = std::sqrt(2.0 * cfg.kl_delta / shs) * cg.x;

  double fraction = 1.0;
  for (int k = 0; k <= cfg.max_backtracks; ++k, fraction *= cfg.backtrack_ratio) {
    const VecX theta = theta_old + fraction * full_step;
    const JointPolicy::Forward f = policy.forward(obs, theta);
    const double improvement = surrogate(policy, f, actions, old_lp, advantages) - surr_old;
    const double kl = mean_kl(old_f, f);
    diag.backtracks = k;
    if (std::isfinite(improvement) && std::isfinite(kl) && improvement > 0.0 && kl <= cfg.kl_delta) {
      policy.set_flat_params(theta);
      diag.accepted = true;
      diag.surrogate_improvement = improvement;
      diag.kl = kl;
      return diag;
    }
  }
  policy.set_flat_params(theta_old);
  if (diag.message.empty()) diag.message = "line search found no acceptable step";
  return diag;
}

}  // namespace codress::rl
