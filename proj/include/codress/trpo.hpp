#pragma once

#include "codress/policy.hpp"

#include <functional>
#include <string>

namespace codress::rl {

struct TrpoConfig {
  double kl_delta = 0.01;
  int cg_iterations = 10;
  double cg_damping = 0.1;
  double cg_residual_tol = 1e-10;
  double backtrack_ratio = 0.8;
  int max_backtracks = 15;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  /// Fisher-vector products use every k-th sample of the batch.
  int fisher_stride = 5;

  void validate() const;
};

struct TrpoDiagnostics {
  bool accepted = false;
  bool aborted = false;          // non-finite gradient
  bool cg_warning = false;       // CG residual not reduced
  double surrogate_improvement = 0.0;
  double kl = 0.0;
  int backtracks = 0;
  double gradient_norm = 0.0;
  double cg_residual = 0.0;
  std::string message;
};

struct CgResult {
  VecX x;
  double initial_residual = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

/// Solves A x = b for symmetric positive-definite A given as a product operator.
CgResult conjugate_gradient(const std::function<VecX(const VecX&)>& product, const VecX& b,
                            int max_iterations, double residual_tol = 1e-10);

/// Importance-weighted surrogate mean(exp(logp - logp_old) * A).
double surrogate(const JointPolicy& policy, const JointPolicy::Forward& f, const MatX& actions,
                 const VecX& old_log_prob, const VecX& advantages);

/// Gradient of the surrogate at the parameters the forward pass was taken at,
/// assuming those are also the behaviour parameters (ratio = 1).
VecX surrogate_gradient(const JointPolicy& policy, const JointPolicy::Forward& f,
                        const MatX& actions, const VecX& advantages);

/// Mean KL(old || new) over the batch.
double mean_kl(const JointPolicy::Forward& old_f, const JointPolicy::Forward& new_f);

/// Gradient of mean KL(old || new) with respect to the new parameters.
VecX kl_gradient(const JointPolicy& policy, const JointPolicy::Forward& old_f,
                 const JointPolicy::Forward& new_f);

/// (F + damping I) v where F is the Hessian of mean KL at the forward's parameters.
VecX fisher_vector_product(const JointPolicy& policy, const JointPolicy::Forward& f, const VecX& v,
                           double damping);

/// One trust-region step over the flat parameter vector of every agent.
TrpoDiagnostics trpo_update(JointPolicy& policy, const MatX& obs, const MatX& actions,
                            const VecX& advantages, const TrpoConfig& cfg);

}  // namespace codress::rl
