#pragma once

#include "ppo1/mlp.hpp"

#include <random>
#include <span>
#include <vector>

namespace ppo1 {

/// Diagonal multivariate normal over the raw action space.
struct DiagGaussianPolicy {
  Vector mean;
  Vector std;
};

DiagGaussianPolicy policy_from(const NetworkParams& params, const Vector& input);

enum class ObjectiveMode {
  standard_clip,  // min(r A, clip(r, 1-eps, 1+eps) A)
  paper_literal,  // min(r, 1 + eps sgn(A)) A
};

struct ClipConfig {
  double epsilon = 0.3;
  ObjectiveMode mode = ObjectiveMode::standard_clip;
  double entropy_coef = 0.0;
  // Ratios are evaluated as exp(min(logp_new - logp_old, max_log_ratio)).
  double max_log_ratio = 20.0;

  void validate() const;
};

/// Raw (unclipped) draw from N(mean, diag(std^2)).
Vector sample(const DiagGaussianPolicy& policy, std::mt19937_64& rng);

double log_prob(const DiagGaussianPolicy& policy, const Vector& raw_action);

double entropy(const DiagGaussianPolicy& policy);

double ratio(double logp_new, double logp_old, double max_log_ratio = 20.0);

double clipped_objective(double ratio, double advantage, const ClipConfig& cfg);

/// True when the objective at (ratio, advantage) follows the ratio branch, i.e.
/// its derivative with respect to the ratio is the advantage rather than zero.
bool ratio_branch_active(double ratio, double advantage, const ClipConfig& cfg);

struct SurrogateSample {
  Vector raw_action;
  double logp_old = 0.0;
  double advantage = 0.0;
};

struct SurrogateResult {
  double objective = 0.0;  // batch mean of clipped objectives (+ entropy bonus)
  ParamGradients grads;    // d objective / d params, including log_std
  std::vector<double> ratios;
};

/// Clipped surrogate over a batch sharing one input state, with its exact
/// gradient. Maximize `objective`; descend on `-grads`.
SurrogateResult surrogate_loss_and_grad(const NetworkParams& params, const Vector& input,
                                        std::span<const SurrogateSample> batch,
                                        const ClipConfig& cfg);

}  // namespace ppo1
