#include "ppo1/gaussian_policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ppo1 {

namespace {
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
}

DiagGaussianPolicy policy_from(const NetworkParams& params, const Vector& input) {
  return {forward(params, input), params.log_std.array().exp()};
}

void ClipConfig::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("clip epsilon must lie in (0,1)");
  if (!(max_log_ratio > 0.0)) throw ConfigError("max_log_ratio must be positive");
  if (!std::isfinite(entropy_coef)) throw ConfigError("entropy_coef must be finite");
}

Vector sample(const DiagGaussianPolicy& policy, std::mt19937_64& rng) {
  Vector a(policy.mean.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    // fresh distribution per draw: no cached second normal outlives the call
    std::normal_distribution<double> n(policy.mean[i], policy.std[i]);
    a[i] = n(rng);
  }
  return a;
}

double log_prob(const DiagGaussianPolicy& policy, const Vector& raw_action) {
  require_same_size(policy.mean.size(), raw_action.size(), "action");
  const auto z = (raw_action - policy.mean).array() / policy.std.array();
  return -(0.5 * z.square() + policy.std.array().log()).sum() -
         static_cast<double>(raw_action.size()) * kHalfLog2Pi;
}

double entropy(const DiagGaussianPolicy& policy) {
  return policy.std.array().log().sum() +
         static_cast<double>(policy.std.size()) * (0.5 + kHalfLog2Pi);
}

double ratio(double logp_new, double logp_old, double max_log_ratio) {
  return std::exp(std::min(logp_new - logp_old, max_log_ratio));
}

namespace {
double sgn(double x) { return static_cast<double>((x > 0.0) - (x < 0.0)); }
}  // namespace

double clipped_objective(double r, double adv, const ClipConfig& cfg) {
  if (cfg.mode == ObjectiveMode::paper_literal) {
    return std::min(r, 1.0 + cfg.epsilon * sgn(adv)) * adv;
  }
  return std::min(r * adv, std::clamp(r, 1.0 - cfg.epsilon, 1.0 + cfg.epsilon) * adv);
}

bool ratio_branch_active(double r, double adv, const ClipConfig& cfg) {
  if (adv == 0.0) return false;
  if (cfg.mode == ObjectiveMode::paper_literal) return r < 1.0 + cfg.epsilon * sgn(adv);
  // min(r A, clip(r) A) follows r A unless the clip bound binds on the favourable side
  return adv > 0.0 ? r < 1.0 + cfg.epsilon : r > 1.0 - cfg.epsilon;
}

SurrogateResult surrogate_loss_and_grad(const NetworkParams& params, const Vector& input,
                                        std::span<const SurrogateSample> batch,
                                        const ClipConfig& cfg) {
  if (batch.empty()) throw std::invalid_argument("surrogate batch must be non-empty");
  const DiagGaussianPolicy pi = policy_from(params, input);
  const Vector inv_var = pi.std.array().square().inverse();
  const double n = static_cast<double>(batch.size());

  SurrogateResult out;
  out.grads = zeros_like(params);
  out.ratios.reserve(batch.size());
  Vector mean_upstream = Vector::Zero(pi.mean.size());
  Vector log_std_grad = Vector::Zero(pi.mean.size());

  for (const auto& s : batch) {
    const double logp = log_prob(pi, s.raw_action);
    const double log_r = logp - s.logp_old;
    const double r = ratio(logp, s.logp_old, cfg.max_log_ratio);
    out.ratios.push_back(r);
    out.objective += clipped_objective(r, s.advantage, cfg) / n;
    if (log_r >= cfg.max_log_ratio || !ratio_branch_active(r, s.advantage, cfg)) continue;

    // d(r A)/d logp = r A
    const double w = r * s.advantage / n;
    const Vector diff = s.raw_action - pi.mean;
    mean_upstream += w * diff.cwiseProduct(inv_var);
    log_std_grad += w * (diff.array().square() * inv_var.array() - 1.0).matrix();
  }

  if (cfg.entropy_coef != 0.0) {
    out.objective += cfg.entropy_coef * entropy(pi);
    log_std_grad.array() += cfg.entropy_coef;
  }
  if (!std::isfinite(out.objective) || !mean_upstream.allFinite() || !log_std_grad.allFinite()) {
    throw DivergedUpdate("non-finite surrogate objective");
  }

  out.grads = backward(params, input, mean_upstream);
  out.grads.log_std = log_std_grad;
  return out;
}

}  // namespace ppo1
