#include "ppo1/gaussian_policy.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace ppo1;

namespace {

// Written out per component so it does not share code with log_prob().
double gaussian_logpdf(const Vector& mean, const Vector& log_std, const Vector& a) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const double sigma = std::exp(log_std[k]);
    const double z = (a[k] - mean[k]) / sigma;
    s += -0.5 * z * z - log_std[k] - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  return s;
}

double reference_clip(double r, double adv, double eps, bool literal) {
  if (literal) return std::min(r, adv >= 0 ? 1 + eps : 1 - eps) * adv;
  return std::min(r * adv, std::clamp(r, 1 - eps, 1 + eps) * adv);
}

// Surrogate objective rebuilt from forward() alone.
double reference_objective(const NetworkParams& p, const Vector& input,
                           const std::vector<SurrogateSample>& batch, const ClipConfig& cfg) {
  const Vector mean = forward(p, input);
  double total = 0.0;
  for (const auto& s : batch) {
    const double r = std::exp(gaussian_logpdf(mean, p.log_std, s.raw_action) - s.logp_old);
    total += reference_clip(r, s.advantage, cfg.epsilon, cfg.mode == ObjectiveMode::paper_literal);
  }
  double ent = 0.0;
  for (Eigen::Index k = 0; k < p.log_std.size(); ++k) {
    ent += p.log_std[k] + 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
  }
  return total / static_cast<double>(batch.size()) + cfg.entropy_coef * ent;
}

}  // namespace

TEST_CASE("log_prob closed forms") {
  DiagGaussianPolicy pi{Vector::Zero(1), Vector::Ones(1)};
  CHECK(log_prob(pi, Vector::Zero(1)) == doctest::Approx(-0.9189385).epsilon(1e-7));
  DiagGaussianPolicy pi2{Vector::Constant(2, 0.3), Vector::Ones(2)};
  CHECK(log_prob(pi2, pi2.mean) == doctest::Approx(-1.8378771).epsilon(1e-7));

  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    Vector mu(3), ls(3), a(3);
    for (int k = 0; k < 3; ++k) {
      mu[k] = n(rng);
      ls[k] = 0.5 * n(rng);
      a[k] = n(rng);
    }
    DiagGaussianPolicy p{mu, ls.array().exp()};
    CHECK(log_prob(p, a) == doctest::Approx(gaussian_logpdf(mu, ls, a)).epsilon(1e-12));
    DiagGaussianPolicy shifted{mu.array() + 1.7, p.std};
    CHECK(log_prob(shifted, a.array() + 1.7) == doctest::Approx(log_prob(p, a)).epsilon(1e-12));
  }
}

TEST_CASE("entropy of a diagonal Gaussian") {
  DiagGaussianPolicy pi{Vector::Zero(2), (Vector(2) << 0.5, 2.0).finished()};
  const double expected = std::log(0.5) + std::log(2.0) + std::log(2 * std::numbers::pi * std::numbers::e);
  CHECK(entropy(pi) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("sampling") {
  DiagGaussianPolicy pi{(Vector(2) << 0.3, -0.6).finished(), (Vector(2) << 0.5, 1.5).finished()};
  std::mt19937_64 a(9), b(9);
  CHECK(sample(pi, a) == sample(pi, b));

  const int n = 100000;
  Vector sum = Vector::Zero(2), sq = Vector::Zero(2);
  std::mt19937_64 rng(10);
  for (int i = 0; i < n; ++i) {
    const Vector x = sample(pi, rng);
    sum += x;
    sq += x.cwiseAbs2();
  }
  const Vector mean = sum / n;
  const Vector var = sq / n - mean.cwiseAbs2();
  for (int k = 0; k < 2; ++k) {
    CHECK(std::abs(mean[k] - pi.mean[k]) < 4 * pi.std[k] / std::sqrt(n));
    CHECK(std::abs(var[k] / (pi.std[k] * pi.std[k]) - 1.0) < 0.05);
  }
}

TEST_CASE("importance ratio") {
  CHECK(ratio(-1.0, -1.0) == 1.0);
  CHECK(ratio(-0.5, -1.0) == doctest::Approx(1.64872).epsilon(1e-5));
  CHECK(ratio(-3.0, -1.0) == doctest::Approx(0.13534).epsilon(1e-4));
  CHECK(ratio(100.0, 0.0) == doctest::Approx(std::exp(20.0)));
}

TEST_CASE("clipped objective case table") {
  ClipConfig standard;
  ClipConfig literal;
  literal.mode = ObjectiveMode::paper_literal;
  for (double r : {0.5, 0.7, 1.0, 1.3, 2.0}) {
    for (double a : {-1.0, 1.0}) {
      CHECK(clipped_objective(r, a, standard) == doctest::Approx(reference_clip(r, a, 0.3, false)));
      CHECK(clipped_objective(r, a, literal) == doctest::Approx(reference_clip(r, a, 0.3, true)));
    }
  }
  CHECK(clipped_objective(2.0, 1.0, standard) == doctest::Approx(1.3));
  CHECK(clipped_objective(2.0, 1.0, literal) == doctest::Approx(1.3));
  CHECK(clipped_objective(0.5, -1.0, standard) == doctest::Approx(-0.7));
  CHECK(clipped_objective(0.5, -1.0, literal) == doctest::Approx(-0.5));
  for (double a : {-2.0, -0.3, 0.0, 0.8}) {
    CHECK(clipped_objective(1.0, a, standard) == doctest::Approx(a));
    // the literal form scales negative advantages by 1 - eps even at r = 1
    CHECK(clipped_objective(1.0, a, literal) == doctest::Approx(a >= 0 ? a : 0.7 * a));
  }
  ClipConfig bad;
  bad.epsilon = 1.5;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("surrogate gradient matches finite differences of a reference objective") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  const double h = 1e-5;
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + trial % 3;
    NetworkLayout layout{1, {4, 4}, d, Activation::tanh};
    NetworkParams p = init_network(layout, rng());
    for (auto& l : p.layers) l.bias = Vector::NullaryExpr(l.bias.size(), [&] { return 0.5 * n(rng); });
    p.log_std = Vector::NullaryExpr(d, [&] { return -1.0 + 1.5 * u(rng); });
    const Vector input = Vector::Constant(1, n(rng));
    ClipConfig cfg;
    cfg.mode = trial % 2 ? ObjectiveMode::paper_literal : ObjectiveMode::standard_clip;
    cfg.entropy_coef = trial % 5 == 0 ? 0.02 : 0.0;

    const auto pi = policy_from(p, input);
    std::vector<SurrogateSample> batch;
    while (batch.size() < 1 + static_cast<std::size_t>(trial % 8)) {
      SurrogateSample s{sample(pi, rng), 0.0, n(rng)};
      const double lp = gaussian_logpdf(pi.mean, p.log_std, s.raw_action);
      s.logp_old = lp + 1.2 * u(rng) - 0.6;
      const double r = std::exp(lp - s.logp_old);
      if (std::abs(r - 0.7) < 1e-3 || std::abs(r - 1.3) < 1e-3) continue;
      batch.push_back(s);
    }

    const auto res = surrogate_loss_and_grad(p, input, batch, cfg);
    CHECK(res.objective == doctest::Approx(reference_objective(p, input, batch, cfg)).epsilon(1e-12));
    const Vector g = res.grads.flatten();
    const Vector theta = p.flatten();
    NetworkParams probe = p;
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
      Vector t = theta;
      t[k] += h;
      probe.assign_flat(t);
      const double plus = reference_objective(probe, input, batch, cfg);
      t[k] -= 2 * h;
      probe.assign_flat(t);
      const double minus = reference_objective(probe, input, batch, cfg);
      const double fd = (plus - minus) / (2 * h);
      if (std::abs(fd) < 1e-8) {
        CHECK(std::abs(g[k]) < 1e-8);
      } else {
        CHECK(std::abs(g[k] - fd) / std::abs(fd) < 1e-4);
      }
      ++checked;
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("first pass objective is the mean whitened advantage") {
  NetworkLayout layout;
  const auto p = init_network(layout, 3);
  const Vector input = Vector::Zero(1);
  const auto pi = policy_from(p, input);
  std::mt19937_64 rng(1);
  const double adv[] = {-1.2247448713915890, 0.0, 1.2247448713915890};
  std::vector<SurrogateSample> batch;
  for (double a : adv) {
    const Vector x = sample(pi, rng);
    batch.push_back({x, log_prob(pi, x), a});
  }
  const auto res = surrogate_loss_and_grad(p, input, batch, ClipConfig{});
  CHECK(std::abs(res.objective) < 1e-12);
  for (double r : res.ratios) CHECK(r == 1.0);
}

TEST_CASE("fully clipped sample has zero gradient") {
  NetworkLayout layout;
  const auto p = init_network(layout, 4);
  const Vector input = Vector::Zero(1);
  const auto pi = policy_from(p, input);
  const Vector a = Vector::Constant(1, 0.4);
  // r = e^0.5 > 1.3 with positive advantage: constant branch
  std::vector<SurrogateSample> batch{{a, log_prob(pi, a) - 0.5, 1.0}};
  const auto res = surrogate_loss_and_grad(p, input, batch, ClipConfig{});
  CHECK(res.grads.flatten().isZero());
  CHECK(res.objective == doctest::Approx(1.3));
  CHECK_FALSE(ratio_branch_active(res.ratios[0], 1.0, ClipConfig{}));
}

TEST_CASE("non-finite surrogate input is a diverged update") {
  NetworkLayout layout;
  const auto p = init_network(layout, 4);
  std::vector<SurrogateSample> batch{{Vector::Constant(1, 0.1), 0.0, std::nan("")}};
  CHECK_THROWS_AS(surrogate_loss_and_grad(p, Vector::Zero(1), batch, ClipConfig{}), DivergedUpdate);
}
