#include "ppo1/surrogates.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace ppo1;

namespace {

Vector v(std::initializer_list<double> xs) {
  Vector out(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) out[k++] = x;
  return out;
}

// Polar placement of the control cylinder for a centreline point x_c.
Vector on_centreline(double xc) { return v({std::abs(xc) - 0.55, xc < 0 ? 180.0 : 0.0}); }

}  // namespace

TEST_CASE("anchors are reproduced") {
  for (const auto& name : surrogate_names()) {
    const auto env = make_surrogate(name);
    CHECK_FALSE(env.calibration().empty());
    for (const auto& a : env.calibration()) CHECK(std::abs(env.reward(a.point) - a.value) < 1e-9);
  }
}

TEST_CASE("sphere") {
  const auto env = sphere(3);
  const Vector c = v({0.3, -0.4, 0.3});
  CHECK(env.reward(c) == 0.0);
  CHECK(env.reward(c + Vector::Unit(3, 0) * 1.0) == doctest::Approx(-1.0));
  const auto custom = sphere(1, v({0.2}));
  const auto found = grid_oracle(custom, 101);
  CHECK(found.argmax[0] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(grid_oracle(sphere(2), 3).value <= 0.0);
}

TEST_CASE("naca lift") {
  const auto env = naca_lift_env();
  CHECK(env.reward(v({50.6})) == doctest::Approx(0.94).epsilon(1e-12));
  CHECK(env.reward(v({0.0})) == doctest::Approx(0.0));
  CHECK(env.reward(v({-50.6})) == doctest::Approx(-0.94).epsilon(1e-12));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-90.0, 90.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng);
    CHECK(env.reward(v({-a})) == doctest::Approx(-env.reward(v({a}))).epsilon(1e-12));
  }
  const auto found = grid_oracle(env, 10000);
  CHECK(std::abs(found.argmax[0] - 50.6) < 0.01);
}

TEST_CASE("tandem lift") {
  const auto env = tandem_lift_env();
  CHECK(env.reward(v({2.35})) == doctest::Approx(1.99).epsilon(1e-12));
  CHECK(env.reward(v({6.25})) == doctest::Approx(1.36).epsilon(1e-12));
  // 6.25 is a local maximum, 2.35 the global one
  CHECK(env.reward(v({6.0})) < 1.36);
  CHECK(env.reward(v({6.5})) < 1.36);
  const auto found = grid_oracle(env, 10000);
  CHECK(std::abs(found.argmax[0] - 2.35) <= 10.0 / 9999);
  CHECK(std::abs(found.value - 1.99) < 1e-4);
}

TEST_CASE("control cylinder") {
  const auto re40 = control_cylinder_env(CylinderRegime::re40);
  const auto re100 = control_cylinder_env(CylinderRegime::re100);
  CHECK(re40.reward(on_centreline(-1.29)) == doctest::Approx(-1.51).epsilon(1e-9));
  CHECK(re40.reward(on_centreline(1.50)) == doctest::Approx(-1.54).epsilon(1e-9));
  CHECK(re100.reward(on_centreline(1.72)) == doctest::Approx(-1.30).epsilon(1e-9));

  const auto c = control_cylinder_center(1.0, 90.0);
  CHECK(std::abs(c.x) < 1e-12);
  CHECK(c.y == doctest::Approx(1.55));

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> g(0.0, 3.0), th(0.0, 180.0);
  int far = 0;
  for (int i = 0; i < 20000; ++i) {
    const Vector x = v({g(rng), th(rng)});
    const auto pos = control_cylinder_center(x[0], x[1]);
    if (std::abs(pos.y) < 0.6) continue;  // two well widths off the centreline
    ++far;
    CHECK(std::abs(re40.reward(x) + 1.56) < 1e-3);
    CHECK(std::abs(re100.reward(x) + 1.37) < 1e-3);
  }
  CHECK(far > 1000);
  CHECK(re40.fallback_reward() == -1.56);
  CHECK_FALSE(re40.feasible(v({-0.1, 0.0})));
}

TEST_CASE("pinball steady") {
  const auto env = pinball_steady_env();
  const auto model = make_pinball_steady_model();
  const Vector star = PinballSteadyModel::optimum();
  CHECK(star == v({0.34, -2.49, 2.44}));
  CHECK(model.drag(star) == doctest::Approx(1.17).epsilon(1e-12));
  const double expected = -1.17 - 0.025 * (std::pow(0.34, 3) + std::pow(2.49, 3) + std::pow(2.44, 3));
  CHECK(env.reward(star) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(std::abs(env.reward(star) + 1.93) < 0.015);
  CHECK(env.reward(Vector::Zero(3)) == doctest::Approx(-2.91).epsilon(1e-12));

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 1000; ++i) {
    const Vector w = v({u(rng), u(rng), u(rng)});
    CHECK(env.reward(w) == doctest::Approx(env.reward(PinballSteadyModel::mirror(w))).epsilon(1e-12));
    CHECK(model.drag(w) > 0.0);
  }
  // the optimum is a stationary point of the reward
  for (int k = 0; k < 3; ++k) {
    const Vector e = Vector::Unit(3, k) * 1e-5;
    CHECK(std::abs(env.reward(star + e) - env.reward(star - e)) / 2e-5 < 1e-6);
  }
}

TEST_CASE("pinball periodic") {
  const auto env = pinball_periodic_env();
  for (double lambda : {0.5, 1.3, 2.9, 4.0}) CHECK(env.reward(v({0.0, lambda})) == doctest::Approx(-2.91));
  CHECK(std::abs(std::abs(env.reward(v({2.47, 4.0}))) / 3.0555 - 1.0) < 0.01);
  const auto found = grid_oracle(env, 100);
  CHECK(found.argmax[0] == 0.0);
  CHECK(env.optimum().has_value());
  CHECK(env.optimum()->free[1]);
}

TEST_CASE("rewards are bounded on their boxes") {
  // With Omega_max = 5 and beta = 0.025 the steady pinball actuation cost alone
  // reaches 3 * 0.025 * 125 = 9.375 at the corners, so its bound is the
  // analytic one rather than 10.
  const auto pinball = make_pinball_steady_model();
  const double pinball_bound = pinball.drag_far + 3.0 * pinball.beta * 125.0;
  CHECK(pinball_bound > 10.0);
  CHECK(pinball_bound < 12.5);
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const auto& name : surrogate_names()) {
    const auto env = make_surrogate(name);
    const auto& spec = env.action_spec();
    const double bound = name == "pinball_steady" ? pinball_bound : 10.0;
    for (int i = 0; i < 100000; ++i) {
      const Vector xi = Vector::NullaryExpr(spec.size(), [&] { return u(rng); });
      const double r = env.reward(map_action(spec, xi));
      if (!(std::isfinite(r) && std::abs(r) <= bound)) {
        FAIL(name << " gives " << r);
      }
    }
  }
}

TEST_CASE("grid oracle refines monotonically and never beats the analytic maximum") {
  for (const auto& name : surrogate_names()) {
    const auto env = make_surrogate(name);
    const int d = env.action_spec().size();
    const double best = env.optimum()->value;
    double prev = -HUGE_VAL;
    // 2^k + 1 points: each grid contains the previous one
    for (int k = 1; k <= (d == 3 ? 5 : 8); ++k) {
      const auto r = grid_oracle(env, (1 << k) + 1);
      CHECK(r.value >= prev);
      CHECK(r.value <= best + 1e-12);
      prev = r.value;
    }
  }
}

TEST_CASE("grid oracle limits") {
  CHECK_THROWS_AS(grid_oracle(sphere(3), 1000), BudgetExceeded);
  CHECK_THROWS_AS(grid_oracle(sphere(1), 1), ConfigError);
  CHECK_THROWS_AS(make_surrogate("nope"), ConfigError);
  const auto j = oracle_to_json(naca_lift_env(), grid_oracle(naca_lift_env(), 11));
  CHECK(j.at("env") == "naca");
  CHECK(j.at("argmax").size() == 1);
}
