#include "ppo1/mlp.hpp"

#include <cmath>
#include <random>

namespace ppo1 {

void NetworkLayout::validate() const {
  if (input_dim < 1 || output_dim < 1) {
    throw ConfigError("network input/output dimensions must be >= 1");
  }
  if (hidden_sizes.empty()) {
    throw ConfigError("network needs at least one hidden layer");
  }
  for (int h : hidden_sizes) {
    if (h < 1) throw ConfigError("hidden layer sizes must be >= 1");
  }
}

int NetworkLayout::fan_in(int layer) const {
  return layer == 0 ? input_dim : hidden_sizes[layer - 1];
}

int NetworkLayout::fan_out(int layer) const {
  return layer == num_layers() - 1 ? output_dim : hidden_sizes[layer];
}

Eigen::Index NetworkParams::size() const {
  Eigen::Index n = log_std.size();
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

bool NetworkParams::all_finite() const {
  for (const auto& l : layers) {
    if (!l.weights.allFinite() || !l.bias.allFinite()) return false;
  }
  return log_std.allFinite();
}

Vector NetworkParams::flatten() const {
  Vector flat(size());
  Eigen::Index k = 0;
  for (const auto& l : layers) {
    flat.segment(k, l.weights.size()) = l.weights.reshaped<Eigen::RowMajor>();
    k += l.weights.size();
    flat.segment(k, l.bias.size()) = l.bias;
    k += l.bias.size();
  }
  flat.segment(k, log_std.size()) = log_std;
  return flat;
}

void NetworkParams::assign_flat(const Vector& flat) {
  require_same_size(size(), flat.size(), "flat parameter vector");
  Eigen::Index k = 0;
  for (auto& l : layers) {
    l.weights.reshaped<Eigen::RowMajor>() = flat.segment(k, l.weights.size());
    k += l.weights.size();
    l.bias = flat.segment(k, l.bias.size());
    k += l.bias.size();
  }
  log_std = flat.segment(k, log_std.size());
}

NetworkParams zeros_like(const NetworkParams& params) {
  NetworkParams z = params;
  for (auto& l : z.layers) {
    l.weights.setZero();
    l.bias.setZero();
  }
  z.log_std.setZero();
  return z;
}

NetworkParams init_network(const NetworkLayout& layout, std::uint64_t seed, InitScheme scheme,
                           double init_log_std) {
  layout.validate();
  NetworkParams p;
  p.layout = layout;
  std::mt19937_64 rng(seed);
  for (int i = 0; i < layout.num_layers(); ++i) {
    const int in = layout.fan_in(i);
    const int out = layout.fan_out(i);
    DenseLayer l{Matrix::Zero(out, in), Vector::Zero(out)};
    if (scheme == InitScheme::glorot_uniform) {
      const double bound = std::sqrt(6.0 / (in + out));
      std::uniform_real_distribution<double> u(-bound, bound);
      for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
        for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = u(rng);
      }
    }
    p.layers.push_back(std::move(l));
  }
  p.log_std = Vector::Constant(layout.output_dim, init_log_std);
  return p;
}

namespace {

// Post-activation values of every layer, activations[0] being the input.
std::vector<Vector> forward_trace(const NetworkParams& params, const Vector& input) {
  require_same_size(params.layout.input_dim, input.size(), "network input");
  std::vector<Vector> acts;
  acts.reserve(params.layers.size() + 1);
  acts.push_back(input);
  const auto n = params.layers.size();
  for (std::size_t i = 0; i < n; ++i) {
    Vector z = params.layers[i].weights * acts.back() + params.layers[i].bias;
    const bool squash = i + 1 < n || params.layout.output_activation == Activation::tanh;
    acts.push_back(squash ? Vector(z.array().tanh()) : z);
  }
  return acts;
}

}  // namespace

Vector forward(const NetworkParams& params, const Vector& input) {
  return forward_trace(params, input).back();
}

ParamGradients backward(const NetworkParams& params, const Vector& input,
                        const Vector& upstream_grad) {
  require_same_size(params.layout.output_dim, upstream_grad.size(), "upstream gradient");
  const auto acts = forward_trace(params, input);
  ParamGradients g = zeros_like(params);
  const auto n = params.layers.size();

  Vector delta = upstream_grad;
  for (std::size_t k = n; k-- > 0;) {
    const Vector& out = acts[k + 1];
    const bool squash = k + 1 < n || params.layout.output_activation == Activation::tanh;
    if (squash) delta = delta.array() * (1.0 - out.array().square());
    g.layers[k].weights.noalias() = delta * acts[k].transpose();
    g.layers[k].bias = delta;
    if (k > 0) delta = params.layers[k].weights.transpose() * delta;
  }
  return g;
}

AdamState make_adam_state(const NetworkParams& params, double beta1, double beta2,
                          double epsilon) {
  AdamState s;
  s.first_moment = zeros_like(params);
  s.second_moment = zeros_like(params);
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.epsilon = epsilon;
  return s;
}

std::pair<NetworkParams, AdamState> adam_step(const NetworkParams& params,
                                              const ParamGradients& grads,
                                              const AdamState& state, double lr) {
  require_same_size(params.size(), grads.size(), "gradient");
  require_same_size(params.size(), state.first_moment.size(), "adam state");
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (!grads.all_finite()) throw DivergedUpdate("non-finite gradient in adam step");

  AdamState next = state;
  next.step_count = state.step_count + 1;
  const double t = static_cast<double>(next.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);

  const Vector g = grads.flatten();
  const Vector m = state.beta1 * state.first_moment.flatten() + (1.0 - state.beta1) * g;
  const Vector v =
      state.beta2 * state.second_moment.flatten() + (1.0 - state.beta2) * g.cwiseAbs2();
  const Vector step =
      lr * (m / c1).array() / ((v / c2).array().sqrt() + state.epsilon);

  NetworkParams updated = params;
  updated.assign_flat(params.flatten() - step);
  next.first_moment.assign_flat(m);
  next.second_moment.assign_flat(v);
  if (!updated.all_finite()) throw DivergedUpdate("adam step produced non-finite parameters");
  return {std::move(updated), std::move(next)};
}

}  // namespace ppo1
