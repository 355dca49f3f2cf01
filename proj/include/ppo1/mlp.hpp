#pragma once

#include "ppo1/types.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace ppo1 {

enum class Activation { tanh, linear };

/// Shape of a fully connected network: input -> hidden_sizes... -> output.
/// Hidden layers are always tanh; the output head is tanh (policy mean) or linear.
struct NetworkLayout {
  int input_dim = 1;
  std::vector<int> hidden_sizes{4, 4};
  int output_dim = 1;
  Activation output_activation = Activation::tanh;

  void validate() const;
  int num_layers() const { return static_cast<int>(hidden_sizes.size()) + 1; }
  int fan_in(int layer) const;
  int fan_out(int layer) const;
};

struct DenseLayer {
  Matrix weights;  // fan_out x fan_in
  Vector bias;
};

/// Network weights plus the state-independent log standard deviation of the
/// Gaussian head. Gradients use the same type.
struct NetworkParams {
  NetworkLayout layout;
  std::vector<DenseLayer> layers;
  Vector log_std;

  Eigen::Index size() const;
  bool all_finite() const;

  Vector flatten() const;
  void assign_flat(const Vector& flat);
};

using ParamGradients = NetworkParams;

NetworkParams zeros_like(const NetworkParams& params);

enum class InitScheme { glorot_uniform, zeros };

NetworkParams init_network(const NetworkLayout& layout, std::uint64_t seed,
                           InitScheme scheme = InitScheme::glorot_uniform,
                           double init_log_std = 0.0);

/// Mean head output for one input vector.
Vector forward(const NetworkParams& params, const Vector& input);

/// Gradient of dot(upstream_grad, forward(params, input)) with respect to every
/// weight and bias. The log_std block of the result is zero; callers add its
/// contribution themselves.
ParamGradients backward(const NetworkParams& params, const Vector& input,
                        const Vector& upstream_grad);

struct AdamState {
  NetworkParams first_moment;
  NetworkParams second_moment;
  long step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

AdamState make_adam_state(const NetworkParams& params, double beta1 = 0.9,
                          double beta2 = 0.999, double epsilon = 1e-8);

/// One bias-corrected Adam descent step: params' = params - lr * m_hat / (sqrt(v_hat) + eps).
/// Throws DivergedUpdate on non-finite gradients or results.
std::pair<NetworkParams, AdamState> adam_step(const NetworkParams& params,
                                              const ParamGradients& grads,
                                              const AdamState& state, double lr);

}  // namespace ppo1
