#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace ppo1 {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Shape disagreement between two operands (network input, action spec, ...).
class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An optimizer update produced or consumed a non-finite value.
class DivergedUpdate : public std::runtime_error {
 public:
  explicit DivergedUpdate(const std::string& what, long episode = -1)
      : std::runtime_error(episode >= 0 ? what + " (episode " + std::to_string(episode) + ")"
                                        : what),
        episode_(episode) {}

  long episode() const noexcept { return episode_; }

 private:
  long episode_;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require_same_size(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw DimensionMismatch(std::string(what) + ": expected " + std::to_string(a) + ", got " +
                            std::to_string(b));
  }
}

}  // namespace ppo1
