#pragma once

#include "stgd/nn/autograd.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace stgd::nn {

/// Owns every trainable matrix of a model. Parameter addresses are stable for
/// the lifetime of the store (moves included).
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(ParameterStore&&) = default;
  ParameterStore& operator=(ParameterStore&&) = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;

  /// Uniform fan-in initialization: U(-gain*sqrt(3/fan_in), +gain*sqrt(3/fan_in)).
  /// gain sqrt(2) gives the Kaiming bound for ReLU layers.
  Parameter& add_weight(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                        Eigen::Index fan_in, double gain, std::mt19937_64& rng);
  Parameter& add_zeros(const std::string& name, Eigen::Index rows, Eigen::Index cols);

  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;

  std::vector<std::unique_ptr<Parameter>>& items() { return params_; }
  const std::vector<std::unique_ptr<Parameter>>& items() const { return params_; }

  void zero_grad();
  std::size_t scalar_count() const;
  /// Copies values of identically named and shaped parameters from `other`.
  /// Returns the number copied.
  std::size_t copy_matching(const ParameterStore& other);

 private:
  Parameter& add(const std::string& name, Matrix value);

  std::vector<std::unique_ptr<Parameter>> params_;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adaptive-moment gradient descent over a ParameterStore.
class Adam {
 public:
  Adam() = default;
  explicit Adam(AdamConfig config) : config_(config) {}

  /// One update from the accumulated gradients (scaled by `grad_scale`);
  /// gradients are left untouched.
  void step(ParameterStore& params, double grad_scale = 1.0);

  std::int64_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }

  void write(std::ostream& out) const;
  void read(std::istream& in, const ParameterStore& params);

 private:
  AdamConfig config_;
  std::int64_t steps_ = 0;
  std::vector<Matrix> first_;
  std::vector<Matrix> second_;
};

/// Binary matrix helpers shared by checkpoint writers.
void write_matrix(std::ostream& out, const Matrix& m);
Matrix read_matrix(std::istream& in);

}  // namespace stgd::nn
