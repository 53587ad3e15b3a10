#pragma once

#include "stgd/objective/objective.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <utility>

namespace stgd::testing {

inline double log_normal_pdf(double x, double mean, double log_var) {
  const double d = x - mean;
  return -0.5 * (std::log(2 * std::numbers::pi) + log_var + d * d / std::exp(log_var));
}

/// Monte-Carlo estimate of KL(q || p) and its standard error.
inline std::pair<double, double> monte_carlo_kl(const objective::GaussianParams& q,
                                                const objective::GaussianParams& p, int samples,
                                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double sum = 0, sum_sq = 0;
  for (int s = 0; s < samples; ++s) {
    double log_ratio = 0;
    for (Eigen::Index d = 0; d < q.mean.size(); ++d) {
      const double x = q.mean(d) + std::exp(0.5 * q.log_var(d)) * normal(rng);
      log_ratio += log_normal_pdf(x, q.mean(d), q.log_var(d)) -
                   log_normal_pdf(x, p.mean(d), p.log_var(d));
    }
    sum += log_ratio;
    sum_sq += log_ratio * log_ratio;
  }
  const double mean = sum / samples;
  return {mean, std::sqrt((sum_sq / samples - mean * mean) / samples)};
}

}  // namespace stgd::testing
