#pragma once

#include <vector>

namespace flowloc {

struct EmSettings {
  double tol = 1e-8;          // minimum log-likelihood improvement
  int max_iters = 200;
  double variance_floor = 1e-6;  // s^2
};

struct GmmComponent {
  double mean = 0.0;
  double variance = 0.0;
  double weight = 0.0;
};

struct GmmParams {
  GmmComponent components[2];  // sorted by ascending mean
  double log_likelihood = 0.0;
};

/// Two-component 1-D Gaussian mixture fit by EM. Deterministic: components
/// start at the 25th/75th percentiles with pooled variance and equal weights.
GmmParams fit_gmm(const std::vector<double>& times, const EmSettings& settings = {});

}  // namespace flowloc
