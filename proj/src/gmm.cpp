#include "flowloc/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace flowloc {

namespace {

double percentile(std::vector<double> sorted, double q) {
  // Linear interpolation between order statistics.
  if (sorted.empty()) throw std::invalid_argument("empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const size_t lo = static_cast<size_t>(pos);
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

double log_normal_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (std::log(2.0 * M_PI * var) + d * d / var);
}

}  // namespace

GmmParams fit_gmm(const std::vector<double>& times, const EmSettings& settings) {
  if (times.empty()) throw std::invalid_argument("fit_gmm: empty input");
  const size_t n = times.size();

  std::vector<double> sorted(times);
  std::sort(sorted.begin(), sorted.end());

  // Degenerate inputs: fewer than two distinct values collapse to a single
  // component; the second mirrors it with weight 0 to keep the feature
  // length fixed.
  if (sorted.front() == sorted.back()) {
    GmmParams p;
    p.components[0] = {sorted.front(), settings.variance_floor, 1.0};
    p.components[1] = {sorted.front(), settings.variance_floor, 0.0};
    double ll = 0.0;
    for (double x : times) ll += log_normal_pdf(x, sorted.front(), settings.variance_floor);
    p.log_likelihood = ll;
    return p;
  }

  double mean_all = 0.0;
  for (double x : times) mean_all += x;
  mean_all /= static_cast<double>(n);
  double pooled_var = 0.0;
  for (double x : times) pooled_var += (x - mean_all) * (x - mean_all);
  pooled_var = std::max(pooled_var / static_cast<double>(n), settings.variance_floor);

  double mu[2] = {percentile(sorted, 0.25), percentile(sorted, 0.75)};
  double var[2] = {pooled_var, pooled_var};
  double w[2] = {0.5, 0.5};
  if (mu[0] == mu[1]) mu[1] = sorted.back();  // skewed samples can tie the quartiles

  std::vector<double> resp(n);  // responsibility of component 0
  double prev_ll = -std::numeric_limits<double>::infinity();
  double ll = prev_ll;

  for (int iter = 0; iter < settings.max_iters; ++iter) {
    // E step
    ll = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double l0 = std::log(w[0]) + log_normal_pdf(times[i], mu[0], var[0]);
      const double l1 = std::log(w[1]) + log_normal_pdf(times[i], mu[1], var[1]);
      const double m = std::max(l0, l1);
      double denom;
      if (std::isinf(m)) {  // one weight hit zero
        resp[i] = l0 >= l1 ? 1.0 : 0.0;
        denom = std::max(l0, l1);
        ll += denom;
        continue;
      }
      denom = m + std::log(std::exp(l0 - m) + std::exp(l1 - m));
      resp[i] = std::exp(l0 - denom);
      ll += denom;
    }
    if (ll < prev_ll - 1e-9)
      throw std::logic_error("fit_gmm: log-likelihood decreased");
    if (ll - prev_ll < settings.tol && iter > 0) break;
    prev_ll = ll;

    // M step
    double n0 = 0.0;
    for (double r : resp) n0 += r;
    const double n1 = static_cast<double>(n) - n0;
    if (n0 <= 0.0 || n1 <= 0.0) {
      // One component starved; pin it with zero weight at the other's mean.
      const int live = n0 > 0.0 ? 0 : 1;
      double m_live = 0.0;
      for (double x : times) m_live += x;
      m_live /= static_cast<double>(n);
      double v_live = 0.0;
      for (double x : times) v_live += (x - m_live) * (x - m_live);
      v_live = std::max(v_live / static_cast<double>(n), settings.variance_floor);
      mu[live] = m_live;
      var[live] = v_live;
      w[live] = 1.0;
      mu[1 - live] = m_live;
      var[1 - live] = settings.variance_floor;
      w[1 - live] = 0.0;
      break;
    }
    double m0 = 0.0, m1 = 0.0;
    for (size_t i = 0; i < n; ++i) {
      m0 += resp[i] * times[i];
      m1 += (1.0 - resp[i]) * times[i];
    }
    mu[0] = m0 / n0;
    mu[1] = m1 / n1;
    double v0 = 0.0, v1 = 0.0;
    for (size_t i = 0; i < n; ++i) {
      v0 += resp[i] * (times[i] - mu[0]) * (times[i] - mu[0]);
      v1 += (1.0 - resp[i]) * (times[i] - mu[1]) * (times[i] - mu[1]);
    }
    var[0] = std::max(v0 / n0, settings.variance_floor);
    var[1] = std::max(v1 / n1, settings.variance_floor);
    w[0] = n0 / static_cast<double>(n);
    w[1] = n1 / static_cast<double>(n);
  }

  GmmParams p;
  const int lo = mu[0] <= mu[1] ? 0 : 1;
  p.components[0] = {mu[lo], var[lo], w[lo]};
  p.components[1] = {mu[1 - lo], var[1 - lo], w[1 - lo]};
  p.log_likelihood = ll;
  return p;
}

}  // namespace flowloc
