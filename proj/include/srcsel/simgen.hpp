#pragma once

// Regression data whose coefficients drift with a time variable z.
//
//   y = b_z' x + e,   x ~ N(0, I_p),   e ~ N(0, noise_scale^2)
//
// For the time-varying variant each coordinate of b_z is piecewise in z with
// breakpoints t1 < t2:
//
//   beta_j * alpha_j * z     + eps_j   on (z_lo, t1]
//   beta_j * (alpha_j+1) z^2 + eps_j   on (t1, t2]
//   beta_j * (alpha_j-1) z   + eps_j   on (t2, z_hi]
//
// alpha_j ~ U(alpha_range) and eps_j ~ N(0, coef_noise_sd_j^2) are drawn once
// per coordinate per dataset. The time-invariant variant uses b_z = beta.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "srcsel/dataset.hpp"
#include "srcsel/error.hpp"
#include "srcsel/random.hpp"

namespace srcsel {

enum class SimVariant { time_varying, time_invariant };

inline std::string_view to_string(SimVariant v) {
  return v == SimVariant::time_varying ? "time-varying" : "time-invariant";
}

struct SimConfig {
  std::size_t n = 1000;
  std::vector<double> beta{0.9, 0.2, -0.3, 0.3};
  std::vector<double> coef_noise_sd{0.01, 0.1, 0.04, 0.1};
  double alpha_lo = -1.0;
  double alpha_hi = 1.0;
  /// Standard deviation of the response noise.
  double noise_scale = 0.1;
  double z_lo = 0.0;
  double z_hi = 10.0;
  std::vector<double> breakpoints{3.0, 5.0};
  SimVariant variant = SimVariant::time_varying;
  /// Draw z from the integers in (z_lo, z_hi] instead of continuously.
  bool integer_z = false;
  std::uint64_t seed = 0;

  std::size_t p() const { return beta.size(); }

  void validate() const {
    if (n < 1) throw ConfigError("simulate: n must be >= 1");
    if (beta.empty()) throw ConfigError("simulate: beta must be non-empty");
    if (coef_noise_sd.size() != beta.size()) {
      throw ConfigError("simulate: coef_noise_sd and beta lengths differ");
    }
    for (double s : coef_noise_sd) {
      if (!(s >= 0.0)) throw ConfigError("simulate: coef_noise_sd entries must be >= 0");
    }
    if (!(noise_scale >= 0.0)) throw ConfigError("simulate: noise_scale must be >= 0");
    if (!(alpha_lo <= alpha_hi)) throw ConfigError("simulate: alpha range is reversed");
    if (!(z_lo < z_hi)) throw ConfigError("simulate: z range lower must be < upper");
    if (breakpoints.size() != 2 || !(breakpoints[0] < breakpoints[1])) {
      throw ConfigError("simulate: breakpoints must be two increasing values");
    }
    if (integer_z && std::floor(z_hi) <= z_lo) {
      throw ConfigError("simulate: no integer lies in the z range");
    }
  }
};

/// Coordinate j of the drifting coefficient at time z.
inline double coefficient_at(double z, double alpha_j, double beta_j, double eps_j,
                             const SimConfig& config = {}) {
  if (!(z > config.z_lo && z <= config.z_hi)) {
    throw DataError("coefficient_at: z = " + std::to_string(z) + " outside the time range");
  }
  const double t1 = config.breakpoints.at(0);
  const double t2 = config.breakpoints.at(1);
  if (z <= t1) return beta_j * alpha_j * z + eps_j;
  if (z <= t2) return beta_j * (alpha_j + 1.0) * z * z + eps_j;
  return beta_j * (alpha_j - 1.0) * z + eps_j;
}

/// Per-dataset coordinate randomness, exposed for tests and reports.
struct SimDraws {
  std::vector<double> alpha;
  std::vector<double> eps;
};

/// Draw order: alpha_j for all j, eps_j for all j, then per row z, x_1..x_p, e.
inline Dataset generate(const SimConfig& config, SimDraws* draws = nullptr) {
  config.validate();
  const std::size_t p = config.p();
  Rng rng(config.seed);

  SimDraws d;
  for (std::size_t j = 0; j < p; ++j) d.alpha.push_back(uniform_real(rng, config.alpha_lo, config.alpha_hi));
  for (std::size_t j = 0; j < p; ++j) d.eps.push_back(config.coef_noise_sd[j] * standard_normal(rng));

  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(config.n), static_cast<Eigen::Index>(p));
  ds.response.resize(static_cast<Eigen::Index>(config.n));
  std::vector<double> z(config.n);
  const auto first_int = static_cast<std::int64_t>(std::floor(config.z_lo)) + 1;
  const auto last_int = static_cast<std::int64_t>(std::floor(config.z_hi));

  for (std::size_t i = 0; i < config.n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    if (config.integer_z) {
      z[i] = static_cast<double>(first_int + static_cast<std::int64_t>(uniform_index(
                                                 rng, static_cast<std::uint64_t>(last_int - first_int + 1))));
    } else {
      // (z_lo, z_hi]
      z[i] = config.z_hi - (config.z_hi - config.z_lo) * uniform01(rng);
    }
    double y = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      const double x = standard_normal(rng);
      ds.features(r, static_cast<Eigen::Index>(j)) = x;
      const double b = config.variant == SimVariant::time_varying
                           ? coefficient_at(z[i], d.alpha[j], config.beta[j], d.eps[j], config)
                           : config.beta[j];
      y += b * x;
    }
    ds.response(r) = y + config.noise_scale * standard_normal(rng);
  }
  for (std::size_t j = 0; j < p; ++j) ds.feature_names.push_back("x" + std::to_string(j + 1));
  ds.response_name = "y";
  ds.meta.push_back(MetaColumn::from_numbers("z", std::move(z)));
  ds.origin.resize(config.n);
  for (std::size_t i = 0; i < config.n; ++i) ds.origin[i] = i;
  if (draws) *draws = std::move(d);
  return ds;
}

}  // namespace srcsel
