// Copyright 2026 The hdqkd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Statistics of the conjugate homodyne detector's photon-counting
// observable Z = X^2 + P^2 (in shot-noise units) and the threshold map
// that turns a continuous outcome into a click.
#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hdqkd/errors.hpp"
#include "hdqkd/random.hpp"

namespace hdqkd {

/// Detection threshold tau >= 0 applied to Z.
class Threshold {
 public:
  explicit Threshold(double tau) : tau_(tau) {
    detail::require(std::isfinite(tau) && tau >= 0.0,
                    "threshold tau must be finite and >= 0");
  }
  double value() const noexcept { return tau_; }

  friend bool operator==(Threshold, Threshold) = default;

 private:
  double tau_;
};

/// A single measured value of Z.
class ZOutcome {
 public:
  explicit ZOutcome(double z) : z_(z) {
    detail::require(z >= 0.0, "Z outcome must be >= 0");
  }
  double value() const noexcept { return z_; }

 private:
  double z_;
};

/// Diagonal of the density matrix in the Fock basis, truncated at n_max.
class PhotonNumberDistribution {
 public:
  static constexpr double kSumTolerance = 1e-12;

  explicit PhotonNumberDistribution(std::vector<double> probs)
      : probs_(std::move(probs)) {
    if (probs_.size() < 2)
      throw invariant_error("photon number distribution needs n_max >= 1");
    for (double p : probs_) {
      if (!(p >= 0.0) || !std::isfinite(p))
        throw invariant_error(
            "photon number probabilities must be finite and >= 0");
    }
    const double total = std::accumulate(probs_.begin(), probs_.end(), 0.0);
    if (std::abs(total - 1.0) > kSumTolerance)
      throw invariant_error("photon number probabilities must sum to 1 (got " +
                            std::to_string(total) + ")");
  }

  static PhotonNumberDistribution point_mass(std::size_t n,
                                             std::size_t n_max) {
    if (n_max < 1) n_max = 1;
    if (n > n_max) throw invariant_error("point mass beyond n_max");
    std::vector<double> p(n_max + 1, 0.0);
    p[n] = 1.0;
    return PhotonNumberDistribution(std::move(p));
  }

  std::size_t n_max() const noexcept { return probs_.size() - 1; }
  double operator[](std::size_t n) const noexcept {
    return n < probs_.size() ? probs_[n] : 0.0;
  }
  std::span<const double> probs() const noexcept { return probs_; }

 private:
  std::vector<double> probs_;
};

/// (eta_D, upsilon_D, eta_D / upsilon_D) at one threshold.
struct DetectorCurvePoint {
  double tau;
  double eta_d;
  double upsilon_d;
  double ratio;
};

/// Density of Z given an n-photon Fock state: e^{-z} z^n / n!.
/// Evaluated in log space above n = 20.
inline double pz_given_n(double z, int n) {
  detail::require(z >= 0.0, "pz_given_n: z must be >= 0");
  detail::require(n >= 0, "pz_given_n: photon number must be >= 0");
  if (n == 0) return std::exp(-z);
  if (z == 0.0) return 0.0;
  if (n <= 20) {
    double term = std::exp(-z);
    for (int k = 1; k <= n; ++k) term *= z / k;
    return term;
  }
  return std::exp(-z + n * std::log(z) - std::lgamma(n + 1.0));
}

/// Density of Z for a state with photon number distribution `dist`.
inline double pz_mixture(const PhotonNumberDistribution& dist, double z) {
  detail::require(z >= 0.0, "pz_mixture: z must be >= 0");
  double total = 0.0;
  for (std::size_t n = 0; n <= dist.n_max(); ++n) {
    if (dist[n] > 0.0) total += dist[n] * pz_given_n(z, static_cast<int>(n));
  }
  return total;
}

/// P(Z > tau | n photons) = e^{-tau} sum_{k<=n} tau^k / k!.
inline double tail_prob(int n, Threshold tau) {
  detail::require(n >= 0, "tail_prob: photon number must be >= 0");
  const double t = tau.value();
  if (t == 0.0) return 1.0;
  double term = std::exp(-t);
  double sum = term;
  for (int k = 1; k <= n; ++k) {
    term *= t / k;
    sum += term;
  }
  return sum;
}

/// Single-photon detection efficiency e^{-tau}(tau + 1).
inline double detection_efficiency(Threshold tau) { return tail_prob(1, tau); }

/// Dark-count probability e^{-tau}.
inline double dark_count_probability(Threshold tau) { return tail_prob(0, tau); }

inline std::vector<DetectorCurvePoint> detector_curves(
    std::span<const double> tau_grid) {
  std::vector<DetectorCurvePoint> out;
  out.reserve(tau_grid.size());
  for (double t : tau_grid) {
    const Threshold tau(t);
    // ratio is tau + 1 identically; computing it as a quotient would only
    // add rounding noise.
    out.push_back({t, detection_efficiency(tau), dark_count_probability(tau),
                   t + 1.0});
  }
  return out;
}

/// Draw Z for an n-photon input. Z | n is Erlang(n + 1, 1), sampled as
/// -ln of a product of n + 1 uniforms.
inline ZOutcome sample_z(int n, RandomSource& rng) {
  detail::require(n >= 0, "sample_z: photon number must be >= 0");
  if (n <= 16) {
    double prod = rng.uniform();
    for (int i = 0; i < n; ++i) prod *= rng.uniform();
    return ZOutcome(-std::log(prod));
  }
  // The product can underflow for many factors; sum logs instead.
  double z = 0.0;
  for (int i = 0; i <= n; ++i) z -= std::log(rng.uniform());
  return ZOutcome(z);
}

/// Click iff z > tau. The tie z == tau is a no-click.
inline bool click_map(ZOutcome z, Threshold tau) noexcept {
  return z.value() > tau.value();
}

}  // namespace hdqkd
