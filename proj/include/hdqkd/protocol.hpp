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

// Channel, source and detection front-ends for BB84 with conjugate
// homodyne detectors: gains, QBERs and Alice-Bob mutual information.
#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "hdqkd/detector.hpp"
#include "hdqkd/errors.hpp"

namespace hdqkd {

/// How Bob turns the two detector outputs into a bit.
///  Independent:  each detector thresholded on its own (click/no-click).
///  Differential: bit = argmax(z0, z1); no threshold, every pulse yields a bit.
///  PerfectSpd:   unit-efficiency, dark-count-free single-photon detectors,
///                the reference curve the homodyne schemes are compared to.
enum class DetectionMode { Independent, Differential, PerfectSpd };

inline std::string_view to_string(DetectionMode m) {
  switch (m) {
    case DetectionMode::Independent: return "independent";
    case DetectionMode::Differential: return "differential";
    case DetectionMode::PerfectSpd: return "spd";
  }
  return "?";
}

inline std::optional<DetectionMode> parse_detection_mode(std::string_view s) {
  if (s == "independent") return DetectionMode::Independent;
  if (s == "differential") return DetectionMode::Differential;
  if (s == "spd" || s == "perfect-spd") return DetectionMode::PerfectSpd;
  return std::nullopt;
}

/// eta_ch = 10^{-gamma L / 10}.
inline double channel_transmittance(double gamma_db_per_km, double length_km) {
  detail::require(std::isfinite(gamma_db_per_km) && gamma_db_per_km > 0.0,
                  "fiber attenuation gamma must be > 0 dB/km");
  detail::require(std::isfinite(length_km) && length_km >= 0.0,
                  "fiber length must be >= 0 km");
  return std::pow(10.0, -gamma_db_per_km * length_km / 10.0);
}

/// Link and receiver configuration for one operating point.
struct Scenario {
  double gamma_db_per_km = 0.2;
  double length_km = 0.0;
  double e_d = 0.0;   // misalignment QBER
  double f_ec = 1.0;  // error-correction efficiency
  DetectionMode mode = DetectionMode::Independent;
  double tau = 1.0;   // unused unless mode == Independent

  void validate() const {
    detail::require(std::isfinite(gamma_db_per_km) && gamma_db_per_km > 0.0,
                    "gamma must be > 0 dB/km");
    detail::require(std::isfinite(length_km) && length_km >= 0.0,
                    "length must be >= 0 km");
    detail::require(e_d >= 0.0 && e_d <= 0.5,
                    "misalignment error e_d must lie in [0, 0.5]");
    detail::require(std::isfinite(f_ec) && f_ec >= 1.0,
                    "error-correction efficiency f must be >= 1");
    detail::require(std::isfinite(tau) && tau >= 0.0, "tau must be >= 0");
  }

  double eta_ch() const {
    return channel_transmittance(gamma_db_per_km, length_km);
  }
  Threshold threshold() const { return Threshold(tau); }
};

/// Per-pulse detection statistics (sifted rounds only).
struct DetectionStats {
  double p_none = 0.0;
  double p_correct = 0.0;
  double p_wrong = 0.0;
  double p_double = 0.0;
  double q_sifted = 0.0;  // P_C + P_W, double clicks discarded
  double qber = 0.0;      // P_W / q_sifted
};

/// Gain and QBER of one sifting convention.
struct GainQber {
  double gain;
  double qber;
};

namespace detail {

inline void require_probability(double x, const char* what) {
  require(x >= 0.0 && x <= 1.0, std::string(what) + " must lie in [0, 1]");
}

}  // namespace detail

/// Four-event probabilities of the independent detection mode for a
/// single photon sent through a channel of transmittance eta_ch.
///
/// With e_d > 0 a surviving photon lands on the wrong detector with
/// probability e_d; e_d = 0 gives the textbook pure-loss expressions.
/// The double- and no-click probabilities do not depend on e_d.
inline DetectionStats independent_event_probs(double eta_ch, Threshold tau,
                                              double e_d = 0.0) {
  detail::require_probability(eta_ch, "eta_ch");
  detail::require(e_d >= 0.0 && e_d <= 0.5, "e_d must lie in [0, 0.5]");
  const double t = tau.value();
  const double dark = std::exp(-t);             // P(click | vacuum)
  const double eff = (t + 1.0) * dark;          // P(click | one photon)
  const double vac = (1.0 - eta_ch);

  DetectionStats s;
  s.p_none = vac * (1.0 - dark) * (1.0 - dark) + eta_ch * (1.0 - eff) * (1.0 - dark);
  s.p_double = vac * dark * dark + eta_ch * eff * dark;
  // photon on the right detector: correct click alone = eff*(1-dark)
  // photon on the wrong detector: correct click alone = dark*(1-eff)
  const double photon_correct = (1.0 - e_d) * eff * (1.0 - dark) + e_d * dark * (1.0 - eff);
  const double photon_wrong = (1.0 - e_d) * dark * (1.0 - eff) + e_d * eff * (1.0 - dark);
  s.p_correct = vac * dark * (1.0 - dark) + eta_ch * photon_correct;
  s.p_wrong = vac * dark * (1.0 - dark) + eta_ch * photon_wrong;
  s.q_sifted = s.p_correct + s.p_wrong;
  s.qber = s.q_sifted > 0.0 ? s.p_wrong / s.q_sifted : 0.5;
  return s;
}

/// Squashing-compatible statistics: double clicks kept with a random bit.
/// Q = 1 - P_N, E = (P_W + P_D / 2) / Q.
inline GainQber independent_squashed_stats(double eta_ch, Threshold tau,
                                           double e_d = 0.0) {
  const DetectionStats s = independent_event_probs(eta_ch, tau, e_d);
  const double q = 1.0 - s.p_none;
  if (!(q > 0.0))
    throw domain_error("squashed QBER undefined: gain is zero");
  return {q, (s.p_wrong + 0.5 * s.p_double) / q};
}

/// Differential-mode error rate 1/2 - eta_ch/4 (plus e_d * eta_ch / 2 with
/// misalignment). The gain of this mode is identically 1.
inline double differential_qber(double eta_ch, double e_d = 0.0) {
  detail::require_probability(eta_ch, "eta_ch");
  detail::require(e_d >= 0.0 && e_d <= 0.5, "e_d must lie in [0, 0.5]");
  return 0.5 - eta_ch / 4.0 + eta_ch * e_d / 2.0;
}

/// H2(x) in bits; H2(0) = H2(1) = 0.
inline double binary_entropy(double x) {
  detail::require(x >= 0.0 && x <= 1.0, "binary entropy argument must lie in [0, 1]");
  if (x == 0.0 || x == 1.0) return 0.0;
  return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

/// I_AB = Q [1 - H2(E)].
inline double mutual_information(double q, double e) {
  detail::require_probability(q, "gain");
  return q * (1.0 - binary_entropy(e));
}

/// Sifted gain and QBER of a scenario's detection mode (discard-double
/// convention for the independent mode).
inline GainQber sifted_stats(const Scenario& sc) {
  const double eta = sc.eta_ch();
  switch (sc.mode) {
    case DetectionMode::Independent: {
      const auto s = independent_event_probs(eta, sc.threshold(), sc.e_d);
      return {s.q_sifted, s.qber};
    }
    case DetectionMode::Differential:
      return {1.0, differential_qber(eta, sc.e_d)};
    case DetectionMode::PerfectSpd:
      return {eta, sc.e_d};
  }
  return {0.0, 0.5};
}

}  // namespace hdqkd
