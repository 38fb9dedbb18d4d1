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

// Secret-key rates: the standard squashing-based bound, the improved
// bound that treats vacuum-fluctuation detector noise as trusted, and the
// tighter Eve-information bound that propagates that noise to Eve's view.
#pragma once

#include <algorithm>
#include <cmath>

#include "hdqkd/detector.hpp"
#include "hdqkd/errors.hpp"
#include "hdqkd/protocol.hpp"

namespace hdqkd {

/// QBER of the vacuum contribution: dark counts pick a bit at random.
inline constexpr double kVacuumQber = 0.5;

/// A QBER estimate forced into [0, 0.5]. `clamped` is set when the raw
/// value fell outside, which flags statistics that are inconsistent with
/// the model (or fluctuated past it).
struct BoundedQber {
  double value = 0.0;
  bool clamped = false;
};

/// Rounding excursions smaller than this are clamped without raising the flag.
inline constexpr double kClampSlack = 1e-12;

inline BoundedQber clamp_qber(double raw) {
  if (raw < 0.0) return {0.0, raw < -kClampSlack};
  if (raw > 0.5) return {0.5, raw > 0.5 + kClampSlack};
  return {raw, false};
}

/// Standard asymptotic rate Q [1 - 2 H2(E)]. May be negative.
inline double keyrate_standard(double q, double e) {
  return q * (1.0 - 2.0 * binary_entropy(e));
}

// ---------------------------------------------------------------------------
// Yields and the virtual-to-real QBER map
// ---------------------------------------------------------------------------

/// Vacuum and single-photon yields of the independent mode (single clicks
/// kept, no-clicks and double clicks thrown away).
struct YieldSet {
  double y10 = 0.0;
  double y11 = 0.0;
  double e10 = kVacuumQber;
  double e11 = 0.0;
};

namespace detail {

// Single-photon branch weights for the independent mode. The photon sits on
// detector 0 and detector 1 sees vacuum:
//   miss  = P(z0 <= tau | 1) P(z1 > tau | 0)  (only the empty detector clicks)
//   hit   = P(z0 > tau | 1) P(z1 <= tau | 0)  (only the photon's detector clicks)
// Y11 = miss + hit and hit - miss = tau e^{-tau}.
struct SinglePhotonBranches {
  double miss;
  double hit;
  double y11() const { return miss + hit; }
};

inline SinglePhotonBranches single_photon_branches(double tau) {
  const double dark = std::exp(-tau);
  const double no_dark = -std::expm1(-tau);          // 1 - e^{-tau}
  const double no_click_one = no_dark - tau * dark;  // 1 - (tau+1) e^{-tau}
  return {no_click_one * dark, (tau + 1.0) * dark * no_dark};
}

inline void require_positive_tau(Threshold tau, const char* op) {
  require(tau.value() > 0.0,
          std::string(op) + ": degenerate threshold tau = 0 (no single-click events)");
}

}  // namespace detail

/// Y10 = 2(1 - e^{-tau}) e^{-tau}, Y11 = (tau+2)e^{-tau} - 2(tau+1)e^{-2tau},
/// E10 = 1/2 and E11 = e11_map(e_virtual).
inline YieldSet yields_independent(Threshold tau, double e_virtual = 0.0);

/// QBER Bob observes on single-photon rounds when the virtual ideal
/// detectors in front of his real ones would see error rate e_virtual.
inline double e11_map(double e_virtual, Threshold tau, DetectionMode mode) {
  detail::require(e_virtual >= 0.0 && e_virtual <= 0.5,
                  "virtual QBER must lie in [0, 0.5]");
  switch (mode) {
    case DetectionMode::Independent: {
      detail::require_positive_tau(tau, "e11_map");
      const auto br = detail::single_photon_branches(tau.value());
      return ((1.0 - e_virtual) * br.miss + e_virtual * br.hit) / br.y11();
    }
    case DetectionMode::Differential:
      return 0.25 + e_virtual / 2.0;
    case DetectionMode::PerfectSpd:
      return e_virtual;
  }
  return e_virtual;
}

/// Inverse of e11_map, clamped into [0, 0.5].
inline BoundedQber e11_invert(double e11, Threshold tau, DetectionMode mode) {
  switch (mode) {
    case DetectionMode::Independent: {
      detail::require_positive_tau(tau, "e11_invert");
      const auto br = detail::single_photon_branches(tau.value());
      return clamp_qber((e11 * br.y11() - br.miss) / (br.hit - br.miss));
    }
    case DetectionMode::Differential:
      return clamp_qber(2.0 * (e11 - 0.25));
    case DetectionMode::PerfectSpd:
      return clamp_qber(e11);
  }
  return clamp_qber(e11);
}

inline YieldSet yields_independent(Threshold tau, double e_virtual) {
  detail::require_positive_tau(tau, "yields_independent");
  const double t = tau.value();
  const auto br = detail::single_photon_branches(t);
  YieldSet y;
  y.y10 = -2.0 * std::expm1(-t) * std::exp(-t);
  y.y11 = br.y11();
  y.e10 = kVacuumQber;
  y.e11 = e11_map(e_virtual, tau, DetectionMode::Independent);
  return y;
}

/// Vacuum and single-photon yields for any detection mode. Differential
/// detection produces a bit every round; perfect SPDs never dark-count.
inline YieldSet yields_for(DetectionMode mode, Threshold tau,
                           double e_virtual = 0.0) {
  switch (mode) {
    case DetectionMode::Independent:
      return yields_independent(tau, e_virtual);
    case DetectionMode::Differential:
      return {1.0, 1.0, kVacuumQber, e11_map(e_virtual, tau, mode)};
    case DetectionMode::PerfectSpd:
      return {0.0, 1.0, kVacuumQber, e_virtual};
  }
  return {};
}

/// E11 <= (Q E - Q10 E10) / Q11, clamped into [0, 0.5].
inline BoundedQber e11_upper_bound(double q, double e, double q10,
                                   double q11) {
  if (!(q11 > 0.0))
    throw statistics_error("e11_upper_bound: no single-photon events (Q11 = 0)");
  return clamp_qber((q * e - q10 * kVacuumQber) / q11);
}

// ---------------------------------------------------------------------------
// Tighter bound on Eve's information
// ---------------------------------------------------------------------------

struct EveBound {
  double e_v_eb = 0.5;  // Eve vs. virtual-detector bits
  double e_eb = 0.5;    // Eve vs. Bob's real bits
  double info = 0.0;    // 1 - H2(e_eb)
};

/// Smallest x in [0, 0.5] with H2(x) >= target, by bisection (H2 is
/// strictly increasing on that interval).
inline double inverse_binary_entropy(double target, double tol = 1e-12) {
  detail::require(target >= 0.0 && target <= 1.0,
                  "inverse_binary_entropy: target must lie in [0, 1]");
  if (target <= 0.0) return 0.0;
  if (target >= 1.0) return 0.5;
  double lo = 0.0;
  double hi = 0.5;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (binary_entropy(mid) < target) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// Eve's information on Bob's real bits given the bound e_uxv on the
/// virtual-detector phase error. Her error on the virtual bits is at least
/// H2^{-1}(1 - H2(e_uxv)); the real detectors' noise pushes it further
/// toward 1/2 through the same map as e11_map.
inline EveBound eve_info_tight(double e_uxv, Threshold tau, DetectionMode mode) {
  detail::require(e_uxv >= 0.0 && e_uxv <= 0.5,
                  "eve_info_tight: e_uxv must lie in [0, 0.5]");
  EveBound b;
  b.e_v_eb = inverse_binary_entropy(1.0 - binary_entropy(e_uxv));
  b.e_eb = e11_map(b.e_v_eb, tau, mode);
  b.info = 1.0 - binary_entropy(b.e_eb);
  return b;
}

// ---------------------------------------------------------------------------
// Improved key rate
// ---------------------------------------------------------------------------

/// What Bob measures: overall gain and QBER of the kept rounds and the
/// photon-number probabilities P_{1,0}, P_{1,1} at his input.
struct ObservedStats {
  double q = 0.0;
  double e = 0.0;
  double p10 = 0.0;
  double p11 = 0.0;
};

/// Statistics of the honest channel (loss + misalignment, no Eve):
/// P_{1,0} = 1 - eta_ch, P_{1,1} = eta_ch, Q and E from the detection mode.
inline ObservedStats honest_observed(const Scenario& sc) {
  sc.validate();
  const double eta = sc.eta_ch();
  const GainQber ge = sifted_stats(sc);
  return {ge.gain, ge.qber, 1.0 - eta, eta};
}

struct KeyRateBreakdown {
  double q = 0.0;
  double e = 0.0;
  double q10 = 0.0;
  double q11 = 0.0;
  double e11_upper = 0.0;           // bound on the real single-photon QBER
  double e11_upper_virtual = 0.0;   // E^{(U,X,V)}_{1,1}
  double eve_info = 0.0;
  double ec_cost = 0.0;
  double rate = 0.0;
  bool inconsistent = false;        // some bound had to be clamped
};

/// R = Q10 + Q11 [1 - I_E] - f Q H2(E), where I_E = H2(E^{(U,X,V)}_{1,1})
/// or, with `tight`, the bound of eve_info_tight. Multiphoton rounds enter
/// Q and E only.
inline KeyRateBreakdown keyrate_improved(const Scenario& sc,
                                         const ObservedStats& obs, bool tight) {
  sc.validate();
  const Threshold tau(sc.mode == DetectionMode::Independent ? sc.tau : 1.0);
  const YieldSet y = yields_for(sc.mode, tau);

  KeyRateBreakdown k;
  k.q = obs.q;
  k.e = obs.e;
  k.q10 = obs.p10 * y.y10;
  k.q11 = obs.p11 * y.y11;

  const BoundedQber e11 = e11_upper_bound(obs.q, obs.e, k.q10, k.q11);
  const BoundedQber ev = e11_invert(e11.value, tau, sc.mode);
  k.e11_upper = e11.value;
  k.e11_upper_virtual = ev.value;
  k.inconsistent = e11.clamped || ev.clamped;

  k.eve_info = tight ? eve_info_tight(ev.value, tau, sc.mode).info
                     : binary_entropy(ev.value);
  k.ec_cost = sc.f_ec * obs.q * binary_entropy(obs.e);
  k.rate = k.q10 + k.q11 * (1.0 - k.eve_info) - k.ec_cost;
  return k;
}

/// Improved rate on the honest channel of `sc`.
inline KeyRateBreakdown keyrate_improved(const Scenario& sc, bool tight = false) {
  return keyrate_improved(sc, honest_observed(sc), tight);
}

}  // namespace hdqkd
