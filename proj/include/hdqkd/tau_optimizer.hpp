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

// Threshold optimization and distance sweeps.
//
// The rate-vs-tau landscape is multimodal for the independent mode with
// misalignment, so the global optimum is located on a coarse grid first and
// each grid-level local maximum is then polished by golden-section search.
#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hdqkd/errors.hpp"
#include "hdqkd/protocol.hpp"
#include "hdqkd/security.hpp"

namespace hdqkd {

inline constexpr double kTauTolerance = 1e-6;
inline constexpr double kDefaultTauMin = 1e-3;
inline constexpr double kDefaultTauMax = 20.0;
inline constexpr double kDefaultTauStep = 0.01;

struct TauPoint {
  double tau;
  double value;
};

struct TauOptimum {
  double tau = 0.0;
  double value = -std::numeric_limits<double>::infinity();
  std::vector<TauPoint> local_optima;  // ascending tau
};

/// Golden-section search for a maximum of `f` on [a, b].
template <std::invocable<double> F>
TauPoint golden_section_maximize(F&& f, double a, double b,
                                 double tol = kTauTolerance) {
  static const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  return {x, f(x)};
}

/// Evenly spaced grid lo, lo + step, ..., always ending exactly at hi.
inline std::vector<double> make_grid(double lo, double hi, double step) {
  detail::require(step > 0.0 && std::isfinite(step), "grid step must be > 0");
  detail::require(std::isfinite(lo) && std::isfinite(hi) && hi >= lo,
                  "grid bounds must satisfy lo <= hi");
  std::vector<double> g;
  const auto n = static_cast<long long>(std::floor((hi - lo) / step + 1e-9));
  g.reserve(static_cast<std::size_t>(n) + 2);
  for (long long i = 0; i <= n; ++i) {
    // snap to 1e-9 so that 0.1 * 3 prints as 0.3
    g.push_back(std::round((lo + static_cast<double>(i) * step) * 1e9) / 1e9);
  }
  if (hi - g.back() > 1e-9) g.push_back(hi);
  return g;
}

/// Maximize `f` over [lo, hi]: coarse grid, then golden-section refinement
/// (to kTauTolerance) around every grid point that beats both neighbours
/// and around the best grid point. Ties go to the smaller tau.
template <std::invocable<double> F>
TauOptimum optimize_tau(F&& f, double lo, double hi, double coarse_step) {
  detail::require(lo > 0.0 && hi > lo, "tau bounds must satisfy 0 < lo < hi");
  const std::vector<double> grid = make_grid(lo, hi, coarse_step);
  std::vector<double> vals(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    vals[i] = f(grid[i]);
    if (!std::isfinite(vals[i]))
      throw evaluation_error("objective is not finite at tau = " +
                             std::to_string(grid[i]));
  }

  const std::size_t last = grid.size() - 1;
  std::vector<std::size_t> peaks;
  for (std::size_t i = 0; i <= last; ++i) {
    const bool above_left = i == 0 || vals[i] > vals[i - 1];
    const bool above_right = i == last || vals[i] > vals[i + 1];
    if (above_left && above_right && last > 0) peaks.push_back(i);
  }
  const auto best = static_cast<std::size_t>(
      std::max_element(vals.begin(), vals.end()) - vals.begin());
  if (std::find(peaks.begin(), peaks.end(), best) == peaks.end()) {
    peaks.push_back(best);
    std::sort(peaks.begin(), peaks.end());
  }

  TauOptimum out;
  for (std::size_t i : peaks) {
    TauPoint p{grid[i], vals[i]};
    if (last > 0) {
      const double a = grid[i == 0 ? 0 : i - 1];
      const double b = grid[i == last ? last : i + 1];
      const TauPoint r = golden_section_maximize(f, a, b);
      if (std::isfinite(r.value) && r.value > p.value) p = r;
    }
    out.local_optima.push_back(p);
    if (p.value > out.value || (p.value == out.value && p.tau < out.tau)) {
      out.tau = p.tau;
      out.value = p.value;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Objectives and sweeps
// ---------------------------------------------------------------------------

enum class Objective { MutualInfo, StandardRate, ImprovedRate, ImprovedTightRate };

inline std::string_view to_string(Objective o) {
  switch (o) {
    case Objective::MutualInfo: return "mutual-info";
    case Objective::StandardRate: return "standard";
    case Objective::ImprovedRate: return "improved";
    case Objective::ImprovedTightRate: return "improved-tight";
  }
  return "?";
}

inline std::optional<Objective> parse_objective(std::string_view s) {
  if (s == "mutual-info") return Objective::MutualInfo;
  if (s == "standard") return Objective::StandardRate;
  if (s == "improved") return Objective::ImprovedRate;
  if (s == "improved-tight") return Objective::ImprovedTightRate;
  return std::nullopt;
}

/// One evaluated operating point. Fields an objective does not define are NaN.
struct RateEvaluation {
  static constexpr double kNa = std::numeric_limits<double>::quiet_NaN();
  double value = kNa;
  double q = kNa;
  double e = kNa;
  double q10 = kNa;
  double q11 = kNa;
  double e_uxv = kNa;
  double eve_info = kNa;
  bool inconsistent = false;
};

/// Whether the objective depends on the detection threshold.
inline bool uses_tau(DetectionMode mode) {
  return mode == DetectionMode::Independent;
}

inline RateEvaluation evaluate_objective(Objective obj, const Scenario& sc) {
  sc.validate();
  RateEvaluation r;
  switch (obj) {
    case Objective::MutualInfo: {
      const GainQber ge = sifted_stats(sc);
      r.q = ge.gain;
      r.e = ge.qber;
      r.value = mutual_information(ge.gain, ge.qber);
      break;
    }
    case Objective::StandardRate: {
      GainQber ge = sifted_stats(sc);
      if (sc.mode == DetectionMode::Independent)
        ge = independent_squashed_stats(sc.eta_ch(), sc.threshold(), sc.e_d);
      r.q = ge.gain;
      r.e = ge.qber;
      r.eve_info = binary_entropy(ge.qber);
      r.value = keyrate_standard(ge.gain, ge.qber);
      break;
    }
    case Objective::ImprovedRate:
    case Objective::ImprovedTightRate: {
      const KeyRateBreakdown k =
          keyrate_improved(sc, obj == Objective::ImprovedTightRate);
      r.value = k.rate;
      r.q = k.q;
      r.e = k.e;
      r.q10 = k.q10;
      r.q11 = k.q11;
      r.e_uxv = k.e11_upper_virtual;
      r.eve_info = k.eve_info;
      r.inconsistent = k.inconsistent;
      break;
    }
  }
  return r;
}

struct SweepConfig {
  Scenario scenario;
  Objective objective = Objective::ImprovedRate;
  std::vector<double> lengths_km;
  double tau_min = kDefaultTauMin;
  double tau_max = kDefaultTauMax;
  double tau_step = kDefaultTauStep;
  std::optional<double> fixed_tau;  // evaluate here instead of optimizing

  void validate() const {
    scenario.validate();
    detail::require(!lengths_km.empty(), "sweep: distance grid is empty");
    for (std::size_t i = 1; i < lengths_km.size(); ++i)
      detail::require(lengths_km[i] > lengths_km[i - 1],
                      "sweep: distance grid must be strictly increasing");
    detail::require(tau_min > 0.0 && tau_max > tau_min && tau_step > 0.0,
                    "sweep: tau range must satisfy 0 < tau_min < tau_max, step > 0");
    if (fixed_tau) {
      const bool improved = objective == Objective::ImprovedRate ||
                            objective == Objective::ImprovedTightRate;
      detail::require(*fixed_tau > 0.0 || !improved || !uses_tau(scenario.mode),
                      "improved analyses need tau > 0");
      detail::require(*fixed_tau >= 0.0, "tau must be >= 0");
    }
  }
};

struct SweepRow {
  double length_km = 0.0;
  double tau_opt = RateEvaluation::kNa;  // NaN when the mode has no threshold
  double objective_value = 0.0;
  std::vector<TauPoint> local_optima;
  RateEvaluation eval;
};

inline SweepRow sweep_point(const SweepConfig& cfg, double length_km) {
  Scenario sc = cfg.scenario;
  sc.length_km = length_km;
  SweepRow row;
  row.length_km = length_km;
  if (!uses_tau(sc.mode)) {
    row.eval = evaluate_objective(cfg.objective, sc);
  } else {
    if (cfg.fixed_tau) {
      sc.tau = *cfg.fixed_tau;
    } else {
      const TauOptimum opt = optimize_tau(
          [&](double t) {
            Scenario s = sc;
            s.tau = t;
            return evaluate_objective(cfg.objective, s).value;
          },
          cfg.tau_min, cfg.tau_max, cfg.tau_step);
      sc.tau = opt.tau;
      row.local_optima = opt.local_optima;
    }
    row.tau_opt = sc.tau;
    row.eval = evaluate_objective(cfg.objective, sc);
  }
  row.objective_value = row.eval.value;
  return row;
}

/// One row per distance, in distance order.
inline std::vector<SweepRow> run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  std::vector<SweepRow> rows;
  rows.reserve(cfg.lengths_km.size());
  for (double l : cfg.lengths_km) rows.push_back(sweep_point(cfg, l));
  return rows;
}

}  // namespace hdqkd
