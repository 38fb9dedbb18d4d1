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

// Event-level simulation of BB84 with conjugate homodyne detectors.
//
// Every pulse is one photon from Alice. It survives the channel with
// probability eta_ch, is misrouted to the wrong detector with probability
// e_d, and each detector then produces an Erlang-distributed Z. The same
// draws are tallied three ways: independent mode with double clicks
// discarded, independent mode with double clicks squashed to a random bit,
// and the differential comparator.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <thread>
#include <vector>

#include "hdqkd/detector.hpp"
#include "hdqkd/errors.hpp"
#include "hdqkd/protocol.hpp"
#include "hdqkd/random.hpp"
#include "hdqkd/reconstruct.hpp"
#include "hdqkd/security.hpp"

namespace hdqkd {

/// Loss, misalignment and threshold of a simulated link.
struct LinkModel {
  double eta_ch = 1.0;
  double e_d = 0.0;
  double tau = 1.0;

  static LinkModel from(const Scenario& sc) {
    sc.validate();
    return {sc.eta_ch(), sc.e_d, sc.tau};
  }
  void validate() const {
    detail::require(eta_ch >= 0.0 && eta_ch <= 1.0, "eta_ch must lie in [0, 1]");
    detail::require(e_d >= 0.0 && e_d <= 0.5, "e_d must lie in [0, 0.5]");
    detail::require(std::isfinite(tau) && tau >= 0.0, "tau must be >= 0");
  }
};

struct SimOptions {
  double basis_match_prob = 1.0;   // 1 = efficient BB84 in the asymptotic limit
  std::uint64_t batch_size = 1 << 16;
  unsigned workers = 1;
  std::uint64_t record_cap = 0;    // keep the first N pulses as PulseRecords
};

enum class IndependentOutcome : std::uint8_t { NoClick, Bit0, Bit1, DoubleClick };

struct PulseRecord {
  std::uint8_t alice_bit = 0;
  std::uint8_t alice_basis = 0;
  std::uint8_t bob_basis = 0;
  bool photon_survived = false;
  std::optional<std::uint8_t> routed_detector;  // detector holding the photon
  std::optional<std::uint8_t> virtual_bit;      // ideal non-demolition SPD bit
  double z0 = 0.0;
  double z1 = 0.0;
  IndependentOutcome bob_outcome = IndependentOutcome::NoClick;
  std::uint8_t differential_bit = 0;
};

/// Raw event counts. All conditional tallies refer to sifted pulses.
struct SimCounts {
  std::uint64_t pulses = 0;
  std::uint64_t sifted = 0;
  // independent mode, relative to Alice's bit
  std::uint64_t none = 0, correct = 0, wrong = 0, double_click = 0;
  std::uint64_t squash_errors = 0;  // wrong + double clicks whose random bit was wrong
  // differential mode
  std::uint64_t diff_errors = 0;
  std::uint64_t diff_ties = 0;
  // photon number at Bob's input
  std::array<std::uint64_t, 2> photons{};
  // single-click rounds and their errors, split by photon number
  std::array<std::uint64_t, 2> single_clicks{};
  std::array<std::uint64_t, 2> single_click_errors{};
  std::array<std::uint64_t, 2> diff_errors_by_n{};
  // [virtual bit wrong][real bit wrong] on single-photon rounds
  std::array<std::array<std::uint64_t, 2>, 2> ind_virtual_real{};
  std::array<std::array<std::uint64_t, 2>, 2> diff_virtual_real{};

  SimCounts& operator+=(const SimCounts& o) {
    pulses += o.pulses;
    sifted += o.sifted;
    none += o.none;
    correct += o.correct;
    wrong += o.wrong;
    double_click += o.double_click;
    squash_errors += o.squash_errors;
    diff_errors += o.diff_errors;
    diff_ties += o.diff_ties;
    for (int k = 0; k < 2; ++k) {
      photons[k] += o.photons[k];
      single_clicks[k] += o.single_clicks[k];
      single_click_errors[k] += o.single_click_errors[k];
      diff_errors_by_n[k] += o.diff_errors_by_n[k];
      for (int j = 0; j < 2; ++j) {
        ind_virtual_real[k][j] += o.ind_virtual_real[k][j];
        diff_virtual_real[k][j] += o.diff_virtual_real[k][j];
      }
    }
    return *this;
  }
  friend bool operator==(const SimCounts&, const SimCounts&) = default;
};

/// An empirical proportion k / n with its binomial standard error.
struct Proportion {
  std::uint64_t hits = 0;
  std::uint64_t trials = 0;

  double value() const {
    return trials ? static_cast<double>(hits) / static_cast<double>(trials) : 0.0;
  }
  /// Standard error sqrt(p(1-p)/n) evaluated at the reference probability.
  double sigma(double p_ref) const {
    return trials ? std::sqrt(p_ref * (1.0 - p_ref) / static_cast<double>(trials))
                  : INFINITY;
  }
  /// |value - p_ref| measured in standard errors (0 when both agree exactly).
  double z_score(double p_ref) const {
    const double d = std::abs(value() - p_ref);
    if (d == 0.0) return 0.0;
    const double s = sigma(p_ref);
    return s > 0.0 ? d / s : INFINITY;
  }
};

struct SimSummary {
  LinkModel link;
  std::uint64_t seed = 0;
  SimOptions options;
  SimCounts counts;
  std::vector<PulseRecord> records;

  Proportion p_none() const { return {counts.none, counts.sifted}; }
  Proportion p_correct() const { return {counts.correct, counts.sifted}; }
  Proportion p_wrong() const { return {counts.wrong, counts.sifted}; }
  Proportion p_double() const { return {counts.double_click, counts.sifted}; }
  Proportion sifted_gain() const { return {counts.correct + counts.wrong, counts.sifted}; }
  Proportion sifted_qber() const { return {counts.wrong, counts.correct + counts.wrong}; }
  Proportion squashed_gain() const { return {counts.sifted - counts.none, counts.sifted}; }
  Proportion squashed_qber() const {
    return {counts.squash_errors, counts.sifted - counts.none};
  }
  Proportion differential_qber() const { return {counts.diff_errors, counts.sifted}; }
  Proportion photon_fraction(int n) const { return {counts.photons[n], counts.sifted}; }
  /// Empirical Y_{1,n}: single-click probability given n photons at Bob.
  Proportion yield(int n) const { return {counts.single_clicks[n], counts.photons[n]}; }
  /// Empirical E_{1,n} of the independent mode.
  Proportion single_click_qber(int n) const {
    return {counts.single_click_errors[n], counts.single_clicks[n]};
  }
  Proportion differential_qber_given(int n) const {
    return {counts.diff_errors_by_n[n], counts.photons[n]};
  }
  /// Error rate of the virtual detector bits on single-photon rounds.
  Proportion virtual_qber() const {
    const auto& t = counts.diff_virtual_real;
    return {t[1][0] + t[1][1], t[0][0] + t[0][1] + t[1][0] + t[1][1]};
  }
};

namespace detail {

inline void simulate_batch(const LinkModel& link, const SimOptions& opt,
                           std::uint64_t n_pulses, RandomSource& rng,
                           SimCounts& c, std::vector<PulseRecord>* records,
                           std::uint64_t record_cap) {
  const Threshold tau(link.tau);
  for (std::uint64_t i = 0; i < n_pulses; ++i) {
    PulseRecord r;
    r.alice_bit = rng.coin();
    r.alice_basis = rng.coin();
    const bool matched = opt.basis_match_prob >= 1.0 || rng.bernoulli(opt.basis_match_prob);
    r.bob_basis = matched ? r.alice_basis : static_cast<std::uint8_t>(1 - r.alice_basis);
    r.photon_survived = rng.bernoulli(link.eta_ch);

    std::array<int, 2> n_at{0, 0};
    bool misrouted = false;
    if (r.photon_survived) {
      std::uint8_t det;
      if (matched) {
        misrouted = rng.bernoulli(link.e_d);
        det = static_cast<std::uint8_t>(r.alice_bit ^ (misrouted ? 1 : 0));
      } else {
        det = rng.coin();  // wrong basis: either output port with prob 1/2
      }
      r.routed_detector = det;
      r.virtual_bit = det;
      n_at[det] = 1;
    }
    r.z0 = sample_z(n_at[0], rng).value();
    r.z1 = sample_z(n_at[1], rng).value();

    const bool c0 = click_map(ZOutcome(r.z0), tau);
    const bool c1 = click_map(ZOutcome(r.z1), tau);
    if (c0 && c1) r.bob_outcome = IndependentOutcome::DoubleClick;
    else if (c0) r.bob_outcome = IndependentOutcome::Bit0;
    else if (c1) r.bob_outcome = IndependentOutcome::Bit1;
    else r.bob_outcome = IndependentOutcome::NoClick;

    const bool tie = r.z0 == r.z1;
    r.differential_bit = (r.z1 > r.z0) ? 1 : 0;  // ties go to bit 0

    // squashing: the random bit for a double click is drawn for every pulse
    // so that the stream does not depend on the detection outcome
    const std::uint8_t squash_bit = rng.coin();

    if (records && records->size() < record_cap) records->push_back(r);

    ++c.pulses;
    if (!matched) continue;
    ++c.sifted;

    const int n = r.photon_survived ? 1 : 0;
    ++c.photons[n];

    const bool right_click = r.alice_bit == 0 ? c0 : c1;
    const bool wrong_click = r.alice_bit == 0 ? c1 : c0;
    const bool single = right_click != wrong_click;
    if (!right_click && !wrong_click) ++c.none;
    else if (right_click && wrong_click) ++c.double_click;
    else if (right_click) ++c.correct;
    else ++c.wrong;

    if (wrong_click && !right_click) ++c.squash_errors;
    if (right_click && wrong_click && squash_bit != r.alice_bit) ++c.squash_errors;

    const bool diff_err = r.differential_bit != r.alice_bit;
    if (diff_err) ++c.diff_errors;
    if (tie) ++c.diff_ties;
    if (diff_err) ++c.diff_errors_by_n[n];

    if (single) {
      ++c.single_clicks[n];
      if (wrong_click) ++c.single_click_errors[n];
    }
    if (r.photon_survived) {
      const int v_err = misrouted ? 1 : 0;
      if (single) ++c.ind_virtual_real[v_err][wrong_click ? 1 : 0];
      ++c.diff_virtual_real[v_err][diff_err ? 1 : 0];
    }
  }
}

}  // namespace detail

/// Simulate `pulses` pulses. Pulses are processed in batches of
/// opt.batch_size, batch b drawing from RandomSource::derived(seed, b);
/// the counts are therefore identical for any number of workers.
inline SimSummary simulate(const LinkModel& link, std::uint64_t pulses,
                           std::uint64_t seed, const SimOptions& opt = {}) {
  link.validate();
  detail::require(pulses >= 1, "simulate: need at least one pulse");
  detail::require(opt.batch_size >= 1, "simulate: batch size must be >= 1");
  detail::require(opt.basis_match_prob > 0.0 && opt.basis_match_prob <= 1.0,
                  "simulate: basis match probability must lie in (0, 1]");

  SimSummary out;
  out.link = link;
  out.seed = seed;
  out.options = opt;

  const std::uint64_t n_batches = (pulses + opt.batch_size - 1) / opt.batch_size;
  const unsigned workers =
      std::max(1u, std::min<unsigned>(opt.workers, static_cast<unsigned>(n_batches)));
  std::vector<SimCounts> per_worker(workers);

  auto run = [&](unsigned w) {
    for (std::uint64_t b = w; b < n_batches; b += workers) {
      RandomSource rng = RandomSource::derived(seed, b);
      const std::uint64_t lo = b * opt.batch_size;
      const std::uint64_t n = std::min(opt.batch_size, pulses - lo);
      // only batch 0 keeps records; record_cap beyond one batch is truncated
      std::vector<PulseRecord>* rec = (b == 0 && opt.record_cap) ? &out.records : nullptr;
      detail::simulate_batch(link, opt, n, rng, per_worker[w], rec, opt.record_cap);
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run, w);
  }
  for (const auto& c : per_worker) out.counts += c;
  return out;
}

inline SimSummary simulate(const Scenario& sc, std::uint64_t pulses,
                           std::uint64_t seed, const SimOptions& opt = {}) {
  return simulate(LinkModel::from(sc), pulses, seed, opt);
}

struct E11Check {
  double predicted = 0.0;
  double measured = 0.0;
  double sigma = 0.0;         // binomial standard error at `predicted`
  std::uint64_t events = 0;
};

inline constexpr std::uint64_t kMinConditionedEvents = 1000;

/// Compare the virtual-to-real QBER map against simulation: on rounds
/// where Bob got the photon (and, in the independent mode, exactly one
/// detector clicked) the real-bit error rate should equal
/// e11_map(e_d, tau, mode).
inline E11Check empirical_e11_check(const LinkModel& link, DetectionMode mode,
                                    std::uint64_t pulses, std::uint64_t seed,
                                    const SimOptions& opt = {}) {
  detail::require(mode != DetectionMode::PerfectSpd,
                  "empirical_e11_check: homodyne detection modes only");
  const SimSummary s = simulate(link, pulses, seed, opt);
  const Proportion p = mode == DetectionMode::Independent ? s.single_click_qber(1)
                                                          : s.differential_qber_given(1);
  if (p.trials < kMinConditionedEvents)
    throw statistics_error("empirical_e11_check: only " + std::to_string(p.trials) +
                           " conditioned events (need " +
                           std::to_string(kMinConditionedEvents) + ")");
  E11Check out;
  out.predicted = e11_map(link.e_d, Threshold(link.tau), mode);
  out.measured = p.value();
  out.sigma = p.sigma(out.predicted);
  out.events = p.trials;
  return out;
}

inline E11Check empirical_e11_check(const Scenario& sc, std::uint64_t pulses,
                                    std::uint64_t seed, const SimOptions& opt = {}) {
  return empirical_e11_check(LinkModel::from(sc), sc.mode, pulses, seed, opt);
}

/// i.i.d. Z draws from the mixture `dist`: n ~ dist, then sample_z(n).
inline ZSampleSet emit_z_stream(const PhotonNumberDistribution& dist,
                                std::uint64_t count, std::uint64_t seed) {
  detail::require(count >= 1, "emit_z_stream: count must be >= 1");
  RandomSource rng(seed);
  const auto probs = dist.probs();
  std::vector<double> cdf(probs.size());
  double acc = 0.0;
  for (std::size_t n = 0; n < probs.size(); ++n) cdf[n] = (acc += probs[n]);
  std::vector<double> zs;
  zs.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const double u = rng.uniform() * acc;
    std::size_t n = 0;
    while (n + 1 < cdf.size() && u >= cdf[n]) ++n;
    zs.push_back(sample_z(static_cast<int>(n), rng).value());
  }
  return ZSampleSet(std::move(zs));
}

}  // namespace hdqkd
