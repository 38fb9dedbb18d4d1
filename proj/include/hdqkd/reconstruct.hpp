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

// Photon-number reconstruction from a sample of Z outcomes.
//
// Z is an Erlang mixture, P(z) = sum_n P_n e^{-z} z^n / n!, so the weights
// are estimated by expectation-maximization over the mixture components
// 0..n_max, starting from the uniform distribution. Mass above n_max is
// absorbed by the last component.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "hdqkd/detector.hpp"
#include "hdqkd/errors.hpp"

namespace hdqkd {

class ZSampleSet {
 public:
  ZSampleSet() = default;
  explicit ZSampleSet(std::vector<double> samples) : samples_(std::move(samples)) {
    for (double z : samples_) {
      if (!std::isfinite(z)) throw domain_error("Z sample is not finite");
      if (z < 0.0) throw domain_error("Z sample is negative");
    }
  }
  std::size_t size() const noexcept { return samples_.size(); }
  std::span<const double> values() const noexcept { return samples_; }

 private:
  std::vector<double> samples_;
};

struct ReconstructionReport {
  PhotonNumberDistribution estimate = PhotonNumberDistribution::point_mass(0, 1);
  std::size_t iterations = 0;
  double final_delta = 0.0;     // max_n |P_n(k) - P_n(k-1)| of the last step
  double log_likelihood = 0.0;  // at the returned estimate
  bool converged = false;       // false: iteration cap reached first
  bool monotone = true;         // log-likelihood never decreased
  std::vector<double> log_likelihood_trace;  // before each EM step
};

struct ReconstructOptions {
  std::size_t n_max = 10;
  double tol = 1e-8;
  std::size_t max_iters = 10000;
};

inline constexpr std::size_t kMinReconstructionSamples = 100;

namespace detail {

// Pairwise summation over fixed-size blocks. The result depends only on
// the order of `xs`, not on how the blocks are scheduled.
inline double pairwise_sum(std::span<const double> xs) {
  constexpr std::size_t kLeaf = 128;
  if (xs.size() <= kLeaf) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

// Values below this are flushed to zero: they cannot move the estimate and
// subnormal arithmetic would dominate the run time.
inline constexpr double kFlushBelow = 1e-250;

// Per-sample component weights z^n/n!, scaled by the sample's largest
// component so that nothing overflows; log_scale keeps what was divided out
// (including the common e^{-z} factor) for the log-likelihood. Stored
// component-major so the E-step streams contiguous columns.
struct ComponentTable {
  std::size_t width;
  std::size_t count;
  std::vector<double> weights;  // width x count
  std::vector<double> log_scale;

  ComponentTable(std::span<const double> zs, std::size_t n_max)
      : width(n_max + 1), count(zs.size()), weights(zs.size() * (n_max + 1)),
        log_scale(zs.size()) {
    std::vector<double> logc(width);
    for (std::size_t i = 0; i < count; ++i) {
      const double z = zs[i];
      if (z == 0.0) {
        weights[i] = 1.0;
        log_scale[i] = 0.0;
        continue;
      }
      const double lz = std::log(z);
      double m = -INFINITY;
      for (std::size_t n = 0; n < width; ++n) {
        logc[n] = static_cast<double>(n) * lz - std::lgamma(static_cast<double>(n) + 1.0);
        m = std::max(m, logc[n]);
      }
      for (std::size_t n = 0; n < width; ++n) {
        const double w = std::exp(logc[n] - m);
        weights[n * count + i] = w < kFlushBelow ? 0.0 : w;
      }
      log_scale[i] = m - z;
    }
  }
  const double* column(std::size_t n) const { return &weights[n * count]; }
};

// Sum of logs of a chunk via one log of the running product; falls back to
// per-term logs when the product leaves the normal range.
inline double log_of_product(std::span<const double> xs) {
  constexpr std::size_t kChunk = 8;
  double total = 0.0;
  for (std::size_t lo = 0; lo < xs.size(); lo += kChunk) {
    const std::size_t hi = std::min(xs.size(), lo + kChunk);
    double prod = 1.0;
    for (std::size_t i = lo; i < hi; ++i) prod *= xs[i];
    if (std::isnormal(prod)) {
      total += std::log(prod);
    } else {
      for (std::size_t i = lo; i < hi; ++i) total += std::log(xs[i]);
    }
  }
  return total;
}

// One E-step: accumulates sum_i w_in / s_i into `acc` and returns the
// log-likelihood of `p`.
inline double e_step(const ComponentTable& t, std::span<const double> p,
                     std::vector<double>& acc) {
  const std::size_t w = t.width;
  const std::size_t n_samples = t.count;
  constexpr std::size_t kBlock = 4096;
  const std::size_t n_blocks = (n_samples + kBlock - 1) / kBlock;
  std::vector<double> block_ll(n_blocks);
  std::vector<std::vector<double>> block_acc(w, std::vector<double>(n_blocks, 0.0));
  std::vector<double> s(kBlock);
  std::vector<double> inv(kBlock);

  for (std::size_t b = 0; b < n_blocks; ++b) {
    const std::size_t lo = b * kBlock;
    const std::size_t len = std::min(n_samples, lo + kBlock) - lo;
    std::fill_n(s.begin(), len, 0.0);
    for (std::size_t n = 0; n < w; ++n) {
      if (p[n] == 0.0) continue;
      const double pn = p[n];
      const double* col = t.column(n) + lo;
      for (std::size_t i = 0; i < len; ++i) s[i] += col[i] * pn;
    }
    for (std::size_t i = 0; i < len; ++i) inv[i] = 1.0 / s[i];
    for (std::size_t n = 0; n < w; ++n) {
      if (p[n] == 0.0) continue;
      const double* col = t.column(n) + lo;
      // fixed lane order keeps the sum deterministic
      double lane[8] = {};
      std::size_t i = 0;
      for (; i + 8 <= len; i += 8)
        for (std::size_t k = 0; k < 8; ++k) lane[k] += col[i + k] * inv[i + k];
      for (; i < len; ++i) lane[0] += col[i] * inv[i];
      block_acc[n][b] = ((lane[0] + lane[1]) + (lane[2] + lane[3])) +
                        ((lane[4] + lane[5]) + (lane[6] + lane[7]));
    }
    double ll = log_of_product(std::span<const double>(s.data(), len));
    for (std::size_t i = 0; i < len; ++i) ll += t.log_scale[lo + i];
    block_ll[b] = ll;
  }
  acc.assign(w, 0.0);
  for (std::size_t n = 0; n < w; ++n) acc[n] = pairwise_sum(block_acc[n]);
  return pairwise_sum(block_ll);
}

}  // namespace detail

/// Log-likelihood of `samples` under the Erlang mixture `dist`.
inline double mixture_log_likelihood(const ZSampleSet& samples,
                                     const PhotonNumberDistribution& dist) {
  const detail::ComponentTable table(samples.values(), dist.n_max());
  std::vector<double> acc;
  return detail::e_step(table, dist.probs(), acc);
}

inline ReconstructionReport reconstruct(const ZSampleSet& samples,
                                        const ReconstructOptions& opt = {}) {
  if (samples.size() < kMinReconstructionSamples)
    throw statistics_error("reconstruct: insufficient data (need at least " +
                           std::to_string(kMinReconstructionSamples) + " samples, got " +
                           std::to_string(samples.size()) + ")");
  detail::require(opt.n_max >= 1, "reconstruct: n_max must be >= 1");
  detail::require(opt.tol > 0.0, "reconstruct: tolerance must be > 0");

  const detail::ComponentTable table(samples.values(), opt.n_max);
  const std::size_t width = opt.n_max + 1;
  const double inv_n = 1.0 / static_cast<double>(samples.size());

  std::vector<double> p(width, 1.0 / static_cast<double>(width));
  std::vector<double> next(width);
  std::vector<double> acc;

  ReconstructionReport rep;
  double prev_ll = -INFINITY;
  while (rep.iterations < opt.max_iters) {
    const double ll = detail::e_step(table, p, acc);
    rep.log_likelihood_trace.push_back(ll);
    if (ll < prev_ll - 1e-9 * std::abs(prev_ll)) rep.monotone = false;
    prev_ll = ll;

    double total = 0.0;
    for (std::size_t n = 0; n < width; ++n) {
      next[n] = p[n] * acc[n] * inv_n;
      if (next[n] < detail::kFlushBelow) next[n] = 0.0;
      total += next[n];
    }
    double delta = 0.0;
    for (std::size_t n = 0; n < width; ++n) {
      next[n] /= total;
      delta = std::max(delta, std::abs(next[n] - p[n]));
    }
    p.swap(next);
    ++rep.iterations;
    rep.final_delta = delta;
    if (delta < opt.tol) {
      rep.converged = true;
      break;
    }
  }
  rep.log_likelihood = detail::e_step(table, p, acc);
  if (!rep.log_likelihood_trace.empty() &&
      rep.log_likelihood < prev_ll - 1e-9 * std::abs(prev_ll))
    rep.monotone = false;
  rep.estimate = PhotonNumberDistribution(std::move(p));
  return rep;
}

/// (P_{1,0}, P_{1,1}, sum_{n>=2} P_{1,n}) at Bob's input.
struct P1nSplit {
  double p10;
  double p11;
  double p_multi;
};

inline P1nSplit split_p1n(const PhotonNumberDistribution& est) {
  double multi = 0.0;
  for (std::size_t n = 2; n <= est.n_max(); ++n) multi += est[n];
  return {est[0], est[1], multi};
}

/// Total-variation distance; the shorter vector is zero-padded.
inline double tv_distance(const PhotonNumberDistribution& a,
                          const PhotonNumberDistribution& b) {
  const std::size_t n = std::max(a.n_max(), b.n_max());
  double d = 0.0;
  for (std::size_t k = 0; k <= n; ++k) d += std::abs(a[k] - b[k]);
  return 0.5 * d;
}

}  // namespace hdqkd
