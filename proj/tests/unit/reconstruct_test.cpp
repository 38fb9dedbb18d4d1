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


#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "hdqkd/montecarlo.hpp"
#include "hdqkd/reconstruct.hpp"
#include "unit/generators.hpp"

namespace hdqkd {
namespace {

TEST(ZSampleSet, RejectsBadSamples) {
  EXPECT_THROW(ZSampleSet({1.0, -0.5}), domain_error);
  EXPECT_THROW(ZSampleSet({1.0, std::numeric_limits<double>::infinity()}), domain_error);
  EXPECT_THROW(ZSampleSet({std::nan("")}), domain_error);
}

TEST(Reconstruct, InsufficientData) {
  const ZSampleSet few(std::vector<double>(99, 1.0));
  EXPECT_THROW(reconstruct(few), statistics_error);
}

TEST(Reconstruct, BadOptions) {
  const ZSampleSet zs(std::vector<double>(200, 1.0));
  EXPECT_THROW(reconstruct(zs, {0, 1e-8, 10}), domain_error);
  EXPECT_THROW(reconstruct(zs, {3, 0.0, 10}), domain_error);
}

TEST(Reconstruct, OneStepOnZeroSamplesGivesVacuum) {
  const ZSampleSet zeros(std::vector<double>(500, 0.0));
  const auto rep = reconstruct(zeros, {5, 1e-8, 1});
  EXPECT_EQ(rep.iterations, 1u);
  EXPECT_EQ(rep.estimate[0], 1.0);
  for (std::size_t n = 1; n <= 5; ++n) EXPECT_EQ(rep.estimate[n], 0.0);
}

TEST(Reconstruct, VacuumDraws) {
  const auto zs = emit_z_stream(PhotonNumberDistribution::point_mass(0, 3), 100000, 3);
  const auto rep = reconstruct(zs, {3, 1e-8, 10000});
  EXPECT_GE(rep.estimate[0], 0.99);
}

TEST(Reconstruct, LikelihoodMonotoneAndIteratesOnSimplex) {
  testing::Gen gen(51);
  for (int c = 0; c < 5; ++c) {
    const auto truth = PhotonNumberDistribution(gen.simplex(4));
    const auto zs = emit_z_stream(truth, 5000, 100 + c);
    const auto rep = reconstruct(zs, {6, 1e-10, 400});
    EXPECT_TRUE(rep.monotone);
    for (std::size_t i = 1; i < rep.log_likelihood_trace.size(); ++i)
      EXPECT_GE(rep.log_likelihood_trace[i],
                rep.log_likelihood_trace[i - 1] - 1e-9 * std::abs(rep.log_likelihood_trace[i - 1]));
    const auto p = rep.estimate.probs();
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    for (double x : p) EXPECT_GE(x, 0.0);
  }
}

TEST(Reconstruct, ReportsConvergenceOrCap) {
  const auto zs = emit_z_stream(PhotonNumberDistribution({0.5, 0.5}), 2000, 8);
  const auto capped = reconstruct(zs, {4, 1e-14, 5});
  EXPECT_FALSE(capped.converged);
  EXPECT_EQ(capped.iterations, 5u);
  const auto done = reconstruct(zs, {4, 1e-4, 100000});
  EXPECT_TRUE(done.converged);
  EXPECT_LE(done.final_delta, 1e-4);
}

TEST(Reconstruct, DeterministicForFixedSamples) {
  const auto zs = emit_z_stream(PhotonNumberDistribution({0.7, 0.2, 0.1}), 20000, 4);
  const auto a = reconstruct(zs, {10, 1e-7, 500});
  const auto b = reconstruct(zs, {10, 1e-7, 500});
  EXPECT_EQ(a.iterations, b.iterations);
  for (std::size_t n = 0; n <= 10; ++n) EXPECT_EQ(a.estimate[n], b.estimate[n]);
  EXPECT_EQ(a.log_likelihood, b.log_likelihood);
}

TEST(Reconstruct, LikelihoodMatchesDirectSum) {
  const PhotonNumberDistribution d({0.6, 0.3, 0.1});
  const auto zs = emit_z_stream(d, 10000, 6);
  double direct = 0.0;
  for (double z : zs.values()) direct += std::log(pz_mixture(d, z));
  EXPECT_NEAR(mixture_log_likelihood(zs, d), direct, 1e-9 * std::abs(direct));
}

TEST(Reconstruct, RecoversLowPhotonMixtures) {
  // Truths on n <= 3 with every weight >= 0.05; smaller samples than the
  // full-scale closed loop, so the tolerance is looser.
  testing::Gen gen(52);
  for (int c = 0; c < 3; ++c) {
    std::vector<double> w = gen.simplex(4);
    for (auto& x : w) x = 0.05 + 0.8 * x;
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& x : w) x /= total;
    const PhotonNumberDistribution truth(w);
    const auto zs = emit_z_stream(truth, 200000, 200 + c);
    const auto rep = reconstruct(zs, {10, 1e-6, 3000});
    EXPECT_LE(tv_distance(rep.estimate, truth), 0.05) << "case " << c;
  }
}

TEST(SplitP1n, Examples) {
  const auto s = split_p1n(PhotonNumberDistribution::point_mass(0, 4));
  EXPECT_EQ(s.p10, 1.0);
  EXPECT_EQ(s.p11, 0.0);
  EXPECT_EQ(s.p_multi, 0.0);
  const double eta = 0.3;
  const auto t = split_p1n(PhotonNumberDistribution({1.0 - eta, eta, 0.0}));
  EXPECT_EQ(t.p10, 1.0 - eta);
  EXPECT_EQ(t.p11, eta);
  testing::Gen gen(53);
  for (int i = 0; i < testing::kPropertyCases; ++i) {
    const auto u = split_p1n(PhotonNumberDistribution(gen.simplex(gen.integer(2, 12))));
    EXPECT_NEAR(u.p10 + u.p11 + u.p_multi, 1.0, 1e-12);
  }
}

TEST(TvDistance, PadsShorterVector) {
  const PhotonNumberDistribution a({0.5, 0.5});
  const PhotonNumberDistribution b({0.5, 0.25, 0.25});
  EXPECT_DOUBLE_EQ(tv_distance(a, b), 0.25);
  EXPECT_EQ(tv_distance(a, a), 0.0);
}

TEST(PairwiseSum, MatchesExactSumOfIntegers) {
  std::vector<double> xs(10007);
  std::iota(xs.begin(), xs.end(), 1.0);
  EXPECT_EQ(detail::pairwise_sum(xs), 10007.0 * 10008.0 / 2.0);
}

}  // namespace
}  // namespace hdqkd
