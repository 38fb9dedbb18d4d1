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

#include <gtest/gtest.h>

#include "hdqkd/montecarlo.hpp"

namespace hdqkd {
namespace {

// Expected |z| > 5 is ~6e-7 per comparison: these checks are not flaky.
constexpr double kZ = 5.0;

TEST(Simulate, DeterministicForSeed) {
  const LinkModel link{0.4, 0.02, 1.2};
  const auto a = simulate(link, 50000, 17);
  const auto b = simulate(link, 50000, 17);
  const auto c = simulate(link, 50000, 18);
  EXPECT_EQ(a.counts, b.counts);
  EXPECT_FALSE(a.counts == c.counts);
}

TEST(Simulate, WorkerCountDoesNotChangeCounts) {
  const LinkModel link{0.6, 0.05, 0.8};
  SimOptions one;
  one.batch_size = 4096;
  SimOptions three = one;
  three.workers = 3;
  EXPECT_EQ(simulate(link, 40000, 5, one).counts, simulate(link, 40000, 5, three).counts);
}

TEST(Simulate, TalliesAreConsistent) {
  const auto s = simulate(LinkModel{0.5, 0.1, 1.0}, 30000, 2);
  const auto& c = s.counts;
  EXPECT_EQ(c.pulses, 30000u);
  EXPECT_EQ(c.sifted, c.pulses);
  EXPECT_EQ(c.none + c.correct + c.wrong + c.double_click, c.sifted);
  EXPECT_EQ(c.photons[0] + c.photons[1], c.sifted);
  EXPECT_EQ(c.single_clicks[0] + c.single_clicks[1], c.correct + c.wrong);
  EXPECT_EQ(c.single_click_errors[0] + c.single_click_errors[1], c.wrong);
  EXPECT_EQ(c.diff_errors_by_n[0] + c.diff_errors_by_n[1], c.diff_errors);
  EXPECT_EQ(c.diff_ties, 0u);
}

TEST(Simulate, BasisMismatchIsSiftedOut) {
  SimOptions opt;
  opt.basis_match_prob = 0.5;
  const auto s = simulate(LinkModel{0.7, 0.0, 1.0}, 100000, 9, opt);
  EXPECT_NEAR(static_cast<double>(s.counts.sifted) / 100000.0, 0.5, kZ * 0.5 / std::sqrt(1e5));
  const auto ev = independent_event_probs(0.7, Threshold(1.0));
  EXPECT_LT(s.sifted_qber().z_score(ev.qber), kZ);
  EXPECT_LT(s.differential_qber().z_score(differential_qber(0.7)), kZ);
}

TEST(Simulate, AgreesWithClosedForms) {
  for (const LinkModel link : {LinkModel{1.0, 0.0, 1.0}, LinkModel{0.3, 0.05, 2.0},
                               LinkModel{0.0, 0.0, 0.7}}) {
    const auto s = simulate(link, 200000, 31);
    const Threshold tau(link.tau);
    const auto ev = independent_event_probs(link.eta_ch, tau, link.e_d);
    EXPECT_LT(s.p_none().z_score(ev.p_none), kZ);
    EXPECT_LT(s.p_correct().z_score(ev.p_correct), kZ);
    EXPECT_LT(s.p_wrong().z_score(ev.p_wrong), kZ);
    EXPECT_LT(s.p_double().z_score(ev.p_double), kZ);
    EXPECT_LT(s.sifted_qber().z_score(ev.qber), kZ);
    const auto sq = independent_squashed_stats(link.eta_ch, tau, link.e_d);
    EXPECT_LT(s.squashed_qber().z_score(sq.qber), kZ);
    EXPECT_LT(s.differential_qber().z_score(differential_qber(link.eta_ch, link.e_d)), kZ);
    EXPECT_LT(s.yield(0).z_score(yields_independent(tau).y10), kZ);
  }
}

TEST(Simulate, DarkCountsGiveHalfQber) {
  const auto s = simulate(LinkModel{0.0, 0.0, 1.0}, 1000000, 44);
  EXPECT_LT(s.sifted_qber().z_score(0.5), 3.0);
}

TEST(Simulate, RecordsAreCappedAndConsistent) {
  SimOptions opt;
  opt.record_cap = 100;
  const auto s = simulate(LinkModel{0.5, 0.0, 1.0}, 1000, 3, opt);
  ASSERT_EQ(s.records.size(), 100u);
  for (const auto& r : s.records) {
    EXPECT_EQ(r.routed_detector.has_value(), r.photon_survived);
    EXPECT_EQ(r.virtual_bit, r.routed_detector);
    if (r.photon_survived) {
      EXPECT_EQ(*r.virtual_bit, r.alice_bit);  // e_d = 0
    }
    EXPECT_EQ(r.differential_bit, r.z1 > r.z0 ? 1 : 0);
  }
  EXPECT_TRUE(simulate(LinkModel{0.5, 0.0, 1.0}, 1000, 3).records.empty());
}

TEST(Simulate, RejectsInvalidInput) {
  EXPECT_THROW(simulate(LinkModel{1.5, 0.0, 1.0}, 10, 1), domain_error);
  EXPECT_THROW(simulate(LinkModel{0.5, 0.6, 1.0}, 10, 1), domain_error);
  EXPECT_THROW(simulate(LinkModel{0.5, 0.0, 1.0}, 0, 1), domain_error);
  SimOptions opt;
  opt.basis_match_prob = 0.0;
  EXPECT_THROW(simulate(LinkModel{0.5, 0.0, 1.0}, 10, 1, opt), domain_error);
}

TEST(EmpiricalE11, Examples) {
  const auto diff = empirical_e11_check(LinkModel{1.0, 0.1, 1.0}, DetectionMode::Differential,
                                        200000, 61);
  EXPECT_NEAR(diff.predicted, 0.3, 1e-15);
  EXPECT_LT(std::abs(diff.measured - diff.predicted), kZ * diff.sigma);

  const auto ind = empirical_e11_check(LinkModel{1.0, 0.0, 1.0}, DetectionMode::Independent,
                                       200000, 62);
  EXPECT_NEAR(ind.predicted, 0.17288, 1e-5);
  EXPECT_LT(std::abs(ind.measured - ind.predicted), kZ * ind.sigma);

  const auto scrambled = empirical_e11_check(LinkModel{1.0, 0.5, 2.0},
                                             DetectionMode::Independent, 200000, 63);
  EXPECT_NEAR(scrambled.predicted, 0.5, 1e-12);
  EXPECT_LT(std::abs(scrambled.measured - 0.5), kZ * scrambled.sigma);
}

TEST(EmpiricalE11, NeedsEnoughEvents) {
  EXPECT_THROW(empirical_e11_check(LinkModel{0.0, 0.0, 1.0}, DetectionMode::Differential, 5000, 1),
               statistics_error);
  EXPECT_THROW(empirical_e11_check(LinkModel{1.0, 0.0, 1.0}, DetectionMode::PerfectSpd, 5000, 1),
               domain_error);
}

TEST(EmitZStream, MixtureMean) {
  const auto zs = emit_z_stream(PhotonNumberDistribution({0.9, 0.1}), 400000, 71);
  double sum = 0.0;
  double sq = 0.0;
  for (double z : zs.values()) {
    sum += z;
    sq += z * z;
  }
  const double n = static_cast<double>(zs.size());
  const double mean = sum / n;
  // E[Z] = 0.9 * 1 + 0.1 * 2; Var[Z] = E[Z^2] - 1.1^2 with E[Z^2] = 0.9*2 + 0.1*6
  const double var = 0.9 * 2.0 + 0.1 * 6.0 - 1.1 * 1.1;
  EXPECT_NEAR(mean, 1.1, 3.0 * std::sqrt(var / n));
  EXPECT_NEAR(sq / n - mean * mean, var, 0.02);
}

TEST(Proportion, Sigma) {
  const Proportion p{25, 100};
  EXPECT_EQ(p.value(), 0.25);
  EXPECT_NEAR(p.sigma(0.25), std::sqrt(0.25 * 0.75 / 100.0), 1e-15);
  EXPECT_EQ(p.z_score(0.25), 0.0);
  EXPECT_EQ((Proportion{0, 0}).value(), 0.0);
}

}  // namespace
}  // namespace hdqkd
