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

#include <boost/math/special_functions/gamma.hpp>
#include <gtest/gtest.h>

#include "hdqkd/protocol.hpp"
#include "unit/generators.hpp"

namespace hdqkd {
namespace {

// Outcome probabilities by enumerating where the photon goes and whether
// each detector fires, using incomplete-gamma tails for the clicks.
DetectionStats enumerate_events(double eta, double tau, double e_d) {
  const double p_photon = boost::math::gamma_q(2.0, tau);
  const double p_vacuum = boost::math::gamma_q(1.0, tau);
  DetectionStats s{};
  struct Branch {
    double weight;
    double p0;  // click probability of the detector for the correct bit
    double p1;
  };
  const Branch branches[] = {{1.0 - eta, p_vacuum, p_vacuum},
                             {eta * (1.0 - e_d), p_photon, p_vacuum},
                             {eta * e_d, p_vacuum, p_photon}};
  for (const auto& b : branches) {
    for (int c0 = 0; c0 < 2; ++c0) {
      for (int c1 = 0; c1 < 2; ++c1) {
        const double p = b.weight * (c0 ? b.p0 : 1.0 - b.p0) * (c1 ? b.p1 : 1.0 - b.p1);
        if (c0 && c1) s.p_double += p;
        else if (c0) s.p_correct += p;
        else if (c1) s.p_wrong += p;
        else s.p_none += p;
      }
    }
  }
  return s;
}

TEST(ChannelTransmittance, Examples) {
  EXPECT_EQ(channel_transmittance(0.2, 0.0), 1.0);
  EXPECT_NEAR(channel_transmittance(0.2, 50.0), 0.1, 1e-15);
  EXPECT_NEAR(channel_transmittance(0.2, 100.0), 0.01, 1e-16);
  EXPECT_THROW(channel_transmittance(0.0, 1.0), domain_error);
  EXPECT_THROW(channel_transmittance(0.2, -1.0), domain_error);
}

TEST(IndependentEvents, MatchEnumerationOracle) {
  testing::Gen gen(21);
  for (int i = 0; i < testing::kPropertyCases; ++i) {
    const double eta = gen.eta();
    const double tau = gen.tau();
    const double ed = gen.misalignment();
    const auto s = independent_event_probs(eta, Threshold(tau), ed);
    const auto o = enumerate_events(eta, tau, ed);
    EXPECT_NEAR(s.p_none, o.p_none, 1e-13);
    EXPECT_NEAR(s.p_correct, o.p_correct, 1e-13);
    EXPECT_NEAR(s.p_wrong, o.p_wrong, 1e-13);
    EXPECT_NEAR(s.p_double, o.p_double, 1e-13);
  }
}

TEST(IndependentEvents, SumToOneAndSiftedIdentities) {
  testing::Gen gen(22);
  for (int i = 0; i < 2000; ++i) {
    const double eta = gen.eta();
    const double tau = gen.uniform(0.0, 20.0);
    const double ed = gen.misalignment();
    const auto s = independent_event_probs(eta, Threshold(tau), ed);
    EXPECT_NEAR(s.p_none + s.p_correct + s.p_wrong + s.p_double, 1.0, 1e-12);
    EXPECT_EQ(s.q_sifted, s.p_correct + s.p_wrong);
    EXPECT_GE(s.qber, 0.0);
    EXPECT_LE(s.qber, 0.5 + 1e-15);
    for (double p : {s.p_none, s.p_correct, s.p_wrong, s.p_double}) {
      EXPECT_GE(p, 0.0);
      EXPECT_LE(p, 1.0);
    }
    if (1.0 - s.p_none > 0.0) {
      const auto sq = independent_squashed_stats(eta, Threshold(tau), ed);
      EXPECT_EQ(sq.gain, 1.0 - s.p_none);
    }
  }
}

TEST(IndependentEvents, ZeroThresholdAlwaysDoubleClicks) {
  const auto s = independent_event_probs(0.4, Threshold(0.0));
  EXPECT_EQ(s.p_double, 1.0);
  EXPECT_EQ(s.p_none, 0.0);
  EXPECT_EQ(s.p_correct, 0.0);
  EXPECT_EQ(s.p_wrong, 0.0);
}

TEST(IndependentEvents, DarkCountsAreSymmetric) {
  for (double tau : {0.3, 1.0, 4.0}) {
    const auto s = independent_event_probs(0.0, Threshold(tau));
    const double expected = std::exp(-tau) * (1.0 - std::exp(-tau));
    EXPECT_NEAR(s.p_correct, expected, 1e-15);
    EXPECT_NEAR(s.p_wrong, expected, 1e-15);
    EXPECT_EQ(s.qber, 0.5);
  }
}

TEST(IndependentEvents, RejectsOutOfRange) {
  EXPECT_THROW(independent_event_probs(1.2, Threshold(1.0)), domain_error);
  EXPECT_THROW(independent_event_probs(0.5, Threshold(1.0), 0.6), domain_error);
}

TEST(SquashedStats, Examples) {
  const auto all_double = independent_squashed_stats(0.7, Threshold(0.0));
  EXPECT_EQ(all_double.gain, 1.0);
  EXPECT_EQ(all_double.qber, 0.5);
  for (double tau : {0.5, 2.0}) {
    const auto dark = independent_squashed_stats(0.0, Threshold(tau));
    const double d = std::exp(-tau);
    EXPECT_NEAR(dark.gain, 2.0 * d - d * d, 1e-15);
    EXPECT_NEAR(dark.qber, 0.5, 1e-15);
  }
  // eta = 1, tau = 1
  const double d = std::exp(-1.0);
  const double eff = 2.0 * d;
  const double q = 1.0 - (1.0 - eff) * (1.0 - d);
  const double e = (d * (1.0 - eff) + 0.5 * eff * d) / q;
  const auto s = independent_squashed_stats(1.0, Threshold(1.0));
  EXPECT_NEAR(s.gain, q, 1e-15);
  EXPECT_NEAR(s.qber, e, 1e-15);
}

TEST(DifferentialQber, Examples) {
  EXPECT_EQ(differential_qber(1.0), 0.25);
  EXPECT_EQ(differential_qber(0.0), 0.5);
  EXPECT_EQ(differential_qber(0.5), 0.375);
  EXPECT_NEAR(differential_qber(1.0, 0.1), 0.3, 1e-15);
  EXPECT_NEAR(differential_qber(0.7, 0.5), 0.5, 1e-15);
}

TEST(DifferentialQber, AffineWithSlopeMinusQuarter) {
  for (int i = 0; i < 100; ++i) {
    const double eta = i / 100.0;
    EXPECT_NEAR(differential_qber(eta + 0.01) - differential_qber(eta), -0.0025, 1e-15);
  }
}

TEST(BinaryEntropy, Examples) {
  EXPECT_EQ(binary_entropy(0.5), 1.0);
  EXPECT_EQ(binary_entropy(0.0), 0.0);
  EXPECT_EQ(binary_entropy(1.0), 0.0);
  EXPECT_NEAR(binary_entropy(0.25), 0.8112781244591328, 1e-15);
  EXPECT_THROW(binary_entropy(-0.1), domain_error);
  EXPECT_THROW(binary_entropy(1.1), domain_error);
}

TEST(BinaryEntropy, SymmetricAndIncreasingOnLowerHalf) {
  testing::Gen gen(23);
  for (int i = 0; i < testing::kPropertyCases; ++i) {
    const double x = gen.uniform(0.0, 0.5);
    EXPECT_NEAR(binary_entropy(x), binary_entropy(1.0 - x), 1e-15);
    EXPECT_LT(binary_entropy(x), binary_entropy(std::min(0.5, x + 1e-3)));
  }
}

TEST(MutualInformation, Examples) {
  EXPECT_EQ(mutual_information(0.3, 0.0), 0.3);
  EXPECT_EQ(mutual_information(0.8, 0.5), 0.0);
  EXPECT_NEAR(mutual_information(1.0, 0.25), 1.0 - binary_entropy(0.25), 1e-15);
}

TEST(SiftedStats, ModesAtZeroLength) {
  Scenario sc;
  sc.mode = DetectionMode::PerfectSpd;
  EXPECT_EQ(sifted_stats(sc).gain, 1.0);
  EXPECT_EQ(sifted_stats(sc).qber, 0.0);
  sc.mode = DetectionMode::Differential;
  EXPECT_EQ(sifted_stats(sc).gain, 1.0);
  EXPECT_EQ(sifted_stats(sc).qber, 0.25);
}

TEST(SiftedStats, HomodyneBelowSpdBaseline) {
  testing::Gen gen(24);
  for (int i = 0; i < testing::kPropertyCases; ++i) {
    Scenario sc;
    sc.length_km = gen.uniform(0.0, 150.0);
    sc.tau = gen.uniform(1e-3, 20.0);
    const double eta = sc.eta_ch();
    for (auto m : {DetectionMode::Independent, DetectionMode::Differential}) {
      sc.mode = m;
      const auto ge = sifted_stats(sc);
      EXPECT_LE(mutual_information(ge.gain, ge.qber), eta) << to_string(m);
    }
  }
}

TEST(Scenario, Validation) {
  Scenario sc;
  EXPECT_NO_THROW(sc.validate());
  sc.e_d = 0.7;
  try {
    sc.validate();
    FAIL() << "expected domain_error";
  } catch (const domain_error& e) {
    EXPECT_NE(std::string(e.what()).find("[0, 0.5]"), std::string::npos);
  }
  sc = Scenario{};
  sc.f_ec = 0.9;
  EXPECT_THROW(sc.validate(), domain_error);
  sc = Scenario{};
  sc.gamma_db_per_km = 0.0;
  EXPECT_THROW(sc.validate(), domain_error);
  sc = Scenario{};
  sc.length_km = -1.0;
  EXPECT_THROW(sc.validate(), domain_error);
}

TEST(DetectionMode, NamesRoundTrip) {
  for (auto m : {DetectionMode::Independent, DetectionMode::Differential,
                 DetectionMode::PerfectSpd}) {
    EXPECT_EQ(parse_detection_mode(to_string(m)), m);
  }
  EXPECT_FALSE(parse_detection_mode("bogus").has_value());
}

}  // namespace
}  // namespace hdqkd
