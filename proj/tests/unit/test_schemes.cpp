#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "fbq/error.hpp"
#include "fbq/schemes.hpp"
#include "oracles.hpp"

using namespace fbq;

namespace {

Scheme make(const AntennaConfig& cfg, SchemePolicy policy, double p, double rate) {
  Scheme s;
  s.cfg = cfg;
  s.policy = std::move(policy);
  s.p_av = p;
  s.rate_bits = rate;
  return s;
}

// Minimum of p1 + p2 reaching `rate` over two modes, by golden section on p1.
double two_mode_min_power(double l1, double l2, double rate) {
  const double target = std::pow(2.0, rate);
  auto total = [&](double p1) {
    const double left = target / (1.0 + p1 * l1);
    return p1 + (left > 1.0 ? (left - 1.0) / l2 : 0.0);
  };
  const double hi = (target - 1.0) / l1;
  double a = 0.0, b = hi;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 300; ++it) {
    const double c = b - phi * (b - a), d = a + phi * (b - a);
    if (total(c) < total(d)) {
      b = d;
    } else {
      a = c;
    }
  }
  return std::min({total(0.5 * (a + b)), total(0.0), total(hi)});
}

}  // namespace

TEST(GFunction, GeometricSums) {
  EXPECT_EQ(g_function(2, 2, 1, 1).value, 1u);
  EXPECT_EQ(g_function(1, 2, 1, 3).value, 7u);    // 1 + 2 + 4
  EXPECT_EQ(g_function(2, 3, 1, 2).value, 7u);    // 1 + 6
  EXPECT_EQ(g_function(2, 3, 2, 3).value, 7u);    // 1 + 2 + 4
  EXPECT_EQ(g_function(3, 3, 3, 4).value, 4u);
  EXPECT_THROW(g_function(2, 3, 3, 2), DomainError);
  EXPECT_THROW(g_function(2, 3, 1, 0), DomainError);
}

TEST(GFunction, SaturatesInsteadOfWrapping) {
  const auto g = g_function(4, 8, 1, 40);  // base 32
  EXPECT_TRUE(g.saturated);
  EXPECT_EQ(g.value, std::numeric_limits<std::uint64_t>::max());
  EXPECT_NEAR(std::log(g.as_double()), 40 * std::log(32.0) - std::log(31.0), 1e-9);  // (32^40 - 1) / 31
  EXPECT_FALSE(g_function(4, 8, 1, 12).saturated);
}

TEST(Allocate, NoCsitAndBeamforming) {
  const AntennaConfig cfg(2, 3);
  const EigSample lam{{4.0, 0.5}};
  const auto a = allocate(make(cfg, NoCsit{}, 10.0, 2.0), lam);
  EXPECT_EQ(a.per_mode, (std::vector<double>{5.0, 5.0}));
  EXPECT_TRUE(a.transmitting);
  EXPECT_NEAR(mutual_information(lam, a), std::log2(21.0) + std::log2(3.5), 1e-12);
  const auto b = allocate(make(cfg, Beamforming{}, 10.0, 2.0), lam);
  EXPECT_EQ(b.per_mode[0], 10.0);
  EXPECT_EQ(b.per_mode[1], 0.0);
  EXPECT_THROW(allocate(make(cfg, NoCsit{}, 10.0, 2.0), EigSample{{1.0}}), DomainError);
}

TEST(Allocate, TemporalPerfectMeetsRateExactlyAboveCutoff) {
  const AntennaConfig cfg(2, 2);
  const auto s = make(cfg, TemporalPerfect{0.1}, 10.0, 4.0);
  const EigSample above{{3.0, 0.2}};
  const auto a = allocate(s, above);
  EXPECT_TRUE(a.transmitting);
  // Per antenna (2^{R/m}-1)/lambda_m, so the weakest mode carries exactly R/m.
  EXPECT_NEAR(a.per_mode[0], 3.0 / 0.2, 1e-12);
  EXPECT_FALSE(is_outage(above.lambdas, a));
  const auto b = allocate(s, EigSample{{3.0, 0.05}});
  EXPECT_FALSE(b.transmitting);
  EXPECT_TRUE(is_outage(std::vector<double>{3.0, 0.05}, b));
}

TEST(Allocate, QuantizedUsesBinPower) {
  Quantizer q;
  q.bins = 2;
  q.rate_constant = 3.0;
  q.gamma0 = 0.5;
  q.thresholds = {1.0};
  q.powers = {6.0, 3.0};
  const auto s = make(AntennaConfig(1, 1), QuantizedTemporal{q, 1}, 4.0, 2.0);
  s.validate();
  const auto lo = allocate(s, EigSample{{0.7}});
  EXPECT_EQ(lo.total, 6.0);
  EXPECT_FALSE(is_outage(std::vector<double>{0.7}, lo));
  const auto below = allocate(s, EigSample{{0.4}});
  EXPECT_TRUE(below.transmitting);  // bin 0 still transmits; the codeword fails
  EXPECT_TRUE(is_outage(std::vector<double>{0.4}, below));
}

TEST(IsOutage, BoundaryAllowance) {
  PowerAllocation a;
  a.per_mode = {1.0};
  a.transmitting = true;
  a.rate_bits = 1.0;
  EXPECT_FALSE(is_outage(std::vector<double>{1.0}, a));
  EXPECT_FALSE(is_outage(std::vector<double>{1.0 - 1e-12}, a));
  EXPECT_TRUE(is_outage(std::vector<double>{0.99}, a));
}

TEST(MinPower, MatchesBruteForceSplit) {
  for (const auto& l : {std::pair{5.0, 0.5}, std::pair{2.0, 1.5}, std::pair{10.0, 0.01}}) {
    for (double rate : {1.0, 4.0, 9.0}) {
      const double lam[2] = {l.first, l.second};
      double powers[2];
      const double got = min_power_for_rate(lam, rate, powers);
      const double ref = two_mode_min_power(l.first, l.second, rate);
      EXPECT_NEAR(got / ref, 1.0, 1e-7) << l.first << " " << l.second << " R=" << rate;
      EXPECT_NEAR(std::log2(1 + powers[0] * lam[0]) + std::log2(1 + powers[1] * lam[1]), rate, 1e-9);
      EXPECT_GE(powers[1], 0.0);
    }
  }
}

TEST(TemporalCutoff, FixedRateBudgetIdentity) {
  // (M, N) = (1, 3): lambda ~ Gamma(3), the budget is k E[1/lambda; lambda > gamma0].
  const AntennaConfig cfg(1, 3);
  const double rate = 2.0, k = 3.0;
  for (double p : {0.2, 1.0}) {
    const auto c = temporal_cutoff_fixed_rate(cfg, rate, p);
    ASSERT_FALSE(c.zero_outage);
    const double used =
        k * oracle::integrate([](double x) { return 0.5 * x * std::exp(-x); }, c.gamma0, 60.0, 1e-14);
    EXPECT_NEAR(used / p, 1.0, 1e-8) << p;
  }
  // E[1/lambda] = 1/2, so any budget above k/2 needs no cutoff.
  EXPECT_TRUE(temporal_cutoff_fixed_rate(cfg, rate, 1.6).zero_outage);
}

TEST(TemporalCutoff, SisoUsesExponentialIntegral) {
  const auto c = temporal_cutoff_fixed_rate(AntennaConfig(1, 1), 2.0, 100.0);
  // Power series E1(x) = -euler - ln x - sum (-x)^k / (k k!), exact for the tiny cutoff here.
  const double x = c.gamma0;
  double e1 = -0.57721566490153286 - std::log(x), term = 1.0;
  for (int k = 1; k < 30; ++k) {
    term *= -x / k;
    e1 -= term / k;
  }
  EXPECT_NEAR(3.0 * e1 / 100.0, 1.0, 1e-12);
}

TEST(TemporalCutoff, PerfectFormZeroOutageWhenNExceedsM) {
  EXPECT_TRUE(temporal_cutoff_perfect(AntennaConfig(2, 4), 1.0, 1e6).zero_outage);
  const auto c = temporal_cutoff_perfect(AntennaConfig(2, 2), 1.0, 1e4);
  EXPECT_NEAR(c.log_gamma0, -50.0, 1e-9);  // -P^{1-r/m} / m
  EXPECT_THROW(temporal_cutoff_perfect(AntennaConfig(2, 2), 3.0, 10.0), DomainError);
}

TEST(Joint, ThresholdAndRatio) {
  const AntennaConfig cfg(2, 3);
  const double p = 1e8;
  EXPECT_NEAR(joint_threshold(cfg, 1, 0.5, p), std::pow(std::log(0.5 * p), -1.0 / 6.0), 1e-15);
  EXPECT_NEAR(joint_threshold(cfg, 2, 0.5, p), std::pow(std::log(0.5 * p), -0.5), 1e-15);
  const double th = joint_threshold(cfg, 2, 0.5, p);
  EXPECT_NEAR(joint_multiplexing_ratio(cfg, 2, 0.5, p), std::log1p(0.5 * p * th) / std::log(0.5 * p), 1e-15);
  EXPECT_THROW(joint_threshold(cfg, 1, 0.5, 2.0), DomainError);
  EXPECT_THROW(joint_threshold(cfg, 1, 1.0, 1e3), DomainError);
}

TEST(Csir, SisoFullMultiplexingOutage) {
  // Pr{lambda <= 1} for an exponential lambda.
  const auto est = csir_full_mux_outage(AntennaConfig(1, 1), 400000, Rng(5), 2);
  const double ref = 1.0 - std::exp(-1.0);
  EXPECT_NEAR(est.value, ref, 4.0 * est.std_error);
  EXPECT_THROW(csir_full_mux_outage(AntennaConfig(1, 1), 100, Rng(5)), DomainError);
}

TEST(Scheme, ValidateRejectsBadParameters) {
  const AntennaConfig cfg(2, 2);
  EXPECT_THROW(make(cfg, NoCsit{}, 0.0, 1.0).validate(), DomainError);
  EXPECT_THROW(make(cfg, NoCsit{}, 1.0, 0.0).validate(), DomainError);
  EXPECT_THROW(make(cfg, OptimalPerfect{0.0}, 1.0, 1.0).validate(), DomainError);
  Quantizer q;
  q.rate_constant = 1.0;
  q.gamma0 = 1.0;
  q.powers = {1.0};
  EXPECT_NO_THROW(make(cfg, QuantizedTemporal{q, 2}, 1.0, 1.0).validate());
  EXPECT_THROW(make(cfg, QuantizedTemporal{q, 3}, 1.0, 1.0).validate(), DomainError);
  JointRatePower j;
  j.inner = q;
  j.gamma_th = 0.3;
  j.eig_index = 1;
  j.r1 = 1.5;
  EXPECT_THROW(make(cfg, j, 1.0, 1.0).validate(), DomainError);
  j.r1 = 1.0;
  EXPECT_NO_THROW(make(cfg, j, 1.0, 1.0).validate());
  EXPECT_EQ(make(cfg, NoCsit{}, 1.0, 1.0).kind_name(), "no-csit");
}
