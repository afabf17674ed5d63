#include <gtest/gtest.h>

#include <cmath>

#include "fbq/error.hpp"
#include "fbq/quantizer.hpp"
#include "oracles.hpp"

using namespace fbq;

namespace {

const EigDistribution& siso() {
  static const auto d = EigDistribution::smallest_analytic(AntennaConfig(1, 1));
  return d;
}

double db(double x) { return std::pow(10.0, x / 10.0); }

// Minimum SISO outage with two bins, found by brute force over gamma1. Both the
// transmitting and the silent first bin are tried.
double two_bin_oracle(double p, double k) {
  auto F = [](double t) { return -std::expm1(-t); };
  // Silent bin 0: k e^{-g1} / g1 = p.
  const double g_silent =
      oracle::bisect_increasing([&](double g) { return -k * std::exp(-g) / g; }, -p, 1e-300, 1e3);
  double best = F(g_silent);
  const double lo = std::log(1e-6 * k / p), hi = std::log(50.0 * k / p + 50.0);
  double best_g1 = 0.0;
  auto outage_at = [&](double g1) {
    const double tail = k / g1 * std::exp(-g1);
    if (tail >= p) return 2.0;
    // Bin 0 sends k/g0 on all of [0, g1), so its power k/g0 F(g1) falls in g0.
    const double g0 = oracle::bisect_increasing([&](double g0) { return -(k / g0 * F(g1)); }, -(p - tail), 1e-300, g1);
    return F(g0);
  };
  for (int j = 0; j <= 4000; ++j) {
    const double g1 = std::exp(lo + (hi - lo) * j / 4000.0);
    const double v = outage_at(g1);
    if (v < best) {
      best = v;
      best_g1 = g1;
    }
  }
  if (best_g1 > 0.0) {
    double a = best_g1 * std::exp(-(hi - lo) / 2000.0), b = best_g1 * std::exp((hi - lo) / 2000.0);
    // Ternary search around the best grid point.
    for (int it = 0; it < 200; ++it) {
      const double m1 = a + (b - a) / 3, m2 = b - (b - a) / 3;
      if (outage_at(m1) < outage_at(m2)) {
        b = m2;
      } else {
        a = m1;
      }
    }
    best = std::min(best, outage_at(0.5 * (a + b)));
  }
  return best;
}

}  // namespace

TEST(Quantizer, SingleBinIsTruncatedInversion) {
  const auto rep = design_kkt(siso(), 1, 100.0, 3.0);
  const auto& q = rep.quantizer;
  ASSERT_EQ(q.powers.size(), 1u);
  EXPECT_DOUBLE_EQ(q.powers[0], 100.0);
  EXPECT_NEAR(q.gamma0, 0.03, 1e-15);
  EXPECT_NEAR(outage_analytic(q, siso()), -std::expm1(-0.03), 1e-15);
  const auto eq = design_equi_power(siso(), 1, 100.0, 3.0);
  EXPECT_EQ(eq.quantizer.gamma0, q.gamma0);
}

TEST(Quantizer, RateConstants) {
  EXPECT_DOUBLE_EQ(siso_rate_constant(2.0), 3.0);
  EXPECT_DOUBLE_EQ(mimo_rate_constant(AntennaConfig(1, 1), 1, 2.0), 3.0);
  EXPECT_DOUBLE_EQ(mimo_rate_constant(AntennaConfig(2, 3), 2, 2.0), 2.0);
  EXPECT_DOUBLE_EQ(mimo_rate_constant(AntennaConfig(2, 1), 1, 2.0), 6.0);
}

TEST(Quantizer, KktMatchesBruteForceForTwoBins) {
  for (double snr : {0.0, 10.0, 20.0}) {
    const double p = db(snr);
    const double ref = two_bin_oracle(p, 3.0);
    const double got = outage_analytic(design_kkt(siso(), 2, p, 3.0).quantizer, siso());
    EXPECT_LE(got, ref * (1.0 + 1e-6)) << snr;
    EXPECT_GE(got, ref * (1.0 - 1e-3)) << snr;
  }
}

TEST(Quantizer, EquiPowerSharesBudgetEqually) {
  for (int bins : {2, 3, 4}) {
    const double p = db(15.0);
    const auto q = design_equi_power(siso(), bins, p, 3.0).quantizer;
    q.validate();
    // Bin 0 spans [0, gamma1) whether or not it is silent.
    std::vector<double> edges{0.0};
    if (q.bin0_silent) edges.clear();
    edges.insert(edges.end(), q.thresholds.begin(), q.thresholds.end());
    edges.push_back(INFINITY);
    const int first = q.bin0_silent ? 1 : 0;
    const int served = bins - first;
    for (int j = first; j < bins; ++j) {
      const double a = edges[j - first], b = edges[j - first + 1];
      const double bin_mass = std::exp(-a) - (std::isinf(b) ? 0.0 : std::exp(-b));
      EXPECT_NEAR(q.powers[j] * bin_mass / (p / served), 1.0, 1e-9) << "L=" << bins << " j=" << j;
    }
  }
}

TEST(Quantizer, PowersFollowChannelInversion) {
  const auto q = design_kkt(siso(), 4, db(20.0), 3.0).quantizer;
  for (std::size_t j = 0; j < q.thresholds.size(); ++j) EXPECT_NEAR(q.powers[j + 1] * q.thresholds[j], 3.0, 1e-12);
  EXPECT_EQ(q.bin_of(q.thresholds[0] * 0.5), 0);
  EXPECT_EQ(q.bin_of(q.thresholds.back() * 2.0), 3);
  EXPECT_EQ(q.power_for(1e9), q.powers.back());
}

TEST(Quantizer, MoreBinsNeverHurt) {
  for (double snr : {5.0, 15.0, 25.0}) {
    double prev = 1.0;
    for (int bins = 1; bins <= 5; ++bins) {
      const double o = log_outage_analytic(design_kkt(siso(), bins, db(snr), 3.0).quantizer, siso());
      EXPECT_LE(o, std::log(prev) + 1e-12) << snr << " L=" << bins;
      prev = std::exp(o);
    }
  }
}

TEST(Quantizer, KktResidualsAndBudget) {
  const auto d = EigDistribution::smallest_analytic(AntennaConfig(2, 1));
  for (int bins : {2, 3, 4}) {
    const auto rep = design_kkt(d, bins, db(20.0), 6.0);
    EXPECT_LT(rep.residual_max(), 1e-8);
    EXPECT_NEAR(avg_power(rep.quantizer, d) / db(20.0), 1.0, 1e-9);
    for (double r : kkt_residuals(rep.quantizer, d)) EXPECT_LT(std::abs(r), 1e-8);
  }
}

TEST(Quantizer, SilentAndTransmitPolicies) {
  const double p = db(5.0);
  const auto silent = design_kkt(siso(), 3, p, 3.0, DesignOptions{Bin0Policy::Silent}).quantizer;
  EXPECT_TRUE(silent.bin0_silent);
  EXPECT_EQ(silent.powers[0], 0.0);
  EXPECT_EQ(silent.gamma0, silent.thresholds[0]);
  const auto best = design_kkt(siso(), 3, p, 3.0).quantizer;
  EXPECT_LE(outage_analytic(best, siso()), outage_analytic(silent, siso()) * (1 + 1e-12));
  EXPECT_THROW(design_kkt(siso(), 1, p, 3.0, DesignOptions{Bin0Policy::Silent}), DomainError);
}

TEST(Quantizer, ValidateRejectsBrokenStructure) {
  Quantizer q;
  q.bins = 2;
  q.rate_constant = 3.0;
  q.thresholds = {1.0};
  q.powers = {5.0};
  EXPECT_THROW(q.validate(), DomainError);
  q.powers = {6.0, 2.0};
  q.gamma0 = 0.5;
  EXPECT_THROW(q.validate(), DomainError);  // P1 must equal k / gamma1
}

TEST(Quantizer, JsonRoundTripPreservesPower) {
  QuantizerRecord rec;
  rec.eig_index = 1;
  rec.rate_bits = 2.0;
  rec.snr_db = 20.0;
  rec.method = DesignMethod::Kkt;
  const auto rep = design_kkt(siso(), 3, db(20.0), 3.0);
  rec.quantizer = rep.quantizer;
  rec.residual_max = rep.residual_max();
  rec.avg_power = avg_power(rep.quantizer, siso());
  const auto back = quantizer_from_json(quantizer_to_json(rec, {{"seed", "42"}}));
  EXPECT_EQ(back.quantizer.thresholds, rec.quantizer.thresholds);
  EXPECT_NEAR(avg_power(back.quantizer, siso()), rec.avg_power, 1e-9 * rec.avg_power);
  EXPECT_EQ(back.method, DesignMethod::Kkt);
  EXPECT_THROW(quantizer_from_json("{\"L\": 2}"), Error);
}

TEST(Quantizer, ParseMethod) {
  EXPECT_EQ(parse_method("equi"), DesignMethod::EquiPower);
  EXPECT_EQ(method_name(DesignMethod::Kkt), "kkt");
  EXPECT_THROW(parse_method("lloyd"), DomainError);
}

TEST(Gamma0, RegressionSlopeFollowsGeometricSum) {
  const AntennaConfig cfg(1, 1);
  const auto fit = fit_gamma0_constant(siso(), cfg, 1, 2, 0.0, DesignMethod::Kkt);
  EXPECT_DOUBLE_EQ(fit.exponent, 2.0);
  EXPECT_NEAR(fit.slope, -2.0, 0.05);
  EXPECT_GT(fit.r_squared, 0.999);
  const auto a = gamma0_asymptotic(cfg, 1, 2, 0.5, 1e4, fit.constant);
  EXPECT_DOUBLE_EQ(a.exponent, 1.0);
  EXPECT_NEAR(a.value, fit.constant * 1e-4, 1e-18);
  EXPECT_THROW(gamma0_asymptotic(cfg, 1, 2, 1.5, 10.0), DomainError);
}
