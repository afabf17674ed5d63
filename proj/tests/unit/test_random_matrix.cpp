#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fbq/error.hpp"
#include "fbq/random_matrix.hpp"
#include "oracles.hpp"

using namespace fbq;

TEST(AntennaConfig, MinMax) {
  const AntennaConfig c(4, 2);
  EXPECT_EQ(c.tx(), 4);
  EXPECT_EQ(c.rx(), 2);
  EXPECT_EQ(c.m(), 2);
  EXPECT_EQ(c.n(), 4);
  EXPECT_THROW(AntennaConfig(0, 2), DomainError);
}

TEST(Rng, SeedAndSubstreamsAreReproducible) {
  Rng a(5), b(5);
  for (int k = 0; k < 10; ++k) EXPECT_EQ(a.normal(), b.normal());
  Rng s1 = Rng(5).substream({3, 1});
  Rng s2 = Rng(5).substream({3, 1});
  Rng s3 = Rng(5).substream({3, 2});
  const double x1 = s1.uniform(), x2 = s2.uniform(), x3 = s3.uniform();
  EXPECT_EQ(x1, x2);
  EXPECT_NE(x1, x3);
}

TEST(HermitianEigenvalues, MatchesCharacteristicPolynomial) {
  Rng rng(11);
  for (int dim : {1, 2, 3, 5}) {
    std::vector<std::vector<Complex>> a(dim, std::vector<Complex>(dim));
    for (int r = 0; r < dim; ++r) {
      a[r][r] = rng.normal();
      for (int c = r + 1; c < dim; ++c) {
        a[r][c] = Complex(rng.normal(), rng.normal());
        a[c][r] = std::conj(a[r][c]);
      }
    }
    std::vector<Complex> flat;
    for (const auto& row : a) flat.insert(flat.end(), row.begin(), row.end());
    std::vector<double> eig(dim);
    hermitian_eigenvalues(flat, dim, eig);
    EXPECT_TRUE(std::is_sorted(eig.rbegin(), eig.rend()));
    double scale = 0.0;
    for (double e : eig) scale = std::max(scale, std::abs(e));
    for (double e : eig) {
      auto shifted = a;
      for (int d = 0; d < dim; ++d) shifted[d][d] -= e;
      EXPECT_LT(std::abs(oracle::cofactor_det(shifted)), 1e-9 * std::pow(1.0 + scale, dim)) << "dim " << dim;
    }
    double trace = 0.0;
    for (int d = 0; d < dim; ++d) trace += a[d][d].real();
    EXPECT_NEAR(std::accumulate(eig.begin(), eig.end(), 0.0), trace, 1e-10);
  }
}

TEST(EigHH, GramOfKnownMatrix) {
  ChannelMatrix h(2, 2);
  h(0, 0) = 3.0;
  h(1, 1) = Complex(0.0, 2.0);
  const auto s = eig_hh(h);
  ASSERT_EQ(s.lambdas.size(), 2u);
  EXPECT_NEAR(s.lambdas[0], 9.0, 1e-12);
  EXPECT_NEAR(s.lambdas[1], 4.0, 1e-12);
}

TEST(EigHH, RejectsNonFinite) {
  ChannelMatrix h(1, 1);
  h(0, 0) = Complex(NAN, 0.0);
  EXPECT_THROW(eig_hh(h), Error);
}

TEST(EigenSampler, MomentsOfWishart) {
  // E[tr HH^H] = M N and E[tr (HH^H)^2] = M N (M + N).
  for (const auto& cfg : {AntennaConfig(1, 1), AntennaConfig(2, 3), AntennaConfig(3, 2)}) {
    EigenSampler sampler(cfg);
    Rng rng(3);
    std::vector<double> lam(cfg.m());
    const int trials = 200000;
    double s1 = 0.0, s2 = 0.0;
    for (int t = 0; t < trials; ++t) {
      sampler.draw(rng, lam);
      for (double l : lam) {
        s1 += l;
        s2 += l * l;
      }
    }
    const double mn = cfg.tx() * cfg.rx();
    EXPECT_NEAR(s1 / trials, mn, 0.02 * mn);
    EXPECT_NEAR(s2 / trials, mn * (cfg.tx() + cfg.rx()), 0.03 * mn * (cfg.tx() + cfg.rx()));
  }
}

TEST(EigenSampler, SisoIsExponential) {
  EigenSampler sampler(AntennaConfig(1, 1));
  Rng rng(8);
  std::vector<double> lam(1);
  const int trials = 400000;
  int below = 0;
  for (int t = 0; t < trials; ++t) {
    sampler.draw(rng, lam);
    below += lam[0] < 1.0;
  }
  const double p = 1.0 - std::exp(-1.0);
  EXPECT_NEAR(static_cast<double>(below) / trials, p, 4.0 * std::sqrt(p * (1 - p) / trials));
}

TEST(JointDensity, NormalizerMatchesClosedForm) {
  for (int m = 1; m <= 4; ++m) {
    for (int n = m; n <= m + 2; ++n) {
      const double got = joint_eig_normalizer(AntennaConfig(m, n));
      EXPECT_NEAR(got / oracle::mehta_constant(m, n), 1.0, 1e-10) << m << "x" << n;
    }
  }
}

TEST(JointDensity, IntegratesToOneOverOrderedRegion) {
  const AntennaConfig cfg(2, 3);
  const double total = oracle::integrate(
      [&](double l1) {
        return oracle::integrate(
            [&](double l2) {
              const double v[2] = {l1, l2};
              return joint_eig_density(v, cfg, true);
            },
            0.0, l1, 1e-10);
      },
      0.0, 60.0, 1e-9);
  EXPECT_NEAR(total, 1.0, 1e-6);
}

TEST(JointDensity, ZeroWhenNotDescending) {
  const double v[2] = {0.5, 2.0};
  EXPECT_EQ(joint_eig_density(v, AntennaConfig(2, 2), false), 0.0);
}
