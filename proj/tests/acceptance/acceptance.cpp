// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "fbq/eig_distribution.hpp"
#include "fbq/figures.hpp"
#include "fbq/quantizer.hpp"
#include "fbq/random_matrix.hpp"
#include "fbq/schemes.hpp"
#include "fbq/simulation.hpp"
#include "fbq/tradeoff.hpp"

using namespace fbq;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string num(double v, const char* f = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double db(double x) { return std::pow(10.0, x / 10.0); }

// Ordinary least squares y = c0 + c1 x; returns {slope, r_squared}.
std::pair<double, double> line_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  const double slope = sxy / sxx;
  return {slope, sxy * sxy / (sxx * syy)};
}

// Coefficient of x1 in y = c0 + c1 x1 + c2 x2 (normal equations, Cramer's rule).
double fit_with_correction(const std::vector<double>& x1, const std::vector<double>& x2, const std::vector<double>& y) {
  double a[3][3] = {}, b[3] = {};
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double row[3] = {1.0, x1[k], x2[k]};
    for (int i = 0; i < 3; ++i) {
      b[i] += row[i] * y[k];
      for (int j = 0; j < 3; ++j) a[i][j] += row[i] * row[j];
    }
  }
  auto det3 = [](double m[3][3]) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  };
  double m1[3][3];
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) m1[i][j] = j == 1 ? b[i] : a[i][j];
  }
  return det3(m1) / det3(a);
}

Outcome criterion1() {
  Outcome o;
  const double d0 = d_quantized(2, 3, 2, 0.0).envelope;
  const double d1 = d_joint(2, 3, 2, 1.0, JointVariant::FigureConsistent);
  const double d2 = d_joint(2, 3, 2, 2.0, JointVariant::FigureConsistent);
  o.require(d0 == 42.0, "d(0) = " + num(d0));
  o.require(d1 == 6.0, "d(1) = " + num(d1));
  o.require(d2 == 2.0, "d(2) = " + num(d2));
  for (int b = 1; b <= 3; ++b) {
    const double d = d_quantized(1, 1, 1 << b, 0.0).envelope;
    o.require(d == static_cast<double>(1 << b), "SISO B=" + std::to_string(b) + " gives " + num(d));
  }
  int checked = 0;
  for (int m = 1; m <= 4; ++m) {
    for (int n = m; n <= 4; ++n) {
      const std::uint64_t mn = static_cast<std::uint64_t>(m * n);
      if (mn == 1) continue;
      for (int b = 0; b <= 3; ++b) {
        const int bins = 1 << b;
        std::uint64_t pow = 1;
        for (int l = 0; l < bins; ++l) pow *= mn;
        const std::uint64_t lhs = mn * (pow - 1) / (mn - 1);
        const GValue g = g_function(m, n, 1, bins);
        o.require(!g.saturated && lhs == mn * g.value,
                  "identity fails at m=" + std::to_string(m) + " n=" + std::to_string(n) + " B=" + std::to_string(b));
        o.require(d_quantized(m, n, bins, 0.0).envelope == static_cast<double>(lhs), "d(0) differs from identity");
        ++checked;
      }
    }
  }
  if (o.pass) o.detail = "(0,42),(1,6),(2,2); 2^B for B=1..3; identity on " + std::to_string(checked) + " cases";
  return o;
}

Outcome criterion2() {
  Outcome o;
  int checked = 0;
  for (int m = 1; m <= 4; ++m) {
    for (int n = m; n <= 4; ++n) {
      for (int k = 0; k <= m; ++k) {
        const double a = d_no_csit(m, n, k), b = d_beamforming(m, n, k);
        o.require(a == b && a == static_cast<double>((m - k) * (n - k)),
                  "m=" + std::to_string(m) + " n=" + std::to_string(n) + " k=" + std::to_string(k));
        ++checked;
      }
    }
  }
  if (o.pass) o.detail = std::to_string(checked) + " integer points";
  return o;
}

Outcome criterion3() {
  Outcome o;
  struct Case {
    std::string name;
    AntennaConfig cfg;
    int i;
    EigDistribution dist;
  };
  const AntennaConfig c23(2, 3);
  std::vector<Case> cases{
      {"SISO", AntennaConfig(1, 1), 1, EigDistribution::smallest_analytic(AntennaConfig(1, 1))},
      {"2x1", AntennaConfig(2, 1), 1, EigDistribution::smallest_analytic(AntennaConfig(2, 1))},
      {"2x3-empirical", c23, 2, build_empirical(c23, 2, 1000000, Rng(2024))},
  };
  double worst_equi = 0, worst_kkt = 0, worst_budget = 0;
  int designs = 0;
  for (const auto& c : cases) {
    const double k = mimo_rate_constant(c.cfg, c.i, 2.0);
    for (int bins = 1; bins <= 4; ++bins) {
      for (double snr : {10.0, 20.0, 30.0}) {
        const std::string at = c.name + " L=" + std::to_string(bins) + " " + num(snr) + "dB";
        try {
          const auto eq = design_equi_power(c.dist, bins, db(snr), k);
          const auto kk = design_kkt(c.dist, bins, db(snr), k);
          designs += 2;
          double e = 0;
          for (double r : equi_power_residuals(eq.quantizer, c.dist, db(snr))) e = std::max(e, std::abs(r));
          double kr = 0;
          for (double r : kkt_residuals(kk.quantizer, c.dist)) kr = std::max(kr, std::abs(r));
          const double budget = std::abs(avg_power(kk.quantizer, c.dist) / db(snr) - 1.0);
          worst_equi = std::max(worst_equi, e);
          worst_kkt = std::max(worst_kkt, kr);
          worst_budget = std::max(worst_budget, budget);
          o.require(e <= 1e-9, at + " equi residual " + num(e));
          o.require(kr <= 1e-8, at + " KKT residual " + num(kr));
          o.require(budget <= 1e-8, at + " KKT budget " + num(budget));
          const double lk = log_outage_analytic(kk.quantizer, c.dist);
          const double le = log_outage_analytic(eq.quantizer, c.dist);
          o.require(lk <= le + 1e-9, at + " KKT outage above equi");
        } catch (const std::exception& ex) {
          o.require(false, at + ": " + ex.what());
        }
      }
    }
  }
  if (o.pass) {
    o.detail = std::to_string(designs) + " designs; max equi " + num(worst_equi, "%.2g") + ", max KKT " +
               num(worst_kkt, "%.2g") + ", max budget " + num(worst_budget, "%.2g");
  }
  return o;
}

Outcome criterion4() {
  Outcome o;
  const auto rows = figure3_rows(1.0);
  auto series = [&](const std::string& name) {
    std::vector<double> v;
    for (const auto& r : rows) {
      if (r.curve == name) v.push_back(r.outage);
    }
    return v;
  };
  const auto perfect = series("perfect"), kkt = series("kkt"), equi = series("equi"), l1 = series("l1");
  double worst = 0;
  for (std::size_t k = 0; k < kkt.size(); ++k) {
    const double rel = std::abs(kkt[k] - equi[k]) / std::max(kkt[k], equi[k]);
    worst = std::max(worst, rel);
    o.require(rel <= 0.25, "relative gap " + num(rel) + " at point " + std::to_string(k));
    for (double q : {kkt[k], equi[k]}) {
      o.require(perfect[k] < q && q < l1[k], "ordering broken at point " + std::to_string(k));
    }
  }
  if (o.pass) o.detail = "21 points, max KKT/equi gap " + num(100 * worst, "%.2f") + "%";
  return o;
}

double analytic_slope(const AntennaConfig& cfg, int bins) {
  SweepConfig c;
  c.cfg = cfg;
  c.scheme = SchemeKind::Quantized;
  c.rate_bits = 2.0;
  c.bins = bins;
  c.mode = SweepMode::Analytic;
  for (int s = 30; s <= 60; ++s) c.snr_db.push_back(s);
  const auto pts = run_sweep(c);
  return fit_diversity(pts, 30.0, 60.0).d_hat;
}

Outcome criterion5() {
  Outcome o;
  std::string d;
  for (int bins : {2, 3}) {
    const double s = analytic_slope(AntennaConfig(1, 1), bins);
    o.require(std::abs(s / bins - 1.0) <= 0.05, "SISO L=" + std::to_string(bins) + " slope " + num(s));
    d += "SISO L=" + std::to_string(bins) + ": " + num(s, "%.4f") + "; ";
  }
  const double s3 = analytic_slope(AntennaConfig(2, 1), 3);
  const double s4 = analytic_slope(AntennaConfig(2, 1), 4);
  o.require(s4 > s3, "2x1 slope(L=4) " + num(s4) + " not above slope(L=3) " + num(s3));
  if (o.pass) o.detail = d + "2x1 L=3: " + num(s3, "%.4f") + ", L=4: " + num(s4, "%.4f");
  return o;
}

Outcome criterion6() {
  Outcome o;
  const std::size_t n = 10000000;
  std::string d;
  const int cases[][3] = {{2, 2, 1}, {2, 2, 2}, {2, 3, 1}, {2, 3, 2}, {3, 3, 3}};
  for (const auto& c : cases) {
    const AntennaConfig cfg(c[0], c[1]);
    auto s = sample_eigenvalue(cfg, c[2], n, Rng(7, {static_cast<std::uint64_t>(c[0] * 100 + c[1] * 10 + c[2])}));
    std::sort(s.begin(), s.end());
    // Order statistics with F between 1e-5 and 3e-2, log-spaced; the linear
    // term absorbs the first-order departure from the power law.
    std::vector<double> lx, lt, ly;
    const double lo = std::log(1e-5 * static_cast<double>(n)), hi = std::log(0.03 * static_cast<double>(n));
    for (int k = 0; k < 48; ++k) {
      const auto rank = static_cast<std::size_t>(std::llround(std::exp(lo + (hi - lo) * k / 47.0)));
      const double t = s[rank - 1];
      lx.push_back(std::log(t));
      lt.push_back(t);
      ly.push_back(std::log(static_cast<double>(rank) / static_cast<double>(n)));
    }
    const double slope = fit_with_correction(lx, lt, ly);
    const int expect = cdf_exponent(cfg, c[2]);
    const std::string tag = "(" + std::to_string(c[0]) + "," + std::to_string(c[1]) + "," + std::to_string(c[2]) + ")";
    o.require(std::abs(slope / expect - 1.0) <= 0.10, tag + " slope " + num(slope) + " vs " + std::to_string(expect));
    d += tag + " " + num(slope, "%.3f") + "/" + std::to_string(expect) + " ";
  }
  o.detail = o.pass ? d : o.detail;
  return o;
}

Outcome criterion7() {
  Outcome o;
  const AntennaConfig cfg(1, 1);
  const auto dist = EigDistribution::smallest_analytic(cfg);
  std::string d;
  for (int bins : {1, 2}) {
    for (double r : {0.0, 0.5}) {
      std::vector<double> x, y;
      for (int s = 30; s <= 60; s += 2) {
        const double p = db(s);
        const double rate = scheduled_rate(r, p, 2.0);
        const auto rep = design_kkt(dist, bins, p, siso_rate_constant(rate));
        x.push_back(std::log(p));
        y.push_back(std::log(rep.quantizer.gamma0));
      }
      const double slope = line_fit(x, y).first;
      const double expect = -(1.0 - r) * bins;
      o.require(std::abs(slope / expect - 1.0) <= 0.05,
                "L=" + std::to_string(bins) + " r=" + num(r) + " slope " + num(slope) + " vs " + num(expect));
      d += "L=" + std::to_string(bins) + ",r=" + num(r) + ": " + num(slope, "%.4f") + " ";
    }
  }
  o.detail = o.pass ? d : o.detail;
  return o;
}

Outcome criterion8() {
  Outcome o;
  const std::pair<AntennaConfig, double> zero_cases[] = {{AntennaConfig(2, 4), 2.0}, {AntennaConfig(1, 2), 1.0}};
  std::string d;
  for (const auto& [cfg, r] : zero_cases) {
    const std::string tag = "(" + std::to_string(cfg.m()) + "," + std::to_string(cfg.n()) + "," + num(r) + ")";
    for (int s = 10; s <= 60; s += 10) {
      o.require(temporal_cutoff_perfect(cfg, r, db(s)).zero_outage, tag + " cutoff not zero-outage at " + num(s) + " dB");
    }
    SweepConfig c;
    c.cfg = cfg;
    c.scheme = SchemeKind::TemporalPerfect;
    c.mux = r;
    c.snr_db = {10, 20, 30};
    c.trials = 1000000;
    c.rare_event_floor = false;
    for (const auto& p : run_sweep(c)) {
      o.require(p.outage == 0.0, tag + " MC outage " + num(p.outage) + " at " + num(p.snr_db) + " dB");
    }
    d += tag + " zero over 3x10^6 trials; ";
  }
  SweepConfig c;
  c.cfg = AntennaConfig(2, 3);
  c.scheme = SchemeKind::TemporalPerfect;
  c.mux = 2.0;
  for (int s = 20; s <= 40; s += 2) c.snr_db.push_back(s);
  c.trials = 1000000;
  const auto pts = run_sweep(c);
  bool nonzero = true;
  for (const auto& p : pts) nonzero = nonzero && p.outage > 0.0;
  const auto fit = fit_diversity(pts, 20.0, 40.0);
  o.require(nonzero, "(2,3,2) outage vanished");
  o.require(std::abs(fit.d_hat) < 0.1, "(2,3,2) slope " + num(fit.d_hat));
  if (o.pass) d += "(2,3,2) outage " + num(pts.front().outage, "%.4f") + ", slope " + num(fit.d_hat, "%.4f");
  o.detail = o.pass ? d : o.detail;
  return o;
}

Outcome criterion9() {
  Outcome o;
  const Rng root(99);
  std::string d;
  const std::pair<int, int> cfgs[] = {{1, 1}, {2, 2}, {2, 3}};
  std::uint64_t key = 0;
  for (const auto& [mt, nr] : cfgs) {
    const AntennaConfig cfg(mt, nr);
    const auto a = csir_full_mux_outage_at(cfg, 1e3, 1000000, root.substream({++key}));
    const auto b = csir_full_mux_outage_at(cfg, 1e6, 1000000, root.substream({++key}));
    const double z = std::abs(a.value - b.value) / std::hypot(a.std_error, b.std_error);
    const std::string tag = "(" + std::to_string(mt) + "," + std::to_string(nr) + ")";
    o.require(z <= 3.0, tag + " " + num(a.value) + " vs " + num(b.value));
    d += tag + " " + num(a.value, "%.4f") + "/" + num(b.value, "%.4f") + " ";
  }
  const auto siso = csir_full_mux_outage(AntennaConfig(1, 1), 1000000, root.substream({++key}));
  const double expect = 1.0 - std::exp(-1.0);
  o.require(std::abs(siso.value - expect) <= 3.0 * siso.std_error, "(1,1) value " + num(siso.value));
  d += "(1,1) asymptotic " + num(siso.value, "%.4f") + " vs " + num(expect, "%.4f");
  o.detail = o.pass ? d : o.detail;
  return o;
}

Outcome criterion10() {
  Outcome o;
  const AntennaConfig cfg(1, 1);
  const auto law = EigDistribution::smallest_analytic(cfg);
  std::string d;
  for (double r : {0.0, 0.5}) {
    std::vector<double> x, y;
    for (int s = 20; s <= 50; ++s) {
      const double p = db(s);
      const auto cut = temporal_cutoff_perfect(cfg, r, p);
      x.push_back(std::pow(p, 1.0 - r));
      y.push_back(-law.log_cdf_at_log(cut.log_gamma0));
    }
    const double r2 = line_fit(x, y).second;
    o.require(r2 > 0.999, "r=" + num(r) + " R^2 " + num(r2));
    d += "r=" + num(r) + ": R^2=" + num(r2, "%.9f") + " ";
  }
  o.detail = o.pass ? d : o.detail;
  return o;
}

Outcome criterion11() {
  Outcome o;
  SweepConfig c;
  c.cfg = AntennaConfig(1, 1);
  c.scheme = SchemeKind::NoCsit;
  c.rate_bits = 2.0;
  for (int s = 0; s <= 20; s += 2) c.snr_db.push_back(s);
  c.trials = 1000000;
  c.threads = 1;
  const auto pts = run_sweep(c);
  double worst = 0;
  for (const auto& p : pts) {
    const double q = -std::expm1(-3.0 / db(p.snr_db));
    const double sigma = std::sqrt(q * (1 - q) / static_cast<double>(p.trials));
    worst = std::max(worst, std::abs(p.outage - q) / sigma);
    o.require(std::abs(p.outage - q) <= 3 * sigma, "MC off at " + num(p.snr_db) + " dB");
  }
  std::ostringstream a, b;
  write_sweep_csv(a, pts);
  c.threads = 4;
  write_sweep_csv(b, run_sweep(c));
  o.require(a.str() == b.str(), "CSV differs between 1 and 4 threads");
  if (o.pass) o.detail = "11 points, max |z| = " + num(worst, "%.2f") + "; 1- and 4-thread CSVs byte-identical";
  return o;
}

Outcome criterion12() {
  Outcome o;
  const AntennaConfig cfg(2, 3);
  std::string d;
  for (int i : {1, 2}) {
    const double ratio = joint_multiplexing_ratio(cfg, i, 0.5, 1e8);
    o.require(std::abs(ratio - 1.0) <= 0.02, "multiplexing ratio/r at 80 dB for (2,3) i=" + std::to_string(i) + " is " +
                                                 num(ratio, "%.4f") + " (k=" + std::to_string(cdf_exponent(cfg, i)) +
                                                 ")");
    d += "i=" + std::to_string(i) + " ratio/r " + num(ratio, "%.4f") + " ";
  }
  const auto law = EigDistribution::smallest_analytic(cfg);
  double prev = -1;
  bool monotone = true;
  for (int k = 0; k < 20; ++k) {
    const double p = db(10.0 + 90.0 * k / 19.0);
    const double t = joint_throughput(cfg, 2, 0.5, 2.0, p, law);
    monotone = monotone && t > prev;
    prev = t;
  }
  o.require(monotone, "joint throughput not monotone in P_av");
  const double d2 = d_joint(2, 3, 2, 2.0, JointVariant::FigureConsistent);
  o.require(d2 == 2.0 && d2 > 0.0, "figure-consistent d(2) = " + num(d2));
  if (o.pass) o.detail = d + "; throughput monotone; d(2) = 2";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"closed-form golden values", criterion1},
      {"no-CSIT and beamforming tradeoff at integers", criterion2},
      {"quantizer correctness", criterion3},
      {"SISO L=3 outage ordering and KKT/equi agreement", criterion4},
      {"analytic diversity slopes", criterion5},
      {"near-origin CDF exponents", criterion6},
      {"cutoff exponent regression", criterion7},
      {"zero-outage regime with perfect CSIT", criterion8},
      {"full-multiplexing CSIR outage", criterion9},
      {"super-polynomial decay with perfect CSIT", criterion10},
      {"Monte Carlo versus closed form and determinism", criterion11},
      {"joint rate and power control", criterion12},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::printf("%s %zu %s [%.1fs] %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(), secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
