#include "fbq/eig_distribution.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <variant>

#include "fbq/error.hpp"
#include "fbq/special_functions.hpp"
#include "numeric.hpp"
#include "parallel.hpp"

namespace fbq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogTiny = -745.0;

// Generic inverse by bisection on log t, using the accurate tail for comparison.
template <class Law>
double invert_cdf(const Law& law, double u, double s) {
  if (u <= 0.0) return 0.0;
  if (s <= 0.0) return kInf;
  double hi = 1.0;
  while (law.sf(std::exp(hi)) > s && hi < 700.0) hi += 2.0;
  if (u <= 0.5) {
    const double target = std::log(u);
    return std::exp(detail::bisect([&](double x) { return law.log_cdf_at_log(x) < target; }, kLogTiny, hi));
  }
  return std::exp(detail::bisect([&](double x) { return law.sf(std::exp(x)) > s; }, kLogTiny, hi));
}

struct AnalyticLaw {
  AntennaConfig cfg;
  double shape;

  double cdf(double t) const { return gamma_p(shape, t); }
  double sf(double t) const { return gamma_q(shape, t); }
  double pdf(double t) const { return t < 0.0 ? 0.0 : smallest_eig_pdf(cfg, t); }
  double log_cdf_at_log(double log_t) const { return log_gamma_p(shape, log_t); }
  double quantile(double u) const { return gamma_p_inv(shape, u); }
  double upper_quantile(double s) const { return gamma_q_inv(shape, s); }
};

struct PowerLaw {
  double beta;
  int exponent;
  double t_max;

  void check(double t) const {
    if (t > t_max) throw DomainError("outside asymptotic range");
  }
  double cdf(double t) const {
    if (t <= 0.0) return 0.0;
    check(t);
    return beta * std::pow(t, exponent);
  }
  double sf(double t) const { return 1.0 - cdf(t); }
  double pdf(double t) const {
    if (t <= 0.0) return exponent == 1 ? beta : 0.0;
    check(t);
    return beta * exponent * std::pow(t, exponent - 1);
  }
  double log_cdf_at_log(double log_t) const {
    check(std::exp(log_t));
    return std::log(beta) + exponent * log_t;
  }
  double quantile(double u) const {
    if (u <= 0.0) return 0.0;
    const double t = std::pow(u / beta, 1.0 / exponent);
    check(t);
    return t;
  }
  double upper_quantile(double s) const { return quantile(1.0 - s); }
};

// Monotone cubic Hermite interpolation of y = log F over u = log t.
struct TableLaw {
  EmpiricalTable table;
  std::vector<double> u, y, d;
  double s_top = 0.0;
  double upper_rate = 0.0;

  explicit TableLaw(EmpiricalTable tab) : table(std::move(tab)) {
    const std::size_t g = table.t.size();
    if (g < 3 || table.cdf.size() != g) throw DomainError("empirical table needs at least 3 points");
    u.resize(g);
    y.resize(g);
    for (std::size_t k = 0; k < g; ++k) {
      if (!(table.t[k] > 0.0) || (k > 0 && !(table.t[k] > table.t[k - 1]))) {
        throw DomainError("empirical grid must be positive and strictly increasing");
      }
      if (!(table.cdf[k] > 0.0 && table.cdf[k] < 1.0) || (k > 0 && table.cdf[k] < table.cdf[k - 1])) {
        throw DomainError("empirical cdf values must be nondecreasing in (0,1)");
      }
      u[k] = std::log(table.t[k]);
      y[k] = std::log(table.cdf[k]);
    }
    std::vector<double> h(g - 1), delta(g - 1);
    for (std::size_t k = 0; k + 1 < g; ++k) {
      h[k] = u[k + 1] - u[k];
      delta[k] = (y[k + 1] - y[k]) / h[k];
    }
    d.assign(g, 0.0);
    for (std::size_t k = 1; k + 1 < g; ++k) {
      if (delta[k - 1] > 0.0 && delta[k] > 0.0) {
        const double w1 = 2.0 * h[k] + h[k - 1];
        const double w2 = h[k] + 2.0 * h[k - 1];
        d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
      }
    }
    // Left end follows the tail model's log-log slope.
    const double model_slope = table.tail.exponent + table.tail.correction * table.t[0];
    d[0] = std::clamp(model_slope, 0.0, 3.0 * delta[0]);
    const std::size_t e = g - 1;
    double de = ((2.0 * h[e - 1] + h[e - 2]) * delta[e - 1] - h[e - 1] * delta[e - 2]) / (h[e - 1] + h[e - 2]);
    if (de < 0.0 || delta[e - 1] == 0.0) de = 0.0;
    else if (de > 3.0 * delta[e - 1]) de = 3.0 * delta[e - 1];
    d[e] = de;

    s_top = 1.0 - table.cdf[e];
    const double f_top = table.cdf[e] * d[e] / table.t[e];
    upper_rate = f_top / s_top;
    if (!(upper_rate > 0.0) || !std::isfinite(upper_rate)) upper_rate = 1.0 / table.t[e];
  }

  // Hermite value and slope on the grid interval containing v.
  std::pair<double, double> hermite(double v) const {
    std::size_t k = static_cast<std::size_t>(std::upper_bound(u.begin(), u.end(), v) - u.begin());
    k = std::clamp<std::size_t>(k, 1, u.size() - 1) - 1;
    const double h = u[k + 1] - u[k];
    const double s = (v - u[k]) / h;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
    const double h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s);
    const double h11 = s * s * (s - 1);
    const double val = h00 * y[k] + h10 * h * d[k] + h01 * y[k + 1] + h11 * h * d[k + 1];
    const double slope = (6 * s * s - 6 * s) * (y[k] - y[k + 1]) / h + (3 * s * s - 4 * s + 1) * d[k] +
                         (3 * s * s - 2 * s) * d[k + 1];
    return {std::min(val, 0.0), std::max(slope, 0.0)};
  }

  double log_cdf_at_log(double log_t) const {
    if (log_t < u.front()) return table.tail.log_cdf(log_t);
    if (log_t <= u.back()) return hermite(log_t).first;
    return std::log1p(-sf(std::exp(log_t)));
  }
  double cdf(double t) const {
    if (t <= 0.0) return 0.0;
    if (std::isinf(t)) return 1.0;
    if (t > table.t.back()) return 1.0 - sf(t);
    return std::exp(log_cdf_at_log(std::log(t)));
  }
  double sf(double t) const {
    if (t <= 0.0) return 1.0;
    if (std::isinf(t)) return 0.0;
    if (t > table.t.back()) return s_top * std::exp(-upper_rate * (t - table.t.back()));
    return -std::expm1(log_cdf_at_log(std::log(t)));
  }
  double pdf(double t) const {
    if (t <= 0.0) return 0.0;
    if (t > table.t.back()) return upper_rate * sf(t);
    const double v = std::log(t);
    if (v < u.front()) {
      const auto& tf = table.tail;
      return std::exp(tf.log_cdf(v)) * std::max(0.0, tf.exponent + tf.correction * t) / t;
    }
    const auto [val, slope] = hermite(v);
    return std::exp(val) * slope / t;
  }
  double quantile(double p) const { return invert_cdf(*this, p, 1.0 - p); }
  double upper_quantile(double s) const { return invert_cdf(*this, 1.0 - s, s); }
};

}  // namespace

double TailFit::log_cdf(double log_t) const {
  return log_beta + exponent * log_t + correction * std::exp(log_t);
}

struct EigDistribution::Impl {
  std::variant<AnalyticLaw, PowerLaw, TableLaw> law;
};

EigDistribution EigDistribution::smallest_analytic(const AntennaConfig& cfg) {
  return EigDistribution(std::make_shared<const Impl>(
      Impl{AnalyticLaw{cfg, static_cast<double>(cfg.n() - cfg.m() + 1)}}));
}

EigDistribution EigDistribution::asymptotic_power(double beta, int exponent, double t_max) {
  if (!(beta > 0.0) || exponent < 1 || !(t_max > 0.0)) throw DomainError("invalid power-law parameters");
  if (beta * std::pow(t_max, exponent) > 1.0) throw DomainError("power law exceeds 1 inside its range");
  return EigDistribution(std::make_shared<const Impl>(Impl{PowerLaw{beta, exponent, t_max}}));
}

EigDistribution EigDistribution::from_table(EmpiricalTable table) {
  return EigDistribution(std::make_shared<const Impl>(Impl{TableLaw(std::move(table))}));
}

DistKind EigDistribution::kind() const {
  switch (impl_->law.index()) {
    case 0: return DistKind::SmallestAnalytic;
    case 1: return DistKind::AsymptoticPower;
    default: return DistKind::EmpiricalTable;
  }
}

std::string EigDistribution::label() const {
  char buf[128];
  if (const auto* a = std::get_if<AnalyticLaw>(&impl_->law)) {
    std::snprintf(buf, sizeof buf, "gamma model of the smallest eigenvalue (m=%d,n=%d)", a->cfg.m(), a->cfg.n());
  } else if (const auto* p = std::get_if<PowerLaw>(&impl_->law)) {
    std::snprintf(buf, sizeof buf, "power law %g*t^%d on [0,%g]", p->beta, p->exponent, p->t_max);
  } else {
    const auto& t = std::get<TableLaw>(impl_->law).table;
    std::snprintf(buf, sizeof buf, "empirical (m=%d,n=%d,i=%d,samples=%zu,seed=%llu)", t.m, t.n,
                  t.eig_index, t.samples, static_cast<unsigned long long>(t.seed));
  }
  return buf;
}

int EigDistribution::tail_exponent() const {
  if (const auto* a = std::get_if<AnalyticLaw>(&impl_->law)) return a->cfg.n() - a->cfg.m() + 1;
  if (const auto* p = std::get_if<PowerLaw>(&impl_->law)) return p->exponent;
  const auto& t = std::get<TableLaw>(impl_->law).table;
  return cdf_exponent(AntennaConfig(t.m, t.n), t.eig_index);
}

double EigDistribution::cdf(double t) const {
  return std::visit([t](const auto& law) { return law.cdf(t); }, impl_->law);
}
double EigDistribution::sf(double t) const {
  return std::visit([t](const auto& law) { return law.sf(t); }, impl_->law);
}
double EigDistribution::pdf(double t) const {
  return std::visit([t](const auto& law) { return law.pdf(t); }, impl_->law);
}
double EigDistribution::log_cdf_at_log(double log_t) const {
  return std::visit([log_t](const auto& law) { return law.log_cdf_at_log(log_t); }, impl_->law);
}
double EigDistribution::quantile(double u) const {
  return std::visit([u](const auto& law) { return law.quantile(u); }, impl_->law);
}
double EigDistribution::upper_quantile(double s) const {
  return std::visit([s](const auto& law) { return law.upper_quantile(s); }, impl_->law);
}

const EmpiricalTable* EigDistribution::table() const {
  const auto* t = std::get_if<TableLaw>(&impl_->law);
  return t ? &t->table : nullptr;
}

double mass(const EigDistribution& dist, double a, double b) {
  if (!(a >= 0.0) || !(b >= a)) throw DomainError("mass requires 0 <= a <= b");
  if (a == b) return 0.0;
  if (std::isinf(b)) return dist.sf(a);
  const double fb = dist.cdf(b);
  if (fb <= 0.5) return std::max(0.0, fb - dist.cdf(a));
  const double fa = dist.cdf(a);
  if (fa >= 0.5) return std::max(0.0, dist.sf(a) - dist.sf(b));
  return std::max(0.0, fb - fa);
}

double smallest_eig_pdf(const AntennaConfig& cfg, double x) {
  if (!(x >= 0.0)) throw DomainError("density argument must be nonnegative");
  const int e = cfg.n() - cfg.m();
  if (e == 0) return std::exp(-x);
  if (x == 0.0) return 0.0;
  return std::exp(e * std::log(x) - x - std::lgamma(e + 1.0));
}

int cdf_exponent(const AntennaConfig& cfg, int i) {
  if (i < 1 || i > cfg.m()) throw DomainError("eigenvalue index out of range");
  return (cfg.n() - i + 1) * (cfg.m() - i + 1);
}

TailFit fit_tail(std::span<const double> sorted, std::size_t total, std::optional<int> fixed_exponent) {
  const std::size_t lo = std::max<std::size_t>(10, std::min<std::size_t>(100, total / 1000));
  std::size_t hi = std::max<std::size_t>(10 * lo, static_cast<std::size_t>(0.03 * static_cast<double>(total)));
  hi = std::min(hi, sorted.size());
  if (hi < lo + 8) throw DomainError("too few samples for a tail fit");

  std::vector<double> log_t, t, yv;
  const int points = 48;
  std::size_t last = 0;
  for (int k = 0; k < points; ++k) {
    const double c = std::exp(std::log(static_cast<double>(lo)) +
                              (std::log(static_cast<double>(hi)) - std::log(static_cast<double>(lo))) * k / (points - 1));
    const auto count = static_cast<std::size_t>(std::llround(c));
    if (count <= last || count > sorted.size()) continue;
    last = count;
    const double tv = sorted[count - 1];
    if (!(tv > 0.0)) continue;
    log_t.push_back(std::log(tv));
    t.push_back(tv);
    yv.push_back(std::log(static_cast<double>(count) / static_cast<double>(total)));
  }

  TailFit fit;
  fit.t_lo = t.front();
  fit.t_hi = t.back();
  fit.points = t.size();
  if (fixed_exponent) {
    const double k = *fixed_exponent;
    std::vector<double> r(yv.size());
    for (std::size_t j = 0; j < yv.size(); ++j) r[j] = yv[j] - k * log_t[j];
    const std::vector<std::vector<double>> cols{t};
    const auto ls = detail::least_squares(cols, r);
    fit.log_beta = ls.coef[0];
    fit.exponent = k;
    fit.correction = ls.coef[1];
    fit.r_squared = ls.r_squared;
  } else {
    const std::vector<std::vector<double>> cols{log_t, t};
    const auto ls = detail::least_squares(cols, yv);
    fit.log_beta = ls.coef[0];
    fit.exponent = ls.coef[1];
    fit.correction = ls.coef[2];
    fit.r_squared = ls.r_squared;
  }
  return fit;
}

std::vector<double> sample_eigenvalue(const AntennaConfig& cfg, int i, std::size_t samples, const Rng& rng,
                                      int threads) {
  if (i < 1 || i > cfg.m()) throw DomainError("eigenvalue index out of range");
  constexpr std::size_t kChunk = 1 << 16;
  std::vector<double> out(samples);
  const std::size_t chunks = (samples + kChunk - 1) / kChunk;
  detail::parallel_for(chunks, threads, [&](std::size_t c) {
    Rng sub = rng.substream({c});
    EigenSampler sampler(cfg);
    std::vector<double> lam(cfg.m());
    const std::size_t end = std::min(samples, (c + 1) * kChunk);
    for (std::size_t s = c * kChunk; s < end; ++s) {
      sampler.draw(sub, lam);
      out[s] = lam[i - 1];
    }
  });
  return out;
}

EigDistribution build_empirical(const AntennaConfig& cfg, int i, std::size_t samples, const Rng& rng,
                                int threads) {
  if (samples < 10000) throw DomainError("too few samples for an empirical table (need >= 10^4)");
  std::vector<double> v = sample_eigenvalue(cfg, i, samples, rng, threads);
  std::sort(v.begin(), v.end());
  const int k = cdf_exponent(cfg, i);
  const std::size_t total = v.size();

  EmpiricalTable tab;
  tab.m = cfg.m();
  tab.n = cfg.n();
  tab.eig_index = i;
  tab.samples = samples;
  tab.seed = rng.seed();
  tab.tail = fit_tail(v, total, k);

  auto index_at = [&](double q) {
    return std::min(total - 2, static_cast<std::size_t>(q * static_cast<double>(total - 1)));
  };
  const double t_a = v[index_at(1e-4)];
  const double t_b = v[index_at(1.0 - 1e-4)];
  const int grid = 256;
  const double cap = 1.0 - 0.5 / static_cast<double>(total);
  double running = 0.0;
  for (int g = 0; g < grid; ++g) {
    const double t = std::exp(std::log(t_a) + (std::log(t_b) - std::log(t_a)) * g / (grid - 1));
    if (!tab.t.empty() && !(t > tab.t.back())) continue;
    double f;
    if (t <= tab.tail.t_hi) {
      f = std::exp(tab.tail.log_cdf(std::log(t)));
    } else {
      const auto count = static_cast<std::size_t>(std::upper_bound(v.begin(), v.end(), t) - v.begin());
      f = static_cast<double>(count) / static_cast<double>(total);
    }
    running = std::min(cap, std::max(running, f));
    if (!(running > 0.0)) continue;
    tab.t.push_back(t);
    tab.cdf.push_back(running);
  }
  return EigDistribution::from_table(std::move(tab));
}

std::filesystem::path cache_file(const std::filesystem::path& dir, int m, int n, int i, std::size_t samples,
                                 std::uint64_t seed) {
  char name[160];
  std::snprintf(name, sizeof name, "eigdist_m%d_n%d_i%d_s%zu_seed%llu.csv", m, n, i, samples,
                static_cast<unsigned long long>(seed));
  return dir / name;
}

void save_table(const EmpiricalTable& tab, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write cache file " + path.string());
  char line[512];
  std::snprintf(line, sizeof line, "#eigdist v1,%d,%d,%d,%zu,%llu\n", tab.m, tab.n, tab.eig_index, tab.samples,
                static_cast<unsigned long long>(tab.seed));
  out << line;
  const auto& f = tab.tail;
  std::snprintf(line, sizeof line,
                "# tail log_beta=%.17g,exponent=%.17g,correction=%.17g,t_lo=%.17g,t_hi=%.17g,points=%zu,r_squared=%.17g\n",
                f.log_beta, f.exponent, f.correction, f.t_lo, f.t_hi, f.points, f.r_squared);
  out << line << "t,cdf\n";
  for (std::size_t k = 0; k < tab.t.size(); ++k) {
    std::snprintf(line, sizeof line, "%.17g,%.17g\n", tab.t[k], tab.cdf[k]);
    out << line;
  }
  if (!out) throw Error("failed writing cache file " + path.string());
}

EmpiricalTable load_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read cache file " + path.string());
  EmpiricalTable tab;
  std::string line;
  std::getline(in, line);
  unsigned long long seed = 0;
  std::size_t samples = 0;
  if (std::sscanf(line.c_str(), "#eigdist v1,%d,%d,%d,%zu,%llu", &tab.m, &tab.n, &tab.eig_index, &samples,
                  &seed) != 5) {
    throw Error("unsupported cache header in " + path.string());
  }
  tab.samples = samples;
  tab.seed = seed;
  std::getline(in, line);
  auto& f = tab.tail;
  if (std::sscanf(line.c_str(), "# tail log_beta=%lf,exponent=%lf,correction=%lf,t_lo=%lf,t_hi=%lf,points=%zu,r_squared=%lf",
                  &f.log_beta, &f.exponent, &f.correction, &f.t_lo, &f.t_hi, &f.points, &f.r_squared) != 7) {
    throw Error("missing tail record in " + path.string());
  }
  std::getline(in, line);
  if (line != "t,cdf") throw Error("missing column header in " + path.string());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double t = 0.0, c = 0.0;
    if (std::sscanf(line.c_str(), "%lf,%lf", &t, &c) != 2) throw Error("malformed cache row in " + path.string());
    tab.t.push_back(t);
    tab.cdf.push_back(c);
  }
  return tab;
}

EigDistribution load_or_build_empirical(const std::filesystem::path& dir, const AntennaConfig& cfg, int i,
                                        std::size_t samples, std::uint64_t seed, int threads) {
  const auto path = cache_file(dir, cfg.m(), cfg.n(), i, samples, seed);
  if (std::filesystem::exists(path)) return EigDistribution::from_table(load_table(path));
  auto dist = build_empirical(cfg, i, samples, Rng(seed), threads);
  std::filesystem::create_directories(dir);
  save_table(*dist.table(), path);
  return dist;
}

}  // namespace fbq
