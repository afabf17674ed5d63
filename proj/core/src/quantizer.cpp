#include "fbq/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>

#include <json.hpp>

#include "fbq/error.hpp"
#include "fbq/schemes.hpp"
#include "numeric.hpp"

namespace fbq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLogFloor = std::log(1e-300);

void check_design_inputs(int bins, double p_av, double k) {
  if (bins < 1) throw DomainError("quantizer needs at least one bin");
  if (!(p_av > 0.0) || !std::isfinite(p_av)) throw DomainError("average power must be positive");
  if (!(k > 0.0) || !std::isfinite(k)) throw DomainError("rate must be positive");
}

Quantizer assemble(int bins, double k, std::vector<double> thresholds, double gamma0, bool silent) {
  Quantizer q;
  q.bins = bins;
  q.rate_constant = k;
  q.thresholds = std::move(thresholds);
  q.gamma0 = gamma0;
  q.bin0_silent = silent;
  q.powers.assign(bins, 0.0);
  q.powers[0] = silent ? 0.0 : k / gamma0;
  for (int j = 1; j < bins; ++j) q.powers[j] = k / q.thresholds[j - 1];
  return q;
}

void check_dynamic_range(const Quantizer& q, const EigDistribution& dist) {
  if (!(q.gamma0 > 1e-300) || dist.log_cdf_at_log(std::log(q.gamma0)) < -700.0) {
    throw InfeasibleError("dynamic range exceeded: design thresholds underflow double precision");
  }
}

// Largest gamma < upper with (k/gamma) * mass(gamma, upper) = share.
double solve_equal_share(const EigDistribution& dist, double k, double upper, double share, int& iters) {
  const double log_k = std::log(k);
  const double target = std::log(share);
  auto log_lhs = [&](double x) {
    const double ms = mass(dist, std::exp(x), upper);
    return ms > 0.0 ? log_k - x + std::log(ms) : -kInf;
  };
  double hi;
  if (std::isinf(upper)) {
    hi = 0.0;
    while (log_lhs(hi) >= target) {
      hi += 1.0;
      if (hi > 700.0) throw InfeasibleError("infeasible power budget");
    }
  } else {
    hi = std::log(upper);
  }
  if (!(log_lhs(kLogFloor) > target)) {
    throw InfeasibleError("dynamic range exceeded: bin threshold below 1e-300");
  }
  return std::exp(detail::bisect(
      [&](double x) {
        ++iters;
        return log_lhs(x) > target;
      },
      kLogFloor, hi));
}

struct Candidate {
  Quantizer q;
  int iterations = 0;
};

std::optional<Candidate> equi_family(const EigDistribution& dist, int bins, double p_av, double k, bool silent,
                                     bool require) {
  Candidate c;
  if (bins == 1) {
    c.q = assemble(1, k, {}, k / p_av, false);
    return c;
  }
  const double share = p_av / (silent ? bins - 1 : bins);
  std::vector<double> th(bins - 1);
  double upper = kInf;
  for (int j = bins - 1; j >= 1; --j) {
    th[j - 1] = solve_equal_share(dist, k, upper, share, c.iterations);
    upper = th[j - 1];
  }
  double gamma0 = th[0];
  if (!silent) {
    const double f1 = dist.cdf(th[0]);
    if (!(f1 > 0.0)) throw InfeasibleError("dynamic range exceeded: empty first bin");
    gamma0 = k * f1 / share;
    if (!(gamma0 < th[0])) {
      if (require) throw InfeasibleError("infeasible power budget: cutoff falls outside bin 0");
      return std::nullopt;
    }
  }
  c.q = assemble(bins, k, std::move(th), gamma0, silent);
  return c;
}

// Forward pass of the stationarity rows from anchor tau0 and first threshold tau1.
struct Shot {
  bool overshoot = false;
  std::vector<double> tau;
  double residual = 0.0;  // sign of the last row
};

Shot shoot(const EigDistribution& dist, double tau0, double tau1, int rows) {
  Shot s;
  s.tau = {tau0, tau1};
  for (int j = 1; j < rows; ++j) {
    const double t = s.tau[j];
    const double need = t * dist.pdf(t) * (t / s.tau[j - 1] - 1.0);
    const double f = dist.cdf(t);
    const double sv = dist.sf(t);
    if (!(need < sv)) {
      s.overshoot = true;
      s.residual = -1.0;
      return s;
    }
    const double next = (f + need <= 0.5) ? dist.quantile(f + need) : dist.upper_quantile(sv - need);
    s.tau.push_back(std::max(next, t));
  }
  const double t = s.tau[rows];
  const double need = t * dist.pdf(t) * (t / s.tau[rows - 1] - 1.0);
  const double have = dist.sf(t);
  s.residual = (have - need) / std::max({have, need, 1e-300});
  return s;
}

// Average power of the cascade; silent anchors pay nothing below tau0.
double cascade_power(const EigDistribution& dist, const std::vector<double>& tau, double k, bool silent) {
  const std::size_t last = tau.size() - 1;
  double w = 0.0;
  for (std::size_t j = 0; j <= last; ++j) {
    const double lo = (j == 0 && !silent) ? 0.0 : tau[j];
    const double hi = j == last ? kInf : tau[j + 1];
    w += k / tau[j] * mass(dist, lo, hi);
  }
  return w;
}

std::vector<double> solve_cascade(const EigDistribution& dist, double tau0, int rows, int& iters) {
  if (rows == 0) return {tau0};
  auto rho = [&](double x) {
    ++iters;
    const Shot s = shoot(dist, tau0, std::exp(x), rows);
    return s.overshoot ? -1.0 : s.residual;
  };
  const double lo = std::log(tau0);
  double step = 0.5;
  double hi = lo + step;
  while (rho(hi) > 0.0) {
    step *= 2.0;
    hi = lo + step;
    if (hi > std::log(1e8)) {
      char msg[160];
      std::snprintf(msg, sizeof msg, "shooting failed to bracket: last feasible gamma1 range [%.6g, %.6g]", tau0,
                    std::exp(hi));
      throw InfeasibleError(msg);
    }
  }
  const double x = detail::bisect([&](double v) { return rho(v) > 0.0; }, lo, hi);
  return shoot(dist, tau0, std::exp(x), rows).tau;
}

std::optional<Candidate> kkt_family(const EigDistribution& dist, int bins, double p_av, double k, bool silent) {
  Candidate c;
  if (bins == 1) {
    c.q = assemble(1, k, {}, k / p_av, false);
    return c;
  }
  const int rows = silent ? bins - 2 : bins - 1;
  auto power_at = [&](double x) {
    ++c.iterations;
    try {
      return cascade_power(dist, solve_cascade(dist, std::exp(x), rows, c.iterations), k, silent);
    } catch (const InfeasibleError&) {
      return kInf;
    }
  };
  double hi = std::log(k / p_av);
  for (int it = 0; power_at(hi) > p_av; ++it) {
    hi += 1.0;
    if (it > 60) throw InfeasibleError("infeasible power budget");
  }
  double step = 1.0;
  double lo = hi - step;
  while (!(power_at(lo) > p_av)) {
    step *= 2.0;
    lo = hi - step;
    if (lo < kLogFloor) throw InfeasibleError("dynamic range exceeded: cutoff below 1e-300");
  }
  const double x = detail::bisect([&](double v) { return power_at(v) > p_av; }, lo, hi);
  std::vector<double> tau = solve_cascade(dist, std::exp(x), rows, c.iterations);
  for (std::size_t j = 1; j < tau.size(); ++j) {
    if (!(tau[j] > tau[j - 1])) throw InfeasibleError("dynamic range exceeded: thresholds collapsed");
  }
  if (silent) {
    c.q = assemble(bins, k, tau, tau[0], true);
  } else {
    std::vector<double> th(tau.begin() + 1, tau.end());
    c.q = assemble(bins, k, std::move(th), tau[0], false);
  }
  return c;
}

template <class Family>
DesignReport pick(const EigDistribution& dist, int bins, const DesignOptions& opts, DesignMethod method,
                  Family&& family) {
  std::optional<Candidate> best;
  double best_log = kInf;
  std::optional<InfeasibleError> last_error;
  int iterations = 0;
  auto consider = [&](bool silent) {
    try {
      auto c = family(silent);
      if (!c) return;
      iterations += c->iterations;
      check_dynamic_range(c->q, dist);
      const double lo = log_outage_analytic(c->q, dist);
      if (!best || lo < best_log) {
        best_log = lo;
        best = std::move(c);
      }
    } catch (const InfeasibleError& e) {
      last_error = e;
    }
  };
  if (bins == 1 || opts.bin0 != Bin0Policy::Silent) consider(false);
  if (bins >= 2 && opts.bin0 != Bin0Policy::Transmit) consider(true);
  if (opts.bin0 == Bin0Policy::Silent && bins == 1) throw DomainError("silent bin 0 needs at least 2 bins");
  if (!best) {
    if (last_error) throw *last_error;
    throw InfeasibleError("infeasible power budget");
  }
  DesignReport rep;
  rep.quantizer = std::move(best->q);
  rep.method = method;
  rep.iterations = iterations;
  return rep;
}

}  // namespace

int Quantizer::bin_of(double lambda) const {
  return static_cast<int>(std::upper_bound(thresholds.begin(), thresholds.end(), lambda) - thresholds.begin());
}

double Quantizer::power_for(double lambda) const { return powers[bin_of(lambda)]; }

void Quantizer::validate() const {
  if (bins < 1) throw DomainError("quantizer needs at least one bin");
  if (!(rate_constant > 0.0)) throw DomainError("rate constant must be positive");
  if (static_cast<int>(thresholds.size()) != bins - 1 || static_cast<int>(powers.size()) != bins) {
    throw DomainError("quantizer arrays do not match the bin count");
  }
  for (int j = 0; j + 1 < bins; ++j) {
    if (!(thresholds[j] > 0.0) || (j > 0 && !(thresholds[j] > thresholds[j - 1]))) {
      throw DomainError("thresholds must be positive and strictly increasing");
    }
    const double expect = rate_constant / thresholds[j];
    if (std::abs(powers[j + 1] - expect) > 1e-9 * expect) throw DomainError("bin power is not channel inversion");
  }
  if (!(gamma0 > 0.0)) throw DomainError("cutoff must be positive");
  if (bin0_silent) {
    if (bins < 2 || powers[0] != 0.0 || gamma0 != thresholds[0]) {
      throw DomainError("silent bin 0 needs P0 = 0 and gamma0 = gamma1");
    }
  } else {
    if (bins >= 2 && !(gamma0 < thresholds[0])) throw DomainError("cutoff must lie inside bin 0");
    const double expect = rate_constant / gamma0;
    if (std::abs(powers[0] - expect) > 1e-9 * expect) throw DomainError("P0 must equal k / gamma0");
  }
}

double DesignReport::residual_max() const {
  double r = 0.0;
  for (double v : residuals) r = std::max(r, std::abs(v));
  return r;
}

double siso_rate_constant(double rate_bits) {
  if (!(rate_bits > 0.0)) throw DomainError("rate must be positive");
  return std::exp2(rate_bits) - 1.0;
}

double mimo_rate_constant(const AntennaConfig& cfg, int i, double rate_bits) {
  if (i < 1 || i > cfg.m()) throw DomainError("eigenvalue index out of range");
  if (!(rate_bits > 0.0)) throw DomainError("rate must be positive");
  return cfg.tx() * std::expm1(rate_bits / i * std::log(2.0));
}

DesignReport design_equi_power(const EigDistribution& dist, int bins, double p_av, double k,
                               const DesignOptions& opts) {
  check_design_inputs(bins, p_av, k);
  const bool strict = opts.bin0 == Bin0Policy::Transmit;
  DesignReport rep = pick(dist, bins, opts, DesignMethod::EquiPower,
                          [&](bool silent) { return equi_family(dist, bins, p_av, k, silent, strict); });
  rep.residuals = equi_power_residuals(rep.quantizer, dist, p_av);
  rep.avg_power_used = avg_power(rep.quantizer, dist);
  rep.power_residual = (rep.avg_power_used - p_av) / p_av;
  return rep;
}

DesignReport design_kkt(const EigDistribution& dist, int bins, double p_av, double k, const DesignOptions& opts) {
  check_design_inputs(bins, p_av, k);
  DesignReport rep = pick(dist, bins, opts, DesignMethod::Kkt,
                          [&](bool silent) { return kkt_family(dist, bins, p_av, k, silent); });
  rep.residuals = kkt_residuals(rep.quantizer, dist);
  rep.avg_power_used = avg_power(rep.quantizer, dist);
  rep.power_residual = (rep.avg_power_used - p_av) / p_av;
  return rep;
}

DesignReport design_quantizer(DesignMethod method, const EigDistribution& dist, int bins, double p_av, double k,
                              const DesignOptions& opts) {
  return method == DesignMethod::Kkt ? design_kkt(dist, bins, p_av, k, opts)
                                     : design_equi_power(dist, bins, p_av, k, opts);
}

double avg_power(const Quantizer& q, const EigDistribution& dist) {
  double w = 0.0;
  for (int j = 0; j < q.bins; ++j) {
    const double lo = j == 0 ? 0.0 : q.thresholds[j - 1];
    const double hi = j + 1 == q.bins ? kInf : q.thresholds[j];
    if (q.powers[j] > 0.0) w += q.powers[j] * mass(dist, lo, hi);
  }
  return w;
}

double outage_analytic(const Quantizer& q, const EigDistribution& outage_dist) {
  return outage_dist.cdf(q.gamma0);
}

double log_outage_analytic(const Quantizer& q, const EigDistribution& outage_dist) {
  return outage_dist.log_cdf_at_log(std::log(q.gamma0));
}

std::vector<double> equi_power_residuals(const Quantizer& q, const EigDistribution& dist, double p_av) {
  const int served = q.bin0_silent ? q.bins - 1 : q.bins;
  const double share = p_av / served;
  std::vector<double> r;
  for (int j = q.bin0_silent ? 1 : 0; j < q.bins; ++j) {
    const double lo = j == 0 ? 0.0 : q.thresholds[j - 1];
    const double hi = j + 1 == q.bins ? kInf : q.thresholds[j];
    r.push_back((q.powers[j] * mass(dist, lo, hi) - share) / share);
  }
  return r;
}

std::vector<double> kkt_residuals(const Quantizer& q, const EigDistribution& dist) {
  std::vector<double> tau;
  if (!q.bin0_silent) tau.push_back(q.gamma0);
  tau.insert(tau.end(), q.thresholds.begin(), q.thresholds.end());
  std::vector<double> r;
  for (std::size_t j = 1; j < tau.size(); ++j) {
    const double t = tau[j];
    const double ms = mass(dist, t, j + 1 == tau.size() ? kInf : tau[j + 1]);
    r.push_back(t * dist.pdf(t) * (t / tau[j - 1] - 1.0) / ms - 1.0);
  }
  return r;
}

double scheduled_rate(double r, double p_av, double fixed_rate_bits) {
  return r > 0.0 ? r * std::log2(p_av) : fixed_rate_bits;
}

Gamma0Asymptote gamma0_asymptotic(const AntennaConfig& cfg, int i, int bins, double r, double p_av,
                                  double constant) {
  if (i < 1 || i > cfg.m()) throw DomainError("eigenvalue index out of range");
  if (r < 0.0 || r > i) throw DomainError("multiplexing gain must lie in [0, i]");
  if (bins < 1) throw DomainError("quantizer needs at least one bin");
  Gamma0Asymptote a;
  a.exponent = (1.0 - r / i) * g_function(cfg.m(), cfg.n(), i, bins).as_double();
  a.constant = constant;
  a.value = constant * std::pow(p_av, -a.exponent);
  return a;
}

Gamma0Fit fit_gamma0_constant(const EigDistribution& dist, const AntennaConfig& cfg, int i, int bins, double r,
                              DesignMethod method, double snr_lo_db, double snr_hi_db, double fixed_rate_bits) {
  Gamma0Fit fit;
  fit.exponent = gamma0_asymptotic(cfg, i, bins, r, 1.0).exponent;
  std::vector<double> lp, lg;
  for (double snr = snr_lo_db; snr <= snr_hi_db + 1e-9; snr += 2.0) {
    const double p = std::pow(10.0, snr / 10.0);
    const double k = mimo_rate_constant(cfg, i, scheduled_rate(r, p, fixed_rate_bits));
    const auto rep = design_quantizer(method, dist, bins, p, k);
    lp.push_back(std::log(p));
    lg.push_back(std::log(rep.quantizer.gamma0));
  }
  const std::vector<std::vector<double>> cols{lp};
  const auto ls = detail::least_squares(cols, lg);
  fit.slope = ls.coef[1];
  fit.r_squared = ls.r_squared;
  fit.points = lp.size();
  double s = 0.0;
  for (std::size_t j = 0; j < lp.size(); ++j) s += lg[j] + fit.exponent * lp[j];
  fit.constant = std::exp(s / static_cast<double>(lp.size()));
  return fit;
}

std::string method_name(DesignMethod method) { return method == DesignMethod::Kkt ? "kkt" : "equi"; }

DesignMethod parse_method(const std::string& name) {
  if (name == "kkt") return DesignMethod::Kkt;
  if (name == "equi") return DesignMethod::EquiPower;
  throw DomainError("unknown design method '" + name + "' (expected equi or kkt)");
}

std::string quantizer_to_json(const QuantizerRecord& rec,
                              const std::vector<std::pair<std::string, std::string>>& config) {
  nlohmann::ordered_json j;
  j["m"] = rec.m;
  j["n"] = rec.n;
  j["eig_index"] = rec.eig_index;
  j["L"] = rec.quantizer.bins;
  j["rate_bits"] = rec.rate_bits;
  j["snr_db"] = rec.snr_db;
  j["thresholds"] = rec.quantizer.thresholds;
  j["powers"] = rec.quantizer.powers;
  j["gamma0"] = rec.quantizer.gamma0;
  j["method"] = method_name(rec.method);
  j["residual_max"] = rec.residual_max;
  j["rate_constant"] = rec.quantizer.rate_constant;
  j["bin0_silent"] = rec.quantizer.bin0_silent;
  j["avg_power"] = rec.avg_power;
  if (!config.empty()) {
    nlohmann::ordered_json c = nlohmann::ordered_json::object();
    for (const auto& [key, value] : config) c[key] = value;
    j["config"] = std::move(c);
  }
  return j.dump(2) + "\n";
}

QuantizerRecord quantizer_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed quantizer JSON: ") + e.what());
  }
  try {
    QuantizerRecord rec;
    rec.m = j.at("m").get<int>();
    rec.n = j.at("n").get<int>();
    rec.eig_index = j.at("eig_index").get<int>();
    rec.rate_bits = j.at("rate_bits").get<double>();
    rec.snr_db = j.at("snr_db").get<double>();
    rec.method = parse_method(j.at("method").get<std::string>());
    rec.residual_max = j.at("residual_max").get<double>();
    auto& q = rec.quantizer;
    q.bins = j.at("L").get<int>();
    q.thresholds = j.at("thresholds").get<std::vector<double>>();
    q.powers = j.at("powers").get<std::vector<double>>();
    q.gamma0 = j.at("gamma0").get<double>();
    q.rate_constant = j.contains("rate_constant") ? j["rate_constant"].get<double>() : q.powers[0] * q.gamma0;
    q.bin0_silent = j.value("bin0_silent", false);
    rec.avg_power = j.value("avg_power", 0.0);
    q.validate();
    return rec;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("incomplete quantizer JSON: ") + e.what());
  }
}

}  // namespace fbq
