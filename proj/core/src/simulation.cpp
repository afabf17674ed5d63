#include "fbq/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "fbq/error.hpp"
#include "fbq/special_functions.hpp"
#include "numeric.hpp"
#include "parallel.hpp"

namespace fbq {

namespace {

constexpr std::uint64_t kCalibrationKey = std::uint64_t{1} << 62;

bool analytic_supported(SchemeKind kind) {
  return kind == SchemeKind::Quantized || kind == SchemeKind::TemporalPerfect;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

// Designed scheme at one SNR point plus what the analytic evaluator needs.
struct PointScheme {
  Scheme scheme;
  std::optional<double> log_outage;  // analytic, when supported
  bool analytic_silent = false;      // analytic outage slots carry no transmission
};

// strtod rather than stod: subnormal outages must not throw.
double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw Error("not a number: '" + s + "'");
  return v;
}

struct Counts {
  std::size_t no_tx = 0;
  std::size_t decode = 0;
  double power = 0.0;
  double power_sq = 0.0;
};

}  // namespace

std::string scheme_kind_name(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::NoCsit: return "no-csit";
    case SchemeKind::Beamforming: return "beamforming";
    case SchemeKind::TemporalPerfect: return "temporal-perfect";
    case SchemeKind::OptimalPerfect: return "optimal-perfect";
    case SchemeKind::Quantized: return "quantized";
    case SchemeKind::Joint: return "joint";
  }
  return "unknown";
}

SchemeKind parse_scheme_kind(const std::string& name) {
  for (auto k : {SchemeKind::NoCsit, SchemeKind::Beamforming, SchemeKind::TemporalPerfect,
                 SchemeKind::OptimalPerfect, SchemeKind::Quantized, SchemeKind::Joint}) {
    if (scheme_kind_name(k) == name) return k;
  }
  throw DomainError("unknown scheme '" + name + "'");
}

std::string sweep_mode_name(SweepMode mode) {
  switch (mode) {
    case SweepMode::MonteCarlo: return "mc";
    case SweepMode::Analytic: return "analytic";
    case SweepMode::Both: return "both";
  }
  return "unknown";
}

SweepMode parse_sweep_mode(const std::string& name) {
  if (name == "mc" || name == "monte-carlo") return SweepMode::MonteCarlo;
  if (name == "analytic") return SweepMode::Analytic;
  if (name == "both") return SweepMode::Both;
  throw DomainError("unknown sweep mode '" + name + "'");
}

std::string dist_source_name(DistSource src) {
  switch (src) {
    case DistSource::Auto: return "auto";
    case DistSource::Analytic: return "analytic";
    case DistSource::Empirical: return "empirical";
  }
  return "unknown";
}

DistSource parse_dist_source(const std::string& name) {
  if (name == "auto") return DistSource::Auto;
  if (name == "analytic") return DistSource::Analytic;
  if (name == "empirical") return DistSource::Empirical;
  throw DomainError("unknown distribution source '" + name + "'");
}

int SweepConfig::resolved_eig_index() const {
  if (eig_index > 0) return eig_index;
  if (scheme == SchemeKind::Joint && mux) {
    return std::clamp(static_cast<int>(std::ceil(*mux - 1e-12)), 1, cfg.m());
  }
  return 1;
}

double SweepConfig::rate_at(double p_av) const {
  if (mux) return *mux * std::log2(p_av);
  return *rate_bits;
}

void SweepConfig::validate() const {
  if (mux.has_value() == rate_bits.has_value()) {
    throw DomainError("specify exactly one of multiplexing gain and fixed rate");
  }
  if (mux && (!(*mux >= 0.0) || *mux > cfg.m() + 1e-12)) throw DomainError("multiplexing gain must lie in [0, m]");
  if (rate_bits && !(*rate_bits > 0.0)) throw DomainError("rate must be positive");
  if (snr_db.empty()) throw DomainError("SNR grid is empty");
  for (std::size_t k = 0; k < snr_db.size(); ++k) {
    if (!std::isfinite(snr_db[k])) throw DomainError("SNR grid must be finite");
    if (k > 0 && !(snr_db[k] > snr_db[k - 1])) throw DomainError("SNR grid must be strictly increasing");
  }
  if (mode != SweepMode::Analytic && trials < 1000) throw DomainError("Monte Carlo needs at least 1000 trials");
  if (mode != SweepMode::MonteCarlo && !analytic_supported(scheme)) {
    throw DomainError("analytic outage is only available for quantized and temporal-perfect schemes");
  }
  const int i = resolved_eig_index();
  if (i < 1 || i > cfg.m()) throw DomainError("eigenvalue index out of range");
  if (decode_index < 0 || decode_index > i) throw DomainError("decode index must lie in [1, eig_index]");
  if (scheme == SchemeKind::Quantized && bins < 1) throw DomainError("quantizer needs at least one bin");
  if (scheme == SchemeKind::Joint) {
    if (!mux || !(*mux > 0.0)) throw DomainError("joint scheme needs a positive multiplexing gain");
    if (bins < 2) throw DomainError("joint scheme needs at least 2 bins");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
  }
}

EigDistribution sweep_distribution(const SweepConfig& config, int eig_index) {
  const int m = config.cfg.m();
  DistSource src = config.dist;
  if (src == DistSource::Auto) src = m == 1 ? DistSource::Analytic : DistSource::Empirical;
  if (src == DistSource::Analytic) {
    if (eig_index != m) throw DomainError("the analytic law covers the smallest eigenvalue only");
    return EigDistribution::smallest_analytic(config.cfg);
  }
  if (!config.cache_dir.empty()) {
    return load_or_build_empirical(config.cache_dir, config.cfg, eig_index, config.dist_samples, config.seed,
                                   config.threads);
  }
  return build_empirical(config.cfg, eig_index, config.dist_samples, Rng(config.seed), config.threads);
}

namespace {

class SchemeFactory {
 public:
  explicit SchemeFactory(const SweepConfig& c) : c_(c), i_(c.resolved_eig_index()) {
    if (c_.scheme == SchemeKind::Quantized || c_.scheme == SchemeKind::Joint) {
      design_dist_ = sweep_distribution(c_, i_);
      const int j = c_.decode_index == 0 ? i_ : c_.decode_index;
      outage_dist_ = j == i_ ? design_dist_ : sweep_distribution(c_, j);
    }
  }

  PointScheme build(std::size_t point, double p_av, double rate) const {
    PointScheme ps;
    Scheme& s = ps.scheme;
    s.cfg = c_.cfg;
    s.p_av = p_av;
    s.rate_bits = rate;
    const DesignOptions opts{c_.bin0};
    switch (c_.scheme) {
      case SchemeKind::NoCsit: s.policy = NoCsit{}; break;
      case SchemeKind::Beamforming: s.policy = Beamforming{}; break;
      case SchemeKind::TemporalPerfect: {
        const CutoffResult cut = c_.mux ? temporal_cutoff_perfect(c_.cfg, *c_.mux, p_av)
                                        : temporal_cutoff_fixed_rate(c_.cfg, rate, p_av);
        s.policy = TemporalPerfect{cut.gamma0};
        const auto law = EigDistribution::smallest_analytic(c_.cfg);
        ps.log_outage = cut.zero_outage ? -std::numeric_limits<double>::infinity()
                                        : law.log_cdf_at_log(cut.log_gamma0);
        ps.analytic_silent = true;
        break;
      }
      case SchemeKind::OptimalPerfect: {
        const double cut =
            calibrate_power_cut(c_.cfg, rate, p_av, c_.power_cut_samples,
                                Rng(c_.seed).substream({point, kCalibrationKey}), c_.threads);
        s.policy = OptimalPerfect{cut};
        break;
      }
      case SchemeKind::Quantized: {
        const double k = mimo_rate_constant(c_.cfg, i_, rate);
        auto rep = design_quantizer(c_.method, *design_dist_, c_.bins, p_av, k, opts);
        ps.log_outage = log_outage_analytic(rep.quantizer, *outage_dist_);
        ps.analytic_silent = rep.quantizer.bin0_silent;
        s.policy = QuantizedTemporal{std::move(rep.quantizer), i_};
        break;
      }
      case SchemeKind::Joint: {
        JointRatePower j;
        j.alpha = c_.alpha;
        j.r1 = *c_.mux;
        j.eig_index = i_;
        j.fixed_rate_bits = c_.joint_fixed_rate_bits;
        j.gamma_th = joint_threshold(c_.cfg, i_, c_.alpha, p_av);
        const double k = mimo_rate_constant(c_.cfg, i_, c_.joint_fixed_rate_bits);
        j.inner = design_quantizer(c_.method, *design_dist_, c_.bins - 1, (1.0 - c_.alpha) * p_av, k, opts).quantizer;
        s.policy = std::move(j);
        break;
      }
    }
    s.validate();
    return ps;
  }

 private:
  const SweepConfig& c_;
  int i_;
  std::optional<EigDistribution> design_dist_;
  std::optional<EigDistribution> outage_dist_;
};

OutagePoint analytic_point(double snr_db, double rate, const PointScheme& ps, const char* mode) {
  OutagePoint pt;
  pt.snr_db = snr_db;
  pt.rate_bits = rate;
  pt.mode = mode;
  pt.log_outage = *ps.log_outage;
  pt.outage = std::exp(pt.log_outage);
  if (ps.analytic_silent) {
    pt.no_tx_outage = pt.outage;
  } else {
    pt.decode_outage = pt.outage;
  }
  pt.transmit_fraction = 1.0 - pt.no_tx_outage;
  return pt;
}

OutagePoint monte_carlo_point(const SweepConfig& c, std::size_t point, double snr_db, double rate,
                              const Scheme& scheme) {
  const std::size_t chunks = (c.trials + kSweepChunk - 1) / kSweepChunk;
  std::vector<Counts> per_chunk(chunks);
  const Rng root(c.seed);
  detail::parallel_for(chunks, c.threads, [&](std::size_t ch) {
    Rng sub = root.substream({point, ch});
    EigenSampler sampler(c.cfg);
    std::vector<double> lam(c.cfg.m());
    PowerAllocation alloc;
    Counts cnt;
    const std::size_t end = std::min(c.trials, (ch + 1) * kSweepChunk);
    for (std::size_t t = ch * kSweepChunk; t < end; ++t) {
      sampler.draw(sub, lam);
      allocate_into(scheme, lam, alloc);
      if (!alloc.transmitting) {
        ++cnt.no_tx;
      } else if (is_outage(lam, alloc)) {
        ++cnt.decode;
      }
      cnt.power += alloc.total;
      cnt.power_sq += alloc.total * alloc.total;
    }
    per_chunk[ch] = cnt;
  });
  Counts sum;
  for (const auto& cnt : per_chunk) {
    sum.no_tx += cnt.no_tx;
    sum.decode += cnt.decode;
    sum.power += cnt.power;
    sum.power_sq += cnt.power_sq;
  }
  const double n = static_cast<double>(c.trials);
  OutagePoint pt;
  pt.snr_db = snr_db;
  pt.rate_bits = rate;
  pt.mode = "mc";
  pt.trials = c.trials;
  pt.no_tx_outage = static_cast<double>(sum.no_tx) / n;
  pt.decode_outage = static_cast<double>(sum.decode) / n;
  pt.outage = static_cast<double>(sum.no_tx + sum.decode) / n;
  pt.std_error = std::sqrt(pt.outage * (1.0 - pt.outage) / n);
  pt.transmit_fraction = 1.0 - pt.no_tx_outage;
  pt.log_outage = std::log(pt.outage);
  pt.mean_power = sum.power / n;
  const double var = std::max(0.0, sum.power_sq / n - pt.mean_power * pt.mean_power);
  pt.power_std_error = std::sqrt(var / n);
  return pt;
}

}  // namespace

std::vector<OutagePoint> run_sweep(const SweepConfig& config) {
  config.validate();
  const SchemeFactory factory(config);
  std::vector<OutagePoint> out;
  for (std::size_t k = 0; k < config.snr_db.size(); ++k) {
    const double snr = config.snr_db[k];
    const double p_av = std::pow(10.0, snr / 10.0);
    const double rate = config.rate_at(p_av);
    if (!(rate > 0.0)) throw DomainError("rate must be positive at " + fmt(snr) + " dB");
    const PointScheme ps = factory.build(k, p_av, rate);
    if (config.mode == SweepMode::Analytic) {
      out.push_back(analytic_point(snr, rate, ps, "analytic"));
      continue;
    }
    OutagePoint mc = monte_carlo_point(config, k, snr, rate, ps.scheme);
    const std::size_t events = static_cast<std::size_t>(std::llround(mc.outage * static_cast<double>(mc.trials)));
    if (config.mode == SweepMode::MonteCarlo && config.rare_event_floor && ps.log_outage &&
        events < config.floor_events) {
      OutagePoint an = analytic_point(snr, rate, ps, "analytic-floor");
      an.mean_power = mc.mean_power;
      an.power_std_error = mc.power_std_error;
      out.push_back(an);
      continue;
    }
    out.push_back(mc);
    if (config.mode == SweepMode::Both) out.push_back(analytic_point(snr, rate, ps, "analytic"));
  }
  return out;
}

DiversityFit fit_diversity(std::span<const OutagePoint> points, double lo_db, double hi_db) {
  if (!(hi_db > lo_db)) throw DomainError("fit window must have hi > lo");
  DiversityFit fit;
  std::vector<double> x, y;
  std::size_t in_window = 0;
  for (const auto& p : points) {
    if (p.snr_db < lo_db || p.snr_db > hi_db) continue;
    ++in_window;
    const double lo = std::isfinite(p.log_outage) ? p.log_outage : std::log(p.outage);
    if (!std::isfinite(lo)) {
      ++fit.excluded_zero;
      continue;
    }
    x.push_back(p.snr_db / 10.0);
    y.push_back(-lo / std::log(10.0));
  }
  if (in_window == 0) throw DomainError("no sweep points inside the fit window");
  if (x.empty()) {
    fit.infinite = true;
    return fit;
  }
  if (x.size() < 4) throw DomainError("need at least 4 points with positive outage in the fit window");
  const std::vector<std::vector<double>> cols{x};
  const auto ls = detail::least_squares(cols, y);
  fit.used = x.size();
  fit.d_hat = ls.coef[1];
  fit.r_squared = ls.r_squared;
  fit.ci = student_t_quantile(static_cast<double>(x.size() - 2), 0.975) * std::sqrt(ls.coef_var[1]);
  return fit;
}

void write_sweep_csv(std::ostream& out, std::span<const OutagePoint> points, bool header) {
  if (header) out << "snr_db,rate_bits,outage,stderr,trials,transmit_fraction,no_tx_outage,decode_outage,mode\n";
  for (const auto& p : points) {
    out << fmt(p.snr_db) << ',' << fmt(p.rate_bits) << ',' << fmt(p.outage) << ',' << fmt(p.std_error) << ','
        << p.trials << ',' << fmt(p.transmit_fraction) << ',' << fmt(p.no_tx_outage) << ','
        << fmt(p.decode_outage) << ',' << p.mode << '\n';
  }
}

std::vector<OutagePoint> read_sweep_csv(std::istream& in) {
  std::vector<OutagePoint> pts;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line.rfind("snr_db,", 0) != 0) throw Error("sweep CSV is missing its header");
      header_seen = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 9) throw Error("malformed sweep CSV row: " + line);
    OutagePoint p;
    try {
      p.snr_db = parse_double(f[0]);
      p.rate_bits = parse_double(f[1]);
      p.outage = parse_double(f[2]);
      p.std_error = parse_double(f[3]);
      p.trials = static_cast<std::size_t>(std::stoull(f[4]));
      p.transmit_fraction = parse_double(f[5]);
      p.no_tx_outage = parse_double(f[6]);
      p.decode_outage = parse_double(f[7]);
    } catch (const std::logic_error&) {
      throw Error("malformed sweep CSV row: " + line);
    }
    p.mode = f[8];
    p.log_outage = std::log(p.outage);
    pts.push_back(std::move(p));
  }
  if (!header_seen) throw Error("sweep CSV is missing its header");
  return pts;
}

}  // namespace fbq
