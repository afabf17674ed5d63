#include "fbq/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fbq/error.hpp"
#include "fbq/special_functions.hpp"
#include "parallel.hpp"

namespace fbq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kChunk = 1 << 16;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Counts draws satisfying `event` over `trials`, chunked by substream.
template <class Event>
McEstimate count_event(const AntennaConfig& cfg, std::size_t trials, const Rng& rng, int threads, Event&& event) {
  const std::size_t chunks = (trials + kChunk - 1) / kChunk;
  std::vector<std::size_t> hits(chunks, 0);
  detail::parallel_for(chunks, threads, [&](std::size_t c) {
    Rng sub = rng.substream({c});
    EigenSampler sampler(cfg);
    std::vector<double> lam(cfg.m());
    const std::size_t end = std::min(trials, (c + 1) * kChunk);
    std::size_t h = 0;
    for (std::size_t s = c * kChunk; s < end; ++s) {
      sampler.draw(sub, lam);
      if (event(std::span<const double>(lam))) ++h;
    }
    hits[c] = h;
  });
  const std::size_t total = std::accumulate(hits.begin(), hits.end(), std::size_t{0});
  McEstimate est;
  est.trials = trials;
  est.value = static_cast<double>(total) / static_cast<double>(trials);
  est.std_error = std::sqrt(est.value * (1.0 - est.value) / static_cast<double>(trials));
  return est;
}

}  // namespace

GValue g_function(int m, int n, int i, int bins) {
  if (m < 1 || n < m || i < 1 || i > m) throw DomainError("g_function requires 1 <= i <= m <= n");
  if (bins < 1) throw DomainError("g_function requires L >= 1");
  const std::uint64_t base = static_cast<std::uint64_t>((n - i + 1) * (m - i + 1));
  const std::uint64_t cap = std::numeric_limits<std::uint64_t>::max();
  GValue g;
  double t = 1.0;
  for (int l = 0; l < bins; ++l, t *= static_cast<double>(base)) g.approx += t;
  std::uint64_t term = 1;
  std::uint64_t sum = 0;
  bool term_overflow = false;
  for (int l = 0; l < bins; ++l) {
    if (term_overflow || term > cap - sum) {
      g.value = cap;
      g.saturated = true;
      return g;
    }
    sum += term;
    if (term > cap / base) term_overflow = true;
    else term *= base;
  }
  g.value = static_cast<std::uint64_t>(sum);
  return g;
}

void Scheme::validate() const {
  if (!(p_av > 0.0)) throw DomainError("average power must be positive");
  auto check_index = [&](int i) {
    if (i < 1 || i > cfg.m()) throw DomainError("eigenvalue index out of range");
  };
  std::visit(Overloaded{
                 [&](const NoCsit&) {},
                 [&](const Beamforming&) {},
                 [&](const TemporalPerfect& s) {
                   if (!(s.gamma0 >= 0.0)) throw DomainError("cutoff must be nonnegative");
                 },
                 [&](const OptimalPerfect& s) {
                   if (!(s.power_cut > 0.0)) throw DomainError("power cut must be positive");
                 },
                 [&](const QuantizedTemporal& s) {
                   check_index(s.eig_index);
                   s.quantizer.validate();
                 },
                 [&](const JointRatePower& s) {
                   check_index(s.eig_index);
                   if (!(s.alpha > 0.0 && s.alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
                   if (!(s.r1 > 0.0) || s.r1 > s.eig_index) throw DomainError("r1 must lie in (0, i]");
                   if (!(s.gamma_th > 0.0)) throw DomainError("joint threshold must be positive");
                   s.inner.validate();
                 },
             },
             policy);
  if (!std::holds_alternative<JointRatePower>(policy) && !(rate_bits > 0.0)) {
    throw DomainError("rate must be positive");
  }
}

std::string Scheme::kind_name() const {
  static const char* names[] = {"no-csit", "beamforming", "temporal-perfect", "optimal-perfect", "quantized", "joint"};
  return names[policy.index()];
}

double min_power_for_rate(std::span<const double> lambdas, double rate_bits, std::span<double> powers) {
  const int m = static_cast<int>(lambdas.size());
  std::fill(powers.begin(), powers.end(), 0.0);
  int positive = 0;
  while (positive < m && lambdas[positive] > 0.0) ++positive;
  if (positive == 0) return kInf;
  const double target = rate_bits * std::log(2.0);
  for (int a = positive; a >= 1; --a) {
    double log_prod = 0.0;
    for (int k = 0; k < a; ++k) log_prod += std::log(lambdas[k]);
    const double mu = std::exp((target - log_prod) / a);
    if (a > 1 && !(mu * lambdas[a - 1] > 1.0)) continue;
    double total = 0.0;
    for (int k = 0; k < a; ++k) {
      const double p = std::max(0.0, mu - 1.0 / lambdas[k]);
      if (k < static_cast<int>(powers.size())) powers[k] = p;
      total += p;
    }
    return total;
  }
  return kInf;
}

void allocate_into(const Scheme& scheme, std::span<const double> lam, PowerAllocation& out) {
  const int tx = scheme.cfg.tx();
  const int m = scheme.cfg.m();
  out.per_mode.assign(tx, 0.0);
  out.total = 0.0;
  out.transmitting = false;
  out.rate_bits = scheme.rate_bits;
  auto equal_split = [&](double total) {
    if (!(total > 0.0) || !std::isfinite(total)) return;
    for (auto& p : out.per_mode) p = total / tx;
    out.total = total;
    out.transmitting = true;
  };
  std::visit(Overloaded{
                 [&](const NoCsit&) { equal_split(scheme.p_av); },
                 [&](const Beamforming&) {
                   out.per_mode[0] = scheme.p_av;
                   out.total = scheme.p_av;
                   out.transmitting = true;
                 },
                 [&](const TemporalPerfect& s) {
                   const double smallest = lam[m - 1];
                   if (smallest > s.gamma0 && smallest > 0.0) {
                     const double c = std::expm1(scheme.rate_bits / m * std::log(2.0));
                     equal_split(tx * c / smallest);
                   }
                 },
                 [&](const OptimalPerfect& s) {
                   const double total = min_power_for_rate(lam, scheme.rate_bits, out.per_mode);
                   if (total <= s.power_cut && std::isfinite(total)) {
                     out.total = total;
                     out.transmitting = total > 0.0;
                   } else {
                     std::fill(out.per_mode.begin(), out.per_mode.end(), 0.0);
                   }
                 },
                 [&](const QuantizedTemporal& s) { equal_split(s.quantizer.power_for(lam[s.eig_index - 1])); },
                 [&](const JointRatePower& s) {
                   const double li = lam[s.eig_index - 1];
                   if (li > s.gamma_th) {
                     const double ap = s.alpha * scheme.p_av;
                     equal_split(ap);
                     out.rate_bits = s.r1 * std::log2(1.0 + ap * s.gamma_th / tx);
                   } else {
                     equal_split(s.inner.power_for(li));
                     out.rate_bits = s.fixed_rate_bits;
                   }
                 },
             },
             scheme.policy);
}

PowerAllocation allocate(const Scheme& scheme, const EigSample& lambdas) {
  if (static_cast<int>(lambdas.lambdas.size()) != scheme.cfg.m()) throw DomainError("expected m eigenvalues");
  PowerAllocation out;
  allocate_into(scheme, lambdas.lambdas, out);
  return out;
}

double mutual_information(std::span<const double> lambdas, const PowerAllocation& alloc) {
  double mi = 0.0;
  const std::size_t k_max = std::min(lambdas.size(), alloc.per_mode.size());
  for (std::size_t k = 0; k < k_max; ++k) mi += std::log2(1.0 + alloc.per_mode[k] * lambdas[k]);
  return mi;
}

double mutual_information(const EigSample& lambdas, const PowerAllocation& alloc) {
  return mutual_information(std::span<const double>(lambdas.lambdas), alloc);
}

bool is_outage(std::span<const double> lambdas, const PowerAllocation& alloc) {
  if (!alloc.transmitting) return true;
  const double r = alloc.rate_bits;
  return mutual_information(lambdas, alloc) < r - 1e-9 * std::max(1.0, r);
}

CutoffResult temporal_cutoff_perfect(const AntennaConfig& cfg, double r, double p_av) {
  const int m = cfg.m();
  const int n = cfg.n();
  if (r < 0.0 || r > m) throw DomainError("multiplexing gain must lie in [0, m]");
  if (!(p_av > 0.0)) throw DomainError("average power must be positive");
  CutoffResult res;
  const double scale = std::pow(p_av, 1.0 - r / m);
  if (n == m) {
    res.log_gamma0 = -scale / m;
    res.gamma0 = std::exp(res.log_gamma0);
    return res;
  }
  const double rhs = std::tgamma(n - m + 1.0) / m * scale;
  const double full = std::tgamma(static_cast<double>(n - m));
  if (rhs >= full * (1.0 - 1e-12)) {
    res.zero_outage = true;
    res.gamma0 = 0.0;
    res.log_gamma0 = -kInf;
    return res;
  }
  res.gamma0 = inverse_upper_gamma(n - m, rhs);
  res.log_gamma0 = std::log(res.gamma0);
  return res;
}

CutoffResult temporal_cutoff_fixed_rate(const AntennaConfig& cfg, double rate_bits, double p_av) {
  const int m = cfg.m();
  const int n = cfg.n();
  if (!(rate_bits > 0.0)) throw DomainError("rate must be positive");
  if (!(p_av > 0.0)) throw DomainError("average power must be positive");
  const double k = cfg.tx() * std::expm1(rate_bits / m * std::log(2.0));
  CutoffResult res;
  if (n == m) {
    res.gamma0 = expint_e1_inv(p_av / k);
    res.log_gamma0 = std::log(res.gamma0);
    return res;
  }
  const double rhs = p_av / k * std::tgamma(n - m + 1.0);
  const double full = std::tgamma(static_cast<double>(n - m));
  if (rhs >= full * (1.0 - 1e-12)) {
    res.zero_outage = true;
    res.log_gamma0 = -kInf;
    return res;
  }
  res.gamma0 = inverse_upper_gamma(n - m, rhs);
  res.log_gamma0 = std::log(res.gamma0);
  return res;
}

double calibrate_power_cut(const AntennaConfig& cfg, double rate_bits, double p_av, std::size_t samples,
                           const Rng& rng, int threads) {
  if (samples < 1000) throw DomainError("power-cut calibration needs at least 1000 samples");
  std::vector<double> need(samples);
  const std::size_t chunks = (samples + kChunk - 1) / kChunk;
  detail::parallel_for(chunks, threads, [&](std::size_t c) {
    Rng sub = rng.substream({c});
    EigenSampler sampler(cfg);
    std::vector<double> lam(cfg.m());
    const std::size_t end = std::min(samples, (c + 1) * kChunk);
    for (std::size_t s = c * kChunk; s < end; ++s) {
      sampler.draw(sub, lam);
      need[s] = min_power_for_rate(lam, rate_bits);
    }
  });
  std::sort(need.begin(), need.end());
  const double budget = p_av * static_cast<double>(samples);
  double sum = 0.0;
  std::size_t served = 0;
  while (served < samples && sum + need[served] <= budget) sum += need[served++];
  if (served == samples) return kInf;
  if (served == 0) throw InfeasibleError("infeasible power budget");
  return need[served - 1];
}

double joint_threshold(const AntennaConfig& cfg, int i, double alpha, double p_av) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
  const double ap = alpha * p_av;
  if (!(ap > std::exp(1.0))) throw DomainError("SNR too low for joint scheme");
  const int k = cdf_exponent(cfg, i);
  return std::pow(std::log(ap), -1.0 / k);
}

double joint_throughput(const AntennaConfig& cfg, int i, double alpha, double r, double p_av,
                        const EigDistribution& dist) {
  const double th = joint_threshold(cfg, i, alpha, p_av);
  return r * std::log2(1.0 + alpha * p_av * th) * dist.sf(th);
}

double joint_multiplexing_ratio(const AntennaConfig& cfg, int i, double alpha, double p_av) {
  const double th = joint_threshold(cfg, i, alpha, p_av);
  const double ap = alpha * p_av;
  return std::log1p(ap * th) / std::log(ap);
}

McEstimate csir_full_mux_outage(const AntennaConfig& cfg, std::size_t trials, const Rng& rng, int threads) {
  if (trials < 10000) throw DomainError("need at least 10^4 trials");
  const double log_bound = cfg.m() * std::log(static_cast<double>(cfg.tx()));
  return count_event(cfg, trials, rng, threads, [&](std::span<const double> lam) {
    double s = 0.0;
    for (double l : lam) s += std::log(l);
    return s <= log_bound;
  });
}

McEstimate csir_full_mux_outage_at(const AntennaConfig& cfg, double p_av, std::size_t trials, const Rng& rng,
                                   int threads) {
  if (trials < 10000) throw DomainError("need at least 10^4 trials");
  if (!(p_av > 1.0)) throw DomainError("average power must exceed 1");
  const double rate = cfg.m() * std::log2(p_av);
  const double per = p_av / cfg.tx();
  return count_event(cfg, trials, rng, threads, [&](std::span<const double> lam) {
    double mi = 0.0;
    for (double l : lam) mi += std::log2(1.0 + per * l);
    return mi < rate;
  });
}

ConjectureProbe full_mux_conjecture_probe(const AntennaConfig& cfg, std::size_t trials, const Rng& rng,
                                          int threads) {
  const std::size_t chunks = (trials + kChunk - 1) / kChunk;
  std::vector<double> sums(chunks, 0.0), squares(chunks, 0.0);
  const int m = cfg.m();
  detail::parallel_for(chunks, threads, [&](std::size_t c) {
    Rng sub = rng.substream({c});
    EigenSampler sampler(cfg);
    std::vector<double> lam(m);
    const std::size_t end = std::min(trials, (c + 1) * kChunk);
    for (std::size_t s = c * kChunk; s < end; ++s) {
      sampler.draw(sub, lam);
      double log_prod = 0.0;
      for (double l : lam) log_prod += std::log(l);
      const double v = std::exp(-log_prod / m);
      sums[c] += v;
      squares[c] += v * v;
    }
  });
  const double n = static_cast<double>(trials);
  const double mean = std::accumulate(sums.begin(), sums.end(), 0.0) / n;
  const double sq = std::accumulate(squares.begin(), squares.end(), 0.0) / n;
  ConjectureProbe probe;
  probe.mean_inverse_geo = mean;
  probe.std_error = std::sqrt(std::max(0.0, sq - mean * mean) / n);
  probe.reference = 1.0 / m;
  probe.status = cfg.n() > 2 * cfg.m() ? "n > 2m: zero outage" : "unresolved: zero-or-constant outage";
  return probe;
}

}  // namespace fbq
