#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fbq/eig_distribution.hpp"
#include "fbq/quantizer.hpp"
#include "fbq/random_matrix.hpp"

namespace fbq {

// Geometric sum sum_{l<L} [(n-i+1)(m-i+1)]^l with saturation at uint64 range.
struct GValue {
  std::uint64_t value = 0;
  bool saturated = false;
  double approx = 0.0;  // the sum in floating point, meaningful past saturation
  double as_double() const { return approx; }
};

GValue g_function(int m, int n, int i, int bins);

// Equal power P_av/M on every transmit antenna.
struct NoCsit {};
// All power on the strongest eigenmode.
struct Beamforming {};
// Per-antenna power (2^{R/m}-1)/lambda_m when lambda_m > gamma0.
struct TemporalPerfect {
  double gamma0 = 0.0;
};
// Minimum-power eigenmode allocation for rate R, used while its total <= power_cut.
struct OptimalPerfect {
  double power_cut = 0.0;
};
// Per-antenna power P_j / M from the bin of lambda_i.
struct QuantizedTemporal {
  Quantizer quantizer;
  int eig_index = 1;
};
// Codebook C1 (rate r1 log2(1 + alpha P gamma_th / M), power alpha P) when
// lambda_i > gamma_th, otherwise the inner quantizer with a fixed-rate codebook.
struct JointRatePower {
  double alpha = 0.5;
  double r1 = 1.0;
  Quantizer inner;
  double gamma_th = 0.0;
  int eig_index = 1;
  double fixed_rate_bits = 1.0;
};

using SchemePolicy =
    std::variant<NoCsit, Beamforming, TemporalPerfect, OptimalPerfect, QuantizedTemporal, JointRatePower>;

struct Scheme {
  AntennaConfig cfg{1, 1};
  SchemePolicy policy;
  double p_av = 1.0;
  double rate_bits = 1.0;  // nominal rate; JointRatePower sets the slot rate itself

  void validate() const;
  std::string kind_name() const;
};

struct PowerAllocation {
  // Power per transmit dimension: per antenna for equal-power schemes, per
  // eigen-direction otherwise. Length M; mode k pairs with lambda_k.
  std::vector<double> per_mode;
  double total = 0.0;
  bool transmitting = false;
  double rate_bits = 0.0;  // rate of the codeword sent in this slot
};

PowerAllocation allocate(const Scheme& scheme, const EigSample& lambdas);
void allocate_into(const Scheme& scheme, std::span<const double> lambdas, PowerAllocation& out);

// sum_k log2(1 + per_mode[k] * lambda_k).
double mutual_information(const EigSample& lambdas, const PowerAllocation& alloc);
double mutual_information(std::span<const double> lambdas, const PowerAllocation& alloc);

// Outage test used everywhere: no transmission, or MI short of the rate beyond
// a 1e-9 relative rounding allowance.
bool is_outage(std::span<const double> lambdas, const PowerAllocation& alloc);

// Minimum total power reaching `rate_bits` over the eigenmodes (inverse
// water-filling); fills per-mode powers when `powers` is non-empty.
double min_power_for_rate(std::span<const double> lambdas, double rate_bits, std::span<double> powers = {});

struct CutoffResult {
  double gamma0 = 0.0;
  double log_gamma0 = 0.0;  // -inf when gamma0 = 0
  bool zero_outage = false;
};

// Cutoff for temporal power control with perfect CSIT and rate r log2(P_av),
// in the asymptotic form used by the analysis.
CutoffResult temporal_cutoff_perfect(const AntennaConfig& cfg, double r, double p_av);

// Exact cutoff for a fixed rate: M(2^{R/m}-1) E[1/lambda_m; lambda_m > gamma0] = P_av
// under the smallest-eigenvalue model.
CutoffResult temporal_cutoff_fixed_rate(const AntennaConfig& cfg, double rate_bits, double p_av);

// Truncation level making the long-run average of min_power_for_rate meet p_av
// over `samples` sampled channels; +inf when no truncation is needed.
double calibrate_power_cut(const AntennaConfig& cfg, double rate_bits, double p_av, std::size_t samples,
                           const Rng& rng, int threads = 1);

double joint_threshold(const AntennaConfig& cfg, int i, double alpha, double p_av);
double joint_throughput(const AntennaConfig& cfg, int i, double alpha, double r, double p_av,
                        const EigDistribution& dist);
// log(1 + alpha P gamma_th) / log(alpha P).
double joint_multiplexing_ratio(const AntennaConfig& cfg, int i, double alpha, double p_av);

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t trials = 0;
};

// Pr{prod lambda <= M^m}: the SNR-free outage event at full multiplexing without CSIT.
McEstimate csir_full_mux_outage(const AntennaConfig& cfg, std::size_t trials, const Rng& rng, int threads = 1);
// Pr{sum log2(1 + P lambda_k / M) < m log2 P} at a finite SNR.
McEstimate csir_full_mux_outage_at(const AntennaConfig& cfg, double p_av, std::size_t trials, const Rng& rng,
                                   int threads = 1);

struct ConjectureProbe {
  double mean_inverse_geo = 0.0;  // E[(prod lambda)^{-1/m}]
  double std_error = 0.0;
  double reference = 0.0;         // 1/m
  std::string status;
};

ConjectureProbe full_mux_conjecture_probe(const AntennaConfig& cfg, std::size_t trials, const Rng& rng,
                                          int threads = 1);

}  // namespace fbq
