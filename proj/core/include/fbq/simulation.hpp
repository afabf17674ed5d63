#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fbq/eig_distribution.hpp"
#include "fbq/quantizer.hpp"
#include "fbq/random_matrix.hpp"
#include "fbq/schemes.hpp"

namespace fbq {

enum class SchemeKind { NoCsit, Beamforming, TemporalPerfect, OptimalPerfect, Quantized, Joint };
enum class SweepMode { MonteCarlo, Analytic, Both };
enum class DistSource { Auto, Analytic, Empirical };

std::string scheme_kind_name(SchemeKind kind);
SchemeKind parse_scheme_kind(const std::string& name);
std::string sweep_mode_name(SweepMode mode);
SweepMode parse_sweep_mode(const std::string& name);
std::string dist_source_name(DistSource src);
DistSource parse_dist_source(const std::string& name);

struct SweepConfig {
  AntennaConfig cfg{1, 1};
  SchemeKind scheme = SchemeKind::NoCsit;
  std::optional<double> mux;        // rate r log2(P_av)
  std::optional<double> rate_bits;  // fixed rate
  std::vector<double> snr_db;       // strictly increasing
  std::size_t trials = 1000000;
  std::uint64_t seed = 42;
  SweepMode mode = SweepMode::MonteCarlo;

  // Quantized and joint schemes.
  int bins = 2;
  int eig_index = 0;      // 0: 1 for quantized, max(1, ceil(r)) for joint
  int decode_index = 0;   // eigenvalue deciding analytic outage; 0: eig_index
  DesignMethod method = DesignMethod::Kkt;
  Bin0Policy bin0 = Bin0Policy::Auto;
  DistSource dist = DistSource::Auto;  // Auto: analytic when m == 1
  std::size_t dist_samples = 1000000;
  std::filesystem::path cache_dir;     // empty: no table cache
  double alpha = 0.5;
  double joint_fixed_rate_bits = 1.0;

  std::size_t power_cut_samples = 1000000;
  int threads = 0;  // 0: hardware concurrency
  // Below `floor_events` Monte Carlo outages an analytic row replaces the estimate.
  bool rare_event_floor = true;
  std::size_t floor_events = 30;

  void validate() const;
  int resolved_eig_index() const;
  double rate_at(double p_av) const;
};

struct OutagePoint {
  double snr_db = 0.0;
  double rate_bits = 0.0;
  double outage = 0.0;
  double std_error = 0.0;
  std::size_t trials = 0;
  double transmit_fraction = 1.0;
  double no_tx_outage = 0.0;
  double decode_outage = 0.0;
  std::string mode;  // "mc", "analytic" or "analytic-floor"
  double log_outage = 0.0;  // natural log, finite where `outage` underflows
  double mean_power = 0.0;  // Monte Carlo rows only
  double power_std_error = 0.0;
};

// Fixed trial-chunk size; part of the determinism contract.
inline constexpr std::size_t kSweepChunk = 1 << 14;

std::vector<OutagePoint> run_sweep(const SweepConfig& config);

struct DiversityFit {
  bool infinite = false;
  double d_hat = 0.0;
  double ci = 0.0;  // 95% half-width
  double r_squared = 0.0;
  std::size_t used = 0;
  std::size_t excluded_zero = 0;
};

// Slope of -log10(outage) against log10(P_av) over [lo_db, hi_db].
DiversityFit fit_diversity(std::span<const OutagePoint> points, double lo_db, double hi_db);

void write_sweep_csv(std::ostream& out, std::span<const OutagePoint> points, bool header = true);
std::vector<OutagePoint> read_sweep_csv(std::istream& in);

// Builds the law of lambda_i the sweep designs against.
EigDistribution sweep_distribution(const SweepConfig& config, int eig_index);

}  // namespace fbq
