#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fbq/random_matrix.hpp"

namespace fbq {

// Near-origin model log F(t) = log_beta + exponent*log(t) + correction*t,
// fitted to the lowest order statistics of a sample.
struct TailFit {
  double log_beta = 0.0;
  double exponent = 0.0;
  double correction = 0.0;
  double t_lo = 0.0;  // fit window in t
  double t_hi = 0.0;
  std::size_t points = 0;
  double r_squared = 0.0;

  double log_cdf(double log_t) const;
};

// Least-squares tail fit on the sorted sample `sorted` (ascending; may hold only
// the lowest few percent) drawn from `total` draws. With fixed_exponent the power
// is pinned and only log_beta and correction are estimated.
TailFit fit_tail(std::span<const double> sorted, std::size_t total,
                 std::optional<int> fixed_exponent);

// Tabulated CDF of the i-th largest eigenvalue.
struct EmpiricalTable {
  int m = 0;
  int n = 0;
  int eig_index = 0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::vector<double> t;    // strictly increasing grid
  std::vector<double> cdf;  // nondecreasing, in (0, 1)
  TailFit tail;             // fixed-exponent fit used below the grid
};

enum class DistKind { SmallestAnalytic, EmpiricalTable, AsymptoticPower };

// Law of a single ordered eigenvalue. Immutable and cheap to copy.
class EigDistribution {
 public:
  // Density x^{n-m} e^{-x} / Gamma(n-m+1) (gamma model of the smallest eigenvalue).
  static EigDistribution smallest_analytic(const AntennaConfig& cfg);
  // F(t) = beta t^exponent, valid on [0, t_max] only.
  static EigDistribution asymptotic_power(double beta, int exponent, double t_max);
  static EigDistribution from_table(EmpiricalTable table);

  DistKind kind() const;
  std::string label() const;
  // Exponent of the near-origin power law of the CDF.
  int tail_exponent() const;

  double cdf(double t) const;
  double sf(double t) const;
  double pdf(double t) const;
  // log F(e^{log_t}); finite even where F(t) or t underflow.
  double log_cdf_at_log(double log_t) const;
  double quantile(double u) const;
  // Inverse of the survival function.
  double upper_quantile(double s) const;

  // Non-null for EmpiricalTable.
  const EmpiricalTable* table() const;

  struct Impl;

 private:
  explicit EigDistribution(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

// F(b) - F(a) for 0 <= a <= b (b may be +inf), evaluated on whichever tail is accurate.
double mass(const EigDistribution& dist, double a, double b);

// x^{n-m} e^{-x} / Gamma(n-m+1).
double smallest_eig_pdf(const AntennaConfig& cfg, double x);

// (n-i+1)(m-i+1), the near-origin CDF exponent of the i-th largest eigenvalue.
int cdf_exponent(const AntennaConfig& cfg, int i);

// Draws `samples` values of the i-th largest eigenvalue. Chunked by substream so
// the result does not depend on `threads`.
std::vector<double> sample_eigenvalue(const AntennaConfig& cfg, int i, std::size_t samples,
                                      const Rng& rng, int threads = 1);

EigDistribution build_empirical(const AntennaConfig& cfg, int i, std::size_t samples,
                                const Rng& rng, int threads = 1);

// Versioned CSV cache of empirical tables.
std::filesystem::path cache_file(const std::filesystem::path& dir, int m, int n, int i,
                                 std::size_t samples, std::uint64_t seed);
void save_table(const EmpiricalTable& table, const std::filesystem::path& path);
EmpiricalTable load_table(const std::filesystem::path& path);

// Loads the cached table for the key or builds and stores it.
EigDistribution load_or_build_empirical(const std::filesystem::path& dir, const AntennaConfig& cfg,
                                        int i, std::size_t samples, std::uint64_t seed,
                                        int threads = 1);

}  // namespace fbq
