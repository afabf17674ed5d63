#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace fbq {

using Complex = std::complex<double>;

// Antenna counts of the link. m = min(M,N), n = max(M,N).
class AntennaConfig {
 public:
  AntennaConfig(int tx, int rx);

  int tx() const { return tx_; }
  int rx() const { return rx_; }
  int m() const { return tx_ < rx_ ? tx_ : rx_; }
  int n() const { return tx_ < rx_ ? rx_ : tx_; }

  friend bool operator==(const AntennaConfig&, const AntennaConfig&) = default;

 private:
  int tx_;
  int rx_;
};

// Dense N x M complex matrix, row-major.
class ChannelMatrix {
 public:
  ChannelMatrix(int rows, int cols);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  Complex& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  Complex operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  std::span<Complex> data() { return data_; }
  std::span<const Complex> data() const { return data_; }

 private:
  int rows_;
  int cols_;
  std::vector<Complex> data_;
};

// Eigenvalues of HH^H, largest first.
struct EigSample {
  std::vector<double> lambdas;
};

// Seeded pseudo-random stream that can be split into independent substreams.
// A substream is identified by its path of integer keys from the root seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path = {});

  Rng substream(std::initializer_list<std::uint64_t> keys) const;

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  std::mt19937_64& engine() { return engine_; }
  std::uint64_t seed() const { return seed_; }

 private:
  Rng(std::uint64_t seed, std::vector<std::uint64_t> path);

  std::uint64_t seed_;
  std::vector<std::uint64_t> path_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

ChannelMatrix sample_channel(const AntennaConfig& cfg, Rng& rng);

// Throws Error("invalid channel sample") on non-finite entries.
EigSample eig_hh(const ChannelMatrix& h);

// Eigenvalues of a Hermitian matrix (row-major, dim x dim), descending.
// Only the upper triangle is trusted; the input is overwritten.
void hermitian_eigenvalues(std::span<Complex> a, int dim, std::span<double> out);

// Reusable sampler that draws eigenvalues without per-draw allocation.
class EigenSampler {
 public:
  explicit EigenSampler(const AntennaConfig& cfg);

  // Fills out[0..m) with the eigenvalues of a fresh HH^H, descending.
  void draw(Rng& rng, std::span<double> out);
  const AntennaConfig& config() const { return cfg_; }

 private:
  AntennaConfig cfg_;
  ChannelMatrix h_;
  std::vector<Complex> gram_;
};

// exp(-sum l) * prod l^(n-m) * prod_{i<j} (l_i - l_j)^2 over the ordered region,
// optionally scaled to integrate to one (m <= 6). Zero when not descending.
double joint_eig_density(std::span<const double> lambdas, const AntennaConfig& cfg,
                         bool normalized);

// Integral of the unnormalized density over the ordered region.
double joint_eig_normalizer(const AntennaConfig& cfg);

}  // namespace fbq
