#include "fbq/random_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <utility>

#include "fbq/error.hpp"

namespace fbq {

AntennaConfig::AntennaConfig(int tx, int rx) : tx_(tx), rx_(rx) {
  if (tx < 1 || rx < 1) throw DomainError("antenna counts must be positive");
}

ChannelMatrix::ChannelMatrix(int rows, int cols)
    : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols) {
  if (rows < 1 || cols < 1) throw DomainError("matrix dimensions must be positive");
}

namespace {

std::mt19937_64 seeded_engine(std::uint64_t seed, const std::vector<std::uint64_t>& path) {
  std::vector<std::uint32_t> words;
  words.reserve(2 * (path.size() + 1) + 1);
  auto push = [&](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed);
  words.push_back(static_cast<std::uint32_t>(path.size()));
  for (auto k : path) push(k);
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path)
    : Rng(seed, std::vector<std::uint64_t>(path)) {}

Rng::Rng(std::uint64_t seed, std::vector<std::uint64_t> path)
    : seed_(seed), path_(std::move(path)), engine_(seeded_engine(seed_, path_)) {}

Rng Rng::substream(std::initializer_list<std::uint64_t> keys) const {
  std::vector<std::uint64_t> p = path_;
  p.insert(p.end(), keys.begin(), keys.end());
  return Rng(seed_, std::move(p));
}

namespace {

void fill_gaussian(ChannelMatrix& h, Rng& rng) {
  const double s = std::sqrt(0.5);
  for (auto& z : h.data()) {
    const double re = rng.normal();
    const double im = rng.normal();
    z = Complex(s * re, s * im);
  }
}

// Gram matrix of the smaller side: H^H H when M <= N, else H H^H.
void gram(const ChannelMatrix& h, std::span<Complex> g) {
  const int rows = h.rows();
  const int cols = h.cols();
  if (cols <= rows) {
    for (int a = 0; a < cols; ++a) {
      for (int b = a; b < cols; ++b) {
        Complex s = 0.0;
        for (int r = 0; r < rows; ++r) s += std::conj(h(r, a)) * h(r, b);
        g[a * cols + b] = s;
        g[b * cols + a] = std::conj(s);
      }
    }
  } else {
    for (int a = 0; a < rows; ++a) {
      for (int b = a; b < rows; ++b) {
        Complex s = 0.0;
        for (int c = 0; c < cols; ++c) s += h(a, c) * std::conj(h(b, c));
        g[a * rows + b] = s;
        g[b * rows + a] = std::conj(s);
      }
    }
  }
}

}  // namespace

ChannelMatrix sample_channel(const AntennaConfig& cfg, Rng& rng) {
  ChannelMatrix h(cfg.rx(), cfg.tx());
  fill_gaussian(h, rng);
  return h;
}

void hermitian_eigenvalues(std::span<Complex> a, int dim, std::span<double> out) {
  auto at = [&](int r, int c) -> Complex& { return a[static_cast<std::size_t>(r) * dim + c]; };
  for (int r = 0; r < dim; ++r) {
    at(r, r) = at(r, r).real();
    for (int c = r + 1; c < dim; ++c) at(c, r) = std::conj(at(r, c));
  }

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    double diag = 0.0;
    for (int r = 0; r < dim; ++r) {
      diag += std::norm(at(r, r));
      for (int c = r + 1; c < dim; ++c) off += std::norm(at(r, c));
    }
    if (off <= 1e-32 * diag || off == 0.0) break;

    for (int p = 0; p < dim - 1; ++p) {
      for (int q = p + 1; q < dim; ++q) {
        const Complex z = at(p, q);
        const double mag = std::abs(z);
        if (mag == 0.0) continue;
        const double app = at(p, p).real();
        const double aqq = at(q, q).real();
        // Phase e^{-i phi} on column q makes the pivot real, then a real rotation.
        const Complex phase = std::conj(z) / mag;
        const double theta = (aqq - app) / (2.0 * mag);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const Complex upp = c;
        const Complex upq = s;
        const Complex uqp = -s * phase;
        const Complex uqq = c * phase;

        for (int r = 0; r < dim; ++r) {
          const Complex arp = at(r, p);
          const Complex arq = at(r, q);
          at(r, p) = arp * upp + arq * uqp;
          at(r, q) = arp * upq + arq * uqq;
        }
        for (int col = 0; col < dim; ++col) {
          const Complex xpc = at(p, col);
          const Complex xqc = at(q, col);
          at(p, col) = std::conj(upp) * xpc + std::conj(uqp) * xqc;
          at(q, col) = std::conj(upq) * xpc + std::conj(uqq) * xqc;
        }
        at(p, q) = 0.0;
        at(q, p) = 0.0;
        at(p, p) = at(p, p).real();
        at(q, q) = at(q, q).real();
      }
    }
  }

  for (int r = 0; r < dim; ++r) out[r] = at(r, r).real();
  std::sort(out.begin(), out.begin() + dim, std::greater<>());
}

EigSample eig_hh(const ChannelMatrix& h) {
  for (const auto& z : h.data()) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw Error("invalid channel sample");
  }
  const int m = std::min(h.rows(), h.cols());
  std::vector<Complex> g(static_cast<std::size_t>(m) * m);
  gram(h, g);
  EigSample out;
  out.lambdas.resize(m);
  hermitian_eigenvalues(g, m, out.lambdas);
  // HH^H is positive semidefinite; drop rounding below zero.
  for (double& l : out.lambdas) l = std::max(0.0, l);
  return out;
}

EigenSampler::EigenSampler(const AntennaConfig& cfg)
    : cfg_(cfg), h_(cfg.rx(), cfg.tx()), gram_(static_cast<std::size_t>(cfg.m()) * cfg.m()) {}

void EigenSampler::draw(Rng& rng, std::span<double> out) {
  fill_gaussian(h_, rng);
  const int m = cfg_.m();
  if (m == 1) {
    double s = 0.0;
    for (const auto& z : h_.data()) s += std::norm(z);
    out[0] = s;
    return;
  }
  gram(h_, gram_);
  hermitian_eigenvalues(gram_, m, out);
  for (int k = 0; k < m; ++k) out[k] = std::max(0.0, out[k]);
}

namespace {

// Generalized Gauss-Laguerre rule for weight x^alpha e^{-x}.
void gauss_laguerre(int count, double alpha, std::vector<double>& x, std::vector<double>& w) {
  x.assign(count, 0.0);
  w.assign(count, 0.0);
  double z = 0.0;
  for (int i = 0; i < count; ++i) {
    if (i == 0) {
      z = (1.0 + alpha) * (3.0 + 0.92 * alpha) / (1.0 + 2.4 * count + 1.8 * alpha);
    } else if (i == 1) {
      z += (15.0 + 6.25 * alpha) / (1.0 + 0.9 * alpha + 2.5 * count);
    } else {
      const double ai = i - 1;
      z += ((1.0 + 2.55 * ai) / (1.9 * ai) + 1.26 * ai * alpha / (1.0 + 3.5 * ai)) *
           (z - x[i - 2]) / (1.0 + 0.3 * alpha);
    }
    double p1 = 0.0, p2 = 0.0, pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      p1 = 1.0;
      p2 = 0.0;
      for (int j = 1; j <= count; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0 + alpha - z) * p2 - (j - 1.0 + alpha) * p3) / j;
      }
      pp = (count * p1 - (count + alpha) * p2) / z;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::abs(z)) break;
    }
    x[i] = z;
    w[i] = -std::exp(std::lgamma(alpha + count) - std::lgamma(static_cast<double>(count))) /
           (pp * count * p2);
  }
}

double compute_normalizer(int m, int n) {
  // The Vandermonde factor has degree 2(m-1) per variable, so m+1 nodes are exact.
  const int q = m + 1;
  std::vector<double> x, w;
  gauss_laguerre(q, n - m, x, w);
  std::vector<int> idx(m, 0);
  double total = 0.0;
  while (true) {
    double term = 1.0;
    for (int a = 0; a < m; ++a) term *= w[idx[a]];
    for (int a = 0; a < m; ++a) {
      for (int b = a + 1; b < m; ++b) {
        const double d = x[idx[a]] - x[idx[b]];
        term *= d * d;
      }
    }
    total += term;
    int pos = 0;
    while (pos < m && ++idx[pos] == q) idx[pos++] = 0;
    if (pos == m) break;
  }
  // Symmetric integrand: the ordered region holds 1/m! of the mass.
  return total / std::tgamma(m + 1.0);
}

}  // namespace

double joint_eig_normalizer(const AntennaConfig& cfg) {
  if (cfg.m() > 6) throw DomainError("joint density normalization supports m <= 6");
  static std::mutex mu;
  static std::map<std::pair<int, int>, double> cache;
  std::lock_guard lock(mu);
  const auto key = std::make_pair(cfg.m(), cfg.n());
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, compute_normalizer(cfg.m(), cfg.n())).first;
  return it->second;
}

double joint_eig_density(std::span<const double> lambdas, const AntennaConfig& cfg,
                         bool normalized) {
  const int m = cfg.m();
  const int n = cfg.n();
  if (static_cast<int>(lambdas.size()) != m) throw DomainError("expected m eigenvalues");
  for (int a = 0; a < m; ++a) {
    if (lambdas[a] < 0.0) return 0.0;
    if (a > 0 && lambdas[a] > lambdas[a - 1]) return 0.0;
  }
  double log_v = 0.0;
  double sign_zero = 1.0;
  for (int a = 0; a < m; ++a) {
    log_v -= lambdas[a];
    if (n > m) {
      if (lambdas[a] == 0.0) return 0.0;
      log_v += (n - m) * std::log(lambdas[a]);
    }
    for (int b = a + 1; b < m; ++b) {
      const double d = lambdas[a] - lambdas[b];
      if (d == 0.0) sign_zero = 0.0;
      else log_v += 2.0 * std::log(d);
    }
  }
  if (sign_zero == 0.0) return 0.0;
  double v = std::exp(log_v);
  if (normalized) v /= joint_eig_normalizer(cfg);
  return v;
}

}  // namespace fbq
