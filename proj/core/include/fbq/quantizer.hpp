#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fbq/eig_distribution.hpp"
#include "fbq/random_matrix.hpp"

namespace fbq {

enum class DesignMethod { EquiPower, Kkt };

// Bin 0 either transmits with power P0 = k/gamma0 (cutoff strictly inside the bin)
// or stays silent (cutoff at gamma1, budget shared by the served bins only).
enum class Bin0Policy { Auto, Transmit, Silent };

// L-bin channel quantizer with worst-case channel inversion in each bin.
struct Quantizer {
  int bins = 1;
  double rate_constant = 0.0;       // k
  std::vector<double> thresholds;   // gamma_1 < ... < gamma_{L-1}
  std::vector<double> powers;       // P_0 .. P_{L-1}; P_0 = 0 when bin0_silent
  double gamma0 = 0.0;              // outage cutoff
  bool bin0_silent = false;

  // Index of the bin containing lambda.
  int bin_of(double lambda) const;
  double power_for(double lambda) const;
  // Throws DomainError if any structural invariant is broken.
  void validate() const;
};

struct DesignOptions {
  Bin0Policy bin0 = Bin0Policy::Auto;
};

struct DesignReport {
  Quantizer quantizer;
  DesignMethod method = DesignMethod::EquiPower;
  double avg_power_used = 0.0;
  std::vector<double> residuals;  // relative residuals of the defining equations
  double power_residual = 0.0;    // (avg_power_used - p_av) / p_av
  int iterations = 0;

  double residual_max() const;
};

// 2^R - 1.
double siso_rate_constant(double rate_bits);
// M (2^{R/i} - 1): total power constant when the top i modes each carry R/i
// with equal per-antenna power.
double mimo_rate_constant(const AntennaConfig& cfg, int i, double rate_bits);

DesignReport design_equi_power(const EigDistribution& dist, int bins, double p_av, double rate_constant,
                               const DesignOptions& opts = {});
DesignReport design_kkt(const EigDistribution& dist, int bins, double p_av, double rate_constant,
                        const DesignOptions& opts = {});
DesignReport design_quantizer(DesignMethod method, const EigDistribution& dist, int bins, double p_av,
                              double rate_constant, const DesignOptions& opts = {});

double avg_power(const Quantizer& q, const EigDistribution& dist);
// F(gamma0) under the law of the eigenvalue that decides outage.
double outage_analytic(const Quantizer& q, const EigDistribution& outage_dist);
double log_outage_analytic(const Quantizer& q, const EigDistribution& outage_dist);

// (P_j * mass_j - share) / share for every transmitting bin.
std::vector<double> equi_power_residuals(const Quantizer& q, const EigDistribution& dist, double p_av);
// Stationarity rows, each scaled by gamma_j^2 / mass_j.
std::vector<double> kkt_residuals(const Quantizer& q, const EigDistribution& dist);

struct Gamma0Asymptote {
  double exponent = 0.0;  // (1 - r/i) G(m,n,i,L)
  double constant = 0.0;
  double value = 0.0;     // constant / p_av^exponent
};

struct Gamma0Fit {
  double exponent = 0.0;   // theoretical
  double constant = 0.0;   // fitted with the exponent pinned
  double slope = 0.0;      // free regression slope of log gamma0 on log p_av
  double r_squared = 0.0;
  std::size_t points = 0;
};

// Rate schedule used by the asymptotic analysis: r log2(p_av) when r > 0, else
// the fixed rate.
double scheduled_rate(double r, double p_av, double fixed_rate_bits);

Gamma0Asymptote gamma0_asymptotic(const AntennaConfig& cfg, int i, int bins, double r, double p_av,
                                  double constant = 1.0);

Gamma0Fit fit_gamma0_constant(const EigDistribution& dist, const AntennaConfig& cfg, int i, int bins, double r,
                              DesignMethod method, double snr_lo_db = 30.0, double snr_hi_db = 60.0,
                              double fixed_rate_bits = 2.0);

// JSON document for a designed quantizer.
struct QuantizerRecord {
  int m = 1;
  int n = 1;
  int eig_index = 1;
  double rate_bits = 0.0;
  double snr_db = 0.0;
  DesignMethod method = DesignMethod::EquiPower;
  Quantizer quantizer;
  double residual_max = 0.0;
  double avg_power = 0.0;
};

std::string method_name(DesignMethod method);
DesignMethod parse_method(const std::string& name);

// `config` entries are emitted verbatim under a "config" object.
std::string quantizer_to_json(const QuantizerRecord& rec,
                              const std::vector<std::pair<std::string, std::string>>& config = {});
QuantizerRecord quantizer_from_json(const std::string& text);

}  // namespace fbq
