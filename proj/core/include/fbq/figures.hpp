#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fbq/tradeoff.hpp"

namespace fbq {

enum class FigureId { Fig3, Fig4, Fig5a, Fig5b, Fig6 };

std::string figure_name(FigureId id);
FigureId parse_figure(const std::string& name);

// One point of an outage-vs-SNR curve.
struct FigureRow {
  double snr_db = 0.0;
  std::string curve;  // e.g. "kkt", "equi", "perfect", "l1"
  int bins = 0;
  double outage = 0.0;
  double log_outage = 0.0;
};

struct SlopeRow {
  double snr_db = 0.0;
  std::string curve;
  int bins = 0;
  double slope = 0.0;  // local d(-log10 outage)/d(log10 P_av)
};

struct SlopeFit {
  std::string curve;
  int bins = 0;
  double lo_db = 0.0;
  double hi_db = 0.0;
  double d_hat = 0.0;
  double ci = 0.0;
};

struct FigureOptions {
  std::filesystem::path out_dir = ".";
  int grid_points = 61;      // tradeoff figures
  double snr_step_db = 1.0;  // outage figures
  std::vector<std::string> header_lines;  // written as "# <line>" before the figure metadata
};

// SISO, L = 3, R = 2 over 0-20 dB: perfect CSIT, KKT, equi-power and L = 1.
std::vector<FigureRow> figure3_rows(double step_db = 1.0);
// 2x1, R = 2, L in {2,3,4}, KKT and equi-power over 0-20 dB.
std::vector<FigureRow> figure5a_rows(double step_db = 1.0);
// Local slopes for L in {3,4} over 0-60 dB and fits over the top decade.
std::vector<SlopeRow> figure5b_slopes(double step_db = 1.0);
std::vector<SlopeFit> figure5b_fits(double step_db = 1.0);
// Quantized (branches and envelope) and no-CSIT curves for (3,n), L = 2.
std::vector<TradeoffCurve> figure4_curves(int n, int grid_points = 61);
// No-CSIT and both joint variants for (2,3), L = 2.
std::vector<TradeoffCurve> figure6_curves(int grid_points = 61);

// Writes the CSV files behind a figure and returns their paths.
std::vector<std::filesystem::path> reproduce_figure(FigureId id, const FigureOptions& opts = {});

}  // namespace fbq
