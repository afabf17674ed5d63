#include "fbq/figures.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "fbq/eig_distribution.hpp"
#include "fbq/error.hpp"
#include "fbq/quantizer.hpp"
#include "fbq/schemes.hpp"
#include "fbq/simulation.hpp"

namespace fbq {

namespace {

constexpr double kRate = 2.0;

std::vector<double> grid(double lo, double hi, double step) {
  if (!(step > 0.0)) throw DomainError("SNR step must be positive");
  std::vector<double> g;
  const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
  for (int k = 0; k <= n; ++k) g.push_back(lo + k * step);
  return g;
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

FigureRow quantized_row(const EigDistribution& dist, const AntennaConfig& cfg, DesignMethod method, int bins,
                        double snr, const std::string& curve) {
  const double k = mimo_rate_constant(cfg, 1, kRate);
  const auto rep = design_quantizer(method, dist, bins, db_to_linear(snr), k);
  FigureRow row{snr, curve, bins, 0.0, log_outage_analytic(rep.quantizer, dist)};
  row.outage = std::exp(row.log_outage);
  return row;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::ofstream open_csv(const std::filesystem::path& path, FigureId id, const FigureOptions& opts,
                       const std::string& params) {
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& line : opts.header_lines) out << "# " << line << '\n';
  out << "# " << figure_name(id) << ' ' << params << '\n';
  return out;
}

void write_rows(const std::filesystem::path& path, FigureId id, const FigureOptions& opts,
                const std::string& params, const std::vector<FigureRow>& rows) {
  auto out = open_csv(path, id, opts, params);
  out << "snr_db,curve,L,outage,log_outage\n";
  for (const auto& r : rows) {
    out << fmt(r.snr_db) << ',' << r.curve << ',' << r.bins << ',' << fmt(r.outage) << ',' << fmt(r.log_outage)
        << '\n';
  }
}

void write_curves(const std::filesystem::path& path, FigureId id, const FigureOptions& opts,
                  const std::string& params, const std::vector<TradeoffCurve>& curves) {
  auto out = open_csv(path, id, opts, params);
  bool header = true;
  for (const auto& c : curves) {
    write_curve_csv(out, c, header);
    header = false;
  }
}

std::vector<FigureRow> quantized_curves(const AntennaConfig& cfg, std::initializer_list<int> bins_list, double lo,
                                        double hi, double step) {
  const auto dist = EigDistribution::smallest_analytic(cfg);
  std::vector<FigureRow> rows;
  for (int bins : bins_list) {
    for (auto method : {DesignMethod::Kkt, DesignMethod::EquiPower}) {
      for (double snr : grid(lo, hi, step)) rows.push_back(quantized_row(dist, cfg, method, bins, snr, method_name(method)));
    }
  }
  return rows;
}

}  // namespace

std::string figure_name(FigureId id) {
  switch (id) {
    case FigureId::Fig3: return "fig3";
    case FigureId::Fig4: return "fig4";
    case FigureId::Fig5a: return "fig5a";
    case FigureId::Fig5b: return "fig5b";
    case FigureId::Fig6: return "fig6";
  }
  return "unknown";
}

FigureId parse_figure(const std::string& name) {
  for (auto id : {FigureId::Fig3, FigureId::Fig4, FigureId::Fig5a, FigureId::Fig5b, FigureId::Fig6}) {
    if (figure_name(id) == name) return id;
  }
  throw DomainError("unknown figure '" + name + "' (expected fig3, fig4, fig5a, fig5b or fig6)");
}

std::vector<FigureRow> figure3_rows(double step_db) {
  const AntennaConfig cfg(1, 1);
  const auto dist = EigDistribution::smallest_analytic(cfg);
  std::vector<FigureRow> rows;
  for (double snr : grid(0.0, 20.0, step_db)) {
    const auto cut = temporal_cutoff_fixed_rate(cfg, kRate, db_to_linear(snr));
    FigureRow row{snr, "perfect", 0, 0.0, -INFINITY};
    if (!cut.zero_outage) {
      row.log_outage = dist.log_cdf_at_log(cut.log_gamma0);
      row.outage = std::exp(row.log_outage);
    }
    rows.push_back(row);
  }
  for (auto method : {DesignMethod::Kkt, DesignMethod::EquiPower}) {
    for (double snr : grid(0.0, 20.0, step_db)) rows.push_back(quantized_row(dist, cfg, method, 3, snr, method_name(method)));
  }
  for (double snr : grid(0.0, 20.0, step_db)) rows.push_back(quantized_row(dist, cfg, DesignMethod::Kkt, 1, snr, "l1"));
  return rows;
}

std::vector<FigureRow> figure5a_rows(double step_db) {
  return quantized_curves(AntennaConfig(2, 1), {2, 3, 4}, 0.0, 20.0, step_db);
}

std::vector<SlopeRow> figure5b_slopes(double step_db) {
  const auto rows = quantized_curves(AntennaConfig(2, 1), {3, 4}, 0.0, 60.0, step_db);
  std::vector<SlopeRow> slopes;
  // Central differences inside each curve, one-sided at the ends.
  std::size_t start = 0;
  while (start < rows.size()) {
    std::size_t end = start;
    while (end < rows.size() && rows[end].curve == rows[start].curve && rows[end].bins == rows[start].bins) ++end;
    for (std::size_t k = start; k < end; ++k) {
      const std::size_t a = k == start ? k : k - 1;
      const std::size_t b = k + 1 == end ? k : k + 1;
      if (a == b) continue;
      const double dy = -(rows[b].log_outage - rows[a].log_outage) / std::log(10.0);
      const double dx = (rows[b].snr_db - rows[a].snr_db) / 10.0;
      slopes.push_back(SlopeRow{rows[k].snr_db, rows[k].curve, rows[k].bins, dy / dx});
    }
    start = end;
  }
  return slopes;
}

std::vector<SlopeFit> figure5b_fits(double step_db) {
  const AntennaConfig cfg(2, 1);
  const auto dist = EigDistribution::smallest_analytic(cfg);
  std::vector<SlopeFit> fits;
  for (int bins : {3, 4}) {
    for (auto method : {DesignMethod::Kkt, DesignMethod::EquiPower}) {
      std::vector<OutagePoint> pts;
      for (double snr : grid(50.0, 60.0, step_db)) {
        const auto row = quantized_row(dist, cfg, method, bins, snr, method_name(method));
        OutagePoint p;
        p.snr_db = snr;
        p.outage = row.outage;
        p.log_outage = row.log_outage;
        pts.push_back(p);
      }
      const auto f = fit_diversity(pts, 50.0, 60.0);
      fits.push_back(SlopeFit{method_name(method), bins, 50.0, 60.0, f.d_hat, f.ci});
    }
  }
  return fits;
}

std::vector<TradeoffCurve> figure4_curves(int n, int grid_points) {
  return {tradeoff_curve(CurveScheme::Quantized, 3, n, 2, grid_points),
          tradeoff_curve(CurveScheme::NoCsit, 3, n, 2, grid_points)};
}

std::vector<TradeoffCurve> figure6_curves(int grid_points) {
  return {tradeoff_curve(CurveScheme::NoCsit, 2, 3, 2, grid_points),
          tradeoff_curve(CurveScheme::Joint, 2, 3, 2, grid_points, JointVariant::FigureConsistent),
          tradeoff_curve(CurveScheme::Joint, 2, 3, 2, grid_points, JointVariant::AsPrinted)};
}

std::vector<std::filesystem::path> reproduce_figure(FigureId id, const FigureOptions& opts) {
  std::vector<std::filesystem::path> files;
  const auto path = [&](const std::string& stem) {
    files.push_back(opts.out_dir / (stem + ".csv"));
    return files.back();
  };
  const std::string step = "snr_step_db=" + fmt(opts.snr_step_db);
  switch (id) {
    case FigureId::Fig3:
      write_rows(path("fig3"), id, opts, "M=1,N=1,L=3,rate_bits=2," + step, figure3_rows(opts.snr_step_db));
      break;
    case FigureId::Fig4:
      for (int n : {4, 5}) {
        write_curves(path("fig4_m3_n" + std::to_string(n)), id, opts, "m=3,n=" + std::to_string(n) + ",L=2",
                     figure4_curves(n, opts.grid_points));
      }
      break;
    case FigureId::Fig5a:
      write_rows(path("fig5a"), id, opts, "M=2,N=1,rate_bits=2," + step, figure5a_rows(opts.snr_step_db));
      break;
    case FigureId::Fig5b: {
      auto out = open_csv(path("fig5b"), id, opts, "M=2,N=1,rate_bits=2," + step);
      out << "snr_db,curve,L,slope\n";
      for (const auto& s : figure5b_slopes(opts.snr_step_db)) {
        out << fmt(s.snr_db) << ',' << s.curve << ',' << s.bins << ',' << fmt(s.slope) << '\n';
      }
      auto fit_out = open_csv(path("fig5b_fit"), id, opts, "M=2,N=1,rate_bits=2," + step);
      fit_out << "curve,L,lo_db,hi_db,d_hat,ci\n";
      for (const auto& f : figure5b_fits(opts.snr_step_db)) {
        fit_out << f.curve << ',' << f.bins << ',' << fmt(f.lo_db) << ',' << fmt(f.hi_db) << ',' << fmt(f.d_hat)
                << ',' << fmt(f.ci) << '\n';
      }
      break;
    }
    case FigureId::Fig6:
      write_curves(path("fig6"), id, opts, "m=2,n=3,L=2", figure6_curves(opts.grid_points));
      break;
  }
  return files;
}

}  // namespace fbq
