#include "fbq/tradeoff.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>

#include "fbq/error.hpp"
#include "fbq/schemes.hpp"

namespace fbq {

namespace {

void check_args(int m, int n, double r) {
  if (m < 1 || n < m) throw DomainError("tradeoff requires 1 <= m <= n");
  if (!(r >= 0.0) || r > m + 1e-12) throw DomainError("multiplexing gain must lie in [0, m]");
}

int ceil_index(double r) { return std::max(1, static_cast<int>(std::ceil(r - 1e-12))); }

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::string Diversity::to_string() const {
  if (!status.empty()) return "unresolved";
  if (infinite) return "inf";
  return format_number(value);
}

double d_no_csit(int m, int n, double r) {
  check_args(m, n, r);
  const int k = std::min(static_cast<int>(std::floor(r)), m - 1);
  const double frac = r - k;
  const double lo = static_cast<double>(m - k) * (n - k);
  const double hi = static_cast<double>(m - k - 1) * (n - k - 1);
  return lo + (hi - lo) * frac;
}

double d_beamforming(int m, int n, double r) { return d_no_csit(m, n, r); }

QuantizedDiversity d_quantized_at_j(int m, int n, int bins, double r, int j) {
  check_args(m, n, r);
  if (bins < 1) throw DomainError("quantizer needs at least one bin");
  if (j < 1 || j > m) throw DomainError("branch start index out of range");
  QuantizedDiversity q;
  q.branches.assign(m, std::nullopt);
  const double lead = static_cast<double>(n - j + 1) * (m - j + 1);
  bool first = true;
  for (int i = j; i <= m; ++i) {
    const double v = std::max(0.0, 1.0 - r / i) * lead * g_function(m, n, i, bins).as_double();
    q.branches[i - 1] = v;
    if (first || v > q.envelope) {
      q.envelope = v;
      q.argmax_i = i;
      first = false;
    }
  }
  return q;
}

QuantizedDiversity d_quantized(int m, int n, int bins, double r) {
  check_args(m, n, r);
  return d_quantized_at_j(m, n, bins, r, std::min(ceil_index(r), m));
}

Diversity d_perfect(int m, int n, double r) {
  check_args(m, n, r);
  if (r < m) return Diversity::inf();
  if (n > 2 * m) return Diversity::inf();
  Diversity d;
  d.status = "unresolved-conjecture";
  return d;
}

Diversity d_temporal_perfect(int m, int n, double r) {
  check_args(m, n, r);
  if (r < m) return Diversity::inf();
  if (n >= 2 * m) return Diversity::inf();
  return Diversity::finite(0.0);
}

double d_joint_at_i(int m, int n, int bins, double r, int i, JointVariant variant) {
  check_args(m, n, r);
  if (bins < 2) throw DomainError("joint scheme needs at least 2 bins");
  if (i < 1 || i > m) throw DomainError("eigenvalue index out of range");
  const double lead = static_cast<double>(n - i + 1) * (m - i + 1) * g_function(m, n, i, bins - 1).as_double();
  if (variant == JointVariant::AsPrinted) return std::max(0.0, 1.0 - r / i) * lead;
  if (r == 0.0) return d_quantized(m, n, bins, 0.0).envelope;
  return lead;
}

double d_joint(int m, int n, int bins, double r, JointVariant variant) {
  check_args(m, n, r);
  return d_joint_at_i(m, n, bins, r, std::min(ceil_index(r), m), variant);
}

CurveScheme parse_curve_scheme(const std::string& name) {
  if (name == "no-csit") return CurveScheme::NoCsit;
  if (name == "beamforming") return CurveScheme::Beamforming;
  if (name == "quantized") return CurveScheme::Quantized;
  if (name == "perfect" || name == "optimal-perfect") return CurveScheme::Perfect;
  if (name == "temporal-perfect") return CurveScheme::TemporalPerfect;
  if (name == "joint") return CurveScheme::Joint;
  throw DomainError("unknown tradeoff scheme '" + name + "'");
}

std::string joint_variant_name(JointVariant v) { return v == JointVariant::AsPrinted ? "printed" : "figure"; }

JointVariant parse_joint_variant(const std::string& name) {
  if (name == "printed") return JointVariant::AsPrinted;
  if (name == "figure") return JointVariant::FigureConsistent;
  throw DomainError("unknown joint variant '" + name + "' (expected printed or figure)");
}

TradeoffCurve tradeoff_curve(CurveScheme scheme, int m, int n, int bins, int grid_points, JointVariant variant) {
  check_args(m, n, 0.0);
  if (grid_points < 2) throw DomainError("need at least 2 grid points");
  std::set<double> grid;
  for (int k = 0; k < grid_points; ++k) grid.insert(static_cast<double>(m) * k / (grid_points - 1));
  for (int k = 0; k <= m; ++k) grid.insert(static_cast<double>(k));

  TradeoffCurve curve;
  auto push = [&](double r, Diversity d, int branch, const std::string& label) {
    curve.points.push_back(CurvePoint{r, std::move(d), branch, label});
  };
  const auto is_jump = [&](double r) { return r > 0.0 && r < m && r == std::floor(r); };

  switch (scheme) {
    case CurveScheme::NoCsit:
    case CurveScheme::Beamforming: {
      curve.scheme_label = scheme == CurveScheme::NoCsit ? "no-csit" : "beamforming";
      for (double r : grid) push(r, Diversity::finite(d_no_csit(m, n, r)), 0, curve.scheme_label);
      break;
    }
    case CurveScheme::Perfect:
    case CurveScheme::TemporalPerfect: {
      curve.scheme_label = scheme == CurveScheme::Perfect ? "perfect" : "temporal-perfect";
      for (double r : grid) {
        push(r, scheme == CurveScheme::Perfect ? d_perfect(m, n, r) : d_temporal_perfect(m, n, r), 0,
             curve.scheme_label);
      }
      break;
    }
    case CurveScheme::Quantized: {
      curve.scheme_label = "quantized";
      auto emit = [&](double r, const QuantizedDiversity& q) {
        push(r, Diversity::finite(q.envelope), q.argmax_i, "quantized");
        for (int i = 1; i <= m; ++i) {
          if (q.branches[i - 1]) push(r, Diversity::finite(*q.branches[i - 1]), i, "quantized-branch");
        }
      };
      for (double r : grid) {
        emit(r, d_quantized(m, n, bins, r));
        if (is_jump(r)) emit(r, d_quantized_at_j(m, n, bins, r, static_cast<int>(r) + 1));
      }
      break;
    }
    case CurveScheme::Joint: {
      curve.scheme_label = "joint-" + joint_variant_name(variant);
      for (double r : grid) {
        const int i = std::min(ceil_index(r), m);
        push(r, Diversity::finite(d_joint(m, n, bins, r, variant)), i, curve.scheme_label);
        if (is_jump(r) || (r == 0.0 && variant == JointVariant::FigureConsistent)) {
          const int next = r == 0.0 ? 1 : static_cast<int>(r) + 1;
          push(r, Diversity::finite(d_joint_at_i(m, n, bins, r == 0.0 ? 1e-300 : r, next, variant)), next,
               curve.scheme_label);
        }
      }
      break;
    }
  }
  return curve;
}

void write_curve_csv(std::ostream& out, const TradeoffCurve& curve, bool header) {
  if (header) out << "r,d,branch_i,scheme\n";
  for (const auto& p : curve.points) {
    out << format_number(p.r) << ',' << p.d.to_string() << ',' << p.branch_i << ',' << p.scheme << '\n';
  }
}

}  // namespace fbq
