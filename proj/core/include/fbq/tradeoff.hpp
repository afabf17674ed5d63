#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fbq {

// Diversity order with an explicit infinity sentinel and an optional status
// for cases the analysis leaves open.
struct Diversity {
  double value = 0.0;
  bool infinite = false;
  std::string status;  // empty, or "unresolved-conjecture"

  static Diversity finite(double v) { return Diversity{v, false, {}}; }
  static Diversity inf() { return Diversity{0.0, true, {}}; }
  // "inf", "unresolved" or the number.
  std::string to_string() const;
};

// Piecewise-linear interpolation of (k, (m-k)(n-k)).
double d_no_csit(int m, int n, double r);
double d_beamforming(int m, int n, double r);

struct QuantizedDiversity {
  double envelope = 0.0;
  std::vector<std::optional<double>> branches;  // index i-1; empty for i < j
  int argmax_i = 1;
};

// max over i in {j..m} of (1 - r/i)(n-j+1)(m-j+1) G(m,n,i,L), j = max(1, ceil(r)).
QuantizedDiversity d_quantized(int m, int n, int bins, double r);
// Same with an explicit j (used for right limits at integer r).
QuantizedDiversity d_quantized_at_j(int m, int n, int bins, double r, int j);

Diversity d_perfect(int m, int n, double r);
Diversity d_temporal_perfect(int m, int n, double r);

enum class JointVariant { AsPrinted, FigureConsistent };

double d_joint(int m, int n, int bins, double r, JointVariant variant);
double d_joint_at_i(int m, int n, int bins, double r, int i, JointVariant variant);

enum class CurveScheme { NoCsit, Beamforming, Quantized, Perfect, TemporalPerfect, Joint };

struct CurvePoint {
  double r = 0.0;
  Diversity d;
  int branch_i = 0;
  std::string scheme;
};

struct TradeoffCurve {
  std::string scheme_label;
  std::vector<CurvePoint> points;
};

CurveScheme parse_curve_scheme(const std::string& name);
std::string joint_variant_name(JointVariant v);
JointVariant parse_joint_variant(const std::string& name);

// Samples the curve on `grid_points` uniform r values plus every integer r. At a
// jump the closed value comes first and the right limit second, at the same r.
TradeoffCurve tradeoff_curve(CurveScheme scheme, int m, int n, int bins, int grid_points,
                             JointVariant variant = JointVariant::FigureConsistent);

void write_curve_csv(std::ostream& out, const TradeoffCurve& curve, bool header = true);

}  // namespace fbq
