#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gcl/geometry.hpp"

namespace gcl {

enum class Provenance { admissible, ad_hoc };

/// Relatively open set omega: a union of open cells plus its trace arcs on dM.
struct ControlRegion {
  CellMask cells;
  SegmentMask segments;
  double epsilon = 0.0;
  double epsilon0 = 0.0;
  Provenance provenance = Provenance::ad_hoc;
  std::string name;

  /// Builds the region from a cell mask; the boundary arcs are the mask's trace on dM.
  static ControlRegion from_cells(const Grid& grid, CellMask cells, std::string name = "ad-hoc");
  static ControlRegion empty(const Grid& grid);
  static ControlRegion whole(const Grid& grid);
  std::size_t cell_count() const;
};

MeasurePair measure(const ControlRegion& region, const Grid& grid);

struct ControllabilityResult {
  bool controllable = false;
  MeasurePair measures;
};

/// True iff interior + boundary measure < epsilon.
ControllabilityResult check_epsilon_controllable(const ControlRegion& region, double epsilon, const Grid& grid);

struct Rect {
  Vec2 lo = Vec2::Zero();
  Vec2 hi = Vec2::Zero();
  bool contains(const Vec2& x, double tol = 0.0) const {
    return x.x() >= lo.x() - tol && x.x() <= hi.x() + tol && x.y() >= lo.y() - tol && x.y() <= hi.y() + tol;
  }
  double area() const { return (hi - lo).prod(); }
  Vec2 center() const { return 0.5 * (lo + hi); }
};

enum class ChartType { interior, boundary };

/// One chart of the escape potential. Interior: d = |x - p|^2 / 2 + m.
/// Boundary: d = <e1, x - q> + |x - q|^2 / 2 + m with e1 pointing into M.
struct Chart {
  ChartType type = ChartType::interior;
  Vec2 origin = Vec2::Zero();
  Vec2 axis = Vec2::Zero();
  double m = 1.0;
  Rect W, U, V;
  /// Sides of W (left, right, bottom, top) facing another chart; only these carry a cutoff.
  std::array<bool, 4> internal{false, false, false, false};
  double tau = 0.0;  ///< shrink of U inside W; cutoff runs from tau/8 to 7tau/8
};

struct EscapeSample {
  double value = 0.0;
  Vec2 grad = Vec2::Zero();
  Mat2 hess = Mat2::Zero();
};

/// Escape potential d = sum_j rho_j d_j with analytic derivatives.
class EscapePotential {
 public:
  EscapePotential() = default;
  EscapePotential(std::vector<Chart> charts, SpeedField speed);
  static EscapePotential interior_chart(const Vec2& p, double m = 1.0, SpeedField speed = SpeedField::constant());
  static EscapePotential boundary_chart(const Vec2& q, const Vec2& inward_axis, double m = 1.0,
                                        SpeedField speed = SpeedField::constant());
  /// Arbitrary analytic field (used for negative controls).
  static EscapePotential custom(std::function<EscapeSample(const Vec2&)> fn, SpeedField speed = SpeedField::constant());

  const std::vector<Chart>& charts() const { return charts_; }
  const SpeedField& speed() const { return speed_; }

  /// Euclidean value, gradient and Hessian; no domain check.
  EscapeSample evaluate(const Vec2& x) const;
  /// Cutoff rho_j and its derivatives at x.
  EscapeSample cutoff(std::size_t j, const Vec2& x) const;

 private:
  std::vector<Chart> charts_;
  SpeedField speed_ = SpeedField::constant();
  std::function<EscapeSample(const Vec2&)> custom_;
};

EscapeSample chart_value(const Chart& chart, const Vec2& x);

/// Value, gradient and Hessian at x in M. Throws ValidationError outside M.
EscapeSample eval_escape(const EscapePotential& d, const Vec2& x, const Domain& domain);

/// |grad d|_g = c |grad d| for the conformal metric c^-2 dx^2.
double metric_gradient_norm(const EscapePotential& d, const Vec2& x, const EscapeSample& s);
/// Smallest eigenvalue of c^2 Hess_g d; Hess_g d(X,X) >= |X|_g^2 iff this is >= 1.
double metric_hessian_min_eig(const EscapePotential& d, const Vec2& x, const EscapeSample& s);

struct ConditionResult {
  bool pass = true;
  double worst = 0.0;
  Vec2 worst_point = Vec2::Zero();
  std::size_t samples = 0;
};

struct EscapeReport {
  ConditionResult d1, d2, d3, d4;
  double min_value = 0.0;  ///< min d over the samples (part of d3)
  bool pass() const { return d1.pass && d2.pass && d3.pass && d4.pass; }
};

/// Samples cell centers and corners of the V mask and the boundary points of segments adjacent
/// to V. d2: min metric Hessian eigenvalue >= 1 - tol; d3: min |grad d|_g > tol and min d > 0;
/// d4: max <grad d, nu>_g < -tol on dM; d1 is analytic by construction but checked for finiteness.
EscapeReport verify_escape_conditions(const EscapePotential& d, const CellMask& v_mask, const Grid& grid,
                                      double tol);

struct AdmissibleRegion {
  CellMask V;
  ControlRegion omega;
  EscapePotential d;
  int kx = 0;
  int ky = 0;
  double tau = 0.0;
  std::vector<double> seams_x;
  std::vector<double> seams_y;
  MeasurePair closure_complement;  ///< closure(M \ V), continuum strips
  MeasurePair omega_cap_v;         ///< omega minus closure(M \ V)
  std::vector<MeasurePair> shells; ///< W_j \ U_j per chart
};

/// Splits a rectangle into kx * ky chart patches (kx, ky >= 2) separated by seams at cell
/// centers, shrinks each patch by the largest dyadic fraction of h meeting every budget, and
/// returns omega = the seam cells. Throws ValidationError when infeasible, naming the smallest
/// epsilon this resolution supports.
AdmissibleRegion build_admissible_region(const Grid& grid, double epsilon, double epsilon0, int k);

struct OverlapDecomposition {
  std::vector<CellMask> omega;       ///< Omega_j
  std::vector<EscapePotential> d;    ///< d_j, chart formula on the enlarged patch
  std::vector<Rect> V;               ///< V_j
  std::vector<std::pair<int, int>> edges;
  std::vector<EscapeReport> reports;
  bool covers = false;
  bool meets_omega = false;
  bool v_inside = false;
  bool pass() const;
};

/// Omega_j = W_j dilated by one cell. Throws ValidationError if some Omega_j overlaps nothing.
OverlapDecomposition build_overlap_decomposition(const Grid& grid, const AdmissibleRegion& region,
                                                 double tol = 1e-6);

/// Frame of the given width along all of dM (omega_1).
ControlRegion preset_frame(const Grid& grid, double width = 0.05);
/// Cross of two strips |x - cx| < w/2, |y - cy| < w/2 through the domain center (omega_2).
ControlRegion preset_cross(const Grid& grid, double width = 0.05);
/// Vertical strip x <= width along the left edge (omega_3).
ControlRegion preset_strip(const Grid& grid, double width = 0.1);
/// Square patch of the given side in the lower-left corner.
ControlRegion preset_corner_patch(const Grid& grid, double side = 0.1);
/// Named preset: "omega1", "omega2", "omega3".
ControlRegion preset(const Grid& grid, const std::string& name);

}  // namespace gcl
