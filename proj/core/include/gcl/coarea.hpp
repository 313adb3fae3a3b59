#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "gcl/region.hpp"

namespace gcl {

using ScalarFn = std::function<double(const Vec2&)>;

struct ScalarField {
  ScalarFn value;
  std::function<Vec2(const Vec2&)> gradient;
};

struct CoareaResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double relative_error = 0.0;
  int levels = 0;
  double t_min = 0.0;
  double t_max = 0.0;
};

using Segment2 = std::pair<Vec2, Vec2>;

/// Marching-squares contour of the nodal field at level t over the domain's inside cells.
/// Saddle cells are resolved by the cell-average value.
std::vector<Segment2> contour_segments(const std::vector<double>& nodal, const Grid& grid, double t);

/// lhs = midpoint quadrature of |grad phi| f over inside cells; rhs = sum over `levels`
/// midpoint levels in [min phi, max phi] of dt times the contour line integral of f
/// (f at segment midpoints). Throws ValidationError if f < 0 at a sample.
CoareaResult coarea_check(const ScalarField& phi, const ScalarFn& f, const Grid& grid, int levels);

/// Nonnegative density sampled per inside cell (cell average) and per boundary segment (trace).
struct CellTraceField {
  std::vector<double> cell;
  std::vector<double> segment;
};

/// How the boundary trace relates to the cell values, which fixes the prism constant C_g.
enum class TraceModel {
  /// Trace equals the adjacent cell values (f continuous up to dM): C_g = (c_max/c_min)/h_p.
  cell_value,
  /// Trace is (d_nu w)^2 from the one-sided stencil (4 w1 - w2)/(2h) and cells carry the
  /// c^2-weighted gradient energy density: C_g = 2.5 / (h kappa_min), needs two cell layers.
  normal_derivative,
};

struct PrismArc {
  std::vector<std::size_t> segments;
  double length = 0.0;
  int height_cells = 0;
  double height = 0.0;
  std::vector<std::size_t> cells;
  double C_g = 0.0;
  double boundary_integral = 0.0;
  double prism_integral = 0.0;
  bool chain_holds = false;
};

struct PrismResult {
  double boundary_integral = 0.0;
  double interior_integral = 0.0;
  double C_hat = 0.0;
  double C_g_max = 0.0;
  std::vector<PrismArc> arcs;
  bool chain_holds = true;
};

/// Builds one prism per connected straight arc of gamma1 inside omega and checks
/// int_arc f <= C_g int_prism f <= C_g int_omega f. C_hat = int_gamma1 f / int_omega f.
/// Throws ValidationError if gamma1 is not inside omega's trace or int_omega f = 0.
PrismResult prism_bound_check(const SegmentMask& gamma1, const ControlRegion& omega, const CellTraceField& f,
                              const Grid& grid, TraceModel model = TraceModel::cell_value);

/// f = 1 on cells and trace.
CellTraceField constant_density(const Grid& grid, double value = 1.0);

/// Cell values E_c / h^2 (c^2-weighted |grad w|^2) and trace (d_nu w)^2 per segment for a nodal
/// field vanishing on dM (rectangles).
CellTraceField gradient_density(const std::vector<double>& w, const Grid& grid);

/// Outward normal derivative per boundary segment: average of the nodal one-sided values.
std::vector<double> normal_derivative(const std::vector<double>& w, const Grid& grid);

}  // namespace gcl
