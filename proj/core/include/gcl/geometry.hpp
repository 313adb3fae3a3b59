#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gcl/types.hpp"

namespace gcl {

/// Scalar wave-speed field c(x). The metric is the conformal g = c^-2 * Euclidean.
struct SpeedField {
  std::function<double(const Vec2&)> value;
  std::function<Vec2(const Vec2&)> gradient;
  double c_min = 1.0;
  double c_max = 1.0;
  bool uniform = true;

  static SpeedField constant(double c = 1.0);
  /// c(x) = c0 + slope . (x - origin); bounds are taken over the supplied box corners.
  static SpeedField affine(double c0, const Vec2& slope, const Vec2& origin, const Vec2& box_lo,
                           const Vec2& box_hi);

  double operator()(const Vec2& x) const { return uniform ? c_min : value(x); }
  Vec2 grad(const Vec2& x) const { return uniform ? Vec2::Zero() : gradient(x); }
};

/// Compact planar domain: axis-aligned rectangle anchored at the origin, or a simple
/// counterclockwise polygon.
class Domain {
 public:
  static Domain rectangle(double width, double height, SpeedField speed = SpeedField::constant());
  static Domain unit_square() { return rectangle(1.0, 1.0); }
  /// Throws ValidationError for self-intersecting or clockwise input.
  static Domain polygon(std::vector<Vec2> vertices, SpeedField speed = SpeedField::constant());

  bool is_rectangle() const { return rectangle_; }
  const std::vector<Vec2>& vertices() const { return vertices_; }
  const SpeedField& speed() const { return speed_; }

  Vec2 lower() const { return lo_; }
  Vec2 upper() const { return hi_; }
  double width() const { return hi_.x() - lo_.x(); }
  double height() const { return hi_.y() - lo_.y(); }
  double area() const;
  double perimeter() const;
  double diameter() const;
  /// Outward unit normal of polygon edge `e` (from vertex e to vertex e+1).
  Vec2 edge_normal(std::size_t e) const;

  /// Closed-set membership with absolute tolerance.
  bool contains(const Vec2& x, double tol = 1e-12) const;
  /// Distance from x to the boundary polygon.
  double boundary_distance(const Vec2& x) const;

 private:
  Domain() = default;
  std::vector<Vec2> vertices_;
  SpeedField speed_;
  Vec2 lo_ = Vec2::Zero();
  Vec2 hi_ = Vec2::Zero();
  bool rectangle_ = false;
};

struct BoundarySegment {
  Vec2 a;
  Vec2 b;
  double length = 0.0;
  Vec2 normal;            ///< outward unit normal
  std::size_t edge = 0;   ///< polygon edge the segment lies on
  int cell = -1;          ///< adjacent inside cell, -1 if none
  Vec2 midpoint() const { return 0.5 * (a + b); }
};

/// Uniform square-cell grid over the domain's bounding box. Cells carry masks; the wave
/// field lives on the (nx+1) x (ny+1) cell-corner nodes.
class Grid {
 public:
  Grid(Domain domain, int resolution);

  const Domain& domain() const { return domain_; }
  int resolution() const { return resolution_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double h() const { return h_; }
  std::size_t cell_count() const { return static_cast<std::size_t>(nx_) * ny_; }
  std::size_t node_count() const { return static_cast<std::size_t>(nx_ + 1) * (ny_ + 1); }

  std::size_t cell(int i, int j) const { return static_cast<std::size_t>(j) * nx_ + i; }
  int cell_i(std::size_t c) const { return static_cast<int>(c % nx_); }
  int cell_j(std::size_t c) const { return static_cast<int>(c / nx_); }
  Vec2 cell_center(std::size_t c) const;
  bool cell_inside(std::size_t c) const { return inside_[c] != 0; }
  std::size_t inside_cell_count() const;
  /// Cell containing x (closed on the lower faces), or -1 outside the bounding box.
  long locate_cell(const Vec2& x) const;

  std::size_t node(int i, int j) const { return static_cast<std::size_t>(j) * (nx_ + 1) + i; }
  Vec2 node_position(std::size_t n) const;
  /// True for nodes strictly inside the domain (unknowns of the Dirichlet problem).
  bool node_free(std::size_t n) const { return free_[n] != 0; }
  std::size_t free_node_count() const;

  const std::vector<BoundarySegment>& boundary_segments() const { return segments_; }

 private:
  Domain domain_;
  int resolution_;
  int nx_ = 0;
  int ny_ = 0;
  double h_ = 0.0;
  std::vector<std::uint8_t> inside_;
  std::vector<std::uint8_t> free_;
  std::vector<BoundarySegment> segments_;
};

/// Resolution = cells per unit length (>= 8). Rectangle sides must be whole multiples of h.
Grid build_grid(const Domain& domain, int resolution);

/// Per-cell boolean mask.
using CellMask = std::vector<std::uint8_t>;
/// Per-boundary-segment boolean mask.
using SegmentMask = std::vector<std::uint8_t>;

struct MeasurePair {
  double interior = 0.0;  ///< area
  double boundary = 0.0;  ///< length
  double sum() const { return interior + boundary; }
};

/// interior = masked cells * h^2, boundary = summed masked segment lengths.
MeasurePair measure(const CellMask& cells, const SegmentMask& segments, const Grid& grid);

/// Segments whose adjacent cell lies in the mask: the trace of a relatively open cell union on dM.
SegmentMask boundary_trace(const CellMask& cells, const Grid& grid);

/// Outward unit normal at a boundary point. Corners get the normalized sum of the two
/// adjacent edge normals. Throws ValidationError when the point is farther than h/100 from dM.
Vec2 boundary_normal(const Grid& grid, const Vec2& point);

/// Nodal stiffness stencil of -div(c^2 grad) with face-averaged c^2. Edge weights are stored
/// for east (i,j)-(i+1,j) and north (i,j)-(i,j+1) edges; weights touching non-free nodes are
/// kept so Dirichlet neighbours still contribute to the diagonal.
struct Stencil {
  int nx = 0;
  int ny = 0;
  double h = 0.0;
  std::vector<double> east;    ///< size node_count, last column unused
  std::vector<double> north;   ///< size node_count, last row unused
  std::vector<std::uint8_t> free;
  std::vector<std::uint32_t> free_nodes;

  std::size_t node(int i, int j) const { return static_cast<std::size_t>(j) * (nx + 1) + i; }
  /// (L u)_n = sum_k w_k (u_k - u_n) / h^2 at a free node.
  double apply(std::span<const double> u, std::size_t n) const;
  /// Sum over edges of w_e (u_a - u_b)^2, i.e. the discrete |grad u|^2 integral.
  double gradient_energy(std::span<const double> u) const;
  /// Per-cell share of gradient_energy (half of each of its four edges).
  double cell_gradient_energy(std::span<const double> u, int ci, int cj) const;
  /// Smallest edge weight among the four edges of a cell.
  double cell_min_weight(int ci, int cj) const;
};

Stencil build_stencil(const Grid& grid);

struct EigenResult {
  double lambda = 0.0;
  std::vector<double> mode;  ///< nodal, unit discrete L2 norm, nonnegative
  int iterations = 0;
  double residual = 0.0;
};

/// Smallest eigenvalue of the discrete Dirichlet operator by inverse power iteration
/// (relative tolerance 1e-8). The optional node mask restricts the unknowns to a subdomain.
EigenResult first_dirichlet_eigenpair(const Grid& grid, const std::vector<std::uint8_t>* node_mask = nullptr,
                                      int max_iterations = 500);
double first_dirichlet_eigenvalue(const Grid& grid);

}  // namespace gcl
