#pragma once

#include <optional>
#include <vector>

#include "gcl/region.hpp"

namespace gcl {

/// Ray with metric unit speed: |dx/dt| = c(x). `p` is the Euclidean direction (any nonzero length).
struct RayState {
  Vec2 x = Vec2::Zero();
  Vec2 p = Vec2::Zero();
  double t = 0.0;
};

struct Reflection {
  Vec2 x;
  double t = 0.0;
  Vec2 incident;   ///< unit Euclidean direction before reflection
  Vec2 reflected;  ///< unit Euclidean direction after reflection
};

struct TraceResult {
  std::optional<double> first_hit_time;
  std::vector<Reflection> reflections;
  bool trapped = false;                 ///< target given and not reached within t_max
  bool terminated_at_corner = false;
  RayState end;                         ///< state at t_max, at the hit, or at the corner
  std::vector<Vec2> path;               ///< polyline (start, reflections, end) when recorded
};

struct TraceOptions {
  bool record_path = false;
  bool stop_at_hit = true;
  double ode_tolerance = 1e-10;  ///< local error per step (variable speed only)
};

/// Billiard trace inside the grid's domain. Straight segments with exact wall intersection when
/// c is uniform; RK4 with step doubling on x' = c^2 xi, xi' = -|xi|^2 c grad c otherwise. A hit is
/// the first positive-length stretch of the path inside an open cell of the target.
TraceResult trace_ray(const Grid& grid, const RayState& ray, const ControlRegion* target, double t_max,
                      const TraceOptions& options = {});

struct RayInit {
  Vec2 x = Vec2::Zero();
  Vec2 dir = Vec2::Zero();
};

struct Sampler {
  int positions_x = 32;
  int positions_y = 32;
  int directions = 64;
  bool adversarial = true;
};

/// Position lattice ((i + 1/2)/n) x directions 2 pi k / n, plus axis-parallel rays through the
/// quarter lines, diagonals, and near-grazing rays along each edge.
std::vector<RayInit> sample_rays(const Grid& grid, const Sampler& sampler);

struct GccReport {
  double T = 0.0;
  std::size_t samples = 0;
  std::size_t hits = 0;
  std::size_t corner_terminated = 0;
  double hit_fraction = 0.0;
  double T_hat = 0.0;
  RayInit worst;
  std::vector<RayInit> trapped;
  bool pass = false;
};

/// Sampled certification of the geometric control condition: every sampled ray must enter omega
/// before time T. Corner terminations count as neither hit nor miss.
GccReport check_gcc(const Grid& grid, const ControlRegion& omega, double T, const Sampler& sampler = {});
GccReport check_gcc(const Grid& grid, const ControlRegion& omega, double T, const std::vector<RayInit>& rays);

struct PotentialConditionReport {
  double max_gradient = 0.0;      ///< max |grad d|_g over the samples
  double min_hessian = 0.0;       ///< min eigenvalue of c^2 Hess_g d
  bool gradient_ok = false;       ///< max |grad d|_g <= T/2
  bool hessian_ok = false;        ///< min eigenvalue >= 1 - tol
  bool boundary_ok = false;       ///< segment condition
  std::vector<std::size_t> offending_segments;
  bool pass() const { return gradient_ok && hessian_ok && boundary_ok; }
};

/// Escape potential condition: gradient bound, Hessian bound, and every segment with
/// <grad d, nu> > tol lies in gamma. `where` restricts the cell samples (all cells when null).
PotentialConditionReport check_escape_potential_condition(const EscapePotential& d, const SegmentMask& gamma,
                                                          double T, const Grid& grid, double tol,
                                                          const CellMask* where = nullptr);

/// Obstacle condition: gradient bound, Hessian bound, and <grad d, nu> <= tol on every segment of gamma0.
PotentialConditionReport check_obstacle_condition(const EscapePotential& d, const SegmentMask& gamma0, double T,
                                                  const Grid& grid, double tol, const CellMask* where = nullptr);

struct ControlTime {
  double T = 0.0;
  bool valid = false;  ///< false when grad d vanishes (no escape)
};

/// T = 2 max |grad d|_g over cell centers and cell corners (of `where` when given).
ControlTime gcc_time_from_potential(const EscapePotential& d, const Grid& grid, const CellMask* where = nullptr);
/// T = max_j 2 max_{Omega_j} |grad d_j|_g.
ControlTime gcc_time_from_potential(const OverlapDecomposition& dec, const Grid& grid);

struct BoundaryPartition {
  SegmentMask gamma0;  ///< <grad d_j, nu> <= 0 at the midpoint for some j
  SegmentMask gamma1;  ///< complement
};

BoundaryPartition boundary_partition(const EscapePotential& d, const Grid& grid);
/// Union over sub-domains; d_j is evaluated only on segments whose adjacent cell lies in Omega_j.
BoundaryPartition boundary_partition(const OverlapDecomposition& dec, const Grid& grid);

}  // namespace gcl
