#include "gcl/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

namespace gcl {

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  const double d1 = cross(q2 - q1, p1 - q1);
  const double d2 = cross(q2 - q1, p2 - q1);
  const double d3 = cross(p2 - p1, q1 - p1);
  const double d4 = cross(p2 - p1, q2 - p1);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  auto on = [](const Vec2& a, const Vec2& b, const Vec2& p, double d) {
    return d == 0.0 && std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
           std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
  };
  return on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4);
}

bool check_finite(const Vec2& v) { return std::isfinite(v.x()) && std::isfinite(v.y()); }

}  // namespace

SpeedField SpeedField::constant(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw ValidationError("speed must be positive and finite");
  SpeedField s;
  s.value = [c](const Vec2&) { return c; };
  s.gradient = [](const Vec2&) { return Vec2(Vec2::Zero()); };
  s.c_min = c;
  s.c_max = c;
  s.uniform = true;
  return s;
}

SpeedField SpeedField::affine(double c0, const Vec2& slope, const Vec2& origin, const Vec2& box_lo,
                              const Vec2& box_hi) {
  if (slope.isZero(0.0)) return constant(c0);
  SpeedField s;
  s.value = [=](const Vec2& x) { return c0 + slope.dot(x - origin); };
  s.gradient = [=](const Vec2&) { return slope; };
  s.c_min = std::numeric_limits<double>::infinity();
  s.c_max = -s.c_min;
  for (double x : {box_lo.x(), box_hi.x()}) {
    for (double y : {box_lo.y(), box_hi.y()}) {
      const double v = c0 + slope.dot(Vec2(x, y) - origin);
      s.c_min = std::min(s.c_min, v);
      s.c_max = std::max(s.c_max, v);
    }
  }
  if (!(s.c_min > 0.0)) throw ValidationError("affine speed is not positive on the domain");
  s.uniform = false;
  return s;
}

Domain Domain::rectangle(double width, double height, SpeedField speed) {
  if (!(width > 0.0) || !(height > 0.0) || !std::isfinite(width) || !std::isfinite(height)) {
    throw ValidationError("rectangle sides must be positive and finite");
  }
  Domain d;
  d.vertices_ = {Vec2(0, 0), Vec2(width, 0), Vec2(width, height), Vec2(0, height)};
  d.speed_ = std::move(speed);
  d.lo_ = Vec2(0, 0);
  d.hi_ = Vec2(width, height);
  d.rectangle_ = true;
  return d;
}

Domain Domain::polygon(std::vector<Vec2> vertices, SpeedField speed) {
  const std::size_t n = vertices.size();
  if (n < 3) throw ValidationError("polygon needs at least 3 vertices");
  for (const auto& v : vertices) {
    if (!check_finite(v)) throw ValidationError("polygon vertex is not finite");
  }
  double area2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) area2 += cross(vertices[i], vertices[(i + 1) % n]);
  if (!(area2 > 0.0)) throw ValidationError("polygon must be counterclockwise with positive area");
  for (std::size_t i = 0; i < n; ++i) {
    if ((vertices[(i + 1) % n] - vertices[i]).norm() == 0.0) {
      throw ValidationError("polygon has repeated vertices");
    }
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(vertices[i], vertices[(i + 1) % n], vertices[j], vertices[(j + 1) % n])) {
        std::ostringstream os;
        os << "polygon is not simple: edges " << i << " and " << j << " intersect";
        throw ValidationError(os.str());
      }
    }
  }
  Domain d;
  d.lo_ = vertices[0];
  d.hi_ = vertices[0];
  for (const auto& v : vertices) {
    d.lo_ = d.lo_.cwiseMin(v);
    d.hi_ = d.hi_.cwiseMax(v);
  }
  d.rectangle_ = n == 4 && d.lo_.isZero(0.0) && vertices[0] == Vec2(0, 0) &&
                 vertices[1] == Vec2(d.hi_.x(), 0) && vertices[2] == d.hi_ &&
                 vertices[3] == Vec2(0, d.hi_.y());
  d.vertices_ = std::move(vertices);
  d.speed_ = std::move(speed);
  return d;
}

double Domain::area() const {
  double a = 0.0;
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i) a += cross(vertices_[i], vertices_[(i + 1) % n]);
  return 0.5 * a;
}

double Domain::perimeter() const {
  double p = 0.0;
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i) p += (vertices_[(i + 1) % n] - vertices_[i]).norm();
  return p;
}

double Domain::diameter() const {
  double d = 0.0;
  for (const auto& a : vertices_) {
    for (const auto& b : vertices_) d = std::max(d, (a - b).norm());
  }
  return d;
}

Vec2 Domain::edge_normal(std::size_t e) const {
  const Vec2 t = vertices_[(e + 1) % vertices_.size()] - vertices_[e];
  return Vec2(t.y(), -t.x()).normalized();
}

double Domain::boundary_distance(const Vec2& x) const {
  double d = std::numeric_limits<double>::infinity();
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i) d = std::min(d, segment_distance(x, vertices_[i], vertices_[(i + 1) % n]));
  return d;
}

bool Domain::contains(const Vec2& x, double tol) const {
  if (rectangle_) {
    return x.x() >= lo_.x() - tol && x.x() <= hi_.x() + tol && x.y() >= lo_.y() - tol && x.y() <= hi_.y() + tol;
  }
  if (boundary_distance(x) <= tol) return true;
  bool inside = false;
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = vertices_[i];
    const Vec2& b = vertices_[j];
    if ((a.y() > x.y()) != (b.y() > x.y())) {
      const double xi = (b.x() - a.x()) * (x.y() - a.y()) / (b.y() - a.y()) + a.x();
      if (x.x() < xi) inside = !inside;
    }
  }
  return inside;
}

Grid::Grid(Domain domain, int resolution) : domain_(std::move(domain)), resolution_(resolution) {
  if (resolution < 8) throw ValidationError("resolution must be at least 8");
  h_ = 1.0 / resolution;
  const double wx = domain_.width() * resolution;
  const double wy = domain_.height() * resolution;
  nx_ = static_cast<int>(std::lround(wx));
  ny_ = static_cast<int>(std::lround(wy));
  if (domain_.is_rectangle()) {
    if (std::abs(wx - nx_) > 1e-9 * std::max(1.0, wx) || std::abs(wy - ny_) > 1e-9 * std::max(1.0, wy)) {
      throw ValidationError("rectangle sides must be whole multiples of the cell size 1/resolution");
    }
  } else {
    nx_ = static_cast<int>(std::ceil(wx - 1e-9));
    ny_ = static_cast<int>(std::ceil(wy - 1e-9));
  }
  if (nx_ < 1 || ny_ < 1) throw ValidationError("grid is empty");

  inside_.assign(cell_count(), 0);
  for (std::size_t c = 0; c < cell_count(); ++c) {
    inside_[c] = domain_.is_rectangle() || domain_.contains(cell_center(c), 0.0) ? 1 : 0;
  }
  if (inside_cell_count() < 9) throw ValidationError("domain covers fewer than 9 grid cells");

  free_.assign(node_count(), 0);
  for (int j = 0; j <= ny_; ++j) {
    for (int i = 0; i <= nx_; ++i) {
      const std::size_t n = node(i, j);
      if (domain_.is_rectangle()) {
        free_[n] = (i > 0 && i < nx_ && j > 0 && j < ny_) ? 1 : 0;
      } else {
        const Vec2 p = node_position(n);
        free_[n] = domain_.contains(p, 0.0) && domain_.boundary_distance(p) > 1e-9 * h_ ? 1 : 0;
      }
    }
  }

  const auto& v = domain_.vertices();
  for (std::size_t e = 0; e < v.size(); ++e) {
    const Vec2 a = v[e];
    const Vec2 b = v[(e + 1) % v.size()];
    const double len = (b - a).norm();
    const int pieces = std::max(1, static_cast<int>(std::ceil(len / h_ - 1e-9)));
    const Vec2 nrm = domain_.edge_normal(e);
    for (int k = 0; k < pieces; ++k) {
      BoundarySegment s;
      s.a = a + (b - a) * (static_cast<double>(k) / pieces);
      s.b = a + (b - a) * (static_cast<double>(k + 1) / pieces);
      s.length = len / pieces;
      s.normal = nrm;
      s.edge = e;
      const long c = locate_cell(s.midpoint() - 0.5 * h_ * nrm);
      s.cell = (c >= 0 && inside_[static_cast<std::size_t>(c)]) ? static_cast<int>(c) : -1;
      segments_.push_back(s);
    }
  }
}

Vec2 Grid::cell_center(std::size_t c) const {
  const Vec2 lo = domain_.lower();
  return Vec2(lo.x() + (cell_i(c) + 0.5) * h_, lo.y() + (cell_j(c) + 0.5) * h_);
}

std::size_t Grid::inside_cell_count() const {
  return static_cast<std::size_t>(std::count(inside_.begin(), inside_.end(), std::uint8_t{1}));
}

long Grid::locate_cell(const Vec2& x) const {
  const Vec2 lo = domain_.lower();
  const double fx = (x.x() - lo.x()) / h_;
  const double fy = (x.y() - lo.y()) / h_;
  if (!(fx >= 0.0) || !(fy >= 0.0) || fx > nx_ || fy > ny_) return -1;
  const int i = std::min(nx_ - 1, static_cast<int>(fx));
  const int j = std::min(ny_ - 1, static_cast<int>(fy));
  return static_cast<long>(cell(i, j));
}

Vec2 Grid::node_position(std::size_t n) const {
  const Vec2 lo = domain_.lower();
  const int i = static_cast<int>(n % (nx_ + 1));
  const int j = static_cast<int>(n / (nx_ + 1));
  return Vec2(lo.x() + i * h_, lo.y() + j * h_);
}

std::size_t Grid::free_node_count() const {
  return static_cast<std::size_t>(std::count(free_.begin(), free_.end(), std::uint8_t{1}));
}

Grid build_grid(const Domain& domain, int resolution) { return Grid(domain, resolution); }

MeasurePair measure(const CellMask& cells, const SegmentMask& segments, const Grid& grid) {
  if (cells.size() != grid.cell_count()) throw ValidationError("cell mask size does not match grid");
  if (segments.size() != grid.boundary_segments().size()) {
    throw ValidationError("segment mask size does not match grid");
  }
  MeasurePair m;
  std::size_t count = 0;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (cells[c] && grid.cell_inside(c)) ++count;
  }
  m.interior = static_cast<double>(count) * grid.h() * grid.h();
  const auto& segs = grid.boundary_segments();
  for (std::size_t s = 0; s < segs.size(); ++s) {
    if (segments[s]) m.boundary += segs[s].length;
  }
  return m;
}

SegmentMask boundary_trace(const CellMask& cells, const Grid& grid) {
  if (cells.size() != grid.cell_count()) throw ValidationError("cell mask size does not match grid");
  const auto& segs = grid.boundary_segments();
  SegmentMask out(segs.size(), 0);
  for (std::size_t s = 0; s < segs.size(); ++s) {
    if (segs[s].cell >= 0 && cells[static_cast<std::size_t>(segs[s].cell)]) out[s] = 1;
  }
  return out;
}

Vec2 boundary_normal(const Grid& grid, const Vec2& point) {
  const Domain& d = grid.domain();
  const double tol = grid.h() / 100.0;
  const auto& v = d.vertices();
  const std::size_t n = v.size();
  for (std::size_t k = 0; k < n; ++k) {
    if ((point - v[k]).norm() <= tol) {
      const Vec2 sum = d.edge_normal((k + n - 1) % n) + d.edge_normal(k);
      return sum.normalized();
    }
  }
  double best = std::numeric_limits<double>::infinity();
  std::size_t edge = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double dist = segment_distance(point, v[k], v[(k + 1) % n]);
    if (dist < best) {
      best = dist;
      edge = k;
    }
  }
  if (best > tol) {
    std::ostringstream os;
    os << "point (" << point.x() << ", " << point.y() << ") is " << best << " from the boundary (tolerance "
       << tol << ")";
    throw ValidationError(os.str());
  }
  return d.edge_normal(edge);
}

double Stencil::apply(std::span<const double> u, std::size_t n) const {
  const int i = static_cast<int>(n % (nx + 1));
  const int j = static_cast<int>(n / (nx + 1));
  const double un = u[n];
  double acc = 0.0;
  if (i < nx) acc += east[n] * (u[n + 1] - un);
  if (i > 0) acc += east[n - 1] * (u[n - 1] - un);
  if (j < ny) acc += north[n] * (u[n + nx + 1] - un);
  if (j > 0) acc += north[n - nx - 1] * (u[n - nx - 1] - un);
  return acc / (h * h);
}

double Stencil::gradient_energy(std::span<const double> u) const {
  double e = 0.0;
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      const std::size_t n = node(i, j);
      if (i < nx) {
        const double d = u[n + 1] - u[n];
        e += east[n] * d * d;
      }
      if (j < ny) {
        const double d = u[n + nx + 1] - u[n];
        e += north[n] * d * d;
      }
    }
  }
  return e;
}

double Stencil::cell_gradient_energy(std::span<const double> u, int ci, int cj) const {
  const std::size_t n00 = node(ci, cj);
  const std::size_t n10 = n00 + 1;
  const std::size_t n01 = n00 + nx + 1;
  const std::size_t n11 = n01 + 1;
  auto sq = [](double x) { return x * x; };
  const double e = east[n00] * sq(u[n10] - u[n00]) + east[n01] * sq(u[n11] - u[n01]) +
                   north[n00] * sq(u[n01] - u[n00]) + north[n10] * sq(u[n11] - u[n10]);
  // Interior edges are shared by two cells; boundary-of-box edges join non-free nodes (zero jump).
  return 0.5 * e;
}

double Stencil::cell_min_weight(int ci, int cj) const {
  const std::size_t n00 = node(ci, cj);
  const std::size_t n01 = n00 + nx + 1;
  return std::min({east[n00], east[n01], north[n00], north[n00 + 1]});
}

Stencil build_stencil(const Grid& grid) {
  Stencil s;
  s.nx = grid.nx();
  s.ny = grid.ny();
  s.h = grid.h();
  const std::size_t nn = grid.node_count();
  s.east.assign(nn, 0.0);
  s.north.assign(nn, 0.0);
  s.free.assign(nn, 0);
  std::vector<double> c2(nn);
  const SpeedField& c = grid.domain().speed();
  for (std::size_t n = 0; n < nn; ++n) {
    const double v = c(grid.node_position(n));
    c2[n] = v * v;
    s.free[n] = grid.node_free(n) ? 1 : 0;
    if (s.free[n]) s.free_nodes.push_back(static_cast<std::uint32_t>(n));
  }
  for (int j = 0; j <= s.ny; ++j) {
    for (int i = 0; i <= s.nx; ++i) {
      const std::size_t n = s.node(i, j);
      if (i < s.nx) s.east[n] = 0.5 * (c2[n] + c2[n + 1]);
      if (j < s.ny) s.north[n] = 0.5 * (c2[n] + c2[n + s.nx + 1]);
    }
  }
  return s;
}

EigenResult first_dirichlet_eigenpair(const Grid& grid, const std::vector<std::uint8_t>* node_mask,
                                      int max_iterations) {
  const Stencil st = build_stencil(grid);
  const std::size_t nn = grid.node_count();
  std::vector<long> idx(nn, -1);
  long m = 0;
  for (std::size_t n = 0; n < nn; ++n) {
    const bool use = st.free[n] && (node_mask == nullptr || (*node_mask)[n]);
    if (use) idx[n] = m++;
  }
  if (m == 0) throw ValidationError("no free nodes for the eigenvalue problem");

  using Sp = Eigen::SparseMatrix<double>;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(m) * 5);
  const double ih2 = 1.0 / (grid.h() * grid.h());
  for (std::size_t n = 0; n < nn; ++n) {
    if (idx[n] < 0) continue;
    const int i = static_cast<int>(n % (st.nx + 1));
    const int j = static_cast<int>(n / (st.nx + 1));
    double diag = 0.0;
    auto link = [&](std::size_t k, double w) {
      diag += w;
      if (idx[k] >= 0) trip.emplace_back(idx[n], idx[k], -w * ih2);
    };
    if (i < st.nx) link(n + 1, st.east[n]);
    if (i > 0) link(n - 1, st.east[n - 1]);
    if (j < st.ny) link(n + st.nx + 1, st.north[n]);
    if (j > 0) link(n - st.nx - 1, st.north[n - st.nx - 1]);
    trip.emplace_back(idx[n], idx[n], diag * ih2);
  }
  Sp A(m, m);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Sp> solver(A);
  if (solver.info() != Eigen::Success) throw NumericalError("eigenvalue factorization failed");

  Eigen::VectorXd x = Eigen::VectorXd::Ones(m).normalized();
  double lambda = x.dot(A * x);
  EigenResult r;
  for (int it = 1; it <= max_iterations; ++it) {
    Eigen::VectorXd y = solver.solve(x);
    if (solver.info() != Eigen::Success || !y.allFinite()) throw NumericalError("eigenvalue solve failed");
    x = y.normalized();
    const double next = x.dot(A * x);
    const double change = std::abs(next - lambda);
    lambda = next;
    r.iterations = it;
    if (change <= 1e-8 * std::abs(lambda) * 1e-3) {
      break;
    }
    if (it == max_iterations) throw NumericalError("inverse iteration did not converge");
  }
  r.lambda = lambda;
  r.residual = (A * x - lambda * x).norm() / std::max(1e-300, std::abs(lambda));
  if (r.residual > 1e-4) throw NumericalError("eigenvector residual too large");
  if (x.sum() < 0) x = -x;
  r.mode.assign(nn, 0.0);
  const double scale = 1.0 / grid.h();  // unit discrete L2: sum u^2 h^2 = 1
  for (std::size_t n = 0; n < nn; ++n) {
    if (idx[n] >= 0) r.mode[n] = std::max(0.0, x[idx[n]] * scale);
  }
  return r;
}

double first_dirichlet_eigenvalue(const Grid& grid) { return first_dirichlet_eigenpair(grid).lambda; }

}  // namespace gcl
