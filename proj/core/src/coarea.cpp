#include "gcl/coarea.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gcl/parallel.hpp"

namespace gcl {

std::vector<Segment2> contour_segments(const std::vector<double>& nodal, const Grid& grid, double t) {
  if (nodal.size() != grid.node_count()) throw ValidationError("nodal field size does not match grid");
  std::vector<Segment2> out;
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    if (!grid.cell_inside(c)) continue;
    const int i = grid.cell_i(c);
    const int j = grid.cell_j(c);
    const std::size_t n[4] = {grid.node(i, j), grid.node(i + 1, j), grid.node(i + 1, j + 1), grid.node(i, j + 1)};
    double v[4];
    Vec2 p[4];
    int mask = 0;
    for (int k = 0; k < 4; ++k) {
      v[k] = nodal[n[k]];
      p[k] = grid.node_position(n[k]);
      if (v[k] >= t) mask |= 1 << k;
    }
    if (mask == 0 || mask == 15) continue;
    Vec2 cross[4];
    bool has[4] = {false, false, false, false};
    for (int e = 0; e < 4; ++e) {
      const int a = e;
      const int b = (e + 1) % 4;
      if (((mask >> a) & 1) != ((mask >> b) & 1)) {
        const double s = (t - v[a]) / (v[b] - v[a]);
        cross[e] = p[a] + s * (p[b] - p[a]);
        has[e] = true;
      }
    }
    const int count = has[0] + has[1] + has[2] + has[3];
    if (count == 2) {
      int first = -1;
      int second = -1;
      for (int e = 0; e < 4; ++e) {
        if (!has[e]) continue;
        (first < 0 ? first : second) = e;
      }
      out.emplace_back(cross[first], cross[second]);
    } else if (count == 4) {
      const double center = 0.25 * (v[0] + v[1] + v[2] + v[3]);
      const bool center_above = center >= t;
      const bool diag02 = (mask & 1) != 0;  // corners 0 and 2 above
      if (diag02 == center_above) {
        out.emplace_back(cross[0], cross[1]);
        out.emplace_back(cross[2], cross[3]);
      } else {
        out.emplace_back(cross[3], cross[0]);
        out.emplace_back(cross[1], cross[2]);
      }
    }
  }
  return out;
}

CoareaResult coarea_check(const ScalarField& phi, const ScalarFn& f, const Grid& grid, int levels) {
  if (levels < 1) throw ValidationError("level count must be positive");
  const double h = grid.h();
  CoareaResult r;
  r.levels = levels;
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    if (!grid.cell_inside(c)) continue;
    const Vec2 x = grid.cell_center(c);
    const double fv = f(x);
    if (fv < 0.0) {
      std::ostringstream os;
      os << "f must be nonnegative; f(" << x.x() << ", " << x.y() << ") = " << fv;
      throw ValidationError(os.str());
    }
    r.lhs += phi.gradient(x).norm() * fv * h * h;
  }
  std::vector<double> nodal(grid.node_count(), 0.0);
  std::vector<std::uint8_t> used(grid.node_count(), 0);
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    if (!grid.cell_inside(c)) continue;
    const int i = grid.cell_i(c);
    const int j = grid.cell_j(c);
    for (const std::size_t n : {grid.node(i, j), grid.node(i + 1, j), grid.node(i, j + 1), grid.node(i + 1, j + 1)}) {
      used[n] = 1;
    }
  }
  r.t_min = std::numeric_limits<double>::infinity();
  r.t_max = -r.t_min;
  for (std::size_t n = 0; n < nodal.size(); ++n) {
    if (!used[n]) continue;
    nodal[n] = phi.value(grid.node_position(n));
    r.t_min = std::min(r.t_min, nodal[n]);
    r.t_max = std::max(r.t_max, nodal[n]);
  }
  const double dt = (r.t_max - r.t_min) / levels;
  std::vector<double> per_level(static_cast<std::size_t>(levels), 0.0);
  std::vector<int> negative(static_cast<std::size_t>(levels), 0);
  parallel_for(per_level.size(), [&](std::size_t k) {
    const double t = r.t_min + (static_cast<double>(k) + 0.5) * dt;
    double acc = 0.0;
    for (const auto& s : contour_segments(nodal, grid, t)) {
      const double fv = f(0.5 * (s.first + s.second));
      if (fv < 0.0) negative[k] = 1;
      acc += fv * (s.second - s.first).norm();
    }
    per_level[k] = acc * dt;
  });
  if (std::any_of(negative.begin(), negative.end(), [](int v) { return v != 0; })) {
    throw ValidationError("f must be nonnegative on the level curves");
  }
  for (double v : per_level) r.rhs += v;
  r.relative_error = std::abs(r.lhs - r.rhs) / std::max(std::abs(r.lhs), 1e-300);
  return r;
}

CellTraceField constant_density(const Grid& grid, double value) {
  return {std::vector<double>(grid.cell_count(), value), std::vector<double>(grid.boundary_segments().size(), value)};
}

namespace {

struct NodeIndex {
  int i = 0;
  int j = 0;
};

NodeIndex node_at(const Grid& grid, const Vec2& x) {
  const Vec2 lo = grid.domain().lower();
  return {static_cast<int>(std::lround((x.x() - lo.x()) / grid.h())),
          static_cast<int>(std::lround((x.y() - lo.y()) / grid.h()))};
}

}  // namespace

std::vector<double> normal_derivative(const std::vector<double>& w, const Grid& grid) {
  if (!grid.domain().is_rectangle()) throw ValidationError("normal derivatives need a rectangular domain");
  if (w.size() != grid.node_count()) throw ValidationError("nodal field size does not match grid");
  const double h = grid.h();
  const auto& segs = grid.boundary_segments();
  std::vector<double> out(segs.size(), 0.0);
  auto value = [&](int i, int j) {
    if (i < 0 || j < 0 || i > grid.nx() || j > grid.ny()) return 0.0;
    return w[grid.node(i, j)];
  };
  for (std::size_t s = 0; s < segs.size(); ++s) {
    const int di = -static_cast<int>(std::lround(segs[s].normal.x()));
    const int dj = -static_cast<int>(std::lround(segs[s].normal.y()));
    double acc = 0.0;
    for (const Vec2& p : {segs[s].a, segs[s].b}) {
      const NodeIndex n = node_at(grid, p);
      const double w1 = value(n.i + di, n.j + dj);
      const double w2 = value(n.i + 2 * di, n.j + 2 * dj);
      acc += (w2 - 4.0 * w1) / (2.0 * h);
    }
    out[s] = 0.5 * acc;
  }
  return out;
}

CellTraceField gradient_density(const std::vector<double>& w, const Grid& grid) {
  const Stencil st = build_stencil(grid);
  const double h2 = grid.h() * grid.h();
  CellTraceField f;
  f.cell.assign(grid.cell_count(), 0.0);
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    if (grid.cell_inside(c)) f.cell[c] = st.cell_gradient_energy(w, grid.cell_i(c), grid.cell_j(c)) / h2;
  }
  f.segment = normal_derivative(w, grid);
  for (double& v : f.segment) v *= v;
  return f;
}

PrismResult prism_bound_check(const SegmentMask& gamma1, const ControlRegion& omega, const CellTraceField& f,
                              const Grid& grid, TraceModel model) {
  const auto& segs = grid.boundary_segments();
  if (gamma1.size() != segs.size()) throw ValidationError("boundary arc mask does not match grid");
  if (f.cell.size() != grid.cell_count() || f.segment.size() != segs.size()) {
    throw ValidationError("density size does not match grid");
  }
  if (!grid.domain().is_rectangle()) throw ValidationError("prism construction needs a rectangular domain");
  for (std::size_t s = 0; s < segs.size(); ++s) {
    if (gamma1[s] && !omega.segments[s]) {
      std::ostringstream os;
      os << "boundary arc is not contained in omega (segment " << s << ")";
      throw ValidationError(os.str());
    }
  }
  const double h = grid.h();
  PrismResult res;
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    if (omega.cells[c] && grid.cell_inside(c)) {
      if (f.cell[c] < 0.0) throw ValidationError("density must be nonnegative");
      res.interior_integral += f.cell[c] * h * h;
    }
  }
  if (!(res.interior_integral > 0.0)) throw ValidationError("integral of f over omega vanishes");

  // Connected straight arcs: consecutive masked segments on one polygon edge.
  std::vector<std::vector<std::size_t>> arcs;
  for (std::size_t s = 0; s < segs.size(); ++s) {
    if (!gamma1[s]) continue;
    if (!arcs.empty() && arcs.back().back() + 1 == s && segs[arcs.back().back()].edge == segs[s].edge) {
      arcs.back().push_back(s);
    } else {
      arcs.push_back({s});
    }
  }
  // Merge the wrap-around arc on the same edge.
  if (arcs.size() > 1 && arcs.front().front() == 0 && arcs.back().back() == segs.size() - 1 &&
      segs.front().edge == segs.back().edge) {
    arcs.front().insert(arcs.front().begin(), arcs.back().begin(), arcs.back().end());
    arcs.pop_back();
  }

  const Stencil st = build_stencil(grid);
  const SpeedField& speed = grid.domain().speed();
  for (const auto& arc : arcs) {
    PrismArc pa;
    pa.segments = arc;
    int thickness = std::numeric_limits<int>::max();
    for (std::size_t s : arc) {
      pa.length += segs[s].length;
      pa.boundary_integral += f.segment[s] * segs[s].length;
      const int di = -static_cast<int>(std::lround(segs[s].normal.x()));
      const int dj = -static_cast<int>(std::lround(segs[s].normal.y()));
      int i = grid.cell_i(static_cast<std::size_t>(segs[s].cell));
      int j = grid.cell_j(static_cast<std::size_t>(segs[s].cell));
      int t = 0;
      while (i >= 0 && j >= 0 && i < grid.nx() && j < grid.ny() && omega.cells[grid.cell(i, j)]) {
        ++t;
        i += di;
        j += dj;
      }
      thickness = std::min(thickness, t);
    }
    const int need = model == TraceModel::normal_derivative ? 2 : 1;
    if (thickness < need) {
      std::ostringstream os;
      os << "omega is " << thickness << " cell(s) thick along a boundary arc; the prism needs " << need;
      throw ValidationError(os.str());
    }
    pa.height_cells = std::max(need, thickness / 2);
    pa.height = pa.height_cells * h;
    double c_lo = std::numeric_limits<double>::infinity();
    double c_hi = 0.0;
    double kappa_min = std::numeric_limits<double>::infinity();
    for (std::size_t s : arc) {
      const int di = -static_cast<int>(std::lround(segs[s].normal.x()));
      const int dj = -static_cast<int>(std::lround(segs[s].normal.y()));
      int i = grid.cell_i(static_cast<std::size_t>(segs[s].cell));
      int j = grid.cell_j(static_cast<std::size_t>(segs[s].cell));
      for (int layer = 0; layer < pa.height_cells; ++layer, i += di, j += dj) {
        const std::size_t c = grid.cell(i, j);
        pa.cells.push_back(c);
        pa.prism_integral += f.cell[c] * h * h;
        const double cv = speed(grid.cell_center(c));
        c_lo = std::min(c_lo, cv);
        c_hi = std::max(c_hi, cv);
        kappa_min = std::min(kappa_min, st.cell_min_weight(i, j));
      }
    }
    for (std::size_t s : arc) {
      for (const Vec2& p : {segs[s].a, segs[s].b}) {
        const double cv = speed(p);
        c_lo = std::min(c_lo, cv);
        c_hi = std::max(c_hi, cv);
      }
    }
    pa.C_g = model == TraceModel::normal_derivative ? 2.5 / (h * kappa_min) : (c_hi / c_lo) / pa.height;
    const double slack = 1e-12 * std::max(1.0, pa.boundary_integral);
    pa.chain_holds = pa.boundary_integral <= pa.C_g * pa.prism_integral + slack &&
                     pa.prism_integral <= res.interior_integral * (1.0 + 1e-12);
    res.boundary_integral += pa.boundary_integral;
    res.C_g_max = std::max(res.C_g_max, pa.C_g);
    res.chain_holds = res.chain_holds && pa.chain_holds;
    res.arcs.push_back(std::move(pa));
  }
  res.C_hat = res.boundary_integral / res.interior_integral;
  return res;
}

}  // namespace gcl
