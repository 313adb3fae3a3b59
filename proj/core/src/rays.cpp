#include "gcl/rays.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "gcl/parallel.hpp"

namespace gcl {

namespace {

constexpr double kCornerTol = 1e-10;
constexpr std::size_t kMaxReflections = 10'000'000;

bool near_integer(double v) { return std::abs(v - std::round(v)) < 1e-12; }

// Fraction in [0,1] along a -> b at which the path first runs a positive length inside an open
// masked cell, or nullopt.
std::optional<double> first_entry(const Grid& grid, const CellMask& mask, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double len = d.norm();
  if (!(len > 0.0)) return std::nullopt;
  const double h = grid.h();
  const Vec2 lo = grid.domain().lower();
  const double fx = (a.x() - lo.x()) / h;
  const double fy = (a.y() - lo.y()) / h;
  const double dx = d.x() / h;
  const double dy = d.y() / h;
  // A path along a grid line is inside the open set only where the cells on both sides are masked.
  const bool on_vertical = std::abs(d.x()) <= 1e-14 * len && near_integer(fx);
  const bool on_horizontal = std::abs(d.y()) <= 1e-14 * len && near_integer(fy);
  if (on_vertical || on_horizontal) {
    const int line = static_cast<int>(std::round(on_vertical ? fx : fy));
    const double f0 = on_vertical ? fy : fx;
    const double df = on_vertical ? dy : dx;
    const int n_along = on_vertical ? grid.ny() : grid.nx();
    const int n_across = on_vertical ? grid.nx() : grid.ny();
    if (line <= 0 || line >= n_across) return std::nullopt;
    auto masked = [&](int along, int across) {
      return on_vertical ? mask[grid.cell(across, along)] != 0 : mask[grid.cell(along, across)] != 0;
    };
    const double f1 = f0 + df;
    const int step = df > 0.0 ? 1 : -1;
    int k = static_cast<int>(std::floor(f0));
    if (near_integer(f0)) k = static_cast<int>(std::round(f0)) - (df < 0.0 ? 1 : 0);
    for (; k >= 0 && k < n_along; k += step) {
      const double enter = df > 0.0 ? std::max(f0, static_cast<double>(k)) : std::min(f0, k + 1.0);
      const double exit = df > 0.0 ? std::min(f1, k + 1.0) : std::max(f1, static_cast<double>(k));
      if ((exit - enter) * step <= 1e-12) {
        if ((df > 0.0 && k + 1.0 >= f1) || (df < 0.0 && k <= f1)) break;
        continue;
      }
      if (masked(k, line - 1) && masked(k, line)) return (enter - f0) / df;
      if ((df > 0.0 && k + 1.0 >= f1) || (df < 0.0 && k <= f1)) break;
    }
    return std::nullopt;
  }

  auto start_index = [](double f, double df) {
    int i = static_cast<int>(std::floor(f));
    if (near_integer(f)) {
      i = static_cast<int>(std::round(f));
      if (df < 0.0) --i;
    }
    return i;
  };
  int i = start_index(fx, dx);
  int j = start_index(fy, dy);
  const int step_x = dx > 0.0 ? 1 : -1;
  const int step_y = dy > 0.0 ? 1 : -1;
  const double inf = std::numeric_limits<double>::infinity();
  double t_max_x = dx > 0.0 ? (i + 1 - fx) / dx : (dx < 0.0 ? (i - fx) / dx : inf);
  double t_max_y = dy > 0.0 ? (j + 1 - fy) / dy : (dy < 0.0 ? (j - fy) / dy : inf);
  const double t_delta_x = dx != 0.0 ? std::abs(1.0 / dx) : inf;
  const double t_delta_y = dy != 0.0 ? std::abs(1.0 / dy) : inf;
  const double min_len = 1e-12 * h / len;
  double s_enter = 0.0;
  const int nx = grid.nx();
  const int ny = grid.ny();
  while (true) {
    const double s_exit = std::min({t_max_x, t_max_y, 1.0});
    if (i >= 0 && i < nx && j >= 0 && j < ny && mask[grid.cell(i, j)] && s_exit - s_enter > min_len) {
      return std::max(0.0, s_enter);
    }
    if (s_exit >= 1.0) break;
    if (t_max_x < t_max_y) {
      i += step_x;
      t_max_x += t_delta_x;
    } else if (t_max_y < t_max_x) {
      j += step_y;
      t_max_y += t_delta_y;
    } else {
      i += step_x;
      j += step_y;
      t_max_x += t_delta_x;
      t_max_y += t_delta_y;
    }
    s_enter = s_exit;
    if ((i < 0 && step_x < 0) || (i >= nx && step_x > 0) || (j < 0 && step_y < 0) || (j >= ny && step_y > 0)) {
      break;
    }
  }
  return std::nullopt;
}

struct WallHit {
  double s = std::numeric_limits<double>::infinity();
  std::size_t edge = 0;
  bool found = false;
};

WallHit next_wall(const Domain& dom, const Vec2& x, const Vec2& dir, long skip_edge) {
  WallHit best;
  const auto& v = dom.vertices();
  const std::size_t n = v.size();
  for (std::size_t e = 0; e < n; ++e) {
    if (static_cast<long>(e) == skip_edge) continue;
    const Vec2 a = v[e];
    const Vec2 b = v[(e + 1) % n];
    const Vec2 nrm = dom.edge_normal(e);
    const double approach = nrm.dot(dir);
    if (approach <= 1e-15) continue;
    const double s = nrm.dot(a - x) / approach;
    if (s < -1e-12) continue;
    const Vec2 p = x + s * dir;
    const Vec2 ab = b - a;
    const double u = (p - a).dot(ab) / ab.squaredNorm();
    if (u < -1e-12 || u > 1.0 + 1e-12) continue;
    if (s < best.s) {
      best.s = std::max(0.0, s);
      best.edge = e;
      best.found = true;
    }
  }
  return best;
}

bool at_corner(const Domain& dom, const Vec2& x) {
  for (const Vec2& v : dom.vertices()) {
    if ((x - v).norm() < kCornerTol) return true;
  }
  return false;
}

std::size_t nearest_edge(const Domain& dom, const Vec2& x) {
  const auto& v = dom.vertices();
  std::size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < v.size(); ++e) {
    const Vec2 a = v[e];
    const Vec2 ab = v[(e + 1) % v.size()] - a;
    const double u = std::clamp((x - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    const double d = (x - (a + u * ab)).norm();
    if (d < bd) {
      bd = d;
      best = e;
    }
  }
  return best;
}

TraceResult trace_uniform(const Grid& grid, const RayState& ray, const ControlRegion* target, double t_max,
                          const TraceOptions& opt) {
  const Domain& dom = grid.domain();
  const double c = dom.speed().c_min;
  TraceResult r;
  Vec2 x = ray.x;
  Vec2 dir = ray.p.normalized();
  double t = ray.t;
  long last_edge = -1;
  if (opt.record_path) r.path.push_back(x);
  while (t < t_max) {
    const WallHit wall = next_wall(dom, x, dir, last_edge);
    const double remaining = (t_max - t) * c;
    const double seg = wall.found ? std::min(wall.s, remaining) : remaining;
    if (target != nullptr && !r.first_hit_time) {
      const auto f = first_entry(grid, target->cells, x, x + seg * dir);
      if (f) {
        r.first_hit_time = t + *f * seg / c;
        if (opt.stop_at_hit) {
          r.end = {x + *f * seg * dir, dir, *r.first_hit_time};
          if (opt.record_path) r.path.push_back(r.end.x);
          return r;
        }
      }
    }
    if (!wall.found || wall.s >= remaining) {
      x += remaining * dir;
      t = t_max;
      break;
    }
    Vec2 hit = x + wall.s * dir;
    const Vec2 nrm = dom.edge_normal(wall.edge);
    hit -= nrm.dot(hit - dom.vertices()[wall.edge]) * nrm;
    t += wall.s / c;
    if (opt.record_path) r.path.push_back(hit);
    if (at_corner(dom, hit)) {
      r.terminated_at_corner = true;
      r.end = {hit, dir, t};
      return r;
    }
    const Vec2 out = dir - 2.0 * dir.dot(nrm) * nrm;
    r.reflections.push_back({hit, t, dir, out});
    if (r.reflections.size() > kMaxReflections) throw NumericalError("ray exceeded the reflection limit");
    dir = out;
    x = hit;
    last_edge = static_cast<long>(wall.edge);
  }
  r.end = {x, dir, t};
  if (opt.record_path) r.path.push_back(x);
  r.trapped = target != nullptr && !r.first_hit_time;
  return r;
}

struct Phase {
  Vec2 x;
  Vec2 xi;
};

Phase rhs(const SpeedField& sp, const Phase& y) {
  const double c = sp(y.x);
  return {c * c * y.xi, -y.xi.squaredNorm() * c * sp.grad(y.x)};
}

Phase rk4(const SpeedField& sp, const Phase& y, double dt) {
  const Phase k1 = rhs(sp, y);
  const Phase k2 = rhs(sp, {y.x + 0.5 * dt * k1.x, y.xi + 0.5 * dt * k1.xi});
  const Phase k3 = rhs(sp, {y.x + 0.5 * dt * k2.x, y.xi + 0.5 * dt * k2.xi});
  const Phase k4 = rhs(sp, {y.x + dt * k3.x, y.xi + dt * k3.xi});
  return {y.x + dt / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
          y.xi + dt / 6.0 * (k1.xi + 2.0 * k2.xi + 2.0 * k3.xi + k4.xi)};
}

void normalize(const SpeedField& sp, Phase& y) { y.xi /= sp(y.x) * y.xi.norm(); }

TraceResult trace_variable(const Grid& grid, const RayState& ray, const ControlRegion* target, double t_max,
                           const TraceOptions& opt) {
  const Domain& dom = grid.domain();
  const SpeedField& sp = dom.speed();
  TraceResult r;
  Phase y{ray.x, ray.p};
  normalize(sp, y);
  double t = ray.t;
  double dt = 0.25 * grid.h() / sp.c_max;
  const double tol = opt.ode_tolerance;
  if (opt.record_path) r.path.push_back(y.x);
  std::size_t steps = 0;
  while (t < t_max) {
    if (++steps > 50'000'000) throw NumericalError("ray integration exceeded the step limit");
    dt = std::min(dt, t_max - t);
    const Phase full = rk4(sp, y, dt);
    const Phase half = rk4(sp, rk4(sp, y, 0.5 * dt), 0.5 * dt);
    const double err = (half.x - full.x).norm() + (half.xi - full.xi).norm() * sp.c_min;
    if (!std::isfinite(err)) throw NumericalError("non-finite ray state");
    if (err > tol && dt > 1e-14) {
      dt *= std::max(0.2, 0.9 * std::pow(tol / err, 0.2));
      continue;
    }
    double step = dt;
    Phase next = half;
    bool crossed = !dom.contains(next.x, 0.0);
    if (crossed) {
      double lo = 0.0;
      double hi = dt;
      for (int it = 0; it < 100 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (dom.contains(rk4(sp, y, mid).x, 0.0)) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      step = lo;
      next = rk4(sp, y, lo);
    }
    if (target != nullptr && !r.first_hit_time) {
      const auto f = first_entry(grid, target->cells, y.x, next.x);
      if (f) {
        r.first_hit_time = t + *f * step;
        if (opt.stop_at_hit) {
          r.end = {y.x + *f * (next.x - y.x), y.xi, *r.first_hit_time};
          if (opt.record_path) r.path.push_back(r.end.x);
          return r;
        }
      }
    }
    t += step;
    y = next;
    if (crossed) {
      const std::size_t e = nearest_edge(dom, y.x);
      const Vec2 nrm = dom.edge_normal(e);
      y.x -= nrm.dot(y.x - dom.vertices()[e]) * nrm;
      if (opt.record_path) r.path.push_back(y.x);
      if (at_corner(dom, y.x)) {
        r.terminated_at_corner = true;
        r.end = {y.x, y.xi, t};
        return r;
      }
      const Vec2 in = y.xi.normalized();
      y.xi -= 2.0 * y.xi.dot(nrm) * nrm;
      r.reflections.push_back({y.x, t, in, y.xi.normalized()});
      if (r.reflections.size() > kMaxReflections) throw NumericalError("ray exceeded the reflection limit");
    }
    normalize(sp, y);
    if (err < tol / 32.0) dt *= 2.0;
  }
  r.end = {y.x, y.xi, t};
  if (opt.record_path) r.path.push_back(y.x);
  r.trapped = target != nullptr && !r.first_hit_time;
  return r;
}

void sample_cells(const Grid& grid, const CellMask* where, const std::function<void(const Vec2&)>& fn) {
  const double h = grid.h();
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    if (!grid.cell_inside(c) || (where != nullptr && !(*where)[c])) continue;
    const Vec2 x = grid.cell_center(c);
    fn(x);
    for (const Vec2& off : {Vec2(-0.5, -0.5), Vec2(0.5, -0.5), Vec2(-0.5, 0.5), Vec2(0.5, 0.5)}) {
      const Vec2 y = x + h * off;
      if (grid.domain().contains(y, 1e-12)) fn(y);
    }
  }
}

double max_normal_derivative(const EscapePotential& d, const BoundarySegment& seg) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const Vec2& x : {seg.a, seg.midpoint(), seg.b}) {
    worst = std::max(worst, d.speed()(x) * d.evaluate(x).grad.dot(seg.normal));
  }
  return worst;
}

PotentialConditionReport bulk_conditions(const EscapePotential& d, double T, const Grid& grid, double tol,
                                         const CellMask* where) {
  PotentialConditionReport rep;
  rep.min_hessian = std::numeric_limits<double>::infinity();
  sample_cells(grid, where, [&](const Vec2& x) {
    const EscapeSample s = d.evaluate(x);
    rep.max_gradient = std::max(rep.max_gradient, metric_gradient_norm(d, x, s));
    rep.min_hessian = std::min(rep.min_hessian, metric_hessian_min_eig(d, x, s));
  });
  rep.gradient_ok = rep.max_gradient <= 0.5 * T;
  rep.hessian_ok = rep.min_hessian >= 1.0 - tol;
  return rep;
}

bool segment_selected(const BoundarySegment& seg, const CellMask* where) {
  return where == nullptr || (seg.cell >= 0 && (*where)[static_cast<std::size_t>(seg.cell)]);
}

}  // namespace

TraceResult trace_ray(const Grid& grid, const RayState& ray, const ControlRegion* target, double t_max,
                      const TraceOptions& options) {
  if (!(ray.p.norm() > 0.0) || !ray.p.allFinite()) throw ValidationError("ray direction must be a nonzero vector");
  if (!(t_max > 0.0)) throw ValidationError("t_max must be positive");
  if (!grid.domain().contains(ray.x, 1e-12)) throw ValidationError("ray must start in the closed domain");
  if (target != nullptr && target->cells.size() != grid.cell_count()) {
    throw ValidationError("target mask does not match grid");
  }
  if (grid.domain().speed().uniform) return trace_uniform(grid, ray, target, t_max, options);
  return trace_variable(grid, ray, target, t_max, options);
}

std::vector<RayInit> sample_rays(const Grid& grid, const Sampler& s) {
  if (s.positions_x < 1 || s.positions_y < 1 || s.directions < 1) throw ValidationError("sampler must be nonempty");
  const Domain& dom = grid.domain();
  const Vec2 lo = dom.lower();
  const double W = dom.width();
  const double H = dom.height();
  std::vector<RayInit> out;
  out.reserve(static_cast<std::size_t>(s.positions_x) * s.positions_y * s.directions);
  for (int j = 0; j < s.positions_y; ++j) {
    for (int i = 0; i < s.positions_x; ++i) {
      const Vec2 x = lo + Vec2((i + 0.5) / s.positions_x * W, (j + 0.5) / s.positions_y * H);
      if (!dom.contains(x, 0.0)) continue;
      for (int k = 0; k < s.directions; ++k) {
        const double a = 2.0 * std::numbers::pi * k / s.directions;
        out.push_back({x, Vec2(std::cos(a), std::sin(a))});
      }
    }
  }
  if (!s.adversarial) return out;
  auto add = [&](const Vec2& x, const Vec2& dir) {
    if (dom.contains(x, 0.0)) out.push_back({x, dir.normalized()});
  };
  for (double f : {0.25, 0.5, 0.75}) {
    for (double g : {0.25, 0.5, 0.75}) {
      const Vec2 x = lo + Vec2(f * W, g * H);
      add(x, Vec2(0, 1));
      add(x, Vec2(0, -1));
      add(x, Vec2(1, 0));
      add(x, Vec2(-1, 0));
      add(x, Vec2(1, 1));
      add(x, Vec2(-1, 1));
      add(x, Vec2(1, -1));
      add(x, Vec2(-1, -1));
    }
  }
  // Near-grazing rays along every edge, just inside.
  const auto& v = dom.vertices();
  const double gap = 1e-6 * grid.h();
  for (std::size_t e = 0; e < v.size(); ++e) {
    const Vec2 a = v[e];
    const Vec2 b = v[(e + 1) % v.size()];
    const Vec2 inward = -dom.edge_normal(e);
    const Vec2 t = (b - a).normalized();
    for (double f : {0.25, 0.5, 0.75}) {
      const Vec2 x = a + f * (b - a) + gap * inward;
      add(x, t);
      add(x, -t);
      add(x, t + 1e-4 * inward);
      add(x, -t + 1e-4 * inward);
    }
  }
  return out;
}

GccReport check_gcc(const Grid& grid, const ControlRegion& omega, double T, const std::vector<RayInit>& rays) {
  if (!(T > 0.0)) throw ValidationError("control time T must be positive");
  if (rays.empty()) throw ValidationError("sampler produced no rays");
  struct Outcome {
    bool hit = false;
    bool corner = false;
    double time = 0.0;
  };
  std::vector<Outcome> outcomes(rays.size());
  parallel_for(rays.size(), [&](std::size_t i) {
    const TraceResult tr = trace_ray(grid, {rays[i].x, rays[i].dir, 0.0}, &omega, T);
    outcomes[i].hit = tr.first_hit_time.has_value();
    outcomes[i].time = tr.first_hit_time.value_or(0.0);
    outcomes[i].corner = !outcomes[i].hit && tr.terminated_at_corner;
  });
  GccReport rep;
  rep.T = T;
  rep.samples = rays.size();
  for (std::size_t i = 0; i < rays.size(); ++i) {
    const Outcome& o = outcomes[i];
    if (o.hit) {
      ++rep.hits;
      if (o.time >= rep.T_hat) {
        rep.T_hat = o.time;
        rep.worst = rays[i];
      }
    } else if (o.corner) {
      ++rep.corner_terminated;
    } else {
      rep.trapped.push_back(rays[i]);
    }
  }
  const std::size_t decided = rep.hits + rep.trapped.size();
  rep.hit_fraction = decided > 0 ? static_cast<double>(rep.hits) / decided : 0.0;
  rep.pass = rep.trapped.empty() && rep.hits > 0;
  if (!rep.trapped.empty()) rep.worst = rep.trapped.front();
  return rep;
}

GccReport check_gcc(const Grid& grid, const ControlRegion& omega, double T, const Sampler& sampler) {
  return check_gcc(grid, omega, T, sample_rays(grid, sampler));
}

PotentialConditionReport check_escape_potential_condition(const EscapePotential& d, const SegmentMask& gamma,
                                                          double T, const Grid& grid, double tol,
                                                          const CellMask* where) {
  const auto& segs = grid.boundary_segments();
  if (gamma.size() != segs.size()) throw ValidationError("boundary arc mask does not match grid");
  PotentialConditionReport rep = bulk_conditions(d, T, grid, tol, where);
  for (std::size_t s = 0; s < segs.size(); ++s) {
    if (!segment_selected(segs[s], where)) continue;
    if (max_normal_derivative(d, segs[s]) > tol && !gamma[s]) rep.offending_segments.push_back(s);
  }
  rep.boundary_ok = rep.offending_segments.empty();
  return rep;
}

PotentialConditionReport check_obstacle_condition(const EscapePotential& d, const SegmentMask& gamma0, double T,
                                                  const Grid& grid, double tol, const CellMask* where) {
  const auto& segs = grid.boundary_segments();
  if (gamma0.size() != segs.size()) throw ValidationError("boundary arc mask does not match grid");
  PotentialConditionReport rep = bulk_conditions(d, T, grid, tol, where);
  for (std::size_t s = 0; s < segs.size(); ++s) {
    if (!gamma0[s] || !segment_selected(segs[s], where)) continue;
    if (max_normal_derivative(d, segs[s]) > tol) rep.offending_segments.push_back(s);
  }
  rep.boundary_ok = rep.offending_segments.empty();
  return rep;
}

ControlTime gcc_time_from_potential(const EscapePotential& d, const Grid& grid, const CellMask* where) {
  double g = 0.0;
  double g_min = std::numeric_limits<double>::infinity();
  sample_cells(grid, where, [&](const Vec2& x) {
    const double n = metric_gradient_norm(d, x, d.evaluate(x));
    g = std::max(g, n);
    g_min = std::min(g_min, n);
  });
  return {2.0 * g, g > 0.0 && g_min > 0.0};
}

ControlTime gcc_time_from_potential(const OverlapDecomposition& dec, const Grid& grid) {
  ControlTime out{0.0, !dec.d.empty()};
  for (std::size_t j = 0; j < dec.d.size(); ++j) {
    const ControlTime tj = gcc_time_from_potential(dec.d[j], grid, &dec.omega[j]);
    out.T = std::max(out.T, tj.T);
    out.valid = out.valid && tj.valid;
  }
  return out;
}

BoundaryPartition boundary_partition(const EscapePotential& d, const Grid& grid) {
  const auto& segs = grid.boundary_segments();
  BoundaryPartition p;
  p.gamma0.assign(segs.size(), 0);
  p.gamma1.assign(segs.size(), 0);
  for (std::size_t s = 0; s < segs.size(); ++s) {
    const Vec2 m = segs[s].midpoint();
    const bool in0 = d.evaluate(m).grad.dot(segs[s].normal) <= 0.0;
    p.gamma0[s] = in0 ? 1 : 0;
    p.gamma1[s] = in0 ? 0 : 1;
  }
  return p;
}

BoundaryPartition boundary_partition(const OverlapDecomposition& dec, const Grid& grid) {
  const auto& segs = grid.boundary_segments();
  BoundaryPartition p;
  p.gamma0.assign(segs.size(), 0);
  p.gamma1.assign(segs.size(), 0);
  for (std::size_t s = 0; s < segs.size(); ++s) {
    const Vec2 m = segs[s].midpoint();
    bool in0 = false;
    for (std::size_t j = 0; j < dec.d.size(); ++j) {
      if (!segment_selected(segs[s], &dec.omega[j])) continue;
      in0 = in0 || dec.d[j].evaluate(m).grad.dot(segs[s].normal) <= 0.0;
    }
    p.gamma0[s] = in0 ? 1 : 0;
    p.gamma1[s] = in0 ? 0 : 1;
  }
  return p;
}

}  // namespace gcl
