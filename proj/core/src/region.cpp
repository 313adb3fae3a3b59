#include "gcl/region.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "gcl/smooth_step.hpp"

namespace gcl {

ControlRegion ControlRegion::from_cells(const Grid& grid, CellMask cells, std::string name) {
  if (cells.size() != grid.cell_count()) throw ValidationError("cell mask size does not match grid");
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (!grid.cell_inside(c)) cells[c] = 0;
  }
  ControlRegion r;
  r.segments = boundary_trace(cells, grid);
  r.cells = std::move(cells);
  r.name = std::move(name);
  return r;
}

ControlRegion ControlRegion::empty(const Grid& grid) {
  return from_cells(grid, CellMask(grid.cell_count(), 0), "empty");
}

ControlRegion ControlRegion::whole(const Grid& grid) {
  return from_cells(grid, CellMask(grid.cell_count(), 1), "whole");
}

std::size_t ControlRegion::cell_count() const {
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), std::uint8_t{1}));
}

MeasurePair measure(const ControlRegion& region, const Grid& grid) {
  return measure(region.cells, region.segments, grid);
}

ControllabilityResult check_epsilon_controllable(const ControlRegion& region, double epsilon, const Grid& grid) {
  ControllabilityResult r;
  r.measures = measure(region, grid);
  r.controllable = r.measures.sum() < epsilon;
  return r;
}

// ---------------------------------------------------------------------------------------------
// Escape potential

EscapeSample chart_value(const Chart& chart, const Vec2& x) {
  EscapeSample s;
  const Vec2 r = x - chart.origin;
  s.value = 0.5 * r.squaredNorm() + chart.m;
  s.grad = r;
  s.hess = Mat2::Identity();
  if (chart.type == ChartType::boundary) {
    s.value += chart.axis.dot(r);
    s.grad += chart.axis;
  }
  return s;
}

EscapePotential::EscapePotential(std::vector<Chart> charts, SpeedField speed)
    : charts_(std::move(charts)), speed_(std::move(speed)) {}

EscapePotential EscapePotential::interior_chart(const Vec2& p, double m, SpeedField speed) {
  if (!(m > 0.0)) throw ValidationError("chart offset m must be positive");
  Chart c;
  c.type = ChartType::interior;
  c.origin = p;
  c.m = m;
  return EscapePotential({c}, std::move(speed));
}

EscapePotential EscapePotential::boundary_chart(const Vec2& q, const Vec2& inward_axis, double m,
                                                SpeedField speed) {
  if (!(m > 0.0)) throw ValidationError("chart offset m must be positive");
  if (!(inward_axis.norm() > 0.0)) throw ValidationError("boundary chart axis must be nonzero");
  Chart c;
  c.type = ChartType::boundary;
  c.origin = q;
  c.axis = inward_axis.normalized();
  c.m = m;
  return EscapePotential({c}, std::move(speed));
}

EscapePotential EscapePotential::custom(std::function<EscapeSample(const Vec2&)> fn, SpeedField speed) {
  EscapePotential d;
  d.custom_ = std::move(fn);
  d.speed_ = std::move(speed);
  return d;
}

namespace {

// Product of the cutoff factors of the two opposite sides along one axis.
Jet axis_cutoff(double x, double lo, double hi, bool cut_lo, bool cut_hi, double tau) {
  Jet out{1.0, 0.0, 0.0};
  const double width = 0.75 * tau;
  auto mul = [&out](const Jet& f) {
    out = Jet{out.v * f.v, out.d1 * f.v + out.v * f.d1, out.d2 * f.v + 2.0 * out.d1 * f.d1 + out.v * f.d2};
  };
  if (cut_lo) {
    const Jet s = smooth_step((x - lo - tau / 8.0) / width);
    mul(Jet{s.v, s.d1 / width, s.d2 / (width * width)});
  }
  if (cut_hi) {
    const Jet s = smooth_step((hi - x - tau / 8.0) / width);
    mul(Jet{s.v, -s.d1 / width, s.d2 / (width * width)});
  }
  return out;
}

}  // namespace

EscapeSample EscapePotential::cutoff(std::size_t j, const Vec2& x) const {
  const Chart& c = charts_.at(j);
  const Jet fx = axis_cutoff(x.x(), c.W.lo.x(), c.W.hi.x(), c.internal[0], c.internal[1], c.tau);
  const Jet fy = axis_cutoff(x.y(), c.W.lo.y(), c.W.hi.y(), c.internal[2], c.internal[3], c.tau);
  EscapeSample s;
  s.value = fx.v * fy.v;
  s.grad = Vec2(fx.d1 * fy.v, fx.v * fy.d1);
  s.hess << fx.d2 * fy.v, fx.d1 * fy.d1, fx.d1 * fy.d1, fx.v * fy.d2;
  return s;
}

EscapeSample EscapePotential::evaluate(const Vec2& x) const {
  if (custom_) return custom_(x);
  EscapeSample out;
  for (std::size_t j = 0; j < charts_.size(); ++j) {
    const EscapeSample rho = cutoff(j, x);
    if (rho.value == 0.0 && rho.grad.isZero(0.0) && rho.hess.isZero(0.0)) continue;
    const EscapeSample dj = chart_value(charts_[j], x);
    out.value += rho.value * dj.value;
    out.grad += rho.value * dj.grad + dj.value * rho.grad;
    out.hess += rho.value * dj.hess + rho.grad * dj.grad.transpose() + dj.grad * rho.grad.transpose() +
                dj.value * rho.hess;
  }
  return out;
}

EscapeSample eval_escape(const EscapePotential& d, const Vec2& x, const Domain& domain) {
  if (!domain.contains(x, 1e-12)) {
    std::ostringstream os;
    os << "point (" << x.x() << ", " << x.y() << ") lies outside the domain";
    throw ValidationError(os.str());
  }
  return d.evaluate(x);
}

double metric_gradient_norm(const EscapePotential& d, const Vec2& x, const EscapeSample& s) {
  return d.speed()(x) * s.grad.norm();
}

double metric_hessian_min_eig(const EscapePotential& d, const Vec2& x, const EscapeSample& s) {
  const SpeedField& sp = d.speed();
  if (sp.uniform) {
    const double c2 = sp.c_min * sp.c_min;
    Eigen::SelfAdjointEigenSolver<Mat2> es(c2 * s.hess);
    return es.eigenvalues()(0);
  }
  const double c = sp(x);
  const Vec2 dsigma = -sp.grad(x) / c;
  Mat2 hg = s.hess - (dsigma * s.grad.transpose() + s.grad * dsigma.transpose()) +
            dsigma.dot(s.grad) * Mat2::Identity();
  Eigen::SelfAdjointEigenSolver<Mat2> es(c * c * hg);
  return es.eigenvalues()(0);
}

EscapeReport verify_escape_conditions(const EscapePotential& d, const CellMask& v_mask, const Grid& grid,
                                      double tol) {
  if (v_mask.size() != grid.cell_count()) throw ValidationError("V mask size does not match grid");
  EscapeReport rep;
  rep.d2.worst = std::numeric_limits<double>::infinity();
  rep.d3.worst = std::numeric_limits<double>::infinity();
  rep.min_value = std::numeric_limits<double>::infinity();
  rep.d4.worst = -std::numeric_limits<double>::infinity();
  const double h = grid.h();
  const Vec2 offsets[5] = {Vec2(0, 0), Vec2(-0.5 * h, -0.5 * h), Vec2(0.5 * h, -0.5 * h), Vec2(-0.5 * h, 0.5 * h),
                           Vec2(0.5 * h, 0.5 * h)};
  auto finite = [](const EscapeSample& s) {
    return std::isfinite(s.value) && s.grad.allFinite() && s.hess.allFinite();
  };
  for (std::size_t c = 0; c < v_mask.size(); ++c) {
    if (!v_mask[c] || !grid.cell_inside(c)) continue;
    for (const Vec2& off : offsets) {
      const Vec2 x = grid.cell_center(c) + off;
      if (!grid.domain().contains(x, 1e-12)) continue;
      const EscapeSample s = d.evaluate(x);
      ++rep.d1.samples;
      if (!finite(s)) {
        rep.d1.pass = false;
        rep.d1.worst_point = x;
        continue;
      }
      const double eig = metric_hessian_min_eig(d, x, s);
      ++rep.d2.samples;
      if (eig < rep.d2.worst) {
        rep.d2.worst = eig;
        rep.d2.worst_point = x;
      }
      const double g = metric_gradient_norm(d, x, s);
      ++rep.d3.samples;
      if (g < rep.d3.worst) {
        rep.d3.worst = g;
        rep.d3.worst_point = x;
      }
      if (s.value < rep.min_value) {
        rep.min_value = s.value;
        if (!(s.value > 0.0)) rep.d3.worst_point = x;
      }
    }
  }
  for (const BoundarySegment& seg : grid.boundary_segments()) {
    if (seg.cell < 0 || !v_mask[static_cast<std::size_t>(seg.cell)]) continue;
    for (const Vec2& x : {seg.a, seg.midpoint(), seg.b}) {
      const EscapeSample s = d.evaluate(x);
      const double val = d.speed()(x) * s.grad.dot(seg.normal);
      ++rep.d4.samples;
      if (val > rep.d4.worst) {
        rep.d4.worst = val;
        rep.d4.worst_point = x;
      }
    }
  }
  rep.d2.pass = rep.d2.samples == 0 || rep.d2.worst >= 1.0 - tol;
  rep.d3.pass = rep.d3.samples == 0 || (rep.d3.worst > tol && rep.min_value > 0.0);
  rep.d4.pass = rep.d4.samples == 0 || rep.d4.worst < -tol;
  if (rep.d2.samples == 0) rep.d2.worst = 0.0;
  if (rep.d3.samples == 0) rep.d3.worst = 0.0;
  if (rep.d4.samples == 0) rep.d4.worst = 0.0;
  if (rep.d3.samples == 0) rep.min_value = 0.0;
  return rep;
}

// ---------------------------------------------------------------------------------------------
// Admissible construction

namespace {

// Length of R's intersection with the boundary of the box [0,W] x [0,H].
double boundary_length(const Rect& r, double W, double H) {
  double len = 0.0;
  const double wx = r.hi.x() - r.lo.x();
  const double wy = r.hi.y() - r.lo.y();
  if (r.lo.y() <= 0.0) len += wx;
  if (r.hi.y() >= H) len += wx;
  if (r.lo.x() <= 0.0) len += wy;
  if (r.hi.x() >= W) len += wy;
  return len;
}

Rect shrink(const Rect& w, const std::array<bool, 4>& internal, double amount) {
  Rect r = w;
  if (internal[0]) r.lo.x() += amount;
  if (internal[1]) r.hi.x() -= amount;
  if (internal[2]) r.lo.y() += amount;
  if (internal[3]) r.hi.y() -= amount;
  return r;
}

std::vector<double> seam_positions(int parts, int cells, double h) {
  std::vector<double> out;
  int prev = -1;
  for (int a = 1; a < parts; ++a) {
    const double target = static_cast<double>(a) * cells / parts;  // in cells
    const int i = static_cast<int>(std::floor(target - 0.5 + 1e-9));
    if (i <= prev + 1 || i >= cells - 1) throw ValidationError("grid too coarse for the requested chart count");
    out.push_back((i + 0.5) * h);
    prev = i;
  }
  return out;
}

struct Budget {
  MeasurePair cc;
  MeasurePair ocv;
  std::vector<MeasurePair> shells;
};

}  // namespace

AdmissibleRegion build_admissible_region(const Grid& grid, double epsilon, double epsilon0, int k) {
  const Domain& dom = grid.domain();
  if (!dom.is_rectangle()) throw ValidationError("admissible construction supports rectangular domains only");
  if (!(epsilon > 0.0) || !(epsilon0 > 0.0)) throw ValidationError("epsilon and epsilon0 must be positive");
  if (!(epsilon0 < epsilon)) throw ValidationError("epsilon0 must be smaller than epsilon");
  if (k < 1) throw ValidationError("chart count k must be at least 1");

  const double W = dom.width();
  const double H = dom.height();
  int kx = 0;
  int ky = 0;
  double best = std::numeric_limits<double>::infinity();
  for (int a = 2; a <= k / 2; ++a) {
    if (k % a != 0 || k / a < 2) continue;
    const double mismatch = std::abs(std::log(static_cast<double>(a) / (k / a)) - std::log(W / H));
    if (mismatch < best - 1e-12) {
      best = mismatch;
      kx = a;
      ky = k / a;
    }
  }
  if (kx == 0) {
    std::ostringstream os;
    os << "chart count k = " << k
       << " cannot be split as kx * ky with kx, ky >= 2 (boundary charts need a corner or a single edge)";
    throw ValidationError(os.str());
  }

  const double h = grid.h();
  AdmissibleRegion out;
  out.kx = kx;
  out.ky = ky;
  out.seams_x = seam_positions(kx, grid.nx(), h);
  out.seams_y = seam_positions(ky, grid.ny(), h);

  CellMask omega(grid.cell_count(), 0);
  for (std::size_t c = 0; c < omega.size(); ++c) {
    const Vec2 x = grid.cell_center(c);
    for (double s : out.seams_x) omega[c] |= std::abs(x.x() - s) < 0.25 * h ? 1 : 0;
    for (double s : out.seams_y) omega[c] |= std::abs(x.y() - s) < 0.25 * h ? 1 : 0;
  }
  ControlRegion region = ControlRegion::from_cells(grid, omega, "admissible");
  const MeasurePair om = measure(region, grid);

  std::vector<double> xs{0.0};
  xs.insert(xs.end(), out.seams_x.begin(), out.seams_x.end());
  xs.push_back(W);
  std::vector<double> ys{0.0};
  ys.insert(ys.end(), out.seams_y.begin(), out.seams_y.end());
  ys.push_back(H);

  std::vector<Chart> charts;
  for (int b = 0; b < ky; ++b) {
    for (int a = 0; a < kx; ++a) {
      Chart c;
      c.W.lo = Vec2(xs[a], ys[b]);
      c.W.hi = Vec2(xs[a + 1], ys[b + 1]);
      c.internal = {a > 0, a < kx - 1, b > 0, b < ky - 1};
      c.m = 1.0;
      Vec2 inward = Vec2::Zero();
      if (!c.internal[0]) inward += Vec2(1, 0);
      if (!c.internal[1]) inward += Vec2(-1, 0);
      if (!c.internal[2]) inward += Vec2(0, 1);
      if (!c.internal[3]) inward += Vec2(0, -1);
      const int external = 4 - static_cast<int>(std::count(c.internal.begin(), c.internal.end(), true));
      if (external == 0) {
        c.type = ChartType::interior;
        c.origin = c.W.lo - Vec2(2.0 * h, 2.0 * h);
      } else {
        c.type = ChartType::boundary;
        c.axis = inward.normalized();
        const Vec2 mid = c.W.center();
        c.origin = Vec2(c.internal[0] && c.internal[1] ? mid.x() : (c.internal[0] ? W : 0.0),
                        c.internal[2] && c.internal[3] ? mid.y() : (c.internal[2] ? H : 0.0));
      }
      charts.push_back(c);
    }
  }

  const int nv = kx - 1;
  const int nh = ky - 1;
  auto budget_for = [&](double tau) {
    Budget bd;
    const double s = 7.0 * tau / 8.0;
    bd.cc.interior = W * H - (W - nv * 2.0 * s) * (H - nh * 2.0 * s);
    bd.cc.boundary = 4.0 * s * (nv + nh);
    bd.ocv.interior = om.interior - bd.cc.interior;
    bd.ocv.boundary = om.boundary - bd.cc.boundary;
    for (const Chart& c : charts) {
      const Rect u = shrink(c.W, c.internal, tau);
      bd.shells.push_back({c.W.area() - u.area(), boundary_length(c.W, W, H) - boundary_length(u, W, H)});
    }
    return bd;
  };
  const double shell_cap = epsilon0 / (2.0 * k);
  auto feasible = [&](const Budget& bd) {
    if (!(om.sum() < epsilon)) return false;
    if (!(bd.cc.sum() < epsilon0)) return false;
    if (!(bd.ocv.sum() < epsilon - epsilon0)) return false;
    for (const MeasurePair& m : bd.shells) {
      if (!(m.interior < shell_cap) || !(m.boundary < shell_cap)) return false;
    }
    return true;
  };

  double tau = 0.0;
  Budget chosen;
  double min_eps = std::numeric_limits<double>::infinity();
  const double ratio = epsilon0 / epsilon;
  for (int p = 1; p <= 40; ++p) {
    const double t = h / std::ldexp(1.0, p);
    const Budget bd = budget_for(t);
    double need = std::max({om.sum() * (1.0 + 1e-12), bd.cc.sum() / ratio, bd.ocv.sum() / (1.0 - ratio)});
    for (const MeasurePair& m : bd.shells) need = std::max(need, 2.0 * k * std::max(m.interior, m.boundary) / ratio);
    min_eps = std::min(min_eps, need);
    if (feasible(bd)) {
      tau = t;
      chosen = bd;
      break;
    }
  }
  if (tau == 0.0) {
    std::ostringstream os;
    os.precision(6);
    os << "budget infeasible at h = " << h << ": omega measures " << om.sum()
       << "; minimal feasible epsilon at this resolution is about " << min_eps << " (epsilon0/epsilon = " << ratio
       << ")";
    throw ValidationError(os.str());
  }

  for (Chart& c : charts) {
    c.tau = tau;
    c.U = shrink(c.W, c.internal, tau);
    c.V = shrink(c.W, c.internal, 7.0 * tau / 8.0);
  }
  out.tau = tau;
  out.closure_complement = chosen.cc;
  out.omega_cap_v = chosen.ocv;
  out.shells = chosen.shells;

  out.V.assign(grid.cell_count(), 0);
  for (std::size_t c = 0; c < out.V.size(); ++c) {
    const Vec2 x = grid.cell_center(c);
    for (const Chart& ch : charts) {
      if (ch.V.contains(x)) out.V[c] = 1;
    }
  }
  region.epsilon = epsilon;
  region.epsilon0 = epsilon0;
  region.provenance = Provenance::admissible;
  out.omega = std::move(region);
  out.d = EscapePotential(std::move(charts), dom.speed());
  return out;
}

bool OverlapDecomposition::pass() const {
  bool ok = covers && meets_omega && v_inside;
  for (const auto& r : reports) ok = ok && r.pass();
  return ok;
}

OverlapDecomposition build_overlap_decomposition(const Grid& grid, const AdmissibleRegion& region, double tol) {
  OverlapDecomposition dec;
  const double h = grid.h();
  const auto& charts = region.d.charts();
  if (charts.empty()) throw ValidationError("region has no charts");
  for (const Chart& ch : charts) {
    Rect grown{ch.W.lo - Vec2(h, h), ch.W.hi + Vec2(h, h)};
    CellMask mask(grid.cell_count(), 0);
    for (std::size_t c = 0; c < mask.size(); ++c) {
      if (grid.cell_inside(c) && grown.contains(grid.cell_center(c), 1e-12 * h)) mask[c] = 1;
    }
    Chart bare = ch;
    bare.internal = {false, false, false, false};
    dec.d.emplace_back(std::vector<Chart>{bare}, region.d.speed());
    dec.omega.push_back(std::move(mask));
    dec.V.push_back(ch.V);
  }
  const std::size_t k = dec.omega.size();
  std::vector<int> degree(k, 0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      bool meet = false;
      for (std::size_t c = 0; c < grid.cell_count() && !meet; ++c) meet = dec.omega[i][c] && dec.omega[j][c];
      if (meet) {
        dec.edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
        ++degree[i];
        ++degree[j];
      }
    }
  }
  if (k > 1) {
    for (std::size_t i = 0; i < k; ++i) {
      if (degree[i] == 0) {
        std::ostringstream os;
        os << "sub-domain " << i << " overlaps no other sub-domain";
        throw ValidationError(os.str());
      }
    }
  }
  dec.covers = true;
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    if (!grid.cell_inside(c)) continue;
    bool any = false;
    for (const auto& m : dec.omega) any = any || m[c];
    dec.covers = dec.covers && any;
  }
  dec.meets_omega = true;
  dec.v_inside = true;
  for (std::size_t j = 0; j < k; ++j) {
    bool meet = false;
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
      meet = meet || (dec.omega[j][c] && region.omega.cells[c]);
      if (dec.V[j].contains(grid.cell_center(c)) && !dec.omega[j][c]) dec.v_inside = false;
    }
    dec.meets_omega = dec.meets_omega && meet;
    dec.reports.push_back(verify_escape_conditions(dec.d[j], dec.omega[j], grid, tol));
  }
  return dec;
}

// ---------------------------------------------------------------------------------------------
// Presets

namespace {

ControlRegion cells_where(const Grid& grid, const std::function<bool(const Vec2&)>& pred, std::string name) {
  CellMask m(grid.cell_count(), 0);
  for (std::size_t c = 0; c < m.size(); ++c) m[c] = pred(grid.cell_center(c)) ? 1 : 0;
  return ControlRegion::from_cells(grid, std::move(m), std::move(name));
}

}  // namespace

ControlRegion preset_frame(const Grid& grid, double width) {
  const Domain& d = grid.domain();
  return cells_where(grid, [&](const Vec2& x) { return d.boundary_distance(x) < width; }, "omega1");
}

ControlRegion preset_cross(const Grid& grid, double width) {
  const Vec2 mid = 0.5 * (grid.domain().lower() + grid.domain().upper());
  return cells_where(
      grid, [&](const Vec2& x) { return std::abs(x.x() - mid.x()) < 0.5 * width || std::abs(x.y() - mid.y()) < 0.5 * width; },
      "omega2");
}

ControlRegion preset_strip(const Grid& grid, double width) {
  const double x0 = grid.domain().lower().x();
  return cells_where(grid, [&](const Vec2& x) { return x.x() - x0 <= width; }, "omega3");
}

ControlRegion preset_corner_patch(const Grid& grid, double side) {
  const Vec2 lo = grid.domain().lower();
  return cells_where(grid, [&](const Vec2& x) { return x.x() - lo.x() < side && x.y() - lo.y() < side; },
                     "corner");
}

ControlRegion preset(const Grid& grid, const std::string& name) {
  if (name == "omega1") return preset_frame(grid);
  if (name == "omega2") return preset_cross(grid);
  if (name == "omega3") return preset_strip(grid);
  throw ValidationError("unknown preset '" + name + "' (expected omega1, omega2 or omega3)");
}

}  // namespace gcl
