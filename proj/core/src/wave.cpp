#include "gcl/wave.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace gcl {

PotentialPair PotentialPair::constant(double p0, double p1) {
  PotentialPair p;
  p.p0 = p0;
  p.p1 = p1;
  p.p1_bound = std::abs(p1);
  p.C_T = std::abs(p0);
  return p;
}

DampingCoefficient DampingCoefficient::none(const Grid& grid) {
  DampingCoefficient d;
  d.a.assign(grid.node_count(), 0.0);
  d.omega = ControlRegion::empty(grid);
  return d;
}

DampingCoefficient DampingCoefficient::indicator(const Grid& grid, const ControlRegion& omega, double a0) {
  if (!(a0 >= 0.0) || !std::isfinite(a0)) throw ValidationError("damping floor a0 must be nonnegative");
  if (omega.cells.size() != grid.cell_count()) throw ValidationError("damping region does not match grid");
  DampingCoefficient d;
  d.a.assign(grid.node_count(), 0.0);
  d.a0 = a0;
  d.omega = omega;
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    if (!omega.cells[c]) continue;
    const int i = grid.cell_i(c);
    const int j = grid.cell_j(c);
    for (const std::size_t n : {grid.node(i, j), grid.node(i + 1, j), grid.node(i, j + 1), grid.node(i + 1, j + 1)}) {
      d.a[n] = a0;
    }
  }
  return d;
}

DampingCoefficient DampingCoefficient::uniform(const Grid& grid, double a0) {
  return indicator(grid, ControlRegion::whole(grid), a0);
}

bool DampingCoefficient::active() const {
  return std::any_of(a.begin(), a.end(), [](double v) { return v != 0.0; });
}

double EnergyTrace::relative_drift() const {
  if (staggered.empty()) return 0.0;
  const double e0 = staggered.front();
  double d = 0.0;
  for (double e : staggered) d = std::max(d, std::abs(e - e0));
  return e0 > 0.0 ? d / e0 : d;
}

double EnergyTrace::residual_rate() const {
  if (staggered.empty()) return 0.0;
  double acc = 0.0;
  for (double r : residual) acc += std::abs(r);
  const double span = std::max(t.back() - t.front(), dt);
  const double e0 = staggered.front();
  return (e0 > 0.0 ? acc / e0 : acc) / span;
}

bool EnergyTrace::non_increasing(double tol) const {
  if (staggered.empty()) return true;
  const double scale = std::max(std::abs(staggered.front()), 1e-300);
  for (std::size_t n = 1; n < staggered.size(); ++n) {
    if (staggered[n] > staggered[n - 1] + tol * scale) return false;
  }
  return true;
}

namespace {

// Sum over edges of w_e (a_p - a_q)(b_p - b_q).
double gradient_product(const Stencil& st, std::span<const double> a, std::span<const double> b) {
  double e = 0.0;
  for (int j = 0; j <= st.ny; ++j) {
    for (int i = 0; i <= st.nx; ++i) {
      const std::size_t n = st.node(i, j);
      if (i < st.nx) e += st.east[n] * (a[n + 1] - a[n]) * (b[n + 1] - b[n]);
      if (j < st.ny) {
        const std::size_t m = n + st.nx + 1;
        e += st.north[n] * (a[m] - a[n]) * (b[m] - b[n]);
      }
    }
  }
  return e;
}

void check_field(const Grid& grid, const std::vector<double>& f, const char* what) {
  if (f.size() != grid.node_count()) {
    std::ostringstream os;
    os << what << " has " << f.size() << " values, expected " << grid.node_count();
    throw ValidationError(os.str());
  }
  for (double v : f) {
    if (!std::isfinite(v)) throw ValidationError(std::string(what) + " is not finite");
  }
}

}  // namespace

WaveStepper::WaveStepper(const Grid& grid, const Stencil& stencil, std::vector<double> u0, std::vector<double> u1,
                         WaveProblem problem, double dt)
    : grid_(&grid), st_(&stencil), problem_(std::move(problem)), dt_(dt) {
  check_field(grid, u0, "initial displacement");
  check_field(grid, u1, "initial velocity");
  if (!(dt > 0.0)) throw ValidationError("time step must be positive");
  if (!problem_.damping.empty()) {
    if (problem_.damping.size() != grid.node_count()) throw ValidationError("damping size does not match grid");
    for (double a : problem_.damping) {
      if (!(a >= 0.0)) throw ValidationError("damping coefficient must be nonnegative");
    }
  }
  const std::size_t nn = grid.node_count();
  for (std::size_t n = 0; n < nn; ++n) {
    if (!st_->free[n]) {
      u0[n] = 0.0;
      u1[n] = 0.0;
    }
  }
  p0_.assign(nn, problem_.potentials.p0);
  p1_.assign(nn, problem_.potentials.p1);
  auto refresh = [&](double t) {
    if (!problem_.potentials.time_dependent()) return;
    for (std::uint32_t n : st_->free_nodes) {
      const Vec2 x = grid_->node_position(n);
      if (problem_.potentials.p0_fn) p0_[n] = problem_.potentials.p0_fn(x, t);
      if (problem_.potentials.p1_fn) p1_[n] = problem_.potentials.p1_fn(x, t);
    }
  };
  refresh(0.0);
  cur_ = std::move(u0);
  prev_.assign(nn, 0.0);
  next_.assign(nn, 0.0);
  vel_.assign(nn, 0.0);
  const Nonlinearity& nl = problem_.nl;
  for (std::uint32_t n : st_->free_nodes) {
    const double u = cur_[n];
    const double v = u1[n];
    const double a = problem_.damping.empty() ? 0.0 : problem_.damping[n];
    const double acc = st_->apply(cur_, n) + p0_[n] * u + p1_[n] * v - a * nl.g(v) - nl.f(u);
    prev_[n] = u - dt_ * v + 0.5 * dt_ * dt_ * acc;
  }
  compute_next();
}

void WaveStepper::compute_next() {
  const Nonlinearity& nl = problem_.nl;
  if (problem_.potentials.time_dependent()) {
    const double t = time();
    for (std::uint32_t n : st_->free_nodes) {
      const Vec2 x = grid_->node_position(n);
      if (problem_.potentials.p0_fn) p0_[n] = problem_.potentials.p0_fn(x, t);
      if (problem_.potentials.p1_fn) p1_[n] = problem_.potentials.p1_fn(x, t);
    }
  }
  const double dt = dt_;
  const bool linear = nl.source_free() && nl.damping == DampingKind::linear;
  for (std::uint32_t n : st_->free_nodes) {
    const double R = st_->apply(cur_, n) + p0_[n] * cur_[n];
    const double a = problem_.damping.empty() ? 0.0 : problem_.damping[n];
    const double base = 2.0 * (cur_[n] - prev_[n]) / (dt * dt) + R;
    const double y = prev_[n];
    double s;
    if (linear) {
      s = base / (2.0 / dt - p1_[n] + a * nl.m1);
    } else {
      s = (cur_[n] - prev_[n]) / dt;
      bool converged = false;
      for (int it = 0; it < 8; ++it) {
        const double x = y + 2.0 * dt * s;
        const double phi = 2.0 * s / dt - base - p1_[n] * s + a * nl.g(s) + nl.F_slope(x, y);
        const double dphi = 2.0 / dt - p1_[n] + a * nl.dg(s) + 2.0 * dt * nl.F_slope_dx(x, y);
        const double ds = phi / dphi;
        s -= ds;
        if (std::abs(ds) <= 1e-13 * (1.0 + std::abs(s))) {
          converged = true;
          break;
        }
      }
      if (!converged) {
        std::ostringstream os;
        os << "Newton iteration for the velocity did not converge in 8 iterations at step " << n_ << ", node "
           << n;
        throw NumericalError(os.str());
      }
    }
    if (!std::isfinite(s)) {
      std::ostringstream os;
      os << "non-finite field at step " << n_ << " (node " << n << ")";
      throw NumericalError(os.str());
    }
    vel_[n] = s;
    next_[n] = y + 2.0 * dt * s;
  }
}

void WaveStepper::advance() {
  std::swap(prev_, cur_);
  std::swap(cur_, next_);
  ++n_;
  compute_next();
}

double WaveStepper::energy() const { return 0.5 * h_norm2(cur_, vel_, *st_); }

double WaveStepper::potential_integral() const {
  if (problem_.nl.source_free()) return 0.0;
  double acc = 0.0;
  for (std::uint32_t n : st_->free_nodes) acc += problem_.nl.F(cur_[n]);
  return acc * st_->h * st_->h;
}

double WaveStepper::staggered_energy() const {
  const double h2 = st_->h * st_->h;
  double kin = 0.0;
  double pot = 0.0;
  for (std::uint32_t n : st_->free_nodes) {
    const double d = (next_[n] - cur_[n]) / dt_;
    kin += d * d;
    if (!problem_.nl.source_free()) pot += problem_.nl.F(next_[n]) + problem_.nl.F(cur_[n]);
  }
  return 0.5 * kin * h2 + 0.5 * gradient_product(*st_, next_, cur_) + 0.5 * pot * h2;
}

double WaveStepper::dissipation() const {
  if (problem_.damping.empty()) return 0.0;
  double acc = 0.0;
  for (std::uint32_t n : st_->free_nodes) {
    const double a = problem_.damping[n];
    if (a != 0.0) acc += a * problem_.nl.g(vel_[n]) * vel_[n];
  }
  return acc * st_->h * st_->h;
}

double WaveStepper::potential_work() const {
  double acc = 0.0;
  for (std::uint32_t n : st_->free_nodes) acc += p0_[n] * cur_[n] * vel_[n] + p1_[n] * vel_[n] * vel_[n];
  return acc * st_->h * st_->h;
}

double choose_time_step(const Grid& grid, const SolverConfig& config, int* steps) {
  if (!(config.T > 0.0) || !std::isfinite(config.T)) throw ValidationError("final time T must be positive");
  if (!(config.cfl > 0.0)) throw ValidationError("CFL number must be positive");
  if (config.cfl > 1.0 / std::sqrt(2.0) + 1e-12) {
    throw ValidationError("CFL number above 1/sqrt(2) is unstable for the 5-point leapfrog scheme");
  }
  const double limit = config.cfl * grid.h() / grid.domain().speed().c_max;
  double dt = config.dt > 0.0 ? config.dt : limit;
  if (dt > limit * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "time step " << dt << " violates dt <= CFL h / c_max = " << limit;
    throw ValidationError(os.str());
  }
  const int n = static_cast<int>(std::ceil(config.T / dt - 1e-9));
  if (steps != nullptr) *steps = n;
  return config.T / n;
}

Trajectory run(const Grid& grid, const WaveField& init, const WaveProblem& problem, const SolverConfig& config,
               const StepObserver& observer) {
  int steps = 0;
  const double dt = choose_time_step(grid, config, &steps);
  const Stencil st = build_stencil(grid);
  WaveStepper stepper(grid, st, init.u, init.v, problem, dt);
  Trajectory tr;
  tr.dt = dt;
  tr.steps = steps;
  tr.energy.dt = dt;
  EnergyTrace& e = tr.energy;
  const std::size_t count = static_cast<std::size_t>(steps) + 1;
  for (auto* v : {&e.t, &e.E, &e.total, &e.staggered, &e.dissipation, &e.residual, &e.norm2}) v->reserve(count);
  for (int n = 0; n <= steps; ++n) {
    const double E = stepper.energy();
    const double stag = stepper.staggered_energy();
    const double diss = stepper.dissipation();
    e.t.push_back(stepper.time());
    e.E.push_back(E);
    e.total.push_back(E + stepper.potential_integral());
    e.norm2.push_back(2.0 * E);
    e.dissipation.push_back(diss);
    e.residual.push_back(n == 0 ? 0.0 : stag - e.staggered.back() + dt * diss - dt * stepper.potential_work());
    e.staggered.push_back(stag);
    if (observer) observer(stepper);
    const bool output = n == 0 || n == steps || (config.output_every > 0 && n % config.output_every == 0);
    if (config.keep_frames && output) {
      tr.frames.push_back({std::vector<double>(stepper.u().begin(), stepper.u().end()),
                           std::vector<double>(stepper.v().begin(), stepper.v().end()), stepper.time()});
    }
    if (n < steps) stepper.advance();
  }
  return tr;
}

Trajectory solve_linear(const Grid& grid, const WaveField& init, const PotentialPair& potentials,
                        const SolverConfig& config, const StepObserver& observer) {
  WaveProblem p;
  p.potentials = potentials;
  return run(grid, init, p, config, observer);
}

Trajectory solve_semilinear(const Grid& grid, const WaveField& init, const DampingCoefficient& damping,
                            const Nonlinearity& nl, const SolverConfig& config, const StepObserver& observer) {
  const double lambda1 = first_dirichlet_eigenvalue(grid);
  const NonlinearityAudit audit = audit_nonlinearity(nl, lambda1);
  if (!audit.pass()) throw ValidationError("nonlinearity rejected: " + audit.failure);
  WaveProblem p;
  p.damping = damping.a;
  p.nl = nl;
  return run(grid, init, p, config, observer);
}

double h_norm2(std::span<const double> u, std::span<const double> v, const Stencil& st) {
  double kin = 0.0;
  for (std::uint32_t n : st.free_nodes) kin += v[n] * v[n];
  return kin * st.h * st.h + st.gradient_energy(u);
}

EnergyValue energy(const WaveField& field, const Grid& grid, const Nonlinearity* nl) {
  check_field(grid, field.u, "displacement");
  check_field(grid, field.v, "velocity");
  const Stencil st = build_stencil(grid);
  EnergyValue e;
  e.E = 0.5 * h_norm2(field.u, field.v, st);
  e.total = e.E;
  if (nl != nullptr) {
    double acc = 0.0;
    for (std::uint32_t n : st.free_nodes) acc += nl->F(field.u[n]);
    e.total += acc * grid.h() * grid.h();
  }
  return e;
}

EnergyBoundsReport energy_bounds_check(const EnergyTrace& trace, const Nonlinearity& nl, double lambda1) {
  if (trace.total.empty()) throw ValidationError("empty energy trace");
  if (!(lambda1 > 0.0)) throw ValidationError("lambda1 must be positive");
  EnergyBoundsReport r;
  // kappa = sup over z of -2 F(z) / z^2, so int F(u) >= -kappa/2 ||u||^2 >= -kappa/(2 lambda1) ||grad u||^2.
  double kappa = 0.0;
  for (int k = 1; k <= 4000; ++k) {
    const double z = 10.0 * k / 4000.0;
    kappa = std::max({kappa, -2.0 * nl.F(z) / (z * z), -2.0 * nl.F(-z) / (z * z)});
  }
  r.beta_construction = std::max(0.0, 0.5 * (1.0 - kappa / lambda1));
  const bool constructive = r.beta_construction > 0.0;
  r.beta = constructive ? r.beta_construction : 0.25;
  r.lower_ok = true;
  for (std::size_t n = 0; n < trace.total.size(); ++n) {
    const double need = r.beta * trace.norm2[n] - trace.total[n];
    if (!std::isfinite(need)) {
      r.lower_ok = false;
      r.violation_step = static_cast<int>(n);
      break;
    }
    if (constructive) {
      if (need > 1e-10 * std::max(1.0, trace.norm2[n])) {
        r.lower_ok = false;
        if (r.violation_step < 0) r.violation_step = static_cast<int>(n);
      }
    } else {
      r.C1 = std::max(r.C1, need);
    }
  }
  const double n0 = trace.norm2.front();
  r.upper_ok = true;
  for (std::size_t n = 0; n < trace.total.size(); ++n) {
    const double q = trace.norm2[n];
    r.C2 = std::max(r.C2, trace.total[n] / (1.0 + q * q));
    r.C0 = std::max(r.C0, trace.total[n] / (1.0 + n0 * n0));
  }
  r.upper_ok = std::isfinite(r.C2) && std::isfinite(r.C0);
  return r;
}

LipschitzReport lipschitz_dependence(const Grid& grid, const WaveField& z1, const WaveField& z2,
                                     const WaveProblem& problem, const SolverConfig& config, double norm_cap) {
  int steps = 0;
  const double dt = choose_time_step(grid, config, &steps);
  const Stencil st = build_stencil(grid);
  if (norm_cap > 0.0) {
    for (const WaveField* z : {&z1, &z2}) {
      if (h_norm2(z->u, z->v, st) > norm_cap * norm_cap) {
        throw ValidationError("initial datum lies outside the bounded set (norm cap)");
      }
    }
  }
  std::vector<double> du(grid.node_count());
  std::vector<double> dv(grid.node_count());
  for (std::size_t n = 0; n < du.size(); ++n) {
    du[n] = st.free[n] ? z1.u[n] - z2.u[n] : 0.0;
    dv[n] = st.free[n] ? z1.v[n] - z2.v[n] : 0.0;
  }
  LipschitzReport r;
  const double d0 = h_norm2(du, dv, st);
  if (d0 == 0.0) {
    r.degenerate = true;
    return r;
  }
  WaveStepper a(grid, st, z1.u, z1.v, problem, dt);
  WaveStepper b(grid, st, z2.u, z2.v, problem, dt);
  for (int n = 0; n <= steps; ++n) {
    for (std::size_t k = 0; k < du.size(); ++k) {
      du[k] = a.u()[k] - b.u()[k];
      dv[k] = a.v()[k] - b.v()[k];
    }
    const double ratio = h_norm2(du, dv, st) / d0;
    r.ratios.push_back(ratio);
    r.D_hat = std::max(r.D_hat, ratio);
    if (!(ratio <= 1e12)) {
      r.unstable = true;
      break;
    }
    if (n < steps) {
      a.advance();
      b.advance();
    }
  }
  return r;
}

std::vector<double> sample_nodal(const Grid& grid, const std::function<double(const Vec2&)>& fn) {
  std::vector<double> out(grid.node_count(), 0.0);
  for (std::size_t n = 0; n < out.size(); ++n) {
    if (grid.node_free(n)) out[n] = fn(grid.node_position(n));
  }
  return out;
}

}  // namespace gcl
