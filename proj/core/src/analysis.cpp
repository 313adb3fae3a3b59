#include "gcl/analysis.hpp"

#include <Eigen/SparseLU>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gcl/parallel.hpp"

namespace gcl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::size_t> region_cells(const Grid& grid, const ControlRegion& omega) {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    if (omega.cells[c] && grid.cell_inside(c)) out.push_back(c);
  }
  return out;
}

// Free nodes touching a closed omega cell.
std::vector<std::size_t> region_nodes(const Grid& grid, const std::vector<std::size_t>& cells) {
  std::vector<std::uint8_t> mark(grid.node_count(), 0);
  for (std::size_t c : cells) {
    const int i = grid.cell_i(c);
    const int j = grid.cell_j(c);
    for (const std::size_t n : {grid.node(i, j), grid.node(i + 1, j), grid.node(i, j + 1), grid.node(i + 1, j + 1)}) {
      mark[n] = 1;
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t n = 0; n < mark.size(); ++n) {
    if (mark[n] && grid.node_free(n)) out.push_back(n);
  }
  return out;
}

double region_gradient(const Stencil& st, std::span<const double> u, const Grid& grid,
                       const std::vector<std::size_t>& cells) {
  double e = 0.0;
  for (std::size_t c : cells) e += st.cell_gradient_energy(u, grid.cell_i(c), grid.cell_j(c));
  return e;
}

double l3_norm2(std::span<const double> w, const Stencil& st) {
  double acc = 0.0;
  for (std::uint32_t n : st.free_nodes) acc += std::abs(w[n]) * w[n] * w[n];
  return std::pow(acc * st.h * st.h, 2.0 / 3.0);
}

}  // namespace

std::vector<ObservationRecord> observe_ensemble(const Grid& grid, const ControlRegion& omega,
                                                const SegmentMask& gamma, const PotentialPair& potentials,
                                                const std::vector<WaveField>& ensemble,
                                                const ObservationOptions& options) {
  if (ensemble.empty()) throw ValidationError("observation ensemble is empty");
  if (omega.cells.size() != grid.cell_count()) throw ValidationError("control region does not match grid");
  const auto& segs = grid.boundary_segments();
  const bool use_gamma = std::any_of(gamma.begin(), gamma.end(), [](std::uint8_t b) { return b != 0; });
  if (use_gamma && gamma.size() != segs.size()) throw ValidationError("boundary arc mask does not match grid");
  SolverConfig config;
  config.T = options.T;
  config.cfl = options.cfl;
  config.keep_frames = false;
  int steps = 0;
  const double dt = choose_time_step(grid, config, &steps);
  const Stencil st = build_stencil(grid);
  const auto cells = region_cells(grid, omega);
  const auto nodes = region_nodes(grid, cells);
  const double h2 = grid.h() * grid.h();
  bool prism = use_gamma && options.prism_samples > 0;
  if (prism) {
    for (std::size_t s = 0; s < segs.size(); ++s) {
      if (gamma[s] && !omega.segments[s]) prism = false;
    }
  }
  const int stride = prism ? std::max(1, steps / options.prism_samples) : 0;

  std::vector<ObservationRecord> out(ensemble.size());
  parallel_for(ensemble.size(), [&](std::size_t k) {
    ObservationRecord& r = out[k];
    const WaveField& z = ensemble[k];
    if (h_norm2(z.u, z.v, st) == 0.0) {
      r.zero = true;
      return;
    }
    WaveProblem problem;
    problem.potentials = potentials;
    WaveStepper s(grid, st, z.u, z.v, problem, dt);
    std::vector<double> w(grid.node_count());
    for (int n = 0; n <= steps; ++n) {
      const double wt = (n == 0 || n == steps) ? 0.5 * dt : dt;
      const auto u = s.u();
      const auto v = s.v();
      const double interior = region_gradient(st, u, grid, cells);
      double kin = 0.0;
      double sup_omega = 0.0;
      for (std::size_t m : nodes) {
        kin += v[m] * v[m];
        sup_omega = std::max(sup_omega, std::abs(u[m]) + std::abs(v[m]));
      }
      double sup_all = 0.0;
      for (std::uint32_t m : st.free_nodes) sup_all = std::max(sup_all, std::abs(u[m]) + std::abs(v[m]));
      const double norm2 = h_norm2(u, v, st);
      r.interior += wt * interior;
      r.omega_energy += wt * (interior + kin * h2);
      r.global_energy += wt * norm2;
      r.omega_sup = std::max(r.omega_sup, sup_omega);
      r.global_sup = std::max(r.global_sup, sup_all);
      if (n == 0 || n == steps) r.endpoint_norm2 += norm2;
      if (n == steps) r.final_norm2 = norm2;
      if (use_gamma) {
        std::copy(u.begin(), u.end(), w.begin());
        const auto dn = normal_derivative(w, grid);
        double b = 0.0;
        for (std::size_t q = 0; q < segs.size(); ++q) {
          if (gamma[q]) b += dn[q] * dn[q] * segs[q].length;
        }
        r.boundary += wt * b;
        if (prism && (n % stride == 0) && interior > 0.0) {
          const PrismResult pr = prism_bound_check(gamma, omega, gradient_density(w, grid), grid,
                                                   TraceModel::normal_derivative);
          r.prism_chain = r.prism_chain && pr.chain_holds;
          r.prism_C_g = std::max(r.prism_C_g, pr.C_g_max);
          r.prism_boundary += pr.boundary_integral;
          r.prism_interior += pr.interior_integral;
        }
      }
      if (n < steps) s.advance();
    }
  });
  return out;
}

ObservabilityReport interior_observability(const std::vector<ObservationRecord>& records, double T,
                                           double threshold) {
  ObservabilityReport rep;
  rep.T = T;
  rep.threshold = threshold;
  rep.ensemble_size = static_cast<int>(records.size());
  rep.k_hat = kInf;
  for (std::size_t k = 0; k < records.size(); ++k) {
    if (records[k].zero) {
      ++rep.excluded;
      rep.ratios.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const double r = records[k].interior / records[k].endpoint_norm2;
    rep.ratios.push_back(r);
    if (r < rep.k_hat) {
      rep.k_hat = r;
      rep.worst = static_cast<int>(k);
    }
  }
  if (rep.worst < 0) rep.k_hat = 0.0;
  rep.pass = rep.worst >= 0 && rep.k_hat > threshold;
  return rep;
}

BoundaryObservabilityReport boundary_observability(const std::vector<ObservationRecord>& records, double T,
                                                   double threshold) {
  BoundaryObservabilityReport rep;
  ObservabilityReport& b = rep.boundary;
  b.T = T;
  b.threshold = threshold;
  b.ensemble_size = static_cast<int>(records.size());
  b.k_hat = kInf;
  for (std::size_t k = 0; k < records.size(); ++k) {
    const ObservationRecord& r = records[k];
    if (r.zero) {
      ++b.excluded;
      b.ratios.push_back(std::numeric_limits<double>::quiet_NaN());
      rep.bridge_C.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const double br = r.boundary / r.endpoint_norm2;
    b.ratios.push_back(br);
    if (br < b.k_hat) {
      b.k_hat = br;
      b.worst = static_cast<int>(k);
    }
    rep.C_g = std::max(rep.C_g, r.prism_C_g);
    rep.bridge_C.push_back(r.prism_interior > 0.0 ? r.prism_boundary / r.prism_interior : 0.0);
    if (r.prism_C_g > 0.0) {
      const double ir = r.interior / r.endpoint_norm2;
      const bool integrated = br <= r.prism_C_g * ir * (1.0 + 1e-12);
      rep.bridge_holds = rep.bridge_holds && r.prism_chain && integrated;
    }
  }
  if (b.worst < 0) b.k_hat = 0.0;
  b.pass = b.worst >= 0 && b.k_hat > threshold;
  return rep;
}

UniqueContinuationReport unique_continuation_probe(const std::vector<ObservationRecord>& records, double delta) {
  UniqueContinuationReport rep;
  rep.delta = delta;
  rep.floor = kInf;
  for (const ObservationRecord& r : records) {
    if (r.zero) {
      ++rep.zero_members;
      rep.trace_ratios.push_back(0.0);
      rep.near_vanishing.push_back(false);
      continue;
    }
    const double ratio = r.omega_energy / r.global_energy;
    rep.trace_ratios.push_back(ratio);
    const bool vanishing = r.omega_sup < delta * r.global_sup;
    rep.near_vanishing.push_back(vanishing);
    rep.floor = std::min(rep.floor, ratio);
    rep.consistent = rep.consistent && ratio > 0.0 && !vanishing;
  }
  if (rep.floor == kInf) rep.floor = 0.0;
  return rep;
}

double default_observation_time(const Grid& grid, double potential_time) {
  const double c_min = grid.domain().speed().c_min;
  return std::max(2.0 * grid.domain().diameter() / c_min, potential_time);
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;

// -L restricted to free nodes, plus an index map node -> unknown.
SpMat minus_laplacian(const Stencil& st, std::vector<int>& index) {
  index.assign(static_cast<std::size_t>(st.nx + 1) * (st.ny + 1), -1);
  for (std::size_t k = 0; k < st.free_nodes.size(); ++k) index[st.free_nodes[k]] = static_cast<int>(k);
  std::vector<Eigen::Triplet<double>> trip;
  const double ih2 = 1.0 / (st.h * st.h);
  auto edge = [&](std::size_t a, std::size_t b, double w) {
    if (w == 0.0) return;
    const int ia = index[a];
    const int ib = index[b];
    if (ia >= 0) trip.emplace_back(ia, ia, w * ih2);
    if (ib >= 0) trip.emplace_back(ib, ib, w * ih2);
    if (ia >= 0 && ib >= 0) {
      trip.emplace_back(ia, ib, -w * ih2);
      trip.emplace_back(ib, ia, -w * ih2);
    }
  };
  for (int j = 0; j <= st.ny; ++j) {
    for (int i = 0; i <= st.nx; ++i) {
      const std::size_t n = st.node(i, j);
      if (i < st.nx) edge(n, n + 1, st.east[n]);
      if (j < st.ny) edge(n, n + st.nx + 1, st.north[n]);
    }
  }
  const auto m = static_cast<Eigen::Index>(st.free_nodes.size());
  SpMat A(m, m);
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

double discrete_l2(const Eigen::VectorXd& r, double h) { return r.norm() * h; }

}  // namespace

EquilibriumResult solve_equilibrium(const Grid& grid, const Nonlinearity& nl, std::vector<double> seed,
                                    int max_iterations, double tol) {
  if (seed.size() != grid.node_count()) throw ValidationError("equilibrium seed does not match grid");
  const Stencil st = build_stencil(grid);
  std::vector<int> index;
  const SpMat A = minus_laplacian(st, index);
  const auto m = static_cast<Eigen::Index>(st.free_nodes.size());
  Eigen::VectorXd u(m);
  for (Eigen::Index k = 0; k < m; ++k) u[k] = seed[st.free_nodes[static_cast<std::size_t>(k)]];
  auto residual = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd r = A * x;
    for (Eigen::Index k = 0; k < m; ++k) r[k] += nl.f(x[k]);
    return r;
  };
  EquilibriumResult res;
  Eigen::VectorXd r = residual(u);
  double rn = discrete_l2(r, st.h);
  Eigen::SparseLU<SpMat> lu;
  for (int it = 0; it < max_iterations && std::isfinite(rn); ++it) {
    if (rn <= tol * std::max(1.0, discrete_l2(u, st.h))) {
      res.converged = true;
      break;
    }
    SpMat J = A;
    for (Eigen::Index k = 0; k < m; ++k) J.coeffRef(k, k) += nl.df(u[k]);
    lu.compute(J);
    if (lu.info() != Eigen::Success) break;
    const Eigen::VectorXd du = lu.solve(r);
    double alpha = 1.0;
    bool accepted = false;
    while (alpha >= 1e-8) {
      const Eigen::VectorXd trial = u - alpha * du;
      const Eigen::VectorXd rt = residual(trial);
      const double tn = discrete_l2(rt, st.h);
      if (std::isfinite(tn) && tn <= (1.0 - 1e-4 * alpha) * rn) {
        u = trial;
        r = rt;
        rn = tn;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    res.iterations = it + 1;
    if (!accepted) {
      // Stagnation at roundoff counts as convergence.
      res.converged = rn <= 1e3 * tol * std::max(1.0, discrete_l2(u, st.h));
      break;
    }
  }
  if (!res.converged && rn <= tol * std::max(1.0, discrete_l2(u, st.h))) res.converged = true;
  res.residual = rn;
  res.u.assign(grid.node_count(), 0.0);
  for (Eigen::Index k = 0; k < m; ++k) res.u[st.free_nodes[static_cast<std::size_t>(k)]] = u[k];
  res.grad_norm2 = st.gradient_energy(res.u);
  return res;
}

LyapunovReport lyapunov_check(const Grid& grid, const EnergyTrace& trace, const WaveField& final_state,
                              const std::vector<double>& damping, const Nonlinearity& nl, double tol,
                              double residual_tol) {
  if (trace.staggered.empty()) throw ValidationError("empty energy trace");
  LyapunovReport rep;
  const auto& e = trace.staggered;
  const double scale = std::max(std::abs(e.front()), 1e-300);
  rep.non_increasing = true;
  for (std::size_t n = 1; n < e.size(); ++n) {
    if (e[n] > e[n - 1] + 1e-12 * scale) {
      rep.non_increasing = false;
      rep.first_increase = static_cast<int>(n);
      break;
    }
  }
  rep.total_decrease = e.front() - e.back();
  rep.damping_active = std::any_of(damping.begin(), damping.end(), [](double a) { return a > 0.0; });

  const Stencil st = build_stencil(grid);
  const double h2 = grid.h() * grid.h();
  double vel = 0.0;
  double res = 0.0;
  for (std::uint32_t n : st.free_nodes) {
    if (rep.damping_active && damping[n] > 0.0) vel += final_state.v[n] * final_state.v[n];
    const double q = -st.apply(final_state.u, n) + nl.f(final_state.u[n]);
    res += q * q;
  }
  rep.omega_velocity = std::sqrt(vel * h2);
  rep.stationary_residual = std::sqrt(res * h2);

  if (!rep.damping_active) {
    rep.note = "no damping, test inconclusive";
    rep.pass = rep.non_increasing;
    return rep;
  }
  const bool flat = rep.total_decrease <= tol * std::max(1.0, std::abs(e.front()));
  if (flat) {
    rep.stationary = rep.omega_velocity < tol && rep.stationary_residual < residual_tol;
    rep.note = rep.stationary ? "energy constant; state numerically stationary"
                              : "energy constant but state is not stationary";
    rep.pass = rep.non_increasing && rep.stationary;
  } else {
    rep.note = "strict decrease";
    rep.pass = rep.non_increasing;
  }
  return rep;
}

PerturbedEnergyDiagnostics perturbed_energy_diagnostics(const Grid& grid, const WaveField& z1, const WaveField& z2,
                                                        const DampingCoefficient& damping, const Nonlinearity& nl,
                                                        const SolverConfig& config, double mu, double eta,
                                                        double lambda1) {
  if (!(lambda1 > 0.0)) throw ValidationError("lambda1 must be positive");
  if (!(eta > 0.0 && eta <= 1.0)) throw ValidationError("eta must lie in (0, 1]");
  const double bound_damping = damping.a0 > 0.0 ? 2.0 / (damping.a0 * nl.m1) : kInf;
  const double bound_poincare = 2.0 / std::sqrt(lambda1);
  if (!(mu > bound_damping)) {
    std::ostringstream os;
    os << "mu = " << mu << " must exceed 2/(a0 m1) = " << bound_damping;
    throw ValidationError(os.str());
  }
  if (!(mu > bound_poincare)) {
    std::ostringstream os;
    os << "mu = " << mu << " must exceed 2/sqrt(lambda1) = " << bound_poincare;
    throw ValidationError(os.str());
  }
  PerturbedEnergyDiagnostics d;
  d.mu = mu;
  d.eta = eta;
  d.beta1 = mu - bound_poincare;
  d.beta2 = mu + bound_poincare;

  int steps = 0;
  const double dt = choose_time_step(grid, config, &steps);
  const Stencil st = build_stencil(grid);
  WaveProblem problem;
  problem.damping = damping.a;
  problem.nl = nl;
  WaveStepper a(grid, st, z1.u, z1.v, problem, dt);
  WaveStepper b(grid, st, z2.u, z2.v, problem, dt);
  const double h2 = grid.h() * grid.h();
  std::vector<double> w(grid.node_count(), 0.0);
  std::vector<double> wt(grid.node_count(), 0.0);
  std::vector<double> grad2, kin2, l3;
  d.lower_margin = kInf;
  d.upper_margin = kInf;
  for (int n = 0; n <= steps; ++n) {
    for (std::uint32_t k : st.free_nodes) {
      w[k] = a.u()[k] - b.u()[k];
      wt[k] = a.v()[k] - b.v()[k];
    }
    double kin = 0.0;
    double phi = 0.0;
    double psi = 0.0;
    for (std::uint32_t k : st.free_nodes) {
      kin += wt[k] * wt[k];
      phi += w[k] * wt[k];
      if (damping.a[k] > 0.0) psi += w[k] * wt[k];
    }
    kin *= h2;
    phi *= h2;
    psi *= h2;
    const double g2 = st.gradient_energy(w);
    const double E = 0.5 * (kin + g2);
    const double Phi = mu * E + eta * phi + psi;
    d.t.push_back(a.time());
    d.E.push_back(E);
    d.phi.push_back(phi);
    d.psi.push_back(psi);
    d.Phi.push_back(Phi);
    grad2.push_back(g2);
    kin2.push_back(kin);
    l3.push_back(l3_norm2(w, st));
    d.lower_margin = std::min(d.lower_margin, Phi - d.beta1 * E);
    d.upper_margin = std::min(d.upper_margin, d.beta2 * E - Phi);
    if (n < steps) {
      a.advance();
      b.advance();
    }
  }
  d.sandwich = d.lower_margin >= 0.0 && d.upper_margin >= 0.0;
  // dphi/dt <= -E - |grad w|^2 / 2 + 2 |w_t|^2 + C |w|_{L3}^2 with p0 = 0.
  d.C_fit = 0.0;
  d.derivative_ok = true;
  for (std::size_t n = 1; n + 1 < d.t.size(); ++n) {
    const double dphi = (d.phi[n + 1] - d.phi[n - 1]) / (2.0 * dt);
    const double excess = dphi + d.E[n] + 0.5 * grad2[n] - 2.0 * kin2[n];
    if (excess <= 0.0) continue;
    if (l3[n] > 0.0) {
      d.C_fit = std::max(d.C_fit, excess / l3[n]);
    } else if (excess > 1e-12 * std::max(1.0, d.E[n])) {
      d.derivative_ok = false;
      d.C_fit = kInf;
    }
  }
  d.derivative_ok = d.derivative_ok && std::isfinite(d.C_fit);
  return d;
}

PairSeries pair_series(const Grid& grid, const WaveField& z1, const WaveField& z2, const WaveProblem& problem,
                       const SolverConfig& config, int samples) {
  if (samples < 2) throw ValidationError("pair series needs at least 2 samples");
  int steps = 0;
  const double dt = choose_time_step(grid, config, &steps);
  const Stencil st = build_stencil(grid);
  WaveStepper a(grid, st, z1.u, z1.v, problem, dt);
  WaveStepper b(grid, st, z2.u, z2.v, problem, dt);
  std::vector<double> du(grid.node_count(), 0.0);
  std::vector<double> dv(grid.node_count(), 0.0);
  PairSeries ps;
  double sup = 0.0;
  int next_sample = 0;
  int k = 0;
  for (int n = 0; n <= steps; ++n) {
    for (std::uint32_t m : st.free_nodes) {
      du[m] = a.u()[m] - b.u()[m];
      dv[m] = a.v()[m] - b.v()[m];
    }
    sup = std::max(sup, l3_norm2(du, st));
    if (n == next_sample) {
      ps.t.push_back(a.time());
      ps.diff2.push_back(h_norm2(du, dv, st));
      ps.lower_sup.push_back(sup);
      ++k;
      next_sample = static_cast<int>(std::lround(static_cast<double>(k) * steps / (samples - 1)));
      if (next_sample <= n) next_sample = n + 1;
    }
    if (n < steps) {
      a.advance();
      b.advance();
    }
  }
  return ps;
}

QuasiStabilityReport quasi_stability_fit(const std::vector<PairSeries>& series, double cap) {
  QuasiStabilityReport rep;
  rep.pairs = static_cast<int>(series.size());
  rep.cap = cap;
  const int points = 64;
  for (int i = 0; i < points; ++i) {
    rep.zeta_grid.push_back(std::pow(10.0, -4.0 + 5.0 * i / (points - 1)));
  }
  auto minimal_cb = [&](double zeta) {
    double cb = 0.0;
    for (const PairSeries& p : series) {
      const double d0 = p.diff2.empty() ? 0.0 : p.diff2.front();
      const double slack = 1e-13 * d0;
      for (std::size_t n = 0; n < p.t.size(); ++n) {
        const double need = p.diff2[n] - std::exp(-zeta * p.t[n]) * d0;
        if (need <= slack) continue;
        if (p.lower_sup[n] <= 0.0) return kInf;
        cb = std::max(cb, need / p.lower_sup[n]);
      }
    }
    return cb;
  };
  int best = -1;
  for (int i = 0; i < points; ++i) {
    const double cb = minimal_cb(rep.zeta_grid[static_cast<std::size_t>(i)]);
    rep.C_B.push_back(cb);
    if (cb <= cap) best = i;
    if (cb == 0.0) rep.zeta0 = rep.zeta_grid[static_cast<std::size_t>(i)];
  }
  if (best < 0) return rep;
  rep.zeta_hat = rep.zeta_grid[static_cast<std::size_t>(best)];
  rep.C_B_hat = rep.C_B[static_cast<std::size_t>(best)];
  rep.min_margin = kInf;
  for (const PairSeries& p : series) {
    const double d0 = p.diff2.empty() ? 0.0 : p.diff2.front();
    for (std::size_t n = 0; n < p.t.size(); ++n) {
      const double m = std::exp(-rep.zeta_hat * p.t[n]) * d0 + rep.C_B_hat * p.lower_sup[n] - p.diff2[n];
      rep.min_margin = std::min(rep.min_margin, m);
    }
  }
  if (rep.min_margin == kInf) rep.min_margin = 0.0;
  // Roundoff in the minimal C_B can leave a margin of a few ulps below zero.
  const double scale = series.empty() || series.front().diff2.empty() ? 1.0 : series.front().diff2.front();
  if (rep.min_margin < 0.0 && rep.min_margin > -1e-12 * std::max(scale, 1e-300)) rep.min_margin = 0.0;
  rep.pass = rep.zeta_hat > 0.0 && std::isfinite(rep.C_B_hat) && rep.min_margin >= 0.0;
  return rep;
}

DecayFit decay_fit(const EnergyTrace& trace, double t0, double t1) {
  if (trace.E.empty()) throw ValidationError("empty energy trace");
  if (t1 < 0.0) t1 = trace.t.back();
  const double floor = 1e-14 * trace.E.front();
  std::vector<double> xs;
  std::vector<double> ys;
  DecayFit fit;
  for (std::size_t n = 0; n < trace.t.size(); ++n) {
    const double t = trace.t[n];
    if (t < t0 - 1e-12 || t > t1 + 1e-12) continue;
    if (!(trace.E[n] > floor)) break;
    xs.push_back(t);
    ys.push_back(std::log(trace.E[n]));
    fit.t_end = t;
  }
  fit.points = static_cast<int>(xs.size());
  if (xs.size() < 2) throw ValidationError("decay window holds fewer than two positive energies");
  const double n = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  double ss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (my + slope * (xs[i] - mx));
    ss += r * r;
  }
  fit.rate = -slope;
  fit.residual = std::sqrt(ss / n);
  return fit;
}

WindowComposition window_composition(const std::vector<EnergyTrace>& traces, double window, int windows,
                                     double tolerance) {
  if (traces.empty() || windows < 1 || !(window > 0.0)) throw ValidationError("invalid window composition input");
  WindowComposition wc;
  for (int k = 0; k < windows; ++k) {
    double g = 0.0;
    for (const EnergyTrace& tr : traces) {
      const auto i0 = static_cast<std::size_t>(std::lround(k * window / tr.dt));
      const auto i1 = static_cast<std::size_t>(std::lround((k + 1) * window / tr.dt));
      if (i1 >= tr.norm2.size()) throw ValidationError("trace shorter than the composed windows");
      if (tr.norm2[i0] > 0.0) g = std::max(g, tr.norm2[i1] / tr.norm2[i0]);
    }
    wc.gamma.push_back(g);
  }
  const auto [lo, hi] = std::minmax_element(wc.gamma.begin(), wc.gamma.end());
  wc.spread = *hi > 0.0 ? (*hi - *lo) / *hi : 0.0;
  wc.contracts = *hi < 1.0;
  wc.agree = wc.spread <= tolerance;
  return wc;
}

StationaryAudit stationary_audit(const Grid& grid, const Nonlinearity& nl, int random_seeds, std::uint64_t seed) {
  StationaryAudit audit;
  const EigenResult eig = first_dirichlet_eigenpair(grid);
  audit.lambda1 = eig.lambda;
  double best = 0.0;
  const int lattice = 200001;
  const double z_max = 100.0;
  for (int k = 0; k < lattice; ++k) {
    const double z = -z_max + 2.0 * z_max * k / (lattice - 1);
    best = std::max(best, -nl.f(z) * z - 0.25 * audit.lambda1 * z * z);
  }
  audit.c_f = grid.domain().area() * best;

  std::vector<std::pair<std::string, std::vector<double>>> seeds;
  seeds.emplace_back("zero", std::vector<double>(grid.node_count(), 0.0));
  for (double A : {1.0, 4.0, 16.0}) {
    for (double sign : {1.0, -1.0}) {
      std::vector<double> u = eig.mode;
      for (double& x : u) x *= sign * A;
      std::ostringstream os;
      os << (sign > 0 ? "+" : "-") << A << " phi1";
      seeds.emplace_back(os.str(), std::move(u));
    }
  }
  if (random_seeds > 0) {
    EnsembleSpec spec;
    spec.count = random_seeds;
    spec.seed = seed;
    spec.norm = 10.0;
    const auto data = modal_ensemble(grid, spec);
    for (int k = 0; k < random_seeds; ++k) seeds.emplace_back("random " + std::to_string(k), data[k].u);
  }

  std::vector<EquilibriumResult> results(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t k) { results[k] = solve_equilibrium(grid, nl, seeds[k].second); });

  const double h2 = grid.h() * grid.h();
  std::vector<const std::vector<double>*> found;
  audit.pass = true;
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    if (!results[k].converged) {
      audit.skipped.push_back(seeds[k].first);
      continue;
    }
    StationaryCandidate c;
    c.seed = seeds[k].first;
    c.eq = std::move(results[k]);
    c.bound_ok = c.eq.grad_norm2 <= 2.0 * audit.c_f + 1e-9 * std::max(1.0, c.eq.grad_norm2);
    audit.pass = audit.pass && c.bound_ok;
    audit.candidates.push_back(std::move(c));
  }
  for (const StationaryCandidate& c : audit.candidates) {
    bool fresh = true;
    for (const auto* other : found) {
      double d = 0.0;
      for (std::size_t n = 0; n < c.eq.u.size(); ++n) d += (c.eq.u[n] - (*other)[n]) * (c.eq.u[n] - (*other)[n]);
      if (std::sqrt(d * h2) < 1e-6) fresh = false;
    }
    if (fresh) found.push_back(&c.eq.u);
  }
  audit.distinct = static_cast<int>(found.size());
  audit.pass = audit.pass && !audit.candidates.empty();
  return audit;
}

}  // namespace gcl
