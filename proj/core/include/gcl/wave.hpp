#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "gcl/nonlinearity.hpp"
#include "gcl/region.hpp"

namespace gcl {

/// Nodal state: displacement u (zero on dM) and velocity v.
struct WaveField {
  std::vector<double> u;
  std::vector<double> v;
  double t = 0.0;
};

/// Potentials of the linear system w_tt - div(c^2 grad w) = p0 w + p1 w_t. Constant values are
/// used when the corresponding function is empty.
struct PotentialPair {
  double p0 = 0.0;
  double p1 = 0.0;
  std::function<double(const Vec2&, double)> p0_fn;
  std::function<double(const Vec2&, double)> p1_fn;
  double p1_bound = 0.0;  ///< declared sup |p1|
  double C_T = 0.0;       ///< declared bound ||p0 w|| <= C_T ||w|| (0 = undeclared)

  static PotentialPair zero() { return {}; }
  static PotentialPair constant(double p0, double p1);
  bool time_dependent() const { return static_cast<bool>(p0_fn) || static_cast<bool>(p1_fn); }
};

/// Nodal damping a(x) >= 0 with floor a0 on omega.
struct DampingCoefficient {
  std::vector<double> a;
  double a0 = 0.0;
  ControlRegion omega;

  static DampingCoefficient none(const Grid& grid);
  /// a = a0 at every node of a closed omega cell, 0 elsewhere.
  static DampingCoefficient indicator(const Grid& grid, const ControlRegion& omega, double a0);
  static DampingCoefficient uniform(const Grid& grid, double a0);
  bool active() const;
};

/// Everything to the right of w_tt: div(c^2 grad u) + p0 u + p1 u_t - a g(u_t) - f(u).
struct WaveProblem {
  PotentialPair potentials;
  std::vector<double> damping;  ///< nodal a; empty = no damping
  Nonlinearity nl = Nonlinearity::none();
};

struct SolverConfig {
  double T = 1.0;
  double dt = 0.0;          ///< 0 selects cfl * h / c_max, shrunk so T is a whole number of steps
  double cfl = 0.5;
  int output_every = 0;     ///< frame stride; 0 stores only the first and last frame
  bool keep_frames = true;
};

/// Integer-time energies and the staggered discrete energy between steps n and n+1.
struct EnergyTrace {
  std::vector<double> t;            ///< t_n
  std::vector<double> E;            ///< 1/2 ||(u^n, v^n)||_H^2
  std::vector<double> total;        ///< E + int F(u^n)
  std::vector<double> staggered;    ///< discrete energy at t_{n+1/2}; exactly balanced by dissipation
  std::vector<double> dissipation;  ///< int a g(v^n) v^n
  std::vector<double> residual;     ///< staggered[n] - staggered[n-1] + dt * dissipation[n] (0 at n = 0)
  std::vector<double> norm2;        ///< ||(u^n, v^n)||_H^2
  double dt = 0.0;

  /// max |staggered - staggered[0]| / staggered[0].
  double relative_drift() const;
  /// max |residual| / staggered[0] per unit time.
  double residual_rate() const;
  /// True if the staggered energy never increases by more than tol * staggered[0].
  bool non_increasing(double tol = 1e-12) const;
};

/// Leapfrog integrator: (u^{n+1} - 2u^n + u^{n-1})/dt^2 = L u^n + p0 u^n + p1 s - a g(s) - dF(u^{n+1}, u^{n-1})
/// with s = (u^{n+1} - u^{n-1}) / (2 dt) and dF the divided difference of F, solved pointwise by
/// Newton in s. The discrete energy balance then holds exactly up to the Newton tolerance.
class WaveStepper {
 public:
  WaveStepper(const Grid& grid, const Stencil& stencil, std::vector<double> u0, std::vector<double> u1,
              WaveProblem problem, double dt);

  int step() const { return n_; }
  double time() const { return n_ * dt_; }
  double dt() const { return dt_; }
  std::span<const double> u() const { return cur_; }
  /// Central velocity (u^{n+1} - u^{n-1}) / (2 dt).
  std::span<const double> v() const { return vel_; }
  std::span<const double> u_next() const { return next_; }
  void advance();

  /// 1/2 ||(u^n, v^n)||_H^2 and the F integral at t_n.
  double energy() const;
  double potential_integral() const;
  double staggered_energy() const;
  double dissipation() const;
  /// int p0 u^n v^n + int p1 (v^n)^2: the work of the potentials in the energy balance.
  double potential_work() const;

 private:
  void compute_next();

  const Grid* grid_;
  const Stencil* st_;
  WaveProblem problem_;
  double dt_;
  int n_ = 0;
  std::vector<double> prev_, cur_, next_, vel_;
  std::vector<double> p0_, p1_;
};

/// dt for a run of length T: config dt (or cfl h / c_max) reduced so T / dt is an integer.
/// Throws ValidationError when the requested dt violates dt <= cfl h / c_max or cfl > 1/sqrt(2).
double choose_time_step(const Grid& grid, const SolverConfig& config, int* steps = nullptr);

struct Trajectory {
  std::vector<WaveField> frames;
  EnergyTrace energy;
  double dt = 0.0;
  int steps = 0;
};

using StepObserver = std::function<void(const WaveStepper&)>;

/// Runs steps 0..N (N = T / dt) recording frames and the energy trace; the observer sees every step.
Trajectory run(const Grid& grid, const WaveField& init, const WaveProblem& problem, const SolverConfig& config,
               const StepObserver& observer = nullptr);

Trajectory solve_linear(const Grid& grid, const WaveField& init, const PotentialPair& potentials,
                        const SolverConfig& config, const StepObserver& observer = nullptr);

/// Rejects the run (ValidationError) when the nonlinearity fails its audit or a < 0.
Trajectory solve_semilinear(const Grid& grid, const WaveField& init, const DampingCoefficient& damping,
                            const Nonlinearity& nl, const SolverConfig& config,
                            const StepObserver& observer = nullptr);

struct EnergyValue {
  double E = 0.0;
  double total = 0.0;
};

/// E = 1/2 (int v^2 + int c^2 |grad u|^2); total adds int F(u) when nl is given.
EnergyValue energy(const WaveField& field, const Grid& grid, const Nonlinearity* nl = nullptr);

/// ||(u, v)||_H^2 = int c^2 |grad u|^2 + int v^2 on the grid.
double h_norm2(std::span<const double> u, std::span<const double> v, const Stencil& st);

struct EnergyBoundsReport {
  double beta = 0.0;        ///< fitted lower slope
  double C1 = 0.0;
  double C2 = 0.0;
  double C0 = 0.0;
  double beta_construction = 0.0;  ///< (1 - kappa/lambda1)/2 from the sign data of f, if positive
  bool lower_ok = false;
  bool upper_ok = false;
  int violation_step = -1;
  bool pass() const { return lower_ok && upper_ok; }
};

/// Fits beta, C1 (lower chain), C2 (upper chain) and C0 (bound by the initial norm) over the trace.
EnergyBoundsReport energy_bounds_check(const EnergyTrace& trace, const Nonlinearity& nl, double lambda1);

struct LipschitzReport {
  double D_hat = 0.0;
  bool degenerate = false;  ///< identical data
  bool unstable = false;    ///< ratio above 1e12
  std::vector<double> ratios;
};

/// Runs both data in lockstep; D_hat = max_n ||z1 - z2||_H^2 / ||z1_0 - z2_0||_H^2.
/// Throws ValidationError if either datum exceeds norm_cap (when positive).
LipschitzReport lipschitz_dependence(const Grid& grid, const WaveField& z1, const WaveField& z2,
                                     const WaveProblem& problem, const SolverConfig& config, double norm_cap = 0.0);

/// Nodal samples of fn at node positions, zero on non-free nodes.
std::vector<double> sample_nodal(const Grid& grid, const std::function<double(const Vec2&)>& fn);

}  // namespace gcl
