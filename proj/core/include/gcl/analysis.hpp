#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gcl/coarea.hpp"
#include "gcl/ensemble.hpp"
#include "gcl/wave.hpp"

namespace gcl {

/// Space-time quantities gathered while solving one datum.
struct ObservationRecord {
  double interior = 0.0;        ///< int_0^T int_omega |grad w|^2 (c^2-weighted, trapezoid in time)
  double boundary = 0.0;        ///< int_0^T int_gamma (d_nu w)^2
  double endpoint_norm2 = 0.0;  ///< ||z(0)||_H^2 + ||z(T)||_H^2
  double omega_sup = 0.0;       ///< sup over omega x [0, T] of |w| + |w_t|
  double global_sup = 0.0;      ///< sup over M x [0, T] of |w| + |w_t|
  double omega_energy = 0.0;    ///< int_0^T int_omega (|grad w|^2 + w_t^2)
  double global_energy = 0.0;   ///< int_0^T ||z(t)||_H^2
  double final_norm2 = 0.0;     ///< ||z(T)||_H^2
  double prism_boundary = 0.0;  ///< time integral of the prism-chain boundary side (gamma inside omega)
  double prism_interior = 0.0;  ///< time integral of int_omega |grad w|^2 at the prism sampling times
  double prism_C_g = 0.0;
  bool prism_chain = true;      ///< pointwise-in-time chain held at every sampled time
  bool zero = false;            ///< zero datum, excluded from ratios
};

struct ObservationOptions {
  double T = 4.0;
  double cfl = 0.5;
  int prism_samples = 16;  ///< snapshots used for the prism chain (0 disables it)
};

/// Solves the linear system for every datum (ensemble members run in parallel) and records the
/// observation integrals. gamma may be empty.
std::vector<ObservationRecord> observe_ensemble(const Grid& grid, const ControlRegion& omega,
                                                const SegmentMask& gamma, const PotentialPair& potentials,
                                                const std::vector<WaveField>& ensemble,
                                                const ObservationOptions& options);

struct ObservabilityReport {
  double T = 0.0;
  int ensemble_size = 0;
  int excluded = 0;
  std::vector<double> ratios;  ///< NaN for excluded members
  double k_hat = 0.0;
  int worst = -1;
  double threshold = 1e-6;
  bool pass = false;
};

/// Interior observability: r = int int_omega |grad w|^2 / (||z(0)||^2 + ||z(T)||^2); pass iff min r > threshold.
ObservabilityReport interior_observability(const std::vector<ObservationRecord>& records, double T,
                                           double threshold = 1e-6);

struct BoundaryObservabilityReport {
  ObservabilityReport boundary;
  std::vector<double> bridge_C;   ///< per member: time-integrated boundary / interior prism integral
  double C_g = 0.0;               ///< geometric prism constant
  bool bridge_holds = true;       ///< interior ratio >= boundary ratio / C_g for every member
};

/// Boundary observability over gamma plus the prism bridge to interior observation over omega.
BoundaryObservabilityReport boundary_observability(const std::vector<ObservationRecord>& records, double T,
                                                   double threshold = 1e-6);

struct UniqueContinuationReport {
  std::vector<double> trace_ratios;  ///< omega-trace energy / global energy per member
  std::vector<bool> near_vanishing;  ///< omega sup below delta * global sup
  double floor = 0.0;                ///< min trace ratio over nonzero members
  double delta = 1e-6;
  int zero_members = 0;
  bool consistent = true;            ///< every nonzero member leaves a positive trace on omega
};

UniqueContinuationReport unique_continuation_probe(const std::vector<ObservationRecord>& records,
                                                   double delta = 1e-6);

/// Default observation time max(2 diam, T_potential) for an admissible region.
double default_observation_time(const Grid& grid, double potential_time);

/// Equilibrium of -L u + f(u) = 0 by damped Newton.
struct EquilibriumResult {
  std::vector<double> u;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;     ///< discrete L2 norm of -L u + f(u)
  double grad_norm2 = 0.0;   ///< ||grad u||^2
};

EquilibriumResult solve_equilibrium(const Grid& grid, const Nonlinearity& nl, std::vector<double> seed,
                                    int max_iterations = 100, double tol = 1e-12);

struct LyapunovReport {
  bool non_increasing = false;
  int first_increase = -1;
  double total_decrease = 0.0;
  bool damping_active = false;
  bool stationary = false;          ///< flagged numerically stationary
  double omega_velocity = 0.0;      ///< ||u_t||_{L2(omega)} at the final time
  double stationary_residual = 0.0; ///< ||-L u + f(u)|| at the final time
  std::string note;
  bool pass = false;
};

/// Lyapunov audit of a semilinear run: the staggered energy never increases; if it barely moves,
/// the final state must be an equilibrium with vanishing velocity on the damping region.
LyapunovReport lyapunov_check(const Grid& grid, const EnergyTrace& trace, const WaveField& final_state,
                              const std::vector<double>& damping, const Nonlinearity& nl, double tol = 1e-8,
                              double residual_tol = 1e-6);

struct PerturbedEnergyDiagnostics {
  double mu = 0.0;
  double eta = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  std::vector<double> t, E, phi, psi, Phi;
  double lower_margin = 0.0;  ///< min over time of Phi - beta1 E
  double upper_margin = 0.0;  ///< min over time of beta2 E - Phi
  bool sandwich = false;
  double C_fit = 0.0;         ///< smallest C making the phi differential inequality hold
  bool derivative_ok = false; ///< C_fit finite
};

/// Runs both data in lockstep and evaluates E, phi = int w w_t, psi = int_omega w w_t and
/// Phi = mu E + eta phi + psi for w = u1 - u2. Rejects mu <= max(2/(a0 m1), 2/sqrt(lambda1)) or eta > 1.
PerturbedEnergyDiagnostics perturbed_energy_diagnostics(const Grid& grid, const WaveField& z1, const WaveField& z2,
                                                        const DampingCoefficient& damping, const Nonlinearity& nl,
                                                        const SolverConfig& config, double mu, double eta,
                                                        double lambda1);

struct PairSeries {
  std::vector<double> t;
  std::vector<double> diff2;     ///< ||z1(t) - z2(t)||_H^2
  std::vector<double> lower_sup; ///< sup_{s <= t} ||u1(s) - u2(s)||_{L3}^2
};

/// Lockstep run of a pair with `samples` output times (including t = 0).
PairSeries pair_series(const Grid& grid, const WaveField& z1, const WaveField& z2, const WaveProblem& problem,
                       const SolverConfig& config, int samples);

struct QuasiStabilityReport {
  int pairs = 0;
  std::vector<double> zeta_grid;
  std::vector<double> C_B;   ///< minimal C_B per zeta (inf when impossible)
  double zeta_hat = 0.0;     ///< largest zeta with C_B below the cap
  double C_B_hat = 0.0;
  double zeta0 = 0.0;        ///< largest zeta needing C_B = 0 (pure contraction), 0 if none
  double min_margin = 0.0;   ///< min slack of the inequality at (zeta_hat, C_B_hat)
  double cap = 1e8;
  bool pass = false;
};

/// Grid search over 64 log-spaced zeta in [1e-4, 10] of the minimal C_B with
/// ||dz(t)||^2 <= e^{-zeta t} ||dz(0)||^2 + C_B sup_{s<=t} ||du(s)||_{L3}^2 at every output time of every pair.
QuasiStabilityReport quasi_stability_fit(const std::vector<PairSeries>& series, double cap = 1e8);

struct DecayFit {
  double rate = 0.0;      ///< fitted exponent of E(t) ~ exp(-rate t)
  double residual = 0.0;  ///< RMS residual of the log-linear fit
  double t_end = 0.0;     ///< end of the window actually used
  int points = 0;
};

/// Least-squares line through log E over [t0, t1], truncated where E < 1e-14 E(0).
DecayFit decay_fit(const EnergyTrace& trace, double t0 = 0.0, double t1 = -1.0);

struct WindowComposition {
  std::vector<double> gamma;  ///< per-window contraction: max over data of ||z((k+1)T)||^2 / ||z(kT)||^2
  double spread = 0.0;        ///< (max - min) / max over windows
  bool contracts = false;     ///< every gamma < 1
  bool agree = false;         ///< spread <= tolerance
};

/// Contraction factors over consecutive windows [kT, (k+1)T] for a set of trajectories.
WindowComposition window_composition(const std::vector<EnergyTrace>& traces, double window, int windows,
                                     double tolerance = 0.1);

struct StationaryCandidate {
  std::string seed;
  EquilibriumResult eq;
  bool bound_ok = false;
};

struct StationaryAudit {
  double c_f = 0.0;          ///< |M| max_z (-f(z) z - lambda1 z^2 / 4)^+
  double lambda1 = 0.0;
  std::vector<StationaryCandidate> candidates;
  std::vector<std::string> skipped;  ///< seeds whose Newton iteration diverged
  int distinct = 0;                   ///< distinct converged equilibria
  bool pass = false;                  ///< every converged equilibrium has ||grad u||^2 <= 2 c_f
};

/// Newton from the seeds 0, +-A phi1 (A in {1, 4, 16}) and `random_seeds` seeded modal fields.
StationaryAudit stationary_audit(const Grid& grid, const Nonlinearity& nl, int random_seeds = 2,
                                 std::uint64_t seed = 7);

}  // namespace gcl
