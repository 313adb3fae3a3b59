#pragma once

#include <array>
#include <string>

namespace gcl {

enum class DampingKind { linear, tanh_blend };

/// Source f(z) = c1 z + c2 z^2 + c3 z^3 with antiderivative F (F(0) = 0) and damping
/// g(s) = m1 s (linear) or m1 s + (m2 - m1) tanh(s) (tanh_blend), so m1 <= g' <= m2.
struct Nonlinearity {
  std::array<double, 3> coeffs{0.0, 0.0, 0.0};
  DampingKind damping = DampingKind::linear;
  double m1 = 1.0;
  double m2 = 1.0;

  static Nonlinearity none() { return {}; }
  /// f(u) = u^3 - kappa u, g(s) = s.
  static Nonlinearity cubic(double kappa = 0.0);
  static Nonlinearity polynomial(double c1, double c2, double c3);
  Nonlinearity with_linear_damping(double m) const;
  Nonlinearity with_tanh_damping(double m1, double m2) const;

  bool source_free() const { return coeffs[0] == 0.0 && coeffs[1] == 0.0 && coeffs[2] == 0.0; }
  double f(double z) const;
  double df(double z) const;
  double F(double z) const;
  /// (F(x) - F(y)) / (x - y), equal to f(x) when x == y.
  double F_slope(double x, double y) const;
  /// Partial derivative of F_slope in x.
  double F_slope_dx(double x, double y) const;
  double g(double s) const;
  double dg(double s) const;
  std::string describe() const;
};

struct NonlinearityAudit {
  bool f_zero = false;      ///< f(0) = 0
  bool growth_ok = false;   ///< |f'(z)| <= C_f (1 + z^2) with finite C_f
  bool dissipative_ok = false;  ///< f(z)/z > -lambda1 for |z| >= z_large
  bool damping_ok = false;  ///< g(0) = 0, 0 < m1 <= g' <= m2
  double C_f = 0.0;
  double margin = 0.0;      ///< min over the audited tail of f(z)/z + lambda1
  double m1_observed = 0.0;
  double m2_observed = 0.0;
  std::string failure;
  bool pass() const { return f_zero && growth_ok && dissipative_ok && damping_ok; }
};

/// Pointwise audit on a uniform lattice over [-z_large, z_large] (growth, damping) and over
/// z_large <= |z| <= 10 z_large (dissipativity), combined with the leading-order asymptotics.
NonlinearityAudit audit_nonlinearity(const Nonlinearity& nl, double lambda1, double z_large = 10.0,
                                     int lattice = 4001);

}  // namespace gcl
