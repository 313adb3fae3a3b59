#include "gcl/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gcl/types.hpp"

namespace gcl {

Nonlinearity Nonlinearity::cubic(double kappa) { return polynomial(-kappa, 0.0, 1.0); }

Nonlinearity Nonlinearity::polynomial(double c1, double c2, double c3) {
  Nonlinearity nl;
  nl.coeffs = {c1, c2, c3};
  for (double c : nl.coeffs) {
    if (!std::isfinite(c)) throw ValidationError("nonlinearity coefficients must be finite");
  }
  return nl;
}

Nonlinearity Nonlinearity::with_linear_damping(double m) const {
  if (!(m > 0.0) || !std::isfinite(m)) throw ValidationError("damping slope must be positive");
  Nonlinearity nl = *this;
  nl.damping = DampingKind::linear;
  nl.m1 = m;
  nl.m2 = m;
  return nl;
}

Nonlinearity Nonlinearity::with_tanh_damping(double lo, double hi) const {
  if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi)) throw ValidationError("need 0 < m1 <= m2");
  Nonlinearity nl = *this;
  nl.damping = DampingKind::tanh_blend;
  nl.m1 = lo;
  nl.m2 = hi;
  return nl;
}

double Nonlinearity::f(double z) const { return z * (coeffs[0] + z * (coeffs[1] + z * coeffs[2])); }

double Nonlinearity::df(double z) const { return coeffs[0] + z * (2.0 * coeffs[1] + 3.0 * z * coeffs[2]); }

double Nonlinearity::F(double z) const {
  const double z2 = z * z;
  return z2 * (coeffs[0] / 2.0 + z * (coeffs[1] / 3.0 + z * coeffs[2] / 4.0));
}

double Nonlinearity::F_slope(double x, double y) const {
  return coeffs[0] * (x + y) / 2.0 + coeffs[1] * (x * x + x * y + y * y) / 3.0 +
         coeffs[2] * (x + y) * (x * x + y * y) / 4.0;
}

double Nonlinearity::F_slope_dx(double x, double y) const {
  return coeffs[0] / 2.0 + coeffs[1] * (2.0 * x + y) / 3.0 + coeffs[2] * (3.0 * x * x + 2.0 * x * y + y * y) / 4.0;
}

double Nonlinearity::g(double s) const {
  if (damping == DampingKind::linear) return m1 * s;
  return m1 * s + (m2 - m1) * std::tanh(s);
}

double Nonlinearity::dg(double s) const {
  if (damping == DampingKind::linear) return m1;
  const double c = std::cosh(s);
  return m1 + (m2 - m1) / (c * c);
}

std::string Nonlinearity::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << "f(z) = " << coeffs[0] << " z + " << coeffs[1] << " z^2 + " << coeffs[2] << " z^3; g(s) = ";
  if (damping == DampingKind::linear) {
    os << m1 << " s";
  } else {
    os << m1 << " s + " << (m2 - m1) << " tanh(s)";
  }
  return os.str();
}

NonlinearityAudit audit_nonlinearity(const Nonlinearity& nl, double lambda1, double z_large, int lattice) {
  if (!(z_large >= 10.0)) throw ValidationError("audit lattice must cover at least [-10, 10]");
  if (lattice < 3) throw ValidationError("audit lattice needs at least 3 points");
  NonlinearityAudit a;
  a.f_zero = nl.f(0.0) == 0.0;

  double cf = 0.0;
  a.m1_observed = std::numeric_limits<double>::infinity();
  a.m2_observed = -a.m1_observed;
  bool g_sign = true;
  for (int k = 0; k < lattice; ++k) {
    const double z = -z_large + 2.0 * z_large * k / (lattice - 1);
    cf = std::max(cf, std::abs(nl.df(z)) / (1.0 + z * z));
    const double dg = nl.dg(z);
    a.m1_observed = std::min(a.m1_observed, dg);
    a.m2_observed = std::max(a.m2_observed, dg);
    g_sign = g_sign && nl.g(z) * z >= 0.0;
  }
  // A polynomial of degree <= 3 has |f'| / (1 + z^2) bounded; the tail limit is 3 |c3|.
  a.C_f = std::max(cf, 3.0 * std::abs(nl.coeffs[2]));
  a.growth_ok = std::isfinite(a.C_f);

  a.margin = std::numeric_limits<double>::infinity();
  for (int k = 0; k < lattice; ++k) {
    const double r = z_large * (1.0 + 9.0 * k / (lattice - 1));
    a.margin = std::min({a.margin, nl.f(r) / r + lambda1, nl.f(-r) / -r + lambda1});
  }
  // Leading-order behaviour beyond the lattice: f(z)/z = c1 + c2 z + c3 z^2.
  bool tail_ok = true;
  if (nl.coeffs[2] < 0.0) tail_ok = false;
  if (nl.coeffs[2] == 0.0 && nl.coeffs[1] != 0.0) tail_ok = false;
  if (nl.coeffs[2] == 0.0 && nl.coeffs[1] == 0.0) tail_ok = nl.coeffs[0] > -lambda1;
  a.dissipative_ok = tail_ok && a.margin > 0.0;

  a.damping_ok = nl.g(0.0) == 0.0 && nl.m1 > 0.0 && a.m1_observed >= nl.m1 * (1.0 - 1e-12) &&
                 a.m2_observed <= nl.m2 * (1.0 + 1e-12) && g_sign;

  std::ostringstream why;
  if (!a.f_zero) why << "f(0) != 0; ";
  if (!a.growth_ok) why << "growth bound |f'| <= C_f (1 + z^2) fails; ";
  if (!a.dissipative_ok) why << "liminf f(z)/z > -lambda1 fails (margin " << a.margin << "); ";
  if (!a.damping_ok) why << "damping bounds m1 <= g' <= m2 with g(0) = 0 fail; ";
  a.failure = why.str();
  return a;
}

}  // namespace gcl
