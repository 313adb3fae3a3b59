#include "gcl/smooth_step.hpp"

#include <cmath>

namespace gcl {

Jet exp_bump(double t) {
  if (t <= 0.0) return {};
  const double e = std::exp(-1.0 / t);
  const double t2 = t * t;
  // d/dt e^{-1/t} = e/t^2, d2 = e (1 - 2t) / t^4
  return {e, e / t2, e * (1.0 - 2.0 * t) / (t2 * t2)};
}

Jet smooth_step(double t) {
  if (t <= 0.0) return {0.0, 0.0, 0.0};
  if (t >= 1.0) return {1.0, 0.0, 0.0};
  const Jet a = exp_bump(t);
  const Jet b0 = exp_bump(1.0 - t);
  const Jet b{b0.v, -b0.d1, b0.d2};
  const double q = a.v + b.v;
  const double q1 = a.d1 + b.d1;
  const double q2 = a.d2 + b.d2;
  const double s = a.v / q;
  const double s1 = (a.d1 - s * q1) / q;
  const double s2 = (a.d2 - 2.0 * s1 * q1 - s * q2) / q;
  return {s, s1, s2};
}

}  // namespace gcl
