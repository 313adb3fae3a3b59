#pragma once

namespace gcl {

/// psi(t) = exp(-1/t) for t > 0, else 0, with its first two derivatives.
struct Jet {
  double v = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

Jet exp_bump(double t);

/// C-infinity step S(t) = psi(t) / (psi(t) + psi(1 - t)): 0 for t <= 0, 1 for t >= 1.
Jet smooth_step(double t);

}  // namespace gcl
