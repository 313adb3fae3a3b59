#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "gcl/wave.hpp"

namespace gcl {

/// Seeded stream: mt19937_64 bits mapped to doubles by hand, so values do not depend on the
/// standard library's distribution implementations.
class SeededStream {
 public:
  explicit SeededStream(std::uint64_t seed);
  /// Uniform on [-1, 1).
  double symmetric();
  /// Uniform on [0, 1).
  double unit();

 private:
  std::mt19937_64 engine_;
};

/// sin(m pi (x - x0)/W) sin(n pi (y - y0)/H) on the bounding box, zero velocity.
WaveField eigenmode(const Grid& grid, int m, int n, double amplitude = 1.0);

struct EnsembleSpec {
  int count = 64;
  int modes = 4;          ///< modes per axis; count of basis functions = modes^2
  double norm = 1.0;      ///< every datum is scaled to this H-norm
  std::uint64_t seed = 20240607;
};

/// Random truncated eigenmode expansions for u and v, coefficients decaying like 1/(m^2 + n^2),
/// scaled to the requested H-norm. Data are deterministic in (grid, spec).
std::vector<WaveField> modal_ensemble(const Grid& grid, const EnsembleSpec& spec);

/// count pairs, both members independent draws scaled to H-norm `norm`.
std::vector<std::pair<WaveField, WaveField>> pair_ensemble(const Grid& grid, const EnsembleSpec& spec);

/// exp(-(x - x0)^2 / (2 sigma^2)) sin(n pi (y - y0)/H): a standing beam along the vertical line x = x0.
WaveField gaussian_beam(const Grid& grid, double x0, double sigma, int n, double amplitude = 1.0);

struct BeamMember {
  double sigma = 0.0;
  int n = 0;
  WaveField datum;
};

/// Beams at x0 with widths sigma0 / 2^(k/4), k = 0..count-1, and vertical mode n = round(n0 (sigma0/sigma)^2),
/// so n sigma^2 (the Rayleigh range) stays fixed while the beam narrows. Each is scaled to unit H-norm.
std::vector<BeamMember> beam_family(const Grid& grid, double x0 = 0.5, double sigma0 = 0.14, int n0 = 32,
                                    int count = 3);

/// Scales u and v so the H-norm equals `norm`; zero data are left untouched.
void normalize(WaveField& z, const Grid& grid, double norm);

}  // namespace gcl
