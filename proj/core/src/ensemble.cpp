#include "gcl/ensemble.hpp"

#include <cmath>
#include <numbers>

namespace gcl {

SeededStream::SeededStream(std::uint64_t seed) : engine_(seed) {}

double SeededStream::unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double SeededStream::symmetric() { return 2.0 * unit() - 1.0; }

namespace {

std::vector<double> mode_shape(const Grid& grid, int m, int n) {
  const Vec2 lo = grid.domain().lower();
  const double W = grid.domain().width();
  const double H = grid.domain().height();
  const double pi = std::numbers::pi;
  return sample_nodal(grid, [&](const Vec2& x) {
    return std::sin(m * pi * (x.x() - lo.x()) / W) * std::sin(n * pi * (x.y() - lo.y()) / H);
  });
}

WaveField draw(const Grid& grid, const std::vector<std::vector<double>>& basis, int modes, SeededStream& rng) {
  WaveField z;
  z.u.assign(grid.node_count(), 0.0);
  z.v.assign(grid.node_count(), 0.0);
  for (int m = 1; m <= modes; ++m) {
    for (int n = 1; n <= modes; ++n) {
      const auto& phi = basis[static_cast<std::size_t>((m - 1) * modes + (n - 1))];
      const double w = 1.0 / (m * m + n * n);
      const double cu = rng.symmetric() * w;
      const double cv = rng.symmetric() * w * std::numbers::pi * std::sqrt(double(m * m + n * n));
      for (std::size_t k = 0; k < phi.size(); ++k) {
        z.u[k] += cu * phi[k];
        z.v[k] += cv * phi[k];
      }
    }
  }
  return z;
}

std::vector<std::vector<double>> basis_of(const Grid& grid, int modes) {
  if (modes < 1) throw ValidationError("ensemble needs at least one mode per axis");
  std::vector<std::vector<double>> basis;
  for (int m = 1; m <= modes; ++m) {
    for (int n = 1; n <= modes; ++n) basis.push_back(mode_shape(grid, m, n));
  }
  return basis;
}

}  // namespace

WaveField eigenmode(const Grid& grid, int m, int n, double amplitude) {
  if (m < 1 || n < 1) throw ValidationError("mode numbers must be positive");
  WaveField z;
  z.u = mode_shape(grid, m, n);
  for (double& x : z.u) x *= amplitude;
  z.v.assign(grid.node_count(), 0.0);
  return z;
}

void normalize(WaveField& z, const Grid& grid, double norm) {
  const Stencil st = build_stencil(grid);
  const double n2 = h_norm2(z.u, z.v, st);
  if (n2 <= 0.0) return;
  const double s = norm / std::sqrt(n2);
  for (double& x : z.u) x *= s;
  for (double& x : z.v) x *= s;
}

std::vector<WaveField> modal_ensemble(const Grid& grid, const EnsembleSpec& spec) {
  if (spec.count < 1) throw ValidationError("ensemble must be nonempty");
  const auto basis = basis_of(grid, spec.modes);
  SeededStream rng(spec.seed);
  std::vector<WaveField> out;
  out.reserve(static_cast<std::size_t>(spec.count));
  for (int k = 0; k < spec.count; ++k) {
    out.push_back(draw(grid, basis, spec.modes, rng));
    normalize(out.back(), grid, spec.norm);
  }
  return out;
}

std::vector<std::pair<WaveField, WaveField>> pair_ensemble(const Grid& grid, const EnsembleSpec& spec) {
  if (spec.count < 1) throw ValidationError("ensemble must be nonempty");
  const auto basis = basis_of(grid, spec.modes);
  SeededStream rng(spec.seed);
  std::vector<std::pair<WaveField, WaveField>> out;
  for (int k = 0; k < spec.count; ++k) {
    WaveField a = draw(grid, basis, spec.modes, rng);
    WaveField b = draw(grid, basis, spec.modes, rng);
    normalize(a, grid, spec.norm);
    normalize(b, grid, spec.norm);
    out.emplace_back(std::move(a), std::move(b));
  }
  return out;
}

WaveField gaussian_beam(const Grid& grid, double x0, double sigma, int n, double amplitude) {
  if (!(sigma > 0.0) || n < 1) throw ValidationError("beam needs sigma > 0 and n >= 1");
  const double y0 = grid.domain().lower().y();
  const double H = grid.domain().height();
  WaveField z;
  z.u = sample_nodal(grid, [&](const Vec2& x) {
    const double d = x.x() - x0;
    return amplitude * std::exp(-d * d / (2.0 * sigma * sigma)) * std::sin(n * std::numbers::pi * (x.y() - y0) / H);
  });
  z.v.assign(grid.node_count(), 0.0);
  return z;
}

std::vector<BeamMember> beam_family(const Grid& grid, double x0, double sigma0, int n0, int count) {
  if (count < 1) throw ValidationError("beam family must be nonempty");
  std::vector<BeamMember> out;
  for (int k = 0; k < count; ++k) {
    const double sigma = sigma0 * std::pow(2.0, -0.25 * k);
    const int n = static_cast<int>(std::lround(n0 * (sigma0 / sigma) * (sigma0 / sigma)));
    BeamMember b;
    b.sigma = sigma;
    b.n = n;
    b.datum = gaussian_beam(grid, x0, sigma, n);
    normalize(b.datum, grid, 1.0);
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace gcl
