#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <sstream>

#include "artifacts.hpp"
#include "gcl/parallel.hpp"
#include "svg.hpp"

namespace gclab {

namespace {

// Grid, region and (for admissible regions) the escape machinery of one scenario.
struct Scenario {
  std::unique_ptr<gcl::Grid> grid;
  gcl::ControlRegion omega;
  std::optional<gcl::AdmissibleRegion> admissible;
  std::optional<gcl::OverlapDecomposition> decomposition;
  double potential_time = 0.0;
  bool potential_valid = false;
};

gcl::CellMask read_mask(const std::string& path, const gcl::Grid& grid) {
  std::ifstream in(path);
  if (!in) throw ConfigError("region.mask_file", "cannot open " + path);
  gcl::CellMask mask;
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    int v = 0;
    int cols = 0;
    while (ls >> v) {
      if (v != 0 && v != 1) throw ConfigError("region.mask_file", "mask entries must be 0 or 1");
      mask.push_back(static_cast<std::uint8_t>(v));
      ++cols;
    }
    if (cols != grid.nx()) {
      throw ConfigError("region.mask_file", "row " + std::to_string(rows) + " has " + std::to_string(cols) +
                                                " entries, expected " + std::to_string(grid.nx()));
    }
    ++rows;
  }
  if (rows != grid.ny()) {
    throw ConfigError("region.mask_file", "expected " + std::to_string(grid.ny()) + " rows (bottom row first)");
  }
  return mask;
}

Scenario build_scenario(const ScenarioConfig& cfg) {
  Scenario s;
  s.grid = std::make_unique<gcl::Grid>(make_domain(cfg.domain), cfg.resolution);
  const gcl::Grid& grid = *s.grid;
  if (cfg.region.type == "admissible") {
    s.admissible = gcl::build_admissible_region(grid, cfg.region.epsilon, cfg.region.epsilon0, cfg.region.patches);
    s.omega = s.admissible->omega;
    s.decomposition = gcl::build_overlap_decomposition(grid, *s.admissible, 1e-6);
    const gcl::ControlTime ct = gcl::gcc_time_from_potential(*s.decomposition, grid);
    s.potential_time = ct.T;
    s.potential_valid = ct.valid;
  } else if (cfg.region.type == "preset") {
    s.omega = gcl::preset(grid, cfg.region.preset);
  } else {
    s.omega = gcl::ControlRegion::from_cells(grid, read_mask(cfg.region.mask_file, grid), "mask");
  }
  return s;
}

std::vector<double> damping_field(const ScenarioConfig& cfg, const Scenario& s) {
  if (cfg.damping.a0 == 0.0) return {};
  const gcl::Grid& grid = *s.grid;
  if (cfg.damping.where == "everywhere") return gcl::DampingCoefficient::uniform(grid, cfg.damping.a0).a;
  return gcl::DampingCoefficient::indicator(grid, s.omega, cfg.damping.a0).a;
}

gcl::WaveField initial_datum(const ScenarioConfig& cfg, const gcl::Grid& grid) {
  const InitialSpec& i = cfg.initial;
  if (i.type == "eigenmode") return gcl::eigenmode(grid, i.m, i.n, i.amplitude);
  if (i.type == "beam") {
    gcl::WaveField z = gcl::gaussian_beam(grid, i.x0, i.sigma, i.beam_n);
    gcl::normalize(z, grid, i.amplitude);
    return z;
  }
  gcl::EnsembleSpec spec;
  spec.count = 1;
  spec.seed = i.seed;
  spec.norm = i.amplitude;
  return gcl::modal_ensemble(grid, spec).front();
}

Json measures_json(const gcl::MeasurePair& m) {
  return Json{{"interior", m.interior}, {"boundary", m.boundary}, {"sum", m.sum()}};
}

std::string region_cells_csv(const gcl::Grid& grid, const gcl::ControlRegion& omega, const gcl::CellMask* V) {
  CsvWriter csv({"i", "j", "omega", "V"});
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    if (!omega.cells[c] && (V == nullptr || !(*V)[c])) continue;
    csv.row({double(grid.cell_i(c)), double(grid.cell_j(c)), double(omega.cells[c]), V ? double((*V)[c]) : 0.0});
  }
  return csv.str();
}

std::string boundary_csv(const gcl::Grid& grid, const gcl::ControlRegion& omega, const gcl::SegmentMask* gamma1) {
  CsvWriter csv({"segment", "xa", "ya", "xb", "yb", "omega", "gamma1"});
  const auto& segs = grid.boundary_segments();
  for (std::size_t s = 0; s < segs.size(); ++s) {
    csv.row({double(s), segs[s].a.x(), segs[s].a.y(), segs[s].b.x(), segs[s].b.y(), double(omega.segments[s]),
             gamma1 ? double((*gamma1)[s]) : 0.0});
  }
  return csv.str();
}

// Run-length encoding of a cell mask as [start, length] pairs over the row-major cell index.
Json rle(const std::vector<std::uint8_t>& mask) {
  Json runs = Json::array();
  std::size_t c = 0;
  while (c < mask.size()) {
    if (!mask[c]) {
      ++c;
      continue;
    }
    const std::size_t start = c;
    while (c < mask.size() && mask[c]) ++c;
    runs.push_back(Json::array({start, c - start}));
  }
  return runs;
}

// ---------------------------------------------------------------------------------------------

void cmd_region(const ScenarioConfig& cfg, Manifest& m, std::ostream& log) {
  Scenario s = build_scenario(cfg);
  const gcl::Grid& grid = *s.grid;
  const gcl::MeasurePair meas = gcl::measure(s.omega, grid);
  m.constant("measures", measures_json(meas));
  m.constant("h", grid.h());
  log << "region " << s.omega.name << ": interior " << meas.interior << ", boundary " << meas.boundary << ", sum "
      << meas.sum() << "\n";
  const gcl::CellMask* V = nullptr;
  std::optional<gcl::BoundaryPartition> part;
  if (s.admissible) {
    const auto& a = *s.admissible;
    V = &a.V;
    const gcl::EscapeReport rep = gcl::verify_escape_conditions(a.d, a.V, grid, 1e-6);
    m.verdict("measure_below_epsilon", meas.sum() < cfg.region.epsilon);
    m.verdict("d1", rep.d1.pass);
    m.verdict("d2", rep.d2.pass);
    m.verdict("d3", rep.d3.pass);
    m.verdict("d4", rep.d4.pass);
    m.verdict("decomposition", s.decomposition->pass());
    m.constant("tau", a.tau);
    m.constant("patches", Json{{"kx", a.kx}, {"ky", a.ky}});
    m.constant("escape", Json{{"d2_worst", rep.d2.worst},
                              {"d3_worst", rep.d3.worst},
                              {"d4_worst", rep.d4.worst},
                              {"min_value", rep.min_value}});
    m.constant("T_potential", s.potential_time);
    m.constant("overlap_edges", static_cast<int>(s.decomposition->edges.size()));
    part = gcl::boundary_partition(*s.decomposition, grid);
    log << "  tau " << a.tau << ", (d1)-(d4) " << (rep.pass() ? "pass" : "FAIL") << ", T from potential "
        << s.potential_time << "\n";
  } else {
    const gcl::ControllabilityResult cr = gcl::check_epsilon_controllable(s.omega, cfg.region.epsilon, grid);
    m.verdict("epsilon_controllable", cr.controllable);
    log << "  " << cfg.region.epsilon << "-controllable: " << (cr.controllable ? "yes" : "no") << "\n";
  }
  Json masks{{"cells", Json::array({grid.nx(), grid.ny()})}, {"omega", rle(s.omega.cells)}};
  if (V != nullptr) masks["V"] = rle(*V);
  if (part) masks["gamma1_segments"] = rle(part->gamma1);
  m.constant("masks", masks);
  m.write_file("region_cells.csv", region_cells_csv(grid, s.omega, V));
  m.write_file("boundary.csv", boundary_csv(grid, s.omega, part ? &part->gamma1 : nullptr));
  m.write_file("region.svg", svg_region(grid, s.omega.cells, V, part ? &part->gamma1 : nullptr, s.omega.segments));
}

std::vector<std::vector<gcl::Vec2>> trapped_paths(const gcl::Grid& grid, const gcl::ControlRegion& omega,
                                                  const std::vector<gcl::RayInit>& rays, std::size_t limit,
                                                  double t_show) {
  std::vector<std::vector<gcl::Vec2>> out;
  gcl::TraceOptions opts;
  opts.record_path = true;
  for (std::size_t k = 0; k < rays.size() && k < limit; ++k) {
    gcl::RayState st;
    st.x = rays[k].x;
    st.p = rays[k].dir;
    out.push_back(gcl::trace_ray(grid, st, &omega, t_show, opts).path);
  }
  return out;
}

std::string paths_csv(const std::vector<std::vector<gcl::Vec2>>& paths) {
  CsvWriter csv({"ray", "k", "x", "y"});
  for (std::size_t r = 0; r < paths.size(); ++r) {
    for (std::size_t k = 0; k < paths[r].size(); ++k) csv.row({double(r), double(k), paths[r][k].x(), paths[r][k].y()});
  }
  return csv.str();
}

void cmd_gcc(const ScenarioConfig& cfg, Manifest& m, std::ostream& log) {
  Scenario s = build_scenario(cfg);
  const gcl::Grid& grid = *s.grid;
  double T = cfg.gcc.T;
  if (T == 0.0) T = (s.admissible && s.potential_valid) ? s.potential_time : cfg.gcc.t_max;
  gcl::Sampler sampler;
  sampler.positions_x = cfg.gcc.positions;
  sampler.positions_y = cfg.gcc.positions;
  sampler.directions = cfg.gcc.directions;
  sampler.adversarial = cfg.gcc.adversarial;
  const gcl::GccReport rep = gcl::check_gcc(grid, s.omega, T, sampler);
  m.verdict("gcc", rep.pass);
  m.constant("T", T);
  m.constant("samples", rep.samples);
  m.constant("hits", rep.hits);
  m.constant("corner_terminated", rep.corner_terminated);
  m.constant("trapped", rep.trapped.size());
  m.constant("T_hat", rep.T_hat);
  log << "gcc on " << s.omega.name << " with T = " << T << ": " << rep.hits << "/" << rep.samples << " hits, "
      << rep.corner_terminated << " corner-terminated, " << rep.trapped.size() << " trapped, T_hat " << rep.T_hat
      << (rep.pass ? " (pass)" : " (FAIL)") << "\n";
  CsvWriter csv({"x", "y", "dx", "dy"});
  for (const auto& r : rep.trapped) csv.row({r.x.x(), r.x.y(), r.dir.x(), r.dir.y()});
  m.write_file("trapped_rays.csv", csv.str());
  const auto paths = trapped_paths(grid, s.omega, rep.trapped, 16, std::min(T, 4.0));
  m.write_file("ray_paths.csv", paths_csv(paths));
  m.write_file("rays.svg", svg_rays(grid, s.omega.cells, paths));
}

void cmd_coarea(const ScenarioConfig& cfg, Manifest& m, std::ostream& log) {
  Scenario s = build_scenario(cfg);
  const gcl::Grid& grid = *s.grid;
  const gcl::Vec2 lo = grid.domain().lower();
  gcl::ScalarField linear{[lo](const gcl::Vec2& x) { return x.x() - lo.x(); },
                          [](const gcl::Vec2&) { return gcl::Vec2(1.0, 0.0); }};
  gcl::ScalarField quadratic{[lo](const gcl::Vec2& x) { return (x.x() - lo.x()) * (x.x() - lo.x()); },
                             [lo](const gcl::Vec2& x) { return gcl::Vec2(2.0 * (x.x() - lo.x()), 0.0); }};
  const auto one = [](const gcl::Vec2&) { return 1.0; };
  const auto bilinear = [](const gcl::Vec2& x) { return 1.0 + x.x() * x.y(); };
  const gcl::CoareaResult r1 = gcl::coarea_check(linear, one, grid, cfg.coarea.levels);
  const gcl::CoareaResult r2 = gcl::coarea_check(quadratic, one, grid, cfg.coarea.levels);
  const gcl::CoareaResult r3 = gcl::coarea_check(quadratic, bilinear, grid, cfg.coarea.levels);
  m.verdict("coarea_linear", r1.relative_error < 1e-12);
  m.verdict("coarea_quadratic", r2.relative_error < 1e-2);
  m.verdict("coarea_quadratic_weighted", r3.relative_error < 1e-2);
  CsvWriter csv({"case", "lhs", "rhs", "relative_error", "levels"});
  csv.row_text({"x1,1", CsvWriter::number(r1.lhs), CsvWriter::number(r1.rhs), CsvWriter::number(r1.relative_error),
                std::to_string(r1.levels)});
  csv.row_text({"x1^2,1", CsvWriter::number(r2.lhs), CsvWriter::number(r2.rhs),
                CsvWriter::number(r2.relative_error), std::to_string(r2.levels)});
  csv.row_text({"x1^2,1+xy", CsvWriter::number(r3.lhs), CsvWriter::number(r3.rhs),
                CsvWriter::number(r3.relative_error), std::to_string(r3.levels)});
  m.write_file("coarea.csv", csv.str());
  log << "coarea relative errors: " << r1.relative_error << " (x1), " << r2.relative_error << " (x1^2), "
      << r3.relative_error << " (x1^2, 1 + xy)\n";

  const bool has_trace = std::any_of(s.omega.segments.begin(), s.omega.segments.end(), [](auto b) { return b; });
  if (!has_trace) {
    log << "  omega does not meet dM; prism checks skipped\n";
    return;
  }
  CsvWriter prisms({"density", "arc", "length", "height", "C_g", "boundary_integral", "prism_integral", "holds"});
  auto record = [&](const std::string& name, const gcl::PrismResult& pr) {
    for (std::size_t a = 0; a < pr.arcs.size(); ++a) {
      const auto& arc = pr.arcs[a];
      prisms.row_text({name, std::to_string(a), CsvWriter::number(arc.length), CsvWriter::number(arc.height),
                       CsvWriter::number(arc.C_g), CsvWriter::number(arc.boundary_integral),
                       CsvWriter::number(arc.prism_integral), arc.chain_holds ? "1" : "0"});
    }
  };
  const gcl::PrismResult pc =
      gcl::prism_bound_check(s.omega.segments, s.omega, gcl::constant_density(grid), grid, gcl::TraceModel::cell_value);
  record("constant", pc);
  m.verdict("prism_constant", pc.chain_holds);
  const gcl::WaveField z = initial_datum(cfg, grid);
  const gcl::PrismResult pg = gcl::prism_bound_check(s.omega.segments, s.omega, gcl::gradient_density(z.u, grid), grid,
                                                     gcl::TraceModel::normal_derivative);
  record("gradient", pg);
  m.verdict("prism_gradient", pg.chain_holds);
  m.constant("prism", Json{{"C_hat_constant", pc.C_hat},
                           {"C_g_constant", pc.C_g_max},
                           {"C_hat_gradient", pg.C_hat},
                           {"C_g_gradient", pg.C_g_max}});
  m.write_file("prisms.csv", prisms.str());
  log << "  prism chain: constant " << (pc.chain_holds ? "holds" : "FAILS") << ", gradient "
      << (pg.chain_holds ? "holds" : "FAILS") << "\n";
}

std::string energy_csv(const gcl::EnergyTrace& e) {
  CsvWriter csv({"t", "E", "totalE", "dissipation", "residual"});
  for (std::size_t n = 0; n < e.t.size(); ++n) csv.row({e.t[n], e.E[n], e.staggered[n], e.dissipation[n], e.residual[n]});
  return csv.str();
}

std::string energy_svg(const std::vector<double>& t, const std::vector<double>& E, const std::vector<double>& total) {
  return svg_lines({{"E", t, E, "#1f77b4"}, {"totalE", t, total, "#d62728"}}, "energy", false);
}

std::string field_csv(const gcl::Grid& grid, const gcl::WaveField& z) {
  CsvWriter csv({"i", "j", "u", "v"});
  for (int j = 0; j <= grid.ny(); ++j) {
    for (int i = 0; i <= grid.nx(); ++i) {
      const std::size_t n = grid.node(i, j);
      csv.row({double(i), double(j), z.u[n], z.v[n]});
    }
  }
  return csv.str();
}

void cmd_simulate(const ScenarioConfig& cfg, Manifest& m, std::ostream& log) {
  Scenario s = build_scenario(cfg);
  const gcl::Grid& grid = *s.grid;
  const gcl::WaveField z = initial_datum(cfg, grid);
  const gcl::Nonlinearity nl = make_nonlinearity(cfg.nonlinearity);
  const std::vector<double> a = damping_field(cfg, s);
  const bool damped = !a.empty();
  const bool conservative = !damped && nl.source_free();
  gcl::Trajectory tr;
  if (conservative) {
    tr = gcl::solve_linear(grid, z, gcl::PotentialPair::zero(), cfg.solver);
  } else {
    gcl::DampingCoefficient dc = damped ? gcl::DampingCoefficient{a, cfg.damping.a0, s.omega}
                                        : gcl::DampingCoefficient::none(grid);
    tr = gcl::solve_semilinear(grid, z, dc, nl, cfg.solver);
  }
  const gcl::EnergyTrace& e = tr.energy;
  m.constant("dt", tr.dt);
  m.constant("steps", tr.steps);
  m.constant("energy_initial", e.staggered.front());
  m.constant("energy_final", e.staggered.back());
  m.constant("relative_drift", e.relative_drift());
  m.constant("residual_rate", e.residual_rate());
  m.verdict("energy_identity", e.residual_rate() < 1e-4);
  if (conservative) m.verdict("energy_drift", e.relative_drift() < 1e-6);
  if (!conservative) {
    const gcl::LyapunovReport ly = gcl::lyapunov_check(grid, e, tr.frames.back(), a, nl);
    m.verdict("lyapunov", ly.pass);
    m.constant("lyapunov", Json{{"note", ly.note},
                                {"total_decrease", ly.total_decrease},
                                {"omega_velocity", ly.omega_velocity},
                                {"stationary_residual", ly.stationary_residual}});
    log << "  lyapunov: " << ly.note << "\n";
  }
  m.write_file("energy.csv", energy_csv(e));
  m.write_file("energy.svg", energy_svg(e.t, e.E, e.staggered));
  m.write_file("field_final.csv", field_csv(grid, tr.frames.back()));
  m.write_file("field_final.svg", svg_heatmap(grid, tr.frames.back().u));
  log << "simulate: " << tr.steps << " steps of " << tr.dt << ", energy " << e.staggered.front() << " -> "
      << e.staggered.back() << ", drift " << e.relative_drift() << ", residual rate " << e.residual_rate() << "\n";
}

void cmd_observe(const ScenarioConfig& cfg, Manifest& m, std::ostream& log) {
  Scenario s = build_scenario(cfg);
  const gcl::Grid& grid = *s.grid;
  double T = cfg.experiment.observe_T;
  if (T == 0.0) T = gcl::default_observation_time(grid, s.potential_valid ? s.potential_time : 0.0);
  gcl::EnsembleSpec spec;
  spec.count = cfg.experiment.ensemble;
  spec.seed = cfg.experiment.ensemble_seed;
  m.seed("ensemble_seed", spec.seed);
  const auto data = gcl::modal_ensemble(grid, spec);
  gcl::ObservationOptions opts;
  opts.T = T;
  opts.cfl = cfg.solver.cfl;
  const auto records = gcl::observe_ensemble(grid, s.omega, s.omega.segments, gcl::PotentialPair::zero(), data, opts);
  const gcl::ObservabilityReport in = gcl::interior_observability(records, T, cfg.experiment.threshold);
  const gcl::BoundaryObservabilityReport bd = gcl::boundary_observability(records, T, cfg.experiment.threshold);
  const gcl::UniqueContinuationReport uc = gcl::unique_continuation_probe(records);
  m.verdict("interior_observability", in.pass);
  m.verdict("unique_continuation", uc.consistent);
  const bool has_trace = std::any_of(s.omega.segments.begin(), s.omega.segments.end(), [](auto b) { return b; });
  if (has_trace) m.verdict("prism_bridge", bd.bridge_holds);
  m.constant("T", T);
  m.constant("k_hat", in.k_hat);
  m.constant("worst_datum", in.worst);
  m.constant("k_hat_boundary", bd.boundary.k_hat);
  m.constant("C_g", bd.C_g);
  m.constant("uc_floor", uc.floor);
  CsvWriter csv({"datum", "interior_ratio", "boundary_ratio", "trace_ratio", "bridge_C"});
  for (std::size_t k = 0; k < records.size(); ++k) {
    csv.row({double(k), in.ratios[k], bd.boundary.ratios[k], uc.trace_ratios[k], bd.bridge_C[k]});
  }
  m.write_file("ratios.csv", csv.str());
  m.write_file("ratios.svg", svg_scatter(in.ratios, "interior observability ratio", true));
  log << "observe on " << s.omega.name << ", T = " << T << ", " << records.size() << " data: k_hat " << in.k_hat
      << " (datum " << in.worst << ")" << (in.pass ? "" : " FAIL") << ", trace floor " << uc.floor << "\n";
}

void cmd_quasistab(const ScenarioConfig& cfg, Manifest& m, std::ostream& log) {
  Scenario s = build_scenario(cfg);
  const gcl::Grid& grid = *s.grid;
  gcl::EnsembleSpec spec;
  spec.count = cfg.experiment.pairs;
  spec.seed = cfg.experiment.pair_seed;
  m.seed("pair_seed", spec.seed);
  const auto pairs = gcl::pair_ensemble(grid, spec);
  const gcl::Nonlinearity nl = make_nonlinearity(cfg.nonlinearity);
  const double lambda1 = gcl::first_dirichlet_eigenvalue(grid);
  const gcl::NonlinearityAudit audit = gcl::audit_nonlinearity(nl, lambda1);
  if (!audit.pass()) throw gcl::ValidationError("nonlinearity rejected: " + audit.failure);
  gcl::WaveProblem problem;
  problem.damping = damping_field(cfg, s);
  problem.nl = nl;
  std::vector<gcl::PairSeries> series(pairs.size());
  gcl::parallel_for(pairs.size(), [&](std::size_t k) {
    series[k] = gcl::pair_series(grid, pairs[k].first, pairs[k].second, problem, cfg.solver, cfg.experiment.samples);
  });
  const gcl::QuasiStabilityReport q = gcl::quasi_stability_fit(series);
  m.verdict("quasi_stability", q.pass);
  m.constant("zeta_hat", q.zeta_hat);
  m.constant("C_B_hat", q.C_B_hat);
  m.constant("zeta0", q.zeta0);
  m.constant("min_margin", q.min_margin);
  CsvWriter zc({"zeta", "C_B"});
  for (std::size_t i = 0; i < q.zeta_grid.size(); ++i) zc.row({q.zeta_grid[i], q.C_B[i]});
  m.write_file("zeta.csv", zc.str());
  CsvWriter pc({"pair", "t", "diff2", "lower_sup"});
  for (std::size_t k = 0; k < series.size(); ++k) {
    for (std::size_t n = 0; n < series[k].t.size(); ++n) {
      pc.row({double(k), series[k].t[n], series[k].diff2[n], series[k].lower_sup[n]});
    }
  }
  m.write_file("pairs.csv", pc.str());
  m.write_file("zeta.svg", svg_lines({{"C_B", q.zeta_grid, q.C_B, "#1f77b4"}}, "minimal C_B against zeta", true));
  log << "quasistab: " << series.size() << " pairs, zeta_hat " << q.zeta_hat << ", C_B " << q.C_B_hat
      << ", pure contraction up to zeta " << q.zeta0 << ", margin " << q.min_margin << (q.pass ? "" : " FAIL") << "\n";
}

// Reads a CSV written by CsvWriter into rows of cells.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.filename().string(), "missing artifact " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char ch = line[i];
      if (quoted) {
        if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else if (ch == '"') {
          quoted = false;
        } else {
          cur += ch;
        }
      } else if (ch == '"') {
        quoted = true;
      } else if (ch == ',') {
        cells.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    cells.push_back(cur);
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::vector<double> column(const std::vector<std::vector<std::string>>& rows, const std::string& name) {
  if (rows.empty()) throw ConfigError(name, "empty CSV");
  const auto it = std::find(rows.front().begin(), rows.front().end(), name);
  if (it == rows.front().end()) throw ConfigError(name, "column missing from CSV");
  const auto c = static_cast<std::size_t>(it - rows.front().begin());
  std::vector<double> out;
  for (std::size_t r = 1; r < rows.size(); ++r) out.push_back(std::stod(rows[r][c]));
  return out;
}

bool listed(const Json& manifest, const std::string& name) {
  for (const auto& f : manifest["files"]) {
    if (f["path"] == name) return true;
  }
  return false;
}

// Re-renders the SVGs of a manifest from its stored CSVs; returns false if a hash differs.
bool render_manifest(const std::filesystem::path& manifest_path, const std::string& what, std::ostream& log) {
  const Json doc = read_manifest(manifest_path);
  const auto dir = manifest_path.parent_path();
  const ScenarioConfig cfg = parse_config(doc["config"]);
  std::map<std::string, std::string> rendered;
  auto want = [&](const std::string& w) { return what == "all" || what == w; };
  if (want("energy") && listed(doc, "energy.csv")) {
    const auto rows = read_csv(dir / "energy.csv");
    rendered["energy.svg"] = energy_svg(column(rows, "t"), column(rows, "E"), column(rows, "totalE"));
  }
  if (want("ratios") && listed(doc, "ratios.csv")) {
    rendered["ratios.svg"] =
        svg_scatter(column(read_csv(dir / "ratios.csv"), "interior_ratio"), "interior observability ratio", true);
  }
  if (want("zeta") && listed(doc, "zeta.csv")) {
    const auto rows = read_csv(dir / "zeta.csv");
    rendered["zeta.svg"] =
        svg_lines({{"C_B", column(rows, "zeta"), column(rows, "C_B"), "#1f77b4"}}, "minimal C_B against zeta", true);
  }
  const bool needs_grid = (want("region") && listed(doc, "region_cells.csv")) ||
                          (want("rays") && listed(doc, "ray_paths.csv")) ||
                          (want("field") && listed(doc, "field_final.csv"));
  if (needs_grid) {
    const gcl::Grid grid(make_domain(cfg.domain), cfg.resolution);
    if (want("region") && listed(doc, "region_cells.csv")) {
      const auto cells = read_csv(dir / "region_cells.csv");
      const auto bnd = read_csv(dir / "boundary.csv");
      gcl::CellMask omega(grid.cell_count(), 0), V(grid.cell_count(), 0);
      const auto ci = column(cells, "i"), cj = column(cells, "j"), co = column(cells, "omega"), cv = column(cells, "V");
      bool hasV = false;
      for (std::size_t r = 0; r < ci.size(); ++r) {
        const std::size_t c = grid.cell(static_cast<int>(ci[r]), static_cast<int>(cj[r]));
        omega[c] = co[r] != 0.0;
        V[c] = cv[r] != 0.0;
        hasV = hasV || V[c];
      }
      gcl::SegmentMask trace(grid.boundary_segments().size(), 0), g1(trace.size(), 0);
      const auto so = column(bnd, "omega"), sg = column(bnd, "gamma1");
      bool hasG = false;
      for (std::size_t r = 0; r < so.size() && r < trace.size(); ++r) {
        trace[r] = so[r] != 0.0;
        g1[r] = sg[r] != 0.0;
      }
      hasG = cfg.region.type == "admissible";
      rendered["region.svg"] = svg_region(grid, omega, hasV ? &V : nullptr, hasG ? &g1 : nullptr, trace);
    }
    if (want("rays") && listed(doc, "ray_paths.csv")) {
      const auto rows = read_csv(dir / "ray_paths.csv");
      const auto ray = column(rows, "ray"), x = column(rows, "x"), y = column(rows, "y");
      std::vector<std::vector<gcl::Vec2>> paths;
      for (std::size_t r = 0; r < ray.size(); ++r) {
        const auto id = static_cast<std::size_t>(ray[r]);
        if (paths.size() <= id) paths.resize(id + 1);
        paths[id].emplace_back(x[r], y[r]);
      }
      rendered["rays.svg"] = svg_rays(grid, build_scenario(cfg).omega.cells, paths);
    }
    if (want("field") && listed(doc, "field_final.csv")) {
      const auto rows = read_csv(dir / "field_final.csv");
      const auto u = column(rows, "u");
      rendered["field_final.svg"] = svg_heatmap(grid, u);
    }
  }
  if (rendered.empty()) throw ConfigError(what, "nothing to render from " + manifest_path.string());
  bool identical = true;
  for (const auto& [name, bytes] : rendered) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    out << bytes;
    std::string recorded;
    for (const auto& f : doc["files"]) {
      if (f["path"] == name) recorded = f["sha256"].get<std::string>();
    }
    const bool same = recorded.empty() || recorded == sha256_bytes(bytes);
    identical = identical && same;
    log << "rendered " << (dir / name).string() << (same ? "" : " (differs from manifest)") << "\n";
  }
  return identical;
}

std::filesystem::path out_root(const RunOptions& opt) {
  if (!opt.out.empty()) return opt.out;
  const char* env = std::getenv("GCLAB_OUT");
  return (env != nullptr && *env != '\0') ? std::filesystem::path(env) : std::filesystem::path("gclab_out");
}

int report(const RunOptions& opt, std::ostream& log) {
  std::vector<std::filesystem::path> manifests;
  if (!opt.manifest.empty()) {
    manifests.push_back(opt.manifest);
  } else {
    const std::filesystem::path root = out_root(opt);
    if (std::filesystem::exists(root / "manifest.json")) manifests.push_back(root / "manifest.json");
    if (std::filesystem::is_directory(root)) {
      for (const auto& e : std::filesystem::directory_iterator(root)) {
        if (e.is_directory() && std::filesystem::exists(e.path() / "manifest.json")) {
          manifests.push_back(e.path() / "manifest.json");
        }
      }
    }
    std::sort(manifests.begin(), manifests.end());
  }
  if (manifests.empty()) throw ConfigError("manifest", "no manifests found");
  bool all = true;
  std::ostringstream text;
  for (const auto& p : manifests) {
    const Json doc = read_manifest(p);
    text << "== " << doc["subcommand"].get<std::string>() << " (" << p.string() << ", sha256 " << sha256_file(p)
         << ")\n";
    for (const auto& [name, v] : doc["verdicts"].items()) {
      text << "  verdict " << name << ": " << (v.get<bool>() ? "pass" : "FAIL") << "\n";
      all = all && v.get<bool>();
    }
    for (const auto& [name, v] : doc["constants"].items()) {
      if (name == "masks") {
        text << "  masks = run-length cell lists for";
        for (const auto& [mask, runs] : v.items()) {
          if (mask != "cells") text << " " << mask << " (" << runs.size() << " runs)";
        }
        text << "\n";
      } else {
        text << "  " << name << " = " << v.dump() << "\n";
      }
    }
    for (const auto& f : doc["files"]) {
      const auto path = p.parent_path() / f["path"].get<std::string>();
      const bool ok = std::filesystem::exists(path) && sha256_file(path) == f["sha256"].get<std::string>();
      text << "  file " << f["path"].get<std::string>() << " sha256 " << f["sha256"].get<std::string>()
           << (ok ? "" : " (MISSING OR MODIFIED)") << "\n";
      all = all && ok;
    }
  }
  text << (all ? "all verdicts pass\n" : "some verdicts fail\n");
  log << text.str();
  const auto summary = (opt.manifest.empty() ? out_root(opt) : opt.manifest.parent_path()) / "summary.txt";
  std::ofstream(summary, std::ios::binary | std::ios::trunc) << text.str();
  return all ? kPass : kVerdictFailed;
}

using Command = void (*)(const ScenarioConfig&, Manifest&, std::ostream&);

const std::map<std::string, Command>& commands() {
  static const std::map<std::string, Command> table = {{"region", cmd_region},     {"gcc", cmd_gcc},
                                                       {"coarea", cmd_coarea},     {"simulate", cmd_simulate},
                                                       {"observe", cmd_observe},   {"quasistab", cmd_quasistab}};
  return table;
}

std::filesystem::path run_dir(const RunOptions& opt, const std::string& sub) {
  return opt.out.empty() ? out_root(opt) / sub : opt.out;
}

int execute(const std::string& sub, const ScenarioConfig& cfg, const std::filesystem::path& dir, std::ostream& log) {
  gcl::set_worker_count(static_cast<unsigned>(cfg.workers));
  Manifest m(sub, cfg, dir);
  commands().at(sub)(cfg, m, log);
  const auto path = m.finish();
  log << "manifest: " << path.string() << "\n";
  return m.all_pass() ? kPass : kVerdictFailed;
}

int rerun(const RunOptions& opt, std::ostream& log) {
  if (opt.manifest.empty()) throw ConfigError("manifest", "rerun needs --manifest");
  const Json doc = read_manifest(opt.manifest);
  const std::string sub = doc["subcommand"].get<std::string>();
  if (commands().count(sub) == 0) throw ConfigError("subcommand", "manifest names unknown subcommand " + sub);
  const ScenarioConfig cfg = parse_config(doc["config"]);
  const auto dir = opt.out.empty() ? opt.manifest.parent_path() / "rerun" : opt.out;
  execute(sub, cfg, dir, log);
  const Json again = read_manifest(dir / "manifest.json");
  std::map<std::string, std::string> before;
  for (const auto& f : doc["files"]) before[f["path"].get<std::string>()] = f["sha256"].get<std::string>();
  bool identical = true;
  for (const auto& f : again["files"]) {
    const std::string name = f["path"].get<std::string>();
    if (name.size() < 4 || name.substr(name.size() - 4) != ".csv") continue;
    const bool same = before.count(name) != 0 && before[name] == f["sha256"].get<std::string>();
    log << "  " << name << (same ? " identical" : " DIFFERS") << "\n";
    identical = identical && same;
  }
  log << (identical ? "rerun reproduces every CSV byte-identically\n" : "rerun differs\n");
  return identical ? kPass : kVerdictFailed;
}

}  // namespace

Json resolve_document(const RunOptions& opt) {
  Json doc = Json::object();
  if (!opt.config_path.empty()) {
    std::ifstream in(opt.config_path);
    if (!in) throw ConfigError("--config", "cannot open " + opt.config_path);
    try {
      doc = Json::parse(in);
    } catch (const Json::parse_error& e) {
      throw ConfigError("--config", std::string("malformed JSON: ") + e.what());
    }
    if (doc.is_object() && doc.contains("manifest_version") && doc.contains("config")) doc = doc["config"];
    if (!doc.is_object()) throw ConfigError("<root>", "expected an object");
  }
  if (opt.preset) {
    doc["region"]["type"] = "preset";
    doc["region"]["preset"] = *opt.preset;
  }
  if (opt.epsilon) {
    doc["region"]["epsilon"] = *opt.epsilon;
    if (!opt.epsilon0 && doc["region"].contains("epsilon0")) doc["region"].erase("epsilon0");
  }
  if (opt.epsilon0) doc["region"]["epsilon0"] = *opt.epsilon0;
  if (opt.resolution) doc["resolution"] = *opt.resolution;
  return doc;
}

int run_command(const RunOptions& opt, std::ostream& log) {
  try {
    if (opt.subcommand == "report") return report(opt, log);
    if (opt.subcommand == "render") {
      if (opt.manifest.empty()) throw ConfigError("manifest", "render needs --manifest");
      return render_manifest(opt.manifest, opt.what, log) ? kPass : kVerdictFailed;
    }
    if (opt.subcommand == "rerun") return rerun(opt, log);
    if (commands().count(opt.subcommand) == 0) throw ConfigError("subcommand", "unknown subcommand " + opt.subcommand);
    const ScenarioConfig cfg = parse_config(resolve_document(opt));
    return execute(opt.subcommand, cfg, run_dir(opt, opt.subcommand), log);
  } catch (const ConfigError& e) {
    log << "invalid input: " << e.what() << "\n";
    return kInvalid;
  } catch (const gcl::ValidationError& e) {
    log << "invalid input (" << opt.subcommand << "): " << e.what() << "\n";
    return kInvalid;
  } catch (const gcl::NumericalError& e) {
    log << "numerical abort (" << opt.subcommand << "): " << e.what() << "\n";
    return kNumerical;
  }
}

}  // namespace gclab
