#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "gcl/analysis.hpp"
#include "gcl/rays.hpp"

namespace gclab {

using Json = nlohmann::ordered_json;

/// Config validation failure; `path` names the offending field (e.g. "solver.cfl").
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct DomainSpec {
  double width = 1.0;
  double height = 1.0;
  std::string speed = "constant";  ///< constant | affine
  double c0 = 1.0;
  double slope_x = 0.0;
  double slope_y = 0.0;
};

struct RegionSpec {
  std::string type = "admissible";  ///< admissible | preset | mask
  double epsilon = 0.1;
  double epsilon0 = 0.05;
  int patches = 4;
  std::string preset = "omega2";
  std::string mask_file;
};

struct NonlinearitySpec {
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  std::string g = "linear";  ///< linear | tanh_blend
  double m1 = 1.0;
  double m2 = 1.0;
};

struct DampingSpec {
  double a0 = 0.0;
  std::string where = "omega";  ///< omega | everywhere
};

struct InitialSpec {
  std::string type = "eigenmode";  ///< eigenmode | modal | beam
  int m = 1;
  int n = 1;
  double amplitude = 1.0;
  std::uint64_t seed = 1;
  double x0 = 0.5;
  double sigma = 0.14;
  int beam_n = 32;
};

struct ExperimentSpec {
  int ensemble = 64;
  std::uint64_t ensemble_seed = 20240607;
  int pairs = 10;
  std::uint64_t pair_seed = 11;
  int samples = 200;
  double observe_T = 0.0;  ///< 0 = max(2 diam, potential time)
  double threshold = 1e-6;
};

struct GccSpec {
  int positions = 32;
  int directions = 64;
  bool adversarial = true;
  double t_max = 100.0;
  double T = 0.0;  ///< 0 = potential time for admissible regions, t_max otherwise
};

struct CoareaSpec {
  int levels = 256;
};

struct ScenarioConfig {
  DomainSpec domain;
  int resolution = 128;
  RegionSpec region;
  gcl::SolverConfig solver;
  NonlinearitySpec nonlinearity;
  DampingSpec damping;
  InitialSpec initial;
  ExperimentSpec experiment;
  GccSpec gcc;
  CoareaSpec coarea;
  int workers = 0;
  Json echo;  ///< fully resolved config including every default
};

/// Parses and validates a config document; unknown keys and type errors raise ConfigError.
ScenarioConfig parse_config(const Json& doc);
ScenarioConfig load_config(const std::string& path);

gcl::Domain make_domain(const DomainSpec& spec);
gcl::Nonlinearity make_nonlinearity(const NonlinearitySpec& spec);

}  // namespace gclab
