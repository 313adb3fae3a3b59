#include "config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace gclab {

namespace {

// Reads fields of one JSON object, recording every resolved value (defaults included) into `echo`
// and rejecting keys that were never asked for.
class Reader {
 public:
  Reader(const Json& obj, std::string path, Json& echo) : obj_(obj), path_(std::move(path)), echo_(echo) {
    if (!obj_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    echo_ = Json::object();
  }

  double number(const std::string& key, double def) {
    const Json* v = find(key);
    double out = def;
    if (v != nullptr) {
      if (!v->is_number()) throw ConfigError(at(key), "expected a number");
      out = v->get<double>();
      if (!std::isfinite(out)) throw ConfigError(at(key), "must be finite");
    }
    echo_[key] = out;
    return out;
  }

  double positive(const std::string& key, double def) {
    const double v = number(key, def);
    if (!(v > 0.0)) throw ConfigError(at(key), "must be positive");
    return v;
  }

  double nonnegative(const std::string& key, double def) {
    const double v = number(key, def);
    if (!(v >= 0.0)) throw ConfigError(at(key), "must be nonnegative");
    return v;
  }

  long long integer(const std::string& key, long long def, long long lo, long long hi) {
    const Json* v = find(key);
    long long out = def;
    if (v != nullptr) {
      if (!v->is_number_integer()) throw ConfigError(at(key), "expected an integer");
      out = v->get<long long>();
    }
    if (out < lo || out > hi) {
      throw ConfigError(at(key), "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    echo_[key] = out;
    return out;
  }

  std::uint64_t seed(const std::string& key, std::uint64_t def) {
    const Json* v = find(key);
    std::uint64_t out = def;
    if (v != nullptr) {
      if (!v->is_number_unsigned()) throw ConfigError(at(key), "expected a nonnegative integer seed");
      out = v->get<std::uint64_t>();
    }
    echo_[key] = out;
    return out;
  }

  bool boolean(const std::string& key, bool def) {
    const Json* v = find(key);
    bool out = def;
    if (v != nullptr) {
      if (!v->is_boolean()) throw ConfigError(at(key), "expected true or false");
      out = v->get<bool>();
    }
    echo_[key] = out;
    return out;
  }

  std::string choice(const std::string& key, const std::string& def, const std::set<std::string>& allowed) {
    const Json* v = find(key);
    std::string out = def;
    if (v != nullptr) {
      if (!v->is_string()) throw ConfigError(at(key), "expected a string");
      out = v->get<std::string>();
    }
    if (!allowed.empty() && allowed.count(out) == 0) {
      std::string opts;
      for (const auto& a : allowed) opts += (opts.empty() ? "" : ", ") + a;
      throw ConfigError(at(key), "unknown value '" + out + "' (expected one of: " + opts + ")");
    }
    echo_[key] = out;
    return out;
  }

  /// Child object (an empty one if absent).
  Reader child(const std::string& key) {
    const Json* v = find(key);
    static const Json empty = Json::object();
    echo_[key] = Json::object();
    return Reader(v != nullptr ? *v : empty, at(key), echo_[key]);
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (seen_.count(it.key()) == 0) throw ConfigError(at(it.key()), "unknown key");
    }
  }

 private:
  const Json* find(const std::string& key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }
  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const Json& obj_;
  std::string path_;
  Json& echo_;
  std::set<std::string> seen_;
};

}  // namespace

ScenarioConfig parse_config(const Json& doc) {
  ScenarioConfig c;
  Reader root(doc, "", c.echo);

  {
    Reader d = root.child("domain");
    c.domain.width = d.positive("width", 1.0);
    c.domain.height = d.positive("height", 1.0);
    c.domain.speed = d.choice("speed", "constant", {"constant", "affine"});
    c.domain.c0 = d.positive("c0", 1.0);
    c.domain.slope_x = d.number("slope_x", 0.0);
    c.domain.slope_y = d.number("slope_y", 0.0);
    d.finish();
  }
  c.resolution = static_cast<int>(root.integer("resolution", 128, 8, 4096));
  {
    Reader r = root.child("region");
    c.region.type = r.choice("type", "admissible", {"admissible", "preset", "mask"});
    c.region.epsilon = r.positive("epsilon", 0.1);
    c.region.epsilon0 = r.positive("epsilon0", c.region.epsilon / 2.0);
    if (!(c.region.epsilon0 < c.region.epsilon)) throw ConfigError("region.epsilon0", "must be below region.epsilon");
    c.region.patches = static_cast<int>(r.integer("patches", 4, 4, 1024));
    c.region.preset = r.choice("preset", "omega2", {"omega1", "omega2", "omega3"});
    c.region.mask_file = r.choice("mask_file", "", {});
    if (c.region.type == "mask" && c.region.mask_file.empty()) {
      throw ConfigError("region.mask_file", "required when region.type is 'mask'");
    }
    r.finish();
  }
  {
    Reader s = root.child("solver");
    c.solver.T = s.positive("T", 4.0);
    c.solver.dt = s.nonnegative("dt", 0.0);
    c.solver.cfl = s.positive("cfl", 0.5);
    if (c.solver.cfl > 1.0 / std::sqrt(2.0)) throw ConfigError("solver.cfl", "must not exceed 1/sqrt(2)");
    c.solver.output_every = static_cast<int>(s.integer("output_every", 0, 0, 1 << 30));
    s.finish();
  }
  {
    Reader n = root.child("nonlinearity");
    c.nonlinearity.c1 = n.number("c1", 0.0);
    c.nonlinearity.c2 = n.number("c2", 0.0);
    c.nonlinearity.c3 = n.number("c3", 0.0);
    c.nonlinearity.g = n.choice("g", "linear", {"linear", "tanh_blend"});
    c.nonlinearity.m1 = n.positive("m1", 1.0);
    c.nonlinearity.m2 = n.positive("m2", c.nonlinearity.m1);
    if (c.nonlinearity.m2 < c.nonlinearity.m1) throw ConfigError("nonlinearity.m2", "must be at least m1");
    n.finish();
  }
  {
    Reader d = root.child("damping");
    c.damping.a0 = d.nonnegative("a0", 0.0);
    c.damping.where = d.choice("where", "omega", {"omega", "everywhere"});
    d.finish();
  }
  {
    Reader i = root.child("initial");
    c.initial.type = i.choice("type", "eigenmode", {"eigenmode", "modal", "beam"});
    c.initial.m = static_cast<int>(i.integer("m", 1, 1, 1 << 20));
    c.initial.n = static_cast<int>(i.integer("n", 1, 1, 1 << 20));
    c.initial.amplitude = i.number("amplitude", 1.0);
    c.initial.seed = i.seed("seed", 1);
    c.initial.x0 = i.number("x0", 0.5);
    c.initial.sigma = i.positive("sigma", 0.14);
    c.initial.beam_n = static_cast<int>(i.integer("beam_n", 32, 1, 1 << 20));
    i.finish();
  }
  {
    Reader e = root.child("experiment");
    c.experiment.ensemble = static_cast<int>(e.integer("ensemble", 64, 1, 100000));
    c.experiment.ensemble_seed = e.seed("ensemble_seed", 20240607);
    c.experiment.pairs = static_cast<int>(e.integer("pairs", 10, 1, 100000));
    c.experiment.pair_seed = e.seed("pair_seed", 11);
    c.experiment.samples = static_cast<int>(e.integer("samples", 200, 2, 1000000));
    c.experiment.observe_T = e.nonnegative("observe_T", 0.0);
    c.experiment.threshold = e.positive("threshold", 1e-6);
    e.finish();
  }
  {
    Reader g = root.child("gcc");
    c.gcc.positions = static_cast<int>(g.integer("positions", 32, 1, 4096));
    c.gcc.directions = static_cast<int>(g.integer("directions", 64, 1, 65536));
    c.gcc.adversarial = g.boolean("adversarial", true);
    c.gcc.t_max = g.positive("t_max", 100.0);
    c.gcc.T = g.nonnegative("T", 0.0);
    g.finish();
  }
  {
    Reader k = root.child("coarea");
    c.coarea.levels = static_cast<int>(k.integer("levels", 256, 1, 1 << 20));
    k.finish();
  }
  c.workers = static_cast<int>(root.integer("workers", 0, 0, 4096));
  root.finish();
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<config>", "cannot open " + path);
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("<config>", std::string("malformed JSON: ") + e.what());
  }
  // A run manifest carries its resolved config under "config".
  if (doc.is_object() && doc.contains("manifest_version") && doc.contains("config")) return parse_config(doc["config"]);
  return parse_config(doc);
}

gcl::Domain make_domain(const DomainSpec& spec) {
  gcl::SpeedField speed = gcl::SpeedField::constant(spec.c0);
  if (spec.speed == "affine") {
    speed = gcl::SpeedField::affine(spec.c0, gcl::Vec2(spec.slope_x, spec.slope_y), gcl::Vec2(0.0, 0.0),
                                    gcl::Vec2(0.0, 0.0), gcl::Vec2(spec.width, spec.height));
  }
  return gcl::Domain::rectangle(spec.width, spec.height, speed);
}

gcl::Nonlinearity make_nonlinearity(const NonlinearitySpec& spec) {
  gcl::Nonlinearity nl = gcl::Nonlinearity::polynomial(spec.c1, spec.c2, spec.c3);
  if (spec.g == "tanh_blend") return nl.with_tanh_damping(spec.m1, spec.m2);
  return nl.with_linear_damping(spec.m1);
}

}  // namespace gclab
