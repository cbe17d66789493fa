#pragma once

// JSON experiment configuration. Top-level keys: model, sim, experiment,
// output, seed. Every object is checked against its key list, so a misspelt
// key is an error rather than a silently ignored default.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <iterator>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bfreq/csbi_model.hpp"
#include "bfreq/csbi_sim.hpp"
#include "bfreq/error.hpp"

namespace bfreq {

using Json = nlohmann::json;

enum class SubTest { Ks, Moments, Residual };

struct ExperimentSpec {
  std::array<double, 2> x0{1.0, 1.0};
  std::size_t paths = 1000;
  double t_target = 0.5;
  /// Replaces the classifier's β exponent (negative controls).
  std::optional<double> beta_exponent;
  std::vector<SubTest> tests{SubTest::Ks, SubTest::Moments, SubTest::Residual};
  int moment_orders = 3;
  double z_threshold = 4.0;
  std::vector<double> residual_times;
  double residual_h = 0.01;
  /// Largest discarded-path fraction before a report turns Inconclusive.
  double max_discard = 1e-3;
  unsigned threads = 1;

  [[nodiscard]] bool runs(SubTest t) const { return std::find(tests.begin(), tests.end(), t) != tests.end(); }
  [[nodiscard]] double r0() const { return x0[0] / (x0[0] + x0[1]); }
};

struct OutputSpec {
  std::string dir = "out";
  /// Number of paths per side whose full trajectories are written.
  std::size_t write_paths = 0;
};

struct ExperimentConfig {
  CSBIParams params;
  TruncationChoice trunc;
  SimConfig sim;
  ExperimentSpec experiment;
  OutputSpec output;

  void validate() const {
    params.validate();
    sim.validate();
    const auto& e = experiment;
    require(e.paths >= 100, ErrorCode::InvalidConfig, "experiment.paths must be at least 100");
    require(e.x0[0] >= 0.0 && e.x0[1] >= 0.0 && e.x0[0] + e.x0[1] > 0.0, ErrorCode::InvalidConfig,
            "experiment.x0 must be nonnegative with positive total mass");
    require(e.t_target > 0.0 && std::isfinite(e.t_target), ErrorCode::InvalidConfig,
            "experiment.t_target must be positive");
    require(on_grid(e.t_target), ErrorCode::InvalidConfig, "experiment.t_target must be a multiple of sim.dt");
    require(e.moment_orders >= 1 && e.moment_orders <= 4, ErrorCode::InvalidConfig,
            "experiment.moment_orders must lie in 1..4");
    require(e.z_threshold > 0.0, ErrorCode::InvalidConfig, "experiment.z_threshold must be positive");
    require(e.max_discard >= 0.0 && e.max_discard < 1.0, ErrorCode::InvalidConfig,
            "experiment.max_discard must lie in [0,1)");
    require(e.threads >= 1, ErrorCode::InvalidConfig, "experiment.threads must be at least 1");
    require(e.residual_h > 0.0 && on_grid(e.residual_h), ErrorCode::InvalidConfig,
            "experiment.residual_h must be a positive multiple of sim.dt");
    for (double t : e.residual_times) {
      require(t >= 0.0 && on_grid(t), ErrorCode::InvalidConfig,
              "experiment.residual_times must be nonnegative multiples of sim.dt");
      require(t + e.residual_h <= e.t_target + 1e-12, ErrorCode::InvalidConfig,
              "residual time plus residual_h must not exceed t_target");
    }
    require(!e.beta_exponent || std::isfinite(*e.beta_exponent), ErrorCode::InvalidConfig,
            "experiment.beta_exponent must be finite");
  }

  [[nodiscard]] bool on_grid(double t) const {
    const double k = std::round(t / sim.dt);
    return std::abs(k * sim.dt - t) <= 1e-9 * std::max(1.0, t);
  }
};

namespace detail {

inline void check_keys(const Json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  require(j.is_object(), ErrorCode::InvalidConfig, std::string(where) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    require(known, ErrorCode::InvalidConfig, "unknown key '" + key + "' in " + std::string(where));
  }
}

template <class T>
T get(const Json& j, const char* key, std::string_view where) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorCode::InvalidConfig, std::string(where) + "." + key + ": " + ex.what());
  }
}

template <class T>
void read(const Json& j, const char* key, std::string_view where, T& out) {
  if (j.contains(key)) out = get<T>(j, key, where);
}

inline StableLevyMeasure parse_measure(const Json& j, MeasureKind kind, const std::string& where) {
  check_keys(j, where, {"alpha", "atoms"});
  const auto alpha = get<double>(j, "alpha", where);
  require(j.contains("atoms") && j["atoms"].is_array(), ErrorCode::InvalidConfig, where + ".atoms must be an array");
  std::vector<SphereAtom> atoms;
  for (const auto& a : j["atoms"]) {
    const std::string at = where + ".atoms[]";
    check_keys(a, at, {"xi", "weight"});
    const auto xi = get<std::array<double, 2>>(a, "xi", at);
    atoms.push_back(SphereAtom::from_direction(xi[0], xi[1], get<double>(a, "weight", at)));
  }
  return {alpha, kind, std::move(atoms)};
}

inline std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace detail

inline ExperimentConfig parse_config(const Json& root) {
  using detail::check_keys;
  using detail::get;
  using detail::read;
  check_keys(root, "config", {"model", "sim", "experiment", "output", "seed"});
  ExperimentConfig cfg;

  require(root.contains("model"), ErrorCode::InvalidConfig, "config needs a model");
  const auto& m = root["model"];
  check_keys(m, "model", {"c1", "c2", "b", "eta", "m1", "m2", "nu", "pin_drift", "cutoff"});
  auto& p = cfg.params;
  read(m, "c1", "model", p.c1);
  read(m, "c2", "model", p.c2);
  if (m.contains("b")) {
    const auto b = get<std::array<std::array<double, 2>, 2>>(m, "b", "model");
    p.b11 = b[0][0];
    p.b12 = b[0][1];
    p.b21 = b[1][0];
    p.b22 = b[1][1];
  }
  if (m.contains("eta")) {
    const auto eta = get<std::array<double, 2>>(m, "eta", "model");
    p.eta1 = eta[0];
    p.eta2 = eta[1];
  }
  if (m.contains("m1")) p.m1 = detail::parse_measure(m["m1"], MeasureKind::Branching, "model.m1");
  if (m.contains("m2")) p.m2 = detail::parse_measure(m["m2"], MeasureKind::Branching, "model.m2");
  if (m.contains("nu")) p.nu = detail::parse_measure(m["nu"], MeasureKind::Immigration, "model.nu");
  read(m, "cutoff", "model", cfg.trunc.cutoff);
  require(cfg.trunc.cutoff > 0.0, ErrorCode::InvalidConfig, "model.cutoff must be positive");
  bool pin = false;
  read(m, "pin_drift", "model", pin);
  require(!(pin && m.contains("b")), ErrorCode::InvalidConfig, "model.b and model.pin_drift are exclusive");
  if (pin) p = with_pinned_drift(p, cfg.trunc);

  if (root.contains("sim")) {
    const auto& s = root["sim"];
    check_keys(s, "sim",
               {"dt", "eps", "mass_cap", "z_floor", "horizon", "small_jump_policy", "diffusion_scheme", "gauss_below",
                "scale_free_steps"});
    auto& c = cfg.sim;
    read(s, "dt", "sim", c.dt);
    read(s, "eps", "sim", c.eps);
    read(s, "mass_cap", "sim", c.mass_cap);
    read(s, "z_floor", "sim", c.z_floor);
    read(s, "horizon", "sim", c.horizon);
    read(s, "gauss_below", "sim", c.gauss_below);
    read(s, "scale_free_steps", "sim", c.scale_free_steps);
    if (s.contains("small_jump_policy")) {
      const auto v = detail::lower(get<std::string>(s, "small_jump_policy", "sim"));
      require(v == "neglect" || v == "mean_drift", ErrorCode::InvalidConfig,
              "sim.small_jump_policy must be neglect or mean_drift");
      c.small_jump_policy = v == "neglect" ? SmallJumpPolicy::Neglect : SmallJumpPolicy::MeanDrift;
    }
    if (s.contains("diffusion_scheme")) {
      const auto v = detail::lower(get<std::string>(s, "diffusion_scheme", "sim"));
      require(v == "euler" || v == "poisson_gamma", ErrorCode::InvalidConfig,
              "sim.diffusion_scheme must be euler or poisson_gamma");
      c.diffusion_scheme = v == "euler" ? DiffusionScheme::Euler : DiffusionScheme::PoissonGamma;
    }
  }

  if (root.contains("experiment")) {
    const auto& e = root["experiment"];
    check_keys(e, "experiment",
               {"x0", "paths", "t_target", "beta_exponent", "tests", "moment_orders", "z_threshold", "residual_times",
                "residual_h", "max_discard", "threads"});
    auto& x = cfg.experiment;
    read(e, "x0", "experiment", x.x0);
    if (e.contains("paths")) {
      const auto n = get<long long>(e, "paths", "experiment");
      require(n >= 100, ErrorCode::InvalidConfig, "experiment.paths must be at least 100");
      x.paths = static_cast<std::size_t>(n);
    }
    read(e, "t_target", "experiment", x.t_target);
    if (e.contains("beta_exponent") && !e["beta_exponent"].is_null())
      x.beta_exponent = get<double>(e, "beta_exponent", "experiment");
    if (e.contains("tests")) {
      x.tests.clear();
      for (const auto& name : get<std::vector<std::string>>(e, "tests", "experiment")) {
        if (name == "ks") {
          x.tests.push_back(SubTest::Ks);
        } else if (name == "moments") {
          x.tests.push_back(SubTest::Moments);
        } else if (name == "residual") {
          x.tests.push_back(SubTest::Residual);
        } else {
          fail(ErrorCode::InvalidConfig, "unknown test '" + name + "' in experiment.tests");
        }
      }
    }
    read(e, "moment_orders", "experiment", x.moment_orders);
    read(e, "z_threshold", "experiment", x.z_threshold);
    read(e, "residual_times", "experiment", x.residual_times);
    read(e, "residual_h", "experiment", x.residual_h);
    read(e, "max_discard", "experiment", x.max_discard);
    if (e.contains("threads")) {
      const auto n = get<int>(e, "threads", "experiment");
      require(n >= 1, ErrorCode::InvalidConfig, "experiment.threads must be at least 1");
      x.threads = static_cast<unsigned>(n);
    }
  }

  if (root.contains("output")) {
    const auto& o = root["output"];
    check_keys(o, "output", {"dir", "write_paths"});
    read(o, "dir", "output", cfg.output.dir);
    read(o, "write_paths", "output", cfg.output.write_paths);
  }

  if (root.contains("seed")) cfg.sim.master_seed = get<std::uint64_t>(root, "seed", "config");
  cfg.validate();
  return cfg;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& ex) {
    fail(ErrorCode::InvalidConfig, std::string("malformed JSON: ") + ex.what());
  }
  return parse_config(j);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::InvalidConfig, "cannot read config file " + path);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config_text(text);
}

}  // namespace bfreq
