#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "bfreq/bfreq.hpp"

using namespace bfreq;

namespace {

constexpr int kConfigError = 3;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<double> eps;
  std::optional<double> dt;
  bool quiet = false;
};

/// The paths >= 100 rule belongs to experiments; the simulate commands only
/// dump trajectories and take any positive count.
ExperimentConfig load(const std::string& path, const Globals& g, const std::optional<std::size_t>& paths,
                      const std::optional<std::string>& out, bool dump_only) {
  auto cfg = load_config(path);
  if (g.seed) cfg.sim.master_seed = *g.seed;
  if (g.threads) cfg.experiment.threads = *g.threads;
  if (g.eps) cfg.sim.eps = *g.eps;
  if (g.dt) cfg.sim.dt = *g.dt;
  if (out) cfg.output.dir = *out;
  if (paths && !dump_only) cfg.experiment.paths = *paths;
  cfg.validate();
  if (paths && dump_only) {
    require(*paths >= 1, ErrorCode::InvalidConfig, "--paths must be positive");
    cfg.experiment.paths = *paths;
  }
  return cfg;
}

int finish(const TestReport& report, const Globals& g) {
  const auto verdict = report.overall();
  if (!g.quiet) {
    for (const auto& r : report.rows)
      std::printf("%-13s %-28s statistic=%-14s threshold=%-10s se=%s\n", to_string(r.result).c_str(), r.test.c_str(),
                  format_number(r.statistic).c_str(), format_number(r.threshold).c_str(),
                  format_number(r.se).c_str());
    std::printf("overall: %s (%.1f s)\n", to_string(verdict).c_str(), report.runtime_seconds);
  }
  return exit_code(verdict);
}

int classify(const ExperimentConfig& cfg) {
  const auto c = classify_case(cfg.params, 1e-9, cfg.trunc);
  std::printf("case: %s\n", to_string(c.tag).c_str());
  if (c.alpha) std::printf("alpha: %s\n", format_number(*c.alpha).c_str());
  if (c.admissible()) std::printf("beta_exponent: %s\n", format_number(c.beta_exponent).c_str());
  if (!c.reason.empty()) std::printf("reason: %s\n", c.reason.c_str());
  return 0;
}

int simulate_csbi_paths(const ExperimentConfig& cfg, const Globals& g) {
  const auto regime = detail::admissible_regime(cfg);
  auto dump = cfg;
  dump.output.write_paths = cfg.experiment.paths;
  const auto times = detail::sample_times(cfg, false);
  const auto kept = parallel_map(cfg.experiment.paths, cfg.experiment.threads, [&](std::size_t i) {
    return !detail::sample_csbi(dump, regime, regime.beta_exponent, times, i).grid.empty();
  });
  std::size_t reached = 0;
  for (bool k : kept) reached += k ? 1 : 0;
  if (!g.quiet)
    std::printf("wrote %zu CSBI paths to %s/csbi; %zu reach changed time %s\n", kept.size(), cfg.output.dir.c_str(),
                reached, format_number(cfg.experiment.t_target).c_str());
  return 0;
}

int simulate_sde_paths(const ExperimentConfig& cfg, const Globals& g) {
  const auto regime = detail::admissible_regime(cfg);
  auto dump = cfg;
  dump.output.write_paths = cfg.experiment.paths;
  const FrequencySdeSimulator sim(frequency_model(cfg.params, regime), cfg.sim);
  const auto times = detail::sample_times(cfg, false);
  parallel_map(cfg.experiment.paths, cfg.experiment.threads,
               [&](std::size_t i) { return detail::sample_sde(dump, sim, times, i).values.back(); });
  if (!g.quiet) std::printf("wrote %zu SDE paths to %s/sde\n", cfg.experiment.paths, cfg.output.dir.c_str());
  return 0;
}

int lemma(double alpha, const std::vector<double>& zs, const std::string& counterexample, const Globals& g) {
  if (!counterexample.empty() && counterexample != "exp")
    fail(ErrorCode::InvalidConfig, "the only counterexample is 'exp'");
  const auto rows = lemma_check(alpha, zs, !counterexample.empty());
  bool all = true;
  for (const auto& r : rows) {
    all = all && r.scaling;
    if (!g.quiet)
      std::printf("%-5s %-22s max_rel_dev=%-14s fitted_exponent=%s\n", r.scaling ? "pass" : "fail", r.label.c_str(),
                  format_number(r.max_rel_dev).c_str(), format_number(r.alpha_hat).c_str());
  }
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-type branching processes, their time change and frequency processes"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "master seed (overrides the config)");
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--eps", g.eps, "jump truncation level");
  app.add_option("--dt", g.dt, "time step");
  app.add_flag("--quiet", g.quiet, "print nothing but errors");

  std::string config;
  std::optional<std::size_t> paths;
  std::optional<std::string> out;
  auto with_config = [&](CLI::App* sub, bool with_paths, bool with_out) {
    sub->add_option("--config", config, "experiment JSON")->required()->check(CLI::ExistingFile);
    if (with_paths) sub->add_option("--paths", paths, "number of paths");
    if (with_out) sub->add_option("--out", out, "output directory");
    sub->fallthrough();
    return sub;
  };
  auto* cmd_classify = with_config(app.add_subcommand("classify", "print the case of the parameters"), false, false);
  auto* cmd_csbi = with_config(app.add_subcommand("simulate-csbi", "write CSBI and time-changed paths"), true, true);
  auto* cmd_sde = with_config(app.add_subcommand("simulate-sde", "write frequency-SDE paths"), true, true);
  auto* cmd_compare = with_config(app.add_subcommand("compare", "time-changed CSBI against the frequency SDE"), true, true);
  auto* cmd_duality = with_config(app.add_subcommand("duality-check", "SDE moments against the moment ODE"), true, true);
  auto* cmd_generator =
      with_config(app.add_subcommand("generator-check", "martingale residuals and the Griffiths identity"), true, true);

  auto* cmd_lemma = app.add_subcommand("lemma-check", "pushforward scaling of stable measures");
  double alpha = 0.5;
  std::vector<double> zs{0.5, 2.0, 4.0};
  std::string counterexample;
  cmd_lemma->add_option("--alpha", alpha, "stability index")->required();
  cmd_lemma->add_option("--z-list", zs, "dilation factors")->delimiter(',');
  cmd_lemma->add_option("--counterexample", counterexample, "check a non-stable measure instead (exp)");
  cmd_lemma->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (cmd_lemma->parsed()) return lemma(alpha, zs, counterexample, g);
    const auto cfg = load(config, g, paths, out, cmd_csbi->parsed() || cmd_sde->parsed());
    if (cmd_classify->parsed()) return classify(cfg);
    if (cmd_csbi->parsed()) return simulate_csbi_paths(cfg, g);
    if (cmd_sde->parsed()) return simulate_sde_paths(cfg, g);
    if (cmd_compare->parsed()) return finish(run_equivalence_experiment(cfg), g);
    if (cmd_duality->parsed()) return finish(run_duality_check(cfg), g);
    if (cmd_generator->parsed()) return finish(run_generator_check(cfg), g);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::EmptyInput ? exit_code(Verdict::Inconclusive) : kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return kConfigError;
}
