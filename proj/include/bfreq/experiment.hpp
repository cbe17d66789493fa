#pragma once

// Experiment orchestration: path fan-out over worker threads, the
// time-changed versus direct comparison, moment-duality and generator checks,
// and the CSV test report.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <filesystem>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "bfreq/config.hpp"
#include "bfreq/csbi_sim.hpp"
#include "bfreq/csv.hpp"
#include "bfreq/freq_sde.hpp"
#include "bfreq/generators.hpp"
#include "bfreq/stats.hpp"
#include "bfreq/time_change.hpp"

namespace bfreq {

/// results[i] = f(i) for i < n. Workers take indices from a shared counter;
/// since every path draws from its own stream, the output does not depend on
/// the thread count. The first exception is rethrown after all workers stop.
template <class F>
auto parallel_map(std::size_t n, unsigned threads, F&& f) -> std::vector<decltype(f(std::size_t{}))> {
  std::vector<decltype(f(std::size_t{}))> out(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        out[i] = f(i);
      } catch (...) {
        const std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
        return;
      }
    }
  };
  const unsigned k = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (k == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(k);
    for (unsigned t = 0; t < k; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return out;
}

enum class Verdict { Pass, Fail, Inconclusive };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

struct TestRow {
  std::string test;
  double statistic = 0.0;
  double threshold = 0.0;
  double se = 0.0;
  Verdict result = Verdict::Fail;
};

struct TestReport {
  std::vector<TestRow> rows;
  double discarded_fraction = 0.0;
  /// Wall-clock seconds; kept out of report.csv so reports stay reproducible.
  double runtime_seconds = 0.0;

  /// Passes when |z| < threshold.
  void add_z(std::string name, double z, double se, double threshold) {
    rows.push_back({std::move(name), z, threshold, se, std::abs(z) < threshold ? Verdict::Pass : Verdict::Fail});
  }
  /// Passes when statistic < threshold.
  void add_upper(std::string name, double statistic, double threshold, double se = 0.0) {
    rows.push_back({std::move(name), statistic, threshold, se, statistic < threshold ? Verdict::Pass : Verdict::Fail});
  }
  void add_ks(const std::string& name, const KsResult& ks, std::size_t m, std::size_t n) {
    // Standard deviation of D under the null, from the Kolmogorov law.
    constexpr double kKolmogorovSd = 0.2603;
    const double scale = std::sqrt(double(m + n) / (double(m) * double(n)));
    add_upper(name, ks.D, ks.critical_1pct, kKolmogorovSd * scale);
  }

  [[nodiscard]] Verdict overall() const {
    bool failed = false;
    for (const auto& r : rows) {
      if (r.result == Verdict::Inconclusive) return Verdict::Inconclusive;
      failed = failed || r.result == Verdict::Fail;
    }
    return failed ? Verdict::Fail : Verdict::Pass;
  }

  [[nodiscard]] const TestRow* find(std::string_view name) const {
    for (const auto& r : rows)
      if (r.test == name) return &r;
    return nullptr;
  }

  [[nodiscard]] std::string to_csv() const {
    std::ostringstream out;
    out << "test,statistic,threshold,se,result\n";
    for (const auto& r : rows)
      out << r.test << ',' << format_number(r.statistic) << ',' << format_number(r.threshold) << ','
          << format_number(r.se) << ',' << to_string(r.result) << '\n';
    return out.str();
  }

  void write_csv(const std::filesystem::path& file) const {
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorCode::InvalidConfig, "cannot write " + file.string());
    out << to_csv();
  }
};

/// Exit status of the command-line tool for a verdict.
inline int exit_code(Verdict v) {
  switch (v) {
    case Verdict::Pass: return 0;
    case Verdict::Fail: return 1;
    case Verdict::Inconclusive: return 2;
  }
  return 1;
}

namespace detail {

inline CaseClass admissible_regime(const ExperimentConfig& cfg) {
  const auto regime = classify_case(cfg.params, 1e-9, cfg.trunc);
  if (!regime.admissible())
    fail(ErrorCode::RegimeMismatch, "parameters admit no time change: " + regime.reason);
  return regime;
}

/// Changed times at which paths are sampled: residual times, those plus h,
/// and the target, sorted and deduplicated.
inline std::vector<double> sample_times(const ExperimentConfig& cfg, bool residuals) {
  const auto& e = cfg.experiment;
  std::vector<double> ts{e.t_target};
  if (residuals)
    for (double t : e.residual_times) {
      ts.push_back(t);
      ts.push_back(t + e.residual_h);
    }
  for (auto& t : ts) t = std::round(t / cfg.sim.dt) * cfg.sim.dt;
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  return ts;
}

/// Knots k·dt that do not exceed t_end.
inline std::vector<double> knot_grid(double dt, double t_end) {
  auto n = static_cast<std::size_t>(std::floor(t_end / dt + 1e-9));
  while (n > 0 && static_cast<double>(n) * dt > t_end) --n;
  std::vector<double> g(n + 1);
  for (std::size_t k = 0; k <= n; ++k) g[k] = static_cast<double>(k) * dt;
  return g;
}

/// R̄ at the given times for one time-changed CSBI path; empty when the clock
/// stops at or before the target.
inline FrequencyPath sample_csbi(const ExperimentConfig& cfg, const CaseClass& regime, double e,
                                 const std::vector<double>& times, std::size_t i) {
  const auto& x = cfg.experiment;
  const auto mp =
      simulate_csbi(cfg.params, regime, x.x0, cfg.sim, i, ChangedTimeStop{e, x.t_target}, cfg.trunc);
  const auto tc = cumulative_T(mp, e);
  const auto fp = frequency_path(mp);
  if (i < cfg.output.write_paths) {
    const std::filesystem::path dir = std::filesystem::path(cfg.output.dir) / "csbi";
    write_mass_path(dir / ("mass_" + std::to_string(i) + ".csv"), mp);
    const double end = std::min(x.t_target, tc.horizon());
    const auto grid = knot_grid(cfg.sim.dt, end);
    write_changed_path(dir / ("changed_" + std::to_string(i) + ".csv"), time_changed_frequency(fp, tc, grid));
  }
  if (!(tc.horizon() > x.t_target)) return {};
  return time_changed_frequency(fp, tc, times);
}

inline FrequencyPath sample_sde(const ExperimentConfig& cfg, const FrequencySdeSimulator& sim,
                                const std::vector<double>& times, std::size_t i) {
  const auto sp = sim.simulate(cfg.experiment.r0(), times.back(), i);
  if (i < cfg.output.write_paths) {
    const std::filesystem::path dir = std::filesystem::path(cfg.output.dir) / "sde";
    write_frequency_path(dir / ("path_" + std::to_string(i) + ".csv"), sp.path);
  }
  FrequencyPath out;
  out.grid = times;
  for (double t : times) out.values.push_back(sp.path.values[static_cast<std::size_t>(std::llround(t / cfg.sim.dt))]);
  return out;
}

inline double value_at(const FrequencyPath& p, double t) {
  for (std::size_t k = 0; k < p.grid.size(); ++k)
    if (std::abs(p.grid[k] - t) <= 1e-9 * (1.0 + std::abs(t))) return p.values[k];
  fail(ErrorCode::DegenerateInput, "time is not a sampled knot");
}

inline std::vector<TestFunction> monomials(int n_max) {
  std::vector<TestFunction> fs;
  for (int n = 1; n <= n_max; ++n) fs.push_back(TestFunction::monomial(static_cast<std::size_t>(n)));
  return fs;
}

/// Af for a fixed model, with A applied to each polynomial once through the
/// Beta moments of the jump laws.
inline GeneratorFn cached_generator(const FrequencyModel& model, const std::vector<TestFunction>& fs) {
  std::vector<std::pair<std::vector<double>, Polynomial>> cache;
  for (const auto& f : fs) cache.emplace_back(f.poly().coeffs(), generator_polynomial(model, f.poly()));
  return [model, cache = std::move(cache)](const TestFunction& f, double r) {
    for (const auto& [c, af] : cache)
      if (c == f.poly().coeffs()) return af(r);
    return freq_generator_apply(model, f, r);
  };
}

inline std::string label(double t) { return format_number(t); }

inline void add_residual_rows(TestReport& report, const std::string& side, std::span<const FrequencyPath> paths,
                              const FrequencyModel& model, const ExperimentConfig& cfg) {
  const auto& e = cfg.experiment;
  if (e.residual_times.empty()) return;
  const auto fs = monomials(4);
  const auto rows = martingale_residual(paths, cached_generator(model, fs), fs, e.residual_h, e.residual_times);
  for (const auto& r : rows)
    report.add_z("residual_" + side + "_r" + std::to_string(r.f_index + 1) + "_t" + label(r.t), r.z, r.se,
                 e.z_threshold);
}

}  // namespace detail

/// Both samples of an equivalence experiment, on the sampled changed times.
struct EquivalenceSamples {
  CaseClass regime;
  FrequencyModel model;
  std::vector<double> times;
  /// Time-changed CSBI paths; an empty grid marks a discarded path.
  std::vector<FrequencyPath> csbi;
  std::vector<FrequencyPath> sde;

  [[nodiscard]] std::vector<FrequencyPath> kept() const {
    std::vector<FrequencyPath> out;
    for (const auto& p : csbi)
      if (!p.grid.empty()) out.push_back(p);
    return out;
  }
};

/// CSBI paths are run until their clock passes the target; those whose clock
/// stops at or before it are discarded.
inline EquivalenceSamples sample_equivalence(const ExperimentConfig& cfg) {
  cfg.validate();
  EquivalenceSamples s;
  s.regime = detail::admissible_regime(cfg);
  const auto& x = cfg.experiment;
  const double e = x.beta_exponent.value_or(s.regime.beta_exponent);
  s.model = frequency_model(cfg.params, s.regime);
  s.times = detail::sample_times(cfg, x.runs(SubTest::Residual));
  s.csbi = parallel_map(x.paths, x.threads, [&](std::size_t i) { return detail::sample_csbi(cfg, s.regime, e, s.times, i); });
  const FrequencySdeSimulator sim(s.model, cfg.sim);
  s.sde = parallel_map(x.paths, x.threads, [&](std::size_t i) { return detail::sample_sde(cfg, sim, s.times, i); });
  return s;
}

/// KS, moment and residual rows for the two samples at the target changed
/// time. A discarded fraction above the limit makes the report Inconclusive.
/// Writes report.csv and endpoints.csv to the output directory.
inline TestReport equivalence_report(const ExperimentConfig& cfg, const EquivalenceSamples& s) {
  const auto& x = cfg.experiment;
  const auto n = s.csbi.size();
  const auto kept = s.kept();
  std::vector<double> a;
  std::vector<double> b;
  for (const auto& p : kept) a.push_back(detail::value_at(p, x.t_target));
  for (const auto& p : s.sde) b.push_back(detail::value_at(p, x.t_target));

  TestReport report;
  const double frac = static_cast<double>(n - kept.size()) / static_cast<double>(n);
  report.discarded_fraction = frac;
  report.rows.push_back({"discarded_fraction", frac, x.max_discard, std::sqrt(frac * (1.0 - frac) / double(n)),
                         frac <= x.max_discard ? Verdict::Pass : Verdict::Inconclusive});
  require(a.size() >= 2, ErrorCode::EmptyInput, "fewer than two CSBI paths reach the target changed time");
  if (x.runs(SubTest::Ks)) report.add_ks("ks", ks_two_sample(a, b), a.size(), b.size());
  if (x.runs(SubTest::Moments))
    for (const auto& m : moment_compare_two_sample(a, b, x.moment_orders))
      report.add_z("moment_" + std::to_string(m.order), m.z, m.se, x.z_threshold);
  if (x.runs(SubTest::Residual)) {
    detail::add_residual_rows(report, "csbi", kept, s.model, cfg);
    detail::add_residual_rows(report, "sde", s.sde, s.model, cfg);
  }

  const std::filesystem::path dir(cfg.output.dir);
  report.write_csv(dir / "report.csv");
  CsvWriter w(dir / "endpoints.csv", {"path", "csbi_r_bar", "sde_r_bar"});
  for (std::size_t i = 0; i < n; ++i) {
    const double va = s.csbi[i].grid.empty() ? std::nan("") : detail::value_at(s.csbi[i], x.t_target);
    w.row({static_cast<double>(i), va, detail::value_at(s.sde[i], x.t_target)});
  }
  return report;
}

inline TestReport run_equivalence_experiment(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  auto report = equivalence_report(cfg, sample_equivalence(cfg));
  report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

/// Frequency-SDE moments of orders 1..4 at the target against the closed
/// moment ODE.
inline TestReport run_duality_check(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const auto regime = detail::admissible_regime(cfg);
  const auto model = frequency_model(cfg.params, regime);
  const auto mm = moment_matrix(model, 4);
  require(mm.closed, ErrorCode::NotClosed, "moment hierarchy of this model is not closed at degree 4");
  const auto& x = cfg.experiment;
  const auto exact = moment_ode_solve(mm, x.r0(), x.t_target);
  const FrequencySdeSimulator sim(model, cfg.sim);
  const std::vector<double> times{x.t_target};
  const auto paths = parallel_map(x.paths, x.threads, [&](std::size_t i) { return detail::sample_sde(cfg, sim, times, i); });
  std::vector<double> v;
  for (const auto& p : paths) v.push_back(p.values.back());
  TestReport report;
  const std::vector<double> targets(exact.begin() + 1, exact.end());
  for (const auto& m : moment_compare(v, targets))
    report.add_z("duality_moment_" + std::to_string(m.order), m.z, m.se, x.z_threshold);
  report.write_csv(std::filesystem::path(cfg.output.dir) / "report.csv");
  report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

/// Largest |𝒜g - A g| over monomials of degree <= 4 and r = 0.1..0.9.
inline double griffiths_max_gap(const Case3Coefficients& m) {
  double worst = 0.0;
  for (int n = 0; n <= 4; ++n) {
    const auto g = TestFunction::monomial(static_cast<std::size_t>(n));
    for (int k = 1; k <= 9; ++k) {
      const double x = 0.1 * k;
      worst = std::max(worst, std::abs(griffiths_generator_apply(m.lambda1, m.lambda2, m.alpha, g, x) -
                                       freq_generator_apply(FrequencyModel{m}, g, x)));
    }
  }
  return worst;
}

/// Martingale residuals of r, r², r³, r⁴ along frequency-SDE paths, plus the
/// Griffiths identity when the model is a case-(iii) process.
inline TestReport run_generator_check(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const auto regime = detail::admissible_regime(cfg);
  const auto model = frequency_model(cfg.params, regime);
  const auto& x = cfg.experiment;
  require(!x.residual_times.empty(), ErrorCode::InvalidConfig, "generator check needs experiment.residual_times");
  const FrequencySdeSimulator sim(model, cfg.sim);
  const auto times = detail::sample_times(cfg, true);
  const auto paths = parallel_map(x.paths, x.threads, [&](std::size_t i) { return detail::sample_sde(cfg, sim, times, i); });
  TestReport report;
  detail::add_residual_rows(report, "sde", paths, model, cfg);
  if (const auto* c3 = std::get_if<Case3Coefficients>(&model)) report.add_upper("griffiths_max_gap", griffiths_max_gap(*c3), 1e-8);
  report.write_csv(std::filesystem::path(cfg.output.dir) / "report.csv");
  report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

struct LemmaCheck {
  std::string label;
  double max_rel_dev = 0.0;
  double alpha_hat = 0.0;
  bool scaling = false;
};

/// Scaling of the pushforward μ_z over three regions of the simplex. For a
/// stable measure the deviation is that of μ_z(B)·z^{ρ-1}/μ_1(B) from 1, with
/// ρ the radial exponent; for the exponential-radial counterexample it is the
/// residual of the best power-law fit.
inline std::vector<LemmaCheck> lemma_check(double alpha, const std::vector<double>& zs, bool counterexample,
                                           double tol = 1e-6) {
  require(zs.size() >= 2, ErrorCode::DegenerateInput, "lemma check needs at least two z values");
  const std::vector<SimplexRect> regions{{0.1, 0.2, 0.0, 0.0}, {0.3, 0.6, 0.0, 0.0}, {0.15, 0.3, 0.2, 0.35}};
  std::vector<LemmaCheck> out;
  if (counterexample) {
    const ExponentialRadialMeasure m{SphereAtom::from_direction(1, 1, 1)};
    const ExponentialRadialMeasure axis;
    for (const auto* mm : {&axis, &m}) {
      auto eval = [&](double z, const SimplexRect& r) { return mm->pushforward_mass(z, r); };
      const auto res = scaling_check<SimplexRect>(eval, zs, regions, tol);
      out.push_back({mm == &axis ? "exponential_e1" : "exponential_diagonal", res.max_rel_dev, res.alpha_hat,
                     res.is_scaling});
    }
    return out;
  }
  for (auto kind : {MeasureKind::Branching, MeasureKind::Immigration}) {
    std::vector<SphereAtom> atoms{SphereAtom::e1(1.0), SphereAtom::e2(0.5)};
    if (!(kind == MeasureKind::Branching && alpha > 1.0)) atoms.push_back(SphereAtom::from_direction(1, 1, 0.7));
    const StableLevyMeasure m(alpha, kind, atoms);
    double worst = 0.0;
    for (const auto& r : regions) {
      const double base = pushforward_mass(m, 1.0, r);
      if (base == 0.0) continue;
      for (double z : zs)
        worst = std::max(worst, std::abs(pushforward_mass(m, z, r) * std::pow(z, m.radial_exponent() - 1.0) / base - 1.0));
    }
    auto eval = [&](double z, const SimplexRect& r) { return pushforward_mass(m, z, r); };
    const auto fit = scaling_check<SimplexRect>(eval, zs, regions, tol);
    out.push_back({kind == MeasureKind::Branching ? "branching" : "immigration", std::max(worst, fit.max_rel_dev),
                   fit.alpha_hat, worst < tol && fit.is_scaling});
  }
  return out;
}

}  // namespace bfreq
