// One PASS/FAIL line per acceptance criterion. Exit status is 0 only when all
// criteria pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "bfreq/bfreq.hpp"

using namespace bfreq;

namespace {

const std::filesystem::path kConfigDir = BFREQ_CONFIG_DIR;
const std::filesystem::path kOutDir = "acceptance_out";

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

ExperimentConfig config(const std::string& name) {
  auto cfg = load_config((kConfigDir / (name + ".json")).string());
  cfg.output.dir = (kOutDir / name).string();
  return cfg;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Report rows named ks, moment_n and discarded_fraction all pass.
Outcome equivalence_verdict(const TestReport& r) {
  Outcome o{true, ""};
  for (const auto& row : r.rows) {
    const bool core = row.test == "ks" || row.test == "discarded_fraction" || row.test.rfind("moment_", 0) == 0;
    if (!core) continue;
    o.pass = o.pass && row.result == Verdict::Pass;
    o.detail += row.test + "=" + num(row.statistic) + "/" + num(row.threshold) + " ";
  }
  return o;
}

CSBIParams stable_pair(double alpha, std::vector<SphereAtom> l1, std::vector<SphereAtom> l2,
                       std::vector<SphereAtom> imm = {}) {
  CSBIParams p;
  p.m1 = StableLevyMeasure::branching(alpha, std::move(l1));
  p.m2 = StableLevyMeasure::branching(alpha, std::move(l2));
  if (!imm.empty()) p.nu = StableLevyMeasure::immigration(alpha, std::move(imm));
  return with_pinned_drift(p);
}

CSBIParams diffusion(double c1, double c2, double eta1, double eta2) {
  CSBIParams p;
  p.c1 = c1;
  p.c2 = c2;
  p.eta1 = eta1;
  p.eta2 = eta2;
  return p;
}

Outcome lemma_scaling() {
  double worst = 0.0;
  for (double alpha : {0.5, 1.5})
    for (const auto& r : lemma_check(alpha, {0.5, 2.0, 4.0}, false)) worst = std::max(worst, r.max_rel_dev);
  double counter = std::numeric_limits<double>::infinity();
  for (const auto& r : lemma_check(0.5, {0.5, 2.0, 4.0}, true)) counter = std::min(counter, r.max_rel_dev);
  return {worst < 1e-6 && counter > 0.1, "stable max dev " + num(worst) + ", exponential min dev " + num(counter)};
}

Outcome classifier_battery() {
  struct Case {
    CSBIParams p;
    CaseTag expected;
  };
  std::vector<Case> cases{
      {diffusion(1, 2, 0.3, 0.1), CaseTag::ContinuousCase},
      {diffusion(1, 1, 0, 0), CaseTag::ContinuousCase},
      {diffusion(3, 0.5, 0, 0.2), CaseTag::ContinuousCase},
      {stable_pair(1.5, {SphereAtom::e1(1)}, {SphereAtom::e2(1)}, {SphereAtom::e1(0.5)}),
       CaseTag::IndepStableWithImmigration},
      {stable_pair(1.5, {SphereAtom::e1(1)}, {SphereAtom::e2(1)}), CaseTag::IndepStableWithImmigration},
      {stable_pair(1.2, {SphereAtom::e1(0.3)}, {SphereAtom::e2(2)}, {SphereAtom::from_direction(1, 2, 0.4)}),
       CaseTag::IndepStableWithImmigration},
      {stable_pair(0.5, {SphereAtom::e1(1)}, {SphereAtom::e2(1)}), CaseTag::MultiTypeStable},
      {stable_pair(0.5, {SphereAtom::e1(1), SphereAtom::from_direction(2, 1, 0.4)}, {SphereAtom::e2(0.6)}),
       CaseTag::MultiTypeStable},
      {stable_pair(0.3, {SphereAtom::from_direction(1, 1, 0.7)}, {SphereAtom::from_direction(1, 4, 1.2)}),
       CaseTag::MultiTypeStable},
  };
  auto jumps_and_diffusion = stable_pair(0.5, {SphereAtom::e1(1)}, {SphereAtom::e2(1)});
  jumps_and_diffusion.c1 = 1.0;
  CSBIParams mismatched;
  mismatched.m1 = StableLevyMeasure::branching(0.5, {SphereAtom::e1(1)});
  mismatched.m2 = StableLevyMeasure::branching(0.6, {SphereAtom::e2(1)});
  mismatched = with_pinned_drift(mismatched);
  auto unpinned = stable_pair(0.5, {SphereAtom::e1(1)}, {SphereAtom::e2(1)});
  unpinned.b11 = 0.0;
  for (auto* p : {&jumps_and_diffusion, &mismatched, &unpinned}) cases.push_back({*p, CaseTag::NotTimeChangeable});
  int right = 0;
  for (const auto& c : cases) right += classify_case(c.p).tag == c.expected ? 1 : 0;
  return {right == 12 && cases.size() == 12, std::to_string(right) + "/" + std::to_string(cases.size()) + " correct"};
}

Outcome equivalence(const std::string& name) {
  const auto r = run_equivalence_experiment(config(name));
  auto o = equivalence_verdict(r);
  o.detail += "(" + num(r.runtime_seconds) + " s)";
  return o;
}

Outcome case1_with_control() {
  auto main = equivalence("case1");
  const auto control = run_equivalence_experiment(config("case1_wrong_beta"));
  const auto* ks = control.find("ks");
  const bool control_fails = ks && ks->result == Verdict::Fail;
  main.pass = main.pass && control_fails;
  main.detail += "; wrong-beta ks=" + num(ks ? ks->statistic : 0.0) + "/" + num(ks ? ks->threshold : 0.0) +
                 (control_fails ? " rejected" : " NOT rejected");
  return main;
}

/// Mean of R̄ equals r0 within 4 SE at every sampled time, on both sides.
Outcome case2_with_martingale() {
  auto main = equivalence("case2");
  const auto cfg = config("case2_no_imm");
  const auto s = sample_equivalence(cfg);
  const auto kept = s.kept();
  const double r0 = cfg.experiment.r0();
  double worst = 0.0;
  for (std::size_t k = 0; k < s.times.size(); ++k)
    for (const auto* side : {&kept, &s.sde}) {
      std::vector<double> v;
      for (const auto& p : *side) v.push_back(p.values[k]);
      const auto ms = mean_se(v);
      worst = std::max(worst, std::abs(ms.mean - r0) / ms.se);
    }
  const double discarded = 1.0 - double(kept.size()) / double(s.csbi.size());
  main.pass = main.pass && worst < 4.0 && discarded <= cfg.experiment.max_discard;
  main.detail += "; no-immigration martingale max|z|=" + num(worst) + " discarded=" + num(discarded);
  return main;
}

Outcome residuals() {
  double worst = 0.0;
  bool pass = true;
  std::string detail;
  for (const char* name : {"case1", "case2", "case3"}) {
    auto cfg = config(name);
    cfg.output.dir += "_generator";
    cfg.experiment.paths = 10000;
    cfg.experiment.t_target = 0.51;
    cfg.experiment.residual_times = {0.1, 0.25, 0.5};
    cfg.experiment.residual_h = 0.01;
    const auto r = run_generator_check(cfg);
    double w = 0.0;
    for (const auto& row : r.rows)
      if (row.test.rfind("residual_", 0) == 0) w = std::max(w, std::abs(row.statistic));
    pass = pass && r.overall() == Verdict::Pass && r.rows.size() >= 12;
    worst = std::max(worst, w);
    detail += std::string(name) + " max|z|=" + num(w) + " ";
  }
  return {pass, detail};
}

ExperimentConfig duality_config(const std::string& name, CSBIParams p, std::array<double, 2> x0, double t) {
  ExperimentConfig cfg;
  cfg.params = std::move(p);
  cfg.sim.diffusion_scheme = DiffusionScheme::PoissonGamma;
  cfg.sim.master_seed = 11;
  cfg.experiment.x0 = x0;
  cfg.experiment.t_target = t;
  cfg.experiment.paths = 10000;
  cfg.output.dir = (kOutDir / name).string();
  return cfg;
}

std::vector<double> sde_endpoints(const ExperimentConfig& cfg) {
  const auto regime = classify_case(cfg.params);
  const FrequencySdeSimulator sim(frequency_model(cfg.params, regime), cfg.sim);
  const std::vector<double> times{cfg.experiment.t_target};
  const auto paths = parallel_map(cfg.experiment.paths, cfg.experiment.threads,
                                  [&](std::size_t i) { return detail::sample_sde(cfg, sim, times, i); });
  std::vector<double> v;
  for (const auto& p : paths) v.push_back(p.values.back());
  return v;
}

Outcome duality() {
  const std::vector<ExperimentConfig> closed{
      duality_config("duality_neutral", diffusion(1, 1, 0, 0), {0.3, 0.7}, 1.0),
      duality_config("duality_gwf_eta", diffusion(1, 1, 0.3, 0.1), {0.3, 0.7}, 0.5),
      duality_config("duality_case2", stable_pair(1.5, {SphereAtom::e1(1)}, {SphereAtom::e2(1)}), {0.4, 0.6}, 0.3),
      duality_config("duality_case3",
                     stable_pair(0.5, {SphereAtom::from_direction(1, 2, 1)}, {SphereAtom::from_direction(1, 2, 1)}),
                     {0.3, 0.7}, 0.3)};
  bool pass = true;
  double worst = 0.0;
  for (const auto& cfg : closed) {
    const auto r = run_duality_check(cfg);
    pass = pass && r.overall() == Verdict::Pass && r.rows.size() == 4;
    for (const auto& row : r.rows) worst = std::max(worst, std::abs(row.statistic));
  }
  // Var R̄_1 for the neutral diffusion started at 0.3.
  const auto neutral = sde_endpoints(closed[0]);
  const auto m = mean_se(neutral);
  std::vector<double> dev;
  for (double x : neutral) dev.push_back((x - m.mean) * (x - m.mean));
  const double n = double(neutral.size());
  const double var = mean_se(dev).mean * n / (n - 1.0);
  const double z_var = (var - 0.1816) / mean_se(dev).se;
  // m1(1) for one-way immigration started at 0.
  const auto imm = sde_endpoints(duality_config("duality_immigration", diffusion(1, 1, 1, 0), {0.0, 1.0}, 1.0));
  const auto mi = mean_se(imm);
  const double z_imm = (mi.mean - (1.0 - std::exp(-1.0))) / mi.se;
  pass = pass && std::abs(z_var) < 4.0 && std::abs(z_imm) < 4.0;
  return {pass, "closed-case max|z|=" + num(worst) + ", Var z=" + num(z_var) + " (var " + num(var) +
                    "), immigration mean z=" + num(z_imm)};
}

Outcome griffiths() {
  const auto t0 = std::chrono::steady_clock::now();
  double gap = 0.0;
  for (double alpha : {0.5, 0.25}) {
    gap = std::max(gap, griffiths_max_gap(Case3Coefficients{alpha, {SphereAtom::e1(1)}, {SphereAtom::e2(1)}}));
    gap = std::max(gap, griffiths_max_gap(Case3Coefficients{
                            alpha,
                            {SphereAtom::from_direction(1, 1, 0.7), SphereAtom::e1(0.2)},
                            {SphereAtom::from_direction(1, 4, 1.2)}}));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {gap < 1e-8 && secs < 1.0, "max gap " + num(gap) + " in " + num(secs) + " s"};
}

double beta_variation(const CSBIParams& p, double e) {
  double worst = 0.0;
  for (int n = 1; n <= 3; ++n) {
    const auto f = TestFunction::monomial(static_cast<std::size_t>(n));
    for (double r : {0.2, 0.5, 0.8}) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (double z : {0.5, 1.0, 2.0, 5.0}) {
        const double v = normalized_generator(p, {}, f, r, z, e);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      worst = std::max(worst, hi - lo);
    }
  }
  return worst;
}

Outcome beta_cancellation() {
  const std::vector<std::pair<CSBIParams, double>> admissible{
      {diffusion(1, 2, 0.3, 0.1), -1.0},
      {stable_pair(1.5, {SphereAtom::e1(1)}, {SphereAtom::e2(1)}, {SphereAtom::e1(0.5)}), -0.5},
      {stable_pair(0.5, {SphereAtom::e1(1)}, {SphereAtom::e2(1)}), 0.5}};
  double flat = 0.0;
  for (const auto& [p, e] : admissible) flat = std::max(flat, beta_variation(p, e));
  auto drift = diffusion(1, 2, 0.3, 0.1);
  drift.b11 = 0.5;
  auto unpinned = stable_pair(0.5, {SphereAtom::e1(1)}, {SphereAtom::e2(1)});
  unpinned.b11 = 0.0;
  const double varies = std::min(beta_variation(drift, -1.0), beta_variation(unpinned, 0.5));
  return {flat < 1e-8 && varies > 1e-2, "admissible max variation " + num(flat) + ", inadmissible min " + num(varies)};
}

Outcome determinism() {
  bool same = true;
  std::string detail;
  for (const char* name : {"case1", "case3"}) {
    auto cfg = config(name);
    cfg.experiment.paths = 1000;
    std::vector<std::string> reports;
    for (unsigned threads : {1u, 1u, 4u}) {
      cfg.experiment.threads = threads;
      cfg.output.dir = (kOutDir / (std::string(name) + "_det_" + std::to_string(reports.size()))).string();
      run_equivalence_experiment(cfg);
      reports.push_back(read_file(std::filesystem::path(cfg.output.dir) / "report.csv"));
    }
    const bool repeat = reports[0] == reports[1] && !reports[0].empty();
    const bool threads = reports[0] == reports[2];
    same = same && repeat && threads;
    detail += std::string(name) + (repeat ? " repeat identical" : " repeat DIFFERS") +
              (threads ? ", threads identical; " : ", threads DIFFER; ");
  }
  return {same, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"stable pushforward scaling", lemma_scaling},
      {"classifier battery", classifier_battery},
      {"case (i) equivalence", case1_with_control},
      {"case (ii) equivalence", case2_with_martingale},
      {"case (iii) equivalence", [] { return equivalence("case3"); }},
      {"martingale residuals", residuals},
      {"moment duality", duality},
      {"Griffiths identity", griffiths},
      {"beta cancellation", beta_cancellation},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s criterion %zu: %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
