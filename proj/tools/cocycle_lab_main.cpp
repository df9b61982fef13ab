// cocycle-lab: obstruction audits, transfer-map reconstruction, Lyapunov
// norms and spectra, shadowing, holonomies, and regularity estimation on
// concrete hyperbolic systems. One JSON config in, deterministic reports out.

#include <CLI11.hpp>

#include "cocyclelab/verify.hpp"

#include <chrono>
#include <iostream>

using namespace cocyclelab;

namespace {

class Stopwatch {
 public:
  explicit Stopwatch(RunReport& report) : report_(report) {}
  template <typename Fn>
  auto time(const std::string& label, Fn&& fn) {
    auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      report_.timings_seconds[label] =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    } else {
      auto out = fn();
      report_.timings_seconds[label] =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      return out;
    }
  }

 private:
  RunReport& report_;
};

std::string state_name(const CheckResult& c) {
  switch (c.state) {
    case CheckResult::State::kPass: return "pass";
    case CheckResult::State::kFail: return c.expected_fail ? "expected-fail" : "fail";
    case CheckResult::State::kSkipped: return "skipped";
  }
  return "?";
}

void cmd_spectrum(const ExperimentConfig& cfg, int threads, RunReport& report) {
  (void)threads;
  Stopwatch watch(report);
  auto sys = make_system(cfg);
  CocycleMap a = make_cocycle(cfg, sys);
  auto pts = sys->sample_measure(cfg.livsic.seed, cfg.livsic.spectrum_samples);

  CsvTable table;
  table.name = "spectrum";
  table.header = {"sample", "block", "exponent", "multiplicity", "drift",
                  "converged"};
  Json samples = Json::array();
  for (size_t i = 0; i < pts.size(); ++i) {
    LyapunovSpectrum spec = watch.time(
        "spectrum_sample_" + std::to_string(i), [&] {
          return lyapunov_spectrum(a, *sys, pts[i], cfg.livsic.exponent_iters);
        });
    Json s;
    s["sample"] = i;
    s["exponents"] = spec.exponents;
    s["multiplicities"] = spec.multiplicities;
    s["drift"] = spec.drift;
    s["converged"] = spec.converged;
    samples.push_back(std::move(s));
    for (int b = 0; b < spec.blocks(); ++b)
      table.rows.push_back({std::to_string(i), std::to_string(b),
                            format_double(spec.exponents[static_cast<size_t>(b)]),
                            std::to_string(spec.multiplicities[static_cast<size_t>(b)]),
                            format_double(spec.drift[static_cast<size_t>(b)]),
                            spec.converged ? "1" : "0"});
  }
  ZeroExponentReport screen = watch.time("zero_exponent_check", [&] {
    return zero_exponent_check(a, *sys, cfg.livsic.spectrum_samples,
                               cfg.livsic.seed, cfg.livsic.exponent_iters);
  });
  report.summary["samples"] = std::move(samples);
  report.summary["zero_exponent"] = {{"max_abs_top", screen.max_abs_top},
                                     {"max_abs_bottom", screen.max_abs_bottom},
                                     {"threshold", screen.threshold},
                                     {"pass", screen.pass}};
  report.tables.push_back(std::move(table));
}

void cmd_obstructions(const ExperimentConfig& cfg, int threads, RunReport& report) {
  Stopwatch watch(report);
  auto sys = make_system(cfg);
  CocycleMap a = make_cocycle(cfg, sys);
  ObstructionReport rep = watch.time("obstruction_audit", [&] {
    return obstruction_audit(a, *sys, cfg.livsic.n_max,
                             cfg.livsic.defect_tolerance, threads);
  });

  CsvTable table;
  table.name = "obstructions";
  if (sys->is_torus())
    table.header = {"period", "p0", "p1", "defect"};
  else
    table.header = {"period", "word", "defect"};
  for (const auto& row : rep.rows) {
    if (sys->is_torus()) {
      const auto& p = std::get<TorusPoint>(row.point);
      table.rows.push_back({std::to_string(row.period), format_double(p[0]),
                            format_double(p[1]), format_double(row.defect)});
    } else {
      table.rows.push_back(
          {std::to_string(row.period), row.label, format_double(row.defect)});
    }
  }
  report.summary["audited"] = rep.audited;
  report.summary["counts_per_period"] = rep.counts_per_period;
  report.summary["max_defect"] = rep.max_defect;
  report.checks.push_back(CheckResult::make(
      "obstruction_tolerance", rep.pass, rep.max_defect,
      "max defect " + format_double(rep.max_defect) + " vs tolerance " +
          format_double(rep.tolerance)));
  report.tables.push_back(std::move(table));
}

void cmd_transfer(const ExperimentConfig& cfg, int threads, RunReport& report) {
  (void)threads;
  Stopwatch watch(report);
  auto sys = make_system(cfg);
  CocycleMap a = make_cocycle(cfg, sys);
  double eps = cfg.effective_epsilon(*sys);

  TransferOptions topts;
  topts.n_points = cfg.livsic.n_points;
  topts.epsilon = eps;
  topts.block_bound = cfg.lyapnorm.block_bound_n;
  topts.truncation = cfg.lyapnorm.truncation;
  topts.spectrum_iters = cfg.livsic.spectrum_iters;
  topts.seed = cfg.livsic.seed;
  topts.override_zero_check = cfg.livsic.override_zero_check;

  Point x0 = choose_anchor(*sys, cfg.livsic.seed);
  TransferTable table;
  try {
    table = watch.time("build_transfer",
                       [&] { return build_transfer(a, *sys, x0, topts); });
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kZeroExponentCheckFailed) throw;
    report.checks.push_back(CheckResult::fail("zero_exponent_gate", 0, e.what()));
    report.summary["aborted"] = e.what();
    return;
  }
  report.checks.push_back(CheckResult::pass("zero_exponent_gate", 0,
                                            "screen passed (or overridden)"));

  report.summary["entries"] = table.entries.size();
  report.summary["in_g_count"] = table.in_g_count;
  report.summary["tail_uncertified"] = table.tail_uncertified;
  report.summary["bound_T"] = table.bound_t;
  report.summary["bound_T_first_half"] = table.bound_t_half;
  report.summary["epsilon"] = eps;

  // construction identity spot check
  double worst_rec = 0;
  for (size_t n = 0; n + 1 < table.entries.size();
       n += std::max<size_t>(1, table.entries.size() / 64)) {
    Matrix lhs = table.entries[n + 1].p.to_matrix();
    Matrix rhs = a.evaluate(table.entries[n].point) * table.entries[n].p.to_matrix();
    worst_rec = std::max(worst_rec,
                         spectral_norm(Matrix(lhs - rhs)) / spectral_norm(rhs));
  }
  report.checks.push_back(CheckResult::make(
      "transfer_recursion", worst_rec <= 1e-10, worst_rec,
      "worst relative recursion defect " + format_double(worst_rec)));

  if (a.ground_truth()) {
    double residual = watch.time("uniqueness_residual", [&] {
      return uniqueness_residual(table, *a.ground_truth(), *sys);
    });
    report.summary["uniqueness_residual"] = residual;
    report.checks.push_back(CheckResult::make(
        "uniqueness_residual", residual <= cfg.livsic.residual_tolerance, residual,
        "sup-residual " + format_double(residual) + " vs tolerance " +
            format_double(cfg.livsic.residual_tolerance)));
  }

  CsvTable csv;
  csv.name = "transfer";
  csv.header = {"m", "n", "h", "defect", "K_fit_pass"};
  try {
    NearReturnOptions nro;
    nro.beta = cfg.livsic.beta;
    nro.max_pairs = cfg.livsic.max_return_pairs;
    nro.shadow_max_period = cfg.livsic.shadow_max_period;
    NearReturnScan scan = watch.time(
        "near_return_scan", [&] { return near_return_scan(a, *sys, table, nro); });
    for (const auto& st : scan.stats)
      csv.rows.push_back({std::to_string(st.m), std::to_string(st.n),
                          format_double(st.h), format_double(st.defect),
                          st.envelope_flag ? "0" : "1"});
    Json decades;
    for (const auto& [dec, env] : scan.decade_envelopes)
      decades[std::to_string(dec)] = env;
    report.summary["near_returns"] = {{"pairs", scan.stats.size()},
                                      {"candidates", scan.candidate_pairs},
                                      {"slope", scan.slope},
                                      {"fitted_K", scan.fitted_k},
                                      {"fitted_L", scan.fitted_l},
                                      {"ctilde", scan.ctilde},
                                      {"flagged", scan.flagged},
                                      {"shadowed", scan.shadowed},
                                      {"decade_envelopes", decades}};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoReturnsFound) throw;
    report.summary["near_returns"] = {{"error", e.what()}};
  }
  report.tables.push_back(std::move(csv));

  // extension spot checks
  Json extensions = Json::array();
  auto qs = sys->sample_measure(cfg.livsic.seed ^ 0xabcdef12ULL, 5);
  for (const auto& q : qs) {
    Json item;
    try {
      ExtensionResult ext = extend_transfer(a, *sys, table, q, cfg.livsic.beta,
                                            cfg.livsic.extend_depth);
      item["neighbor"] = ext.neighbor_index;
      item["distance"] = ext.neighbor_distance;
      item["pushforward"] = ext.pushforward;
    } catch (const Error& e) {
      item["error"] = std::string(e.what());
    }
    extensions.push_back(std::move(item));
  }
  report.summary["extensions"] = std::move(extensions);
}

void cmd_holonomy(const ExperimentConfig& cfg, int threads, RunReport& report) {
  (void)threads;
  Stopwatch watch(report);
  auto sys = make_system(cfg);
  CocycleMap a = make_cocycle(cfg, sys);
  HolonomySettings st;
  st.domination_n = cfg.holonomy.block_n;
  st.theta = cfg.holonomy.theta;
  st.domination_kmax = cfg.holonomy.k_max;
  st.tol = cfg.holonomy.tol;
  st.budget = cfg.holonomy.budget;

  CsvTable csv;
  csv.name = "holonomy";
  csv.header = {"dir", "dist", "residual", "n_converged"};
  SeededRng rng(cfg.livsic.seed);
  int64_t pairs = std::min<int64_t>(cfg.holonomy.pair_budget, 400);
  double fitted_l = 0;
  int64_t converged = 0, attempted = 0;
  watch.time("holonomy_pairs", [&] {
    for (int64_t i = 0; i < pairs; ++i) {
      Point y = sys->sample_measure(cfg.livsic.seed + 1000 + static_cast<uint64_t>(i), 1)[0];
      for (int dir = 0; dir < 2; ++dir) {
        Point z;
        if (sys->is_torus()) {
          double s = (rng.uniform01() * 2 - 1) * 0.8 * sys->leaf_radius();
          if (std::abs(s) < 1e-4) continue;
          z = dir == 0 ? sys->local_stable_point(y, s)
                       : sys->local_unstable_point(y, s);
        } else {
          double depth = 1 + static_cast<double>(rng.below(6));
          z = dir == 0 ? sys->local_stable_point(y, depth)
                       : sys->local_unstable_point(y, depth);
        }
        ++attempted;
        try {
          HolonomyMatrix h = dir == 0 ? stable_holonomy(a, *sys, y, z, st)
                                      : unstable_holonomy(a, *sys, y, z, st);
          ++converged;
          double dist = sys->distance(y, z);
          double res = spectral_norm(
              Matrix(h.h - Matrix::Identity(a.dimension(), a.dimension())));
          if (dist > 0)
            fitted_l = std::max(fitted_l, res / std::pow(dist, a.holder_alpha()));
          csv.rows.push_back({dir == 0 ? "s" : "u", format_double(dist),
                              format_double(res), std::to_string(h.n_converged)});
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kNotConverged &&
              e.code() != ErrorCode::kNotDominated)
            throw;
          report.summary["last_error"] = std::string(e.what());
        }
      }
    }
  });
  report.summary["pairs_attempted"] = attempted;
  report.summary["pairs_converged"] = converged;
  report.summary["fitted_L"] = fitted_l;
  report.checks.push_back(CheckResult::make(
      "holonomy_convergence", attempted > 0 && converged == attempted,
      static_cast<double>(converged),
      std::to_string(converged) + "/" + std::to_string(attempted) +
          " holonomy limits converged"));
  report.tables.push_back(std::move(csv));
}

void cmd_regularity(const ExperimentConfig& cfg, int threads, RunReport& report) {
  Stopwatch watch(report);
  auto sys = make_system(cfg);
  CocycleMap a = make_cocycle(cfg, sys);
  double eps = cfg.effective_epsilon(*sys);
  HolonomySettings st;
  st.domination_n = cfg.holonomy.block_n;
  st.theta = cfg.holonomy.theta;
  st.domination_kmax = cfg.holonomy.k_max;
  st.tol = cfg.holonomy.tol;
  st.budget = cfg.holonomy.budget;

  TransferOptions topts;
  topts.n_points = cfg.livsic.n_points;
  topts.epsilon = eps;
  topts.block_bound = cfg.lyapnorm.block_bound_n;
  topts.truncation = cfg.lyapnorm.truncation;
  topts.spectrum_iters = cfg.livsic.spectrum_iters;
  topts.seed = cfg.livsic.seed;
  topts.override_zero_check = cfg.livsic.override_zero_check;
  Point x0 = choose_anchor(*sys, cfg.livsic.seed);
  TransferTable table = watch.time("build_transfer",
                                   [&] { return build_transfer(a, *sys, x0, topts); });
  std::vector<char> mask = watch.time("admitted_block", [&] {
    return admitted_block_mask(a, *sys, table, st, threads);
  });
  int64_t admitted = std::count(mask.begin(), mask.end(), 1);
  report.summary["entries"] = table.entries.size();
  report.summary["admitted"] = admitted;
  report.summary["admitted_fraction"] =
      static_cast<double>(admitted) / static_cast<double>(table.entries.size());

  HolderOptions hopts;
  hopts.alpha = cfg.cocycle.alpha;
  hopts.max_distance = cfg.effective_delta(*sys) / 2.0;
  hopts.collect_pairs = true;
  CsvTable csv;
  csv.name = "regularity";
  csv.header = {"dist", "pdiff"};
  auto [slope_lo, slope_hi] = cfg.slope_band();
  try {
    HolderEstimate est = watch.time("holder_estimate", [&] {
      return holder_estimate(*sys, table, mask, cfg.holonomy.pair_budget, hopts);
    });
    for (const auto& [d, pdiff] : est.pairs)
      csv.rows.push_back({format_double(d), format_double(pdiff)});
    Json decades;
    for (const auto& [dec, env] : est.decade_envelopes)
      decades[std::to_string(dec)] = env;
    report.summary["holder"] = {{"pairs_used", est.pairs_used},
                                {"dropped_noise", est.dropped_noise},
                                {"slope", est.slope},
                                {"log_c", est.intercept},
                                {"C_eps", std::exp(est.intercept)},
                                {"decade_envelopes", decades},
                                {"degenerate", est.degenerate}};
    if (est.degenerate) {
      report.checks.push_back(CheckResult::skip(
          "holder_slope", "degenerate: P constant at working precision"));
    } else {
      report.checks.push_back(CheckResult::make(
          "holder_slope", est.slope >= slope_lo && est.slope <= slope_hi, est.slope,
          "fitted slope " + format_double(est.slope) + " in band [" +
              format_double(slope_lo) + ", " + format_double(slope_hi) + "]"));
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kInsufficientPairs) throw;
    report.checks.push_back(CheckResult::fail("holder_slope", 0, e.what()));
  }

  // chain-transport sample: run-level K and L
  double worst_k = 0, fitted_l = 0;
  int chains = 0;
  watch.time("chains", [&] {
    auto pairs = sample_admitted_pairs(*sys, table, mask,
                                       sys->bracket_radius() / 2.0, 60);
    for (const auto& [i, j] : pairs) {
      double d = sys->distance(table.entries[static_cast<size_t>(i)].point,
                               table.entries[static_cast<size_t>(j)].point);
      if (d <= 1e-7) continue;
      ChainReconstruction chain = holonomy_chain(a, *sys, table, i, j, st);
      ++chains;
      worst_k = std::max(worst_k, chain.k_ratio);
      fitted_l = std::max(fitted_l,
                          chain.residual / std::pow(d, cfg.cocycle.alpha));
    }
  });
  report.summary["chains"] = {{"count", chains}, {"K", worst_k}, {"L", fitted_l}};
  report.tables.push_back(std::move(csv));
}

void cmd_verify(const ExperimentConfig& cfg, int threads, RunReport& report) {
  Stopwatch watch(report);
  std::vector<CheckResult> checks = watch.time(
      "verify_suite", [&] { return verify::run_config_suite(cfg, threads); });
  CsvTable csv;
  csv.name = "verify";
  csv.header = {"id", "state", "value"};
  int64_t passed = 0, failed = 0, skipped = 0;
  for (const auto& c : checks) {
    csv.rows.push_back({c.id, state_name(c),
                        std::isnan(c.value) ? "" : format_double(c.value)});
    switch (c.state) {
      case CheckResult::State::kPass: ++passed; break;
      case CheckResult::State::kFail: ++failed; break;
      case CheckResult::State::kSkipped: ++skipped; break;
    }
  }
  report.summary["passed"] = passed;
  report.summary["failed"] = failed;
  report.summary["skipped"] = skipped;
  report.checks = std::move(checks);
  report.tables.push_back(std::move(csv));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cocycle-lab: numerical Livsic-theorem laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  int64_t seed_override = -1;
  int threads = 1;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"spectrum", "Lyapunov exponents and the zero-exponent screen"},
      {"obstructions", "periodic-orbit obstruction audit"},
      {"transfer", "transfer-map construction and near-return scan"},
      {"holonomy", "stable/unstable holonomy sampling"},
      {"regularity", "Hoelder regularity of the transfer map"},
      {"verify", "full invariant suite with a pass/fail matrix"},
  };
  for (const auto& [name, desc] : commands) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", config_path, "JSON experiment config")->required();
    sub->add_option("--out", out_override, "output directory override");
    sub->add_option("--seed", seed_override, "seed override");
    sub->add_option("--threads", threads, "worker threads");
  }

  CLI11_PARSE(app, argc, argv);
  std::string command = app.get_subcommands().front()->get_name();

  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const Error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  }
  if (seed_override >= 0) cfg.livsic.seed = static_cast<uint64_t>(seed_override);
  std::string out_dir = out_override.empty() ? cfg.output.directory : out_override;

  RunReport report;
  report.command = command;
  report.config_echo = cfg.echo;
  report.summary = Json::object();

  try {
    if (command == "spectrum") cmd_spectrum(cfg, threads, report);
    else if (command == "obstructions") cmd_obstructions(cfg, threads, report);
    else if (command == "transfer") cmd_transfer(cfg, threads, report);
    else if (command == "holonomy") cmd_holonomy(cfg, threads, report);
    else if (command == "regularity") cmd_regularity(cfg, threads, report);
    else cmd_verify(cfg, threads, report);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfigError) {
      std::cerr << "configuration error: " << e.what() << "\n";
      return 2;
    }
    report.checks.push_back(CheckResult::fail("command_error", 0, e.what()));
    report.summary["error"] = std::string(e.what());
  }

  try {
    write_report(report, out_dir, cfg.output.formats);
  } catch (const std::exception& e) {
    std::cerr << "cannot write report: " << e.what() << "\n";
    return 2;
  }

  for (const auto& c : report.checks)
    std::cout << "[" << state_name(c) << "] " << c.id
              << (c.detail.empty() ? "" : ": " + c.detail) << "\n";
  return report.all_checks_pass() ? 0 : 1;
}
