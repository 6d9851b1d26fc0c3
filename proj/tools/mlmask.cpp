// Command-line front end: single-scenario analysis and simulation, parameter
// sweeps, reference presets and small-graph oracle checks.
//
// Exit codes: 0 success, 1 validation error, 2 numerical failure, 3 I/O error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mlmask/mlmask.hpp"

namespace {

using nlohmann::json;

constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitIo = 3;

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

/// Writes to `path`, or stdout when the path is empty. The file is written in
/// binary mode so line endings stay LF.
template <class Writer>
void write_output(const std::string& path, Writer&& write) {
  if (path.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw mlmask::IoError("cannot open '" + path + "' for writing");
  write(out);
  out.flush();
  if (!out) throw mlmask::IoError("failed writing '" + path + "'");
}

json report_json(const mlmask::AnalyticReport& r, const std::optional<double>& theta) {
  json j;
  j["pe_by_type"] = to_vector(r.pe_by_type);
  j["pe_avg"] = r.pe_avg;
  j["rho"] = r.rho;
  j["es_by_type"] = to_vector(r.es_by_type);
  j["es_total"] = r.es_total;
  j["critical_scaling"] = theta ? json(*theta) : json(nullptr);
  j["extinction"] = {{"iterations", r.extinction.iterations}, {"residual", r.extinction.residual}};
  j["size"] = {{"iterations", r.size.iterations}, {"residual", r.size.residual}};
  return j;
}

json summary_json(const mlmask::TrialSummary& s) {
  json j;
  j["trials"] = s.trials;
  j["epidemics"] = s.epidemics;
  j["pe_hat"] = s.pe_hat;
  j["pe_se"] = s.pe_se;
  j["es_defined"] = s.es_defined;
  j["es_hat"] = s.es_defined ? json(s.es_hat) : json(nullptr);
  j["es_se"] = s.es_defined ? json(s.es_se) : json(nullptr);
  j["es_by_type_hat"] = s.es_by_type_hat;
  j["es_by_type_se"] = s.es_by_type_se;
  j["es_unconditional"] = s.es_unconditional;
  return j;
}

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::size_t> trials;
  std::uint64_t seed = 1;
  std::optional<std::string> mode;
  unsigned threads = 1;
  bool timing = false;
};

void emit_sweep(mlmask::SweepSpec spec, const CommonFlags& f) {
  if (f.trials) spec.trials = *f.trials;
  if (f.mode) spec.mode = mlmask::parse_mode(*f.mode);
  const auto rows = mlmask::run_sweep(spec, f.seed, {f.threads, f.timing});
  const auto meta = mlmask::sweep_metadata(spec, f.seed);
  write_output(f.out, [&](std::ostream& os) { mlmask::emit_csv(rows, os, meta); });
  std::size_t failed = 0;
  for (const auto& r : rows) failed += r.error.empty() ? 0 : 1;
  if (failed) std::cerr << failed << " of " << rows.size() << " grid points failed; see CSV comments\n";
}

int run_oracle_check(const CommonFlags& f, const std::vector<std::string>& fixtures, std::size_t runs,
                     double sigmas) {
  const mlmask::ScenarioConfig cfg = mlmask::load_scenario(f.config);
  const auto T = mlmask::build_transmissibility(cfg);
  bool all_pass = true;
  for (std::size_t k = 0; k < fixtures.size(); ++k) {
    std::ifstream in(fixtures[k]);
    if (!in) throw mlmask::IoError("cannot open fixture '" + fixtures[k] + "'");
    const mlmask::EdgeListFile file = mlmask::read_edge_list(in);
    if (!file.mask_types) throw mlmask::ValidationError({fixtures[k] + ": fixture needs a masks line"});
    for (auto t : *file.mask_types) {
      if (t >= cfg.masks.size()) throw mlmask::ValidationError({fixtures[k] + ": mask type exceeds M"});
    }
    const mlmask::MaskAssignment assignment{*file.mask_types};
    const auto c = mlmask::compare_with_oracle(file.graph, assignment, T, cfg.emergence_threshold, runs,
                                               mlmask::derive_seed(f.seed, k));
    const bool pass = c.within(sigmas);
    all_pass = all_pass && pass;
    std::cout << (pass ? "PASS " : "FAIL ") << fixtures[k] << "  mean_size exact=" << c.exact.mean_size()
              << " mc=" << c.mc_mean_size << " z=" << c.size_z << "  pe exact=" << c.exact.pe()
              << " mc=" << c.mc_pe << " z=" << c.pe_z << '\n';
  }
  return all_pass ? 0 : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-layer mask-model epidemic solver and simulator"};
  app.require_subcommand(1);
  CommonFlags f;

  auto add_config = [&](CLI::App* cmd) { cmd->add_option("--config", f.config, "scenario or sweep file")->required(); };
  auto add_out = [&](CLI::App* cmd) { cmd->add_option("--out", f.out, "output path (default stdout)"); };
  auto add_run = [&](CLI::App* cmd) {
    cmd->add_option("--trials", f.trials, "Monte-Carlo trials");
    cmd->add_option("--seed", f.seed, "master seed");
    cmd->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
  };

  auto* analyze = app.add_subcommand("analyze", "analytic report for one scenario (JSON)");
  add_config(analyze);
  add_out(analyze);

  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo summary for one scenario (JSON)");
  add_config(simulate);
  add_out(simulate);
  add_run(simulate);

  auto* sweep = app.add_subcommand("sweep", "parameter sweep from a sweep file (CSV)");
  add_config(sweep);
  add_out(sweep);
  add_run(sweep);
  sweep->add_option("--mode", f.mode, "analytic|simulate|both");
  sweep->add_flag("--timing", f.timing, "fill the wall_time_s column");

  std::string preset_name;
  auto* preset = app.add_subcommand("preset", "run a reference experiment (CSV)");
  preset->add_option("name", preset_name, "figA|figB|figC")->required()->check(CLI::IsMember({"figA", "figB", "figC"}));
  add_out(preset);
  add_run(preset);
  preset->add_option("--mode", f.mode, "analytic|simulate|both");
  preset->add_flag("--timing", f.timing, "fill the wall_time_s column");

  std::vector<std::string> fixtures;
  std::size_t oracle_runs = 100000;
  double oracle_sigmas = 4.0;
  auto* oracle = app.add_subcommand("oracle-check", "compare Monte-Carlo with exact enumeration on fixtures");
  add_config(oracle);
  oracle->add_option("fixtures", fixtures, "fixture edge lists")->required();
  oracle->add_option("--runs", oracle_runs, "Monte-Carlo runs per fixture");
  oracle->add_option("--seed", f.seed, "master seed");
  oracle->add_option("--sigmas", oracle_sigmas, "allowed deviation in standard errors");

  auto* generate = app.add_subcommand("generate", "write one generated network as an edge list");
  add_config(generate);
  add_out(generate);
  generate->add_option("--seed", f.seed, "network seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*analyze) {
      const auto cfg = mlmask::load_scenario(f.config);
      const auto report = mlmask::analyze(cfg);
      const json j = report_json(report, mlmask::critical_scaling(cfg));
      write_output(f.out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    } else if (*simulate) {
      const auto cfg = mlmask::load_scenario(f.config);
      const auto summary = mlmask::run_trials(cfg, f.trials.value_or(1000), f.seed, f.threads);
      write_output(f.out, [&](std::ostream& os) { os << summary_json(summary).dump(2) << '\n'; });
    } else if (*sweep) {
      emit_sweep(mlmask::load_sweep(f.config), f);
    } else if (*preset) {
      emit_sweep(mlmask::preset_by_name(preset_name), f);
    } else if (*oracle) {
      return run_oracle_check(f, fixtures, oracle_runs, oracle_sigmas);
    } else if (*generate) {
      const auto cfg = mlmask::load_scenario(f.config);
      const auto g = mlmask::generate_multilayer(cfg, f.seed);
      write_output(f.out, [&](std::ostream& os) { mlmask::write_edge_list(os, g, cfg.alpha, f.seed); });
    }
  } catch (const mlmask::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const mlmask::ConvergenceError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const mlmask::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  return 0;
}
