#pragma once

// Parameter sweeps over scenarios: analytic and/or Monte-Carlo results on a
// Cartesian grid of up to two axes, written as CSV.

#include <array>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "mlmask/analytic.hpp"
#include "mlmask/config_io.hpp"
#include "mlmask/errors.hpp"
#include "mlmask/scenario.hpp"
#include "mlmask/simulate.hpp"

namespace mlmask {

enum class SweepMode { analytic, simulate, both };

inline SweepMode parse_mode(const std::string& text) {
  if (text == "analytic") return SweepMode::analytic;
  if (text == "simulate") return SweepMode::simulate;
  if (text == "both") return SweepMode::both;
  throw ValidationError({"mode must be analytic, simulate or both (got '" + text + "')"});
}

inline bool runs_analytic(SweepMode m) { return m != SweepMode::simulate; }
inline bool runs_simulation(SweepMode m) { return m != SweepMode::analytic; }

/// Parameter paths understood by apply_parameter:
///   n, alpha, tc, ts, emergence_threshold
///   dist_c.mean, dist_s.mean (aliases md1, md2; Poisson layers only)
///   eps_in[i], eps_out[i]                 1-based mask index
///   m[i]     set m_i, rescale the other fractions proportionally
///   m[i]~j   set m_i, let m_j absorb the difference, hold the rest
struct SweepAxis {
  std::string path;
  std::vector<double> values;
  /// Name written to the CSV metadata; defaults to the path.
  std::string label;

  const std::string& name() const { return label.empty() ? path : label; }
};

struct SweepSpec {
  ScenarioConfig base;
  std::vector<SweepAxis> axes;
  std::size_t trials = 1000;
  SweepMode mode = SweepMode::both;
  /// Extra "key=value" lines for the CSV metadata header.
  std::vector<std::string> notes;
};

struct ResultRow {
  std::array<std::optional<double>, 2> axis;
  std::optional<double> pe_analytic;
  std::optional<double> rho;
  std::optional<double> es_analytic;
  std::optional<double> pe_sim;
  std::optional<double> pe_sim_se;
  std::optional<double> es_sim;
  std::optional<double> es_sim_se;
  std::optional<std::size_t> trials;
  std::optional<double> wall_time_s;
  std::string error;
};

namespace detail {

inline std::size_t mask_index(const std::string& text, const ScenarioConfig& cfg, const std::string& path) {
  const std::size_t i = std::stoul(text);
  if (i < 1 || i > cfg.masks.size()) throw ValidationError({"axis '" + path + "': mask index out of range"});
  return i - 1;
}

inline void set_poisson_mean(DegreePmf& pmf, double value, const std::string& path) {
  if (!pmf.is_poisson()) throw ValidationError({"axis '" + path + "' requires a poisson degree distribution"});
  pmf = DegreePmf::poisson(value, pmf.tail_tolerance());
}

}  // namespace detail

/// Returns `base` with the parameter at `path` set to `value`. The result is
/// validated.
inline ScenarioConfig apply_parameter(ScenarioConfig cfg, const std::string& path, double value) {
  static const std::regex kMask(R"(m\[(\d+)\](?:~(\d+))?)");
  static const std::regex kEps(R"((eps_in|eps_out)\[(\d+)\])");
  std::smatch match;
  if (path == "n") {
    if (!(value >= 1.0) || value != std::floor(value)) throw ValidationError({"axis n: expected a positive integer"});
    cfg.n = static_cast<std::size_t>(value);
  } else if (path == "alpha") {
    cfg.alpha = value;
  } else if (path == "tc") {
    cfg.tc_base = value;
  } else if (path == "ts") {
    cfg.ts_base = value;
  } else if (path == "emergence_threshold") {
    cfg.emergence_threshold = value;
  } else if (path == "dist_c.mean" || path == "md1") {
    detail::set_poisson_mean(cfg.dist_c, value, path);
  } else if (path == "dist_s.mean" || path == "md2") {
    detail::set_poisson_mean(cfg.dist_s, value, path);
  } else if (std::regex_match(path, match, kEps)) {
    const std::size_t i = detail::mask_index(match[2], cfg, path);
    (match[1] == "eps_in" ? cfg.masks.eps_in : cfg.masks.eps_out).at(i) = value;
  } else if (std::regex_match(path, match, kMask)) {
    auto& m = cfg.masks.fraction;
    const std::size_t i = detail::mask_index(match[1], cfg, path);
    if (!(value >= 0.0 && value <= 1.0)) throw ValidationError({"axis '" + path + "': fraction outside [0,1]"});
    if (match[2].matched) {
      const std::size_t j = detail::mask_index(match[2], cfg, path);
      if (j == i) throw ValidationError({"axis '" + path + "': balancing index equals swept index"});
      m[j] += m[i] - value;
      if (m[j] < -1e-12) throw ValidationError({"axis '" + path + "': balancing fraction would become negative"});
      m[j] = std::max(m[j], 0.0);
      m[i] = value;
    } else {
      const double rest = 1.0 - m[i];
      if (rest <= 0.0 && value < 1.0) {
        throw ValidationError({"axis '" + path + "': no remaining fractions to rescale"});
      }
      for (std::size_t k = 0; k < m.size(); ++k) {
        if (k != i) m[k] = rest > 0.0 ? m[k] * (1.0 - value) / rest : 0.0;
      }
      m[i] = value;
    }
  } else {
    throw ValidationError({"unknown parameter path '" + path + "'"});
  }
  validate_scenario(cfg);
  return cfg;
}

struct SweepOptions {
  unsigned threads = 1;
  /// Fill wall_time_s. Off by default so that reruns are byte-identical.
  bool timing = false;
};

/// Grid points in row-major order (first axis outermost).
inline std::vector<std::array<std::optional<double>, 2>> sweep_grid(const SweepSpec& spec) {
  std::vector<std::array<std::optional<double>, 2>> grid;
  if (spec.axes.size() > 2) throw ValidationError({"at most two sweep axes are supported"});
  const std::vector<double> none{0.0};
  const auto& first = spec.axes.size() > 0 ? spec.axes[0].values : none;
  const auto& second = spec.axes.size() > 1 ? spec.axes[1].values : none;
  for (double a : first) {
    for (double b : second) {
      std::array<std::optional<double>, 2> point;
      if (spec.axes.size() > 0) point[0] = a;
      if (spec.axes.size() > 1) point[1] = b;
      grid.push_back(point);
    }
  }
  return grid;
}

inline ScenarioConfig scenario_at(const SweepSpec& spec, const std::array<std::optional<double>, 2>& point) {
  ScenarioConfig cfg = spec.base;
  for (std::size_t a = 0; a < spec.axes.size(); ++a) cfg = apply_parameter(std::move(cfg), spec.axes[a].path, *point[a]);
  return cfg;
}

/// Per-point failures are recorded in the row and the sweep continues.
/// Simulation seeds derive from (master_seed, point index), so rows do not
/// depend on thread count or scheduling.
inline std::vector<ResultRow> run_sweep(const SweepSpec& spec, std::uint64_t master_seed, SweepOptions opts = {}) {
  validate_scenario(spec.base);
  for (const auto& axis : spec.axes) {
    if (axis.values.empty()) throw ValidationError({"axis '" + axis.path + "' has no values"});
  }
  if (runs_simulation(spec.mode) && spec.trials == 0) throw ValidationError({"trials must be positive"});
  const auto grid = sweep_grid(spec);
  std::vector<ResultRow> rows(grid.size());
  std::vector<std::optional<ScenarioConfig>> configs(grid.size());
  for (std::size_t p = 0; p < grid.size(); ++p) {
    rows[p].axis = grid[p];
    try {
      configs[p] = scenario_at(spec, grid[p]);
    } catch (const std::exception& e) {
      rows[p].error = e.what();
    }
  }

  using Clock = std::chrono::steady_clock;
  std::vector<double> elapsed(grid.size(), 0.0);
  if (runs_analytic(spec.mode)) {
    detail::parallel_for(grid.size(), opts.threads, [&](std::size_t p) {
      if (!configs[p]) return;
      const auto start = Clock::now();
      try {
        const AnalyticReport r = analyze(*configs[p]);
        rows[p].pe_analytic = r.pe_avg;
        rows[p].rho = r.rho;
        rows[p].es_analytic = r.es_total;
      } catch (const std::exception& e) {
        rows[p].error = e.what();
      }
      elapsed[p] += std::chrono::duration<double>(Clock::now() - start).count();
    });
  }
  if (runs_simulation(spec.mode)) {
    for (std::size_t p = 0; p < grid.size(); ++p) {
      if (!configs[p]) continue;
      const auto start = Clock::now();
      try {
        const TrialSummary s = run_trials(*configs[p], spec.trials, derive_seed(master_seed, p), opts.threads);
        rows[p].pe_sim = s.pe_hat;
        rows[p].pe_sim_se = s.pe_se;
        if (s.es_defined) {
          rows[p].es_sim = s.es_hat;
          rows[p].es_sim_se = s.es_se;
        }
        rows[p].trials = s.trials;
      } catch (const std::exception& e) {
        rows[p].error = e.what();
      }
      elapsed[p] += std::chrono::duration<double>(Clock::now() - start).count();
    }
  }
  if (opts.timing) {
    for (std::size_t p = 0; p < grid.size(); ++p) rows[p].wall_time_s = elapsed[p];
  }
  return rows;
}

// ---------------------------------------------------------------------------
// CSV

inline constexpr const char* kCsvHeader =
    "axis1,axis2,pe_analytic,rho,es_analytic,pe_sim,pe_sim_se,es_sim,es_sim_se,trials,wall_time_s";

inline std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

/// Metadata lines prefixed with '#', then the header, then one line per row
/// in grid order. Missing values are empty fields.
inline void emit_csv(const std::vector<ResultRow>& rows, std::ostream& out,
                     const std::vector<std::string>& metadata = {}) {
  if (rows.empty()) throw std::invalid_argument("emit_csv: no rows");
  for (const auto& line : metadata) out << "# " << line << '\n';
  for (std::size_t p = 0; p < rows.size(); ++p) {
    if (!rows[p].error.empty()) {
      std::string msg = rows[p].error;
      for (char& c : msg) {
        if (c == '\n' || c == '\r') c = ' ';
      }
      out << "# error row " << p + 1 << ": " << msg << '\n';
    }
  }
  out << kCsvHeader << '\n';
  auto field = [&](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
  for (const ResultRow& r : rows) {
    out << field(r.axis[0]) << ',' << field(r.axis[1]) << ',' << field(r.pe_analytic) << ',' << field(r.rho) << ','
        << field(r.es_analytic) << ',' << field(r.pe_sim) << ',' << field(r.pe_sim_se) << ',' << field(r.es_sim)
        << ',' << field(r.es_sim_se) << ',' << (r.trials ? std::to_string(*r.trials) : std::string()) << ','
        << field(r.wall_time_s) << '\n';
  }
}

/// Reads rows written by emit_csv (comment lines are skipped).
inline std::vector<ResultRow> read_results_csv(std::istream& in) {
  std::vector<ResultRow> rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != kCsvHeader) throw ValidationError({"unexpected CSV header '" + line + "'"});
      header_seen = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 11) throw ValidationError({"CSV row has " + std::to_string(cells.size()) + " fields"});
    auto num = [&](std::size_t k) -> std::optional<double> {
      if (cells[k].empty()) return std::nullopt;
      return detail::parse_double(cells[k], "csv field");
    };
    ResultRow r;
    r.axis = {num(0), num(1)};
    r.pe_analytic = num(2);
    r.rho = num(3);
    r.es_analytic = num(4);
    r.pe_sim = num(5);
    r.pe_sim_se = num(6);
    r.es_sim = num(7);
    r.es_sim_se = num(8);
    if (!cells[9].empty()) r.trials = static_cast<std::size_t>(std::stoull(cells[9]));
    r.wall_time_s = num(10);
    rows.push_back(std::move(r));
  }
  if (!header_seen) throw ValidationError({"CSV header missing"});
  return rows;
}

/// Metadata describing a sweep; contains nothing run-dependent beyond the
/// seed and trial count, so identical inputs give identical bytes.
inline std::vector<std::string> sweep_metadata(const SweepSpec& spec, std::uint64_t master_seed) {
  std::vector<std::string> meta;
  for (std::size_t a = 0; a < spec.axes.size(); ++a) {
    meta.push_back("axis" + std::to_string(a + 1) + "=" + spec.axes[a].name());
  }
  const ScenarioConfig& b = spec.base;
  auto list = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_number(v[i]);
    return s;
  };
  meta.push_back("n=" + std::to_string(b.n));
  meta.push_back("alpha=" + format_number(b.alpha));
  meta.push_back("dist_c=" + b.dist_c.to_string());
  meta.push_back("dist_s=" + b.dist_s.to_string());
  meta.push_back("tc=" + format_number(b.tc_base));
  meta.push_back("ts=" + format_number(b.ts_base));
  meta.push_back("m=" + list(b.masks.fraction));
  meta.push_back("eps_in=" + list(b.masks.eps_in));
  meta.push_back("eps_out=" + list(b.masks.eps_out));
  meta.push_back("emergence_threshold=" + format_number(b.emergence_threshold));
  if (runs_simulation(spec.mode)) {
    meta.push_back("trials=" + std::to_string(spec.trials));
    meta.push_back("master_seed=" + std::to_string(master_seed));
  }
  for (const auto& note : spec.notes) meta.push_back(note);
  return meta;
}

// ---------------------------------------------------------------------------
// Sweep files: a scenario file plus
//
//   [sweep]
//   axis1 = dist_c.mean : 2,4,6
//   axis2 = alpha : 0.1,0.5,0.9
//   label2 = school_share        (optional CSV label)
//   trials = 1000
//   mode = both

inline SweepSpec sweep_from_ini(const IniTree& tree) {
  SweepSpec spec;
  spec.base = scenario_from_ini(tree, {"sweep"});
  const auto section = tree.get_child_optional("sweep");
  if (!section) throw ValidationError({"sweep file needs a [sweep] section"});
  std::vector<std::string> problems;
  std::array<std::optional<SweepAxis>, 2> axes;
  std::array<std::string, 2> labels;
  for (const auto& [key, value] : *section) {
    const std::string v = value.data();
    if (key == "axis1" || key == "axis2") {
      const auto colon = v.find(':');
      if (colon == std::string::npos) {
        problems.push_back(key + " must look like '<path> : v1,v2,...'");
        continue;
      }
      SweepAxis axis;
      axis.path = std::string(detail::trim(std::string_view(v).substr(0, colon)));
      axis.values = detail::parse_double_list(std::string_view(v).substr(colon + 1), key);
      axes[key == "axis1" ? 0 : 1] = std::move(axis);
    } else if (key == "label1" || key == "label2") {
      labels[key == "label1" ? 0 : 1] = std::string(detail::trim(v));
    } else if (key == "trials") {
      spec.trials = detail::parse_count(v, "trials");
    } else if (key == "mode") {
      spec.mode = parse_mode(std::string(detail::trim(v)));
    } else {
      problems.push_back("unknown key '" + key + "' in [sweep]");
    }
  }
  if (axes[1] && !axes[0]) problems.push_back("axis2 given without axis1");
  if (!problems.empty()) throw ValidationError(std::move(problems));
  for (std::size_t a = 0; a < 2; ++a) {
    if (!axes[a]) continue;
    axes[a]->label = labels[a];
    spec.axes.push_back(std::move(*axes[a]));
  }
  // Surface bad paths before any work is done.
  for (const auto& point : sweep_grid(spec)) (void)scenario_at(spec, point);
  return spec;
}

inline SweepSpec load_sweep(const std::filesystem::path& path) { return sweep_from_ini(read_ini_file(path)); }

// ---------------------------------------------------------------------------
// Presets for the three reference experiments. All use Poisson layers and
// n = 10,000.

inline std::vector<double> value_range(double first, double last, double step) {
  std::vector<double> v;
  const auto count = static_cast<std::size_t>(std::llround((last - first) / step)) + 1;
  for (std::size_t k = 0; k < count; ++k) v.push_back(first + step * static_cast<double>(k));
  return v;
}

inline ScenarioConfig preset_base() {
  ScenarioConfig cfg;
  cfg.n = 10000;
  cfg.alpha = 0.3;
  cfg.dist_c = DegreePmf::poisson(6.0);
  cfg.dist_s = DegreePmf::poisson(8.0);
  cfg.tc_base = 0.6;
  cfg.ts_base = 0.5;
  cfg.emergence_threshold = 0.05;
  return cfg;
}

/// Mask wearers vs. no mask, swept over both layers' mean degrees.
inline SweepSpec preset_fig_a() {
  SweepSpec spec;
  spec.base = preset_base();
  spec.base.masks = MaskSet{{0.2, 0.8}, {0.5, 0.0}, {0.6, 0.0}};
  spec.axes = {{"dist_c.mean", value_range(1, 8, 1), "md1"}, {"dist_s.mean", value_range(2, 8, 2), "md2"}};
  spec.trials = 5000;
  spec.notes = {"preset=figA", "note=alpha tc ts are preset defaults"};
  return spec;
}

/// Surgical vs. cloth masks, swept over school membership and the surgical
/// share.
inline SweepSpec preset_fig_b() {
  SweepSpec spec;
  spec.base = preset_base();
  spec.base.masks = MaskSet{{0.5, 0.5}, {0.7, 0.5}, {0.8, 0.5}};
  spec.axes = {{"alpha", value_range(0.1, 0.9, 0.2), "alpha"}, {"m[1]", value_range(0.1, 0.9, 0.2), "m_surgical"}};
  spec.trials = 5000;
  spec.notes = {"preset=figB"};
  return spec;
}

/// Inward-good, outward-good and no mask; no-mask share fixed at 0.1 while
/// the outward-good share grows at the expense of inward-good.
inline SweepSpec preset_fig_c() {
  SweepSpec spec;
  spec.base = preset_base();
  spec.base.masks = MaskSet{{0.8, 0.1, 0.1}, {0.7, 0.3, 0.0}, {0.3, 0.7, 0.0}};
  spec.axes = {{"m[2]~1", value_range(0.1, 0.7, 0.1), "m_outward_good"}};
  spec.trials = 5000;
  spec.notes = {"preset=figC", "note=alpha is a preset default", "mask_order=inward_good,outward_good,none"};
  return spec;
}

inline SweepSpec preset_by_name(const std::string& name) {
  if (name == "figA") return preset_fig_a();
  if (name == "figB") return preset_fig_b();
  if (name == "figC") return preset_fig_c();
  throw ValidationError({"unknown preset '" + name + "' (expected figA, figB or figC)"});
}

}  // namespace mlmask
