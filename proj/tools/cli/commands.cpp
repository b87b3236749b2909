#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "robin/balancing.hpp"
#include "robin/fem.hpp"
#include "robin/inversion.hpp"
#include "robin/report_io.hpp"

namespace robin::cli {

namespace fs = std::filesystem;

namespace {

void log_line(std::ostream& log, std::string_view stage, const std::string& message) {
  log << fmt::format("[{}] {}\n", stage, message);
  log.flush();
}

StageLog stage_logger(std::ostream& log, std::mutex* mutex = nullptr, std::string prefix = {}) {
  return [&log, mutex, prefix](std::string_view stage, double seconds) {
    const std::string line = fmt::format("{}done in {:.3f} s", prefix, seconds);
    if (mutex != nullptr) {
      const std::lock_guard lock(*mutex);
      log_line(log, stage, line);
    } else {
      log_line(log, stage, line);
    }
  };
}

void reject_unknown(const nlohmann::json& doc, std::initializer_list<std::string_view> known, std::string_view where) {
  for (const auto& [key, value] : doc.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw std::invalid_argument(fmt::format("unknown config key '{}{}'", where, key));
    }
  }
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::string csv_quote(const std::string& text) {
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += (c == '\n') ? ' ' : c;
  }
  return out + "\"";
}

}  // namespace

EmitFlags parse_emit(const std::string& list) {
  EmitFlags flags{false, false, false};
  std::stringstream in(list);
  std::string item;
  bool any = false;
  while (std::getline(in, item, ',')) {
    if (item == "csv") {
      flags.csv = true;
    } else if (item == "json") {
      flags.json = true;
    } else if (item == "svg") {
      flags.svg = true;
    } else {
      throw std::invalid_argument(fmt::format("--emit: unknown format '{}' (expected csv, json, svg)", item));
    }
    any = true;
  }
  if (!any) throw std::invalid_argument("--emit: empty format list");
  return flags;
}

RunConfig load_run_config(const fs::path& path, const Overrides& overrides) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument(fmt::format("cannot read config file '{}'", path.string()));
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(fmt::format("config file '{}' is not valid JSON: {}", path.string(), e.what()));
  }
  if (!doc.is_object()) throw std::invalid_argument(fmt::format("config file '{}' must hold an object", path.string()));
  reject_unknown(doc, {"experiment", "output", "sweep"}, "");

  RunConfig config;
  const nlohmann::json experiment = doc.value("experiment", nlohmann::json::object());
  const int example = experiment.is_object() ? experiment.value("example", 1) : 1;
  config.experiment = experiment_spec_from_json(experiment, default_spec(example));

  if (doc.contains("output")) {
    const auto& output = doc.at("output");
    reject_unknown(output, {"dir", "emit"}, "output.");
    if (output.contains("dir")) config.out_dir = output.at("dir").get<std::string>();
    if (output.contains("emit")) config.emit = parse_emit(output.at("emit").get<std::string>());
  }
  if (doc.contains("sweep")) {
    const auto& sweep = doc.at("sweep");
    reject_unknown(sweep, {"rows", "replication"}, "sweep.");
    config.replication = sweep.value("replication", 1);
    if (config.replication < 1) throw std::invalid_argument("config key 'sweep.replication' must be >= 1");
    for (const auto& row : sweep.value("rows", nlohmann::json::array())) {
      reject_unknown(row, {"gamma", "delta", "shape_h_over_pi"}, "sweep.rows[].");
      SweepRow r;
      r.gamma = row.at("gamma").get<double>();
      r.delta = row.at("delta").get<double>();
      if (row.contains("shape_h_over_pi")) r.shape_h = row.at("shape_h_over_pi").get<double>() * std::numbers::pi;
      config.sweep.push_back(r);
    }
  }

  if (overrides.out_dir) config.out_dir = *overrides.out_dir;
  if (overrides.seed) config.experiment.seed = *overrides.seed;
  if (overrides.emit) config.emit = *overrides.emit;
  return config;
}

void write_atomic(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += fmt::format(".tmp{}", std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
    out << contents;
    out.close();
    if (!out) throw std::runtime_error(fmt::format("short write to '{}'", path.string()));
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  }
}

std::string render_svg(const ExperimentReport& report) {
  constexpr double width = 640.0;
  constexpr double height = 400.0;
  constexpr double left = 70.0;
  constexpr double right = 20.0;
  constexpr double top = 40.0;
  constexpr double bottom = 50.0;
  const auto& s = report.grid_s;
  if (s.size() < 2) throw std::invalid_argument("report has no curve samples");

  double lo = 0.0;
  double hi = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    lo = std::min({lo, report.theta_true[k], report.theta_reconstructed[k]});
    hi = std::max({hi, report.theta_true[k], report.theta_reconstructed[k]});
  }
  if (hi - lo < 1e-300) hi = lo + 1.0;
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  const double s0 = s.front();
  const double s1 = s.back();
  const auto px = [&](double v) { return left + (v - s0) / (s1 - s0) * (width - left - right); };
  const auto py = [&](double v) { return top + (hi - v) / (hi - lo) * (height - top - bottom); };

  const auto polyline = [&](const std::vector<double>& values, const char* colour, const char* id, const char* dash) {
    std::string pts;
    for (std::size_t k = 0; k < s.size(); ++k) {
      pts += fmt::format("{}{:.3f},{:.3f}", k == 0 ? "" : " ", px(s[k]), py(values[k]));
    }
    return fmt::format(
        "  <polyline id=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{} points=\"{}\"/>\n", id, colour,
        dash, pts);
  };

  std::string svg;
  svg += fmt::format(
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n",
      width, height);
  svg += "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += fmt::format(
      "  <text x=\"{}\" y=\"22\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">"
      "Example {}: gamma = {}, delta = {}, alpha+ = {}</text>\n",
      width / 2, report.spec.example_id, format_sci(report.spec.gamma), format_sci(report.spec.delta),
      format_sci(report.alpha_plus));
  // Axes with end ticks.
  const double x_axis = py(std::clamp(0.0, lo, hi));
  svg += fmt::format("  <g stroke=\"black\" stroke-width=\"1\">\n");
  svg += fmt::format("    <line x1=\"{:.3f}\" y1=\"{:.3f}\" x2=\"{:.3f}\" y2=\"{:.3f}\"/>\n", left, x_axis,
                     width - right, x_axis);
  svg += fmt::format("    <line x1=\"{:.3f}\" y1=\"{:.3f}\" x2=\"{:.3f}\" y2=\"{:.3f}\"/>\n", left, top, left,
                     height - bottom);
  svg += "  </g>\n";
  svg += "  <g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int t = 0; t <= 4; ++t) {
    const double sv = s0 + (s1 - s0) * t / 4.0;
    const double yv = lo + (hi - lo) * t / 4.0;
    svg += fmt::format("    <text x=\"{:.3f}\" y=\"{:.3f}\" text-anchor=\"middle\">{:.3f}</text>\n", px(sv),
                       height - bottom + 16, sv);
    svg += fmt::format("    <text x=\"{:.3f}\" y=\"{:.3f}\" text-anchor=\"end\">{}</text>\n", left - 6, py(yv) + 4,
                       format_sci(yv));
  }
  svg += fmt::format("    <text x=\"{:.3f}\" y=\"{:.3f}\" text-anchor=\"middle\">arclength s</text>\n",
                     (left + width - right) / 2, height - 12);
  svg += fmt::format(
      "    <text x=\"16\" y=\"{:.3f}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.3f})\">theta</text>\n",
      (top + height - bottom) / 2, (top + height - bottom) / 2);
  svg += "  </g>\n";
  svg += polyline(report.theta_true, "black", "theta_true", "");
  svg += polyline(report.theta_reconstructed, "#d62728", "theta_reconstructed", " stroke-dasharray=\"6 3\"");
  // Legend.
  const double lx = width - right - 190;
  const double ly = top + 10;
  svg += "  <g font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += fmt::format("    <line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\" stroke-width=\"1.5\"/>\n",
                     lx, ly, lx + 30);
  svg += fmt::format("    <text x=\"{}\" y=\"{}\">ground truth</text>\n", lx + 36, ly + 4);
  svg += fmt::format(
      "    <line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"#d62728\" stroke-width=\"1.5\" "
      "stroke-dasharray=\"6 3\"/>\n",
      lx, ly + 18, lx + 30);
  svg += fmt::format("    <text x=\"{}\" y=\"{}\">reconstruction</text>\n", lx + 36, ly + 22);
  svg += "  </g>\n</svg>\n";
  return svg;
}

void emit_svg(const ExperimentReport& report, const fs::path& path) { write_atomic(path, render_svg(report)); }

std::vector<TableRowResult> run_sweep(const RunConfig& config, int jobs, std::ostream& log) {
  struct Task {
    std::size_t row;
    int replicate;
  };
  std::vector<TableRowResult> results(config.sweep.size());
  std::vector<Task> tasks;
  for (std::size_t r = 0; r < config.sweep.size(); ++r) {
    results[r].row = config.sweep[r];
    results[r].runs.resize(static_cast<std::size_t>(config.replication));
    for (int k = 0; k < config.replication; ++k) tasks.push_back({r, k});
  }
  std::vector<std::string> errors(tasks.size());
  std::mutex log_mutex;
  std::atomic<std::size_t> next{0};

  const auto worker = [&] {
    for (std::size_t t = next++; t < tasks.size(); t = next++) {
      const Task task = tasks[t];
      const SweepRow& row = config.sweep[task.row];
      ExperimentSpec spec = config.experiment;
      spec.gamma = row.gamma;
      spec.delta = row.delta;
      if (row.shape_h) spec.shape_h = *row.shape_h;
      spec.seed = config.experiment.seed + static_cast<std::uint64_t>(task.replicate);
      const std::string prefix = fmt::format("row {} seed {}: ", task.row, spec.seed);
      try {
        results[task.row].runs[static_cast<std::size_t>(task.replicate)] =
            run_experiment(spec, stage_logger(log, &log_mutex, prefix));
      } catch (const std::exception& e) {
        errors[t] = e.what();
        const std::lock_guard lock(log_mutex);
        log_line(log, "table", prefix + e.what());
      }
    }
  };
  const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
  std::vector<std::jthread> pool;
  for (int i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  pool.clear();

  for (std::size_t t = 0; t < tasks.size(); ++t) {
    auto& err = results[tasks[t].row].error;
    if (!errors[t].empty() && err.empty()) err = fmt::format("seed {}: {}", config.experiment.seed + tasks[t].replicate, errors[t]);
  }
  return results;
}

std::string table_csv(const std::vector<TableRowResult>& rows) {
  std::string csv = table_header() + ",Err_l2_min,Err_l2_max,seeds,status\n";
  for (const auto& r : rows) {
    if (!r.error.empty()) {
      csv += fmt::format("{},{},,,,,,,{},{}\n", format_sci(r.row.gamma), format_sci(r.row.delta), r.runs.size(),
                         csv_quote("error: " + r.error));
      continue;
    }
    std::vector<double> k;
    std::vector<double> a;
    std::vector<double> h1;
    std::vector<double> l2;
    for (const auto& run : r.runs) {
      k.push_back(run.K_estimate);
      a.push_back(run.alpha_plus);
      h1.push_back(run.err_h1);
      l2.push_back(run.err_l2);
    }
    const auto [mn, mx] = std::minmax_element(l2.begin(), l2.end());
    csv += fmt::format("{},{},{},{},{},{},{},{},{},ok\n", format_sci(r.row.gamma), format_sci(r.row.delta),
                       format_sci(median(k)), format_sci(median(a)), format_sci(median(h1)), format_sci(median(l2)),
                       format_sci(*mn), format_sci(*mx), r.runs.size());
  }
  return csv;
}

// Validation ----------------------------------------------------------------

namespace {

/// Relative L2(Gamma_A) error of the discrete trace against `exact`.
double forward_trace_error(const Mesh& mesh, const DomainSpec& domain, const PlaneFunction& exact) {
  const NodalField u = solve_mixed_bvp(mesh, domain.gamma, domain.flux);
  const BoundaryField tr = trace(u, BoundaryTag::A);
  std::vector<double> ref(tr.values.size());
  std::vector<double> diff(tr.values.size());
  for (std::size_t k = 0; k < ref.size(); ++k) {
    ref[k] = exact(mesh.vertices[mesh.gamma_a.vertices[k]]);
    diff[k] = tr.values[k] - ref[k];
  }
  return std::sqrt(chain_inner(mesh.gamma_a, diff, diff) / chain_inner(mesh.gamma_a, ref, ref));
}

CheckResult convergence_check(const std::string& name, const std::function<Mesh(int)>& mesh_at,
                              const DomainSpec& domain, const PlaneFunction& exact) {
  const double coarse = forward_trace_error(mesh_at(1), domain, exact);
  const double fine = forward_trace_error(mesh_at(2), domain, exact);
  const double rate = std::log2(coarse / fine);
  return {name, rate >= 1.7 && rate <= 2.3 && fine < 1e-2,
          fmt::format("errors {} -> {}, rate {:.3f}", format_sci(coarse), format_sci(fine), rate)};
}

}  // namespace

std::vector<CheckResult> validation_checks() {
  std::vector<CheckResult> checks;
  const auto guarded = [&checks](const std::string& name, const std::function<CheckResult()>& body) {
    try {
      checks.push_back(body());
    } catch (const std::exception& e) {
      checks.push_back({name, false, e.what()});
    }
  };

  guarded("fem_convergence_rectangle", [] {
    const double gamma = 0.999;
    const double c = rectangle_trace_factor(gamma);
    return convergence_check(
        "fem_convergence_rectangle", [](int level) { return build_rectangle_mesh(16 * level, 8 * level); },
        rectangle_domain(gamma), [c](const Point& p) { return c * std::sin(p.x); });
  });
  guarded("fem_convergence_half_annulus", [] {
    const Example4Setup setup = example4_setup(0.99);
    return convergence_check(
        "fem_convergence_half_annulus", [](int level) { return build_half_annulus_mesh(8 * level, 32 * level); },
        setup.domain, [setup](const Point& p) { return setup.u(p); });
  });
  guarded("spd_galerkin", [] {
    const Mesh mesh = build_rectangle_mesh(32, 16);
    const DomainSpec domain = rectangle_domain(0.999);
    const MixedBvpSolver solver(mesh, domain.gamma);
    const NodalField u = solver.solve(assemble_flux_load(mesh, domain.flux));
    const GalerkinSystem sys = assemble_operator(solver, domain, u, make_sine_basis(8, mesh.gamma_i.length()));
    const double asym_m = (sys.M - sys.M.transpose()).norm() / sys.M.norm();
    const double asym_g = (sys.G - sys.G.transpose()).norm() / sys.G.norm();
    const double g_min = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sys.G).eigenvalues().minCoeff();
    const double m_min = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sys.M).eigenvalues().minCoeff();
    const bool ok = asym_m < 1e-12 && asym_g < 1e-12 && g_min > 0.0 && m_min > -1e-12 * sys.M.norm();
    return CheckResult{"spd_galerkin", ok,
                       fmt::format("asym(M) {:.1e}, asym(G) {:.1e}, min eig G {}, min eig M {:.1e}", asym_m, asym_g,
                                   format_sci(g_min), m_min)};
  });
  guarded("spd_fem_operator", [] {
    const Mesh mesh = build_rectangle_mesh(16, 8);
    const MixedBvpSolver solver(mesh, 0.999);
    const Eigen::MatrixXd a = Eigen::MatrixXd(solver.reduced_operator());
    const double asym = (a - a.transpose()).norm() / a.norm();
    const bool pd = Eigen::LLT<Eigen::MatrixXd>(a).info() == Eigen::Success;
    return CheckResult{"spd_fem_operator", asym < 1e-13 && pd,
                       fmt::format("asymmetry {:.1e}, cholesky {}", asym, pd ? "ok" : "failed")};
  });
  guarded("threshold_formula", [] {
    BalancingConfig c;
    c.alpha0 = 1e-11;
    c.p = 1.3;
    const double t = threshold(c);
    return CheckResult{"threshold_formula", std::abs(t - 7.236e-9) <= 0.5e-12,
                       fmt::format("threshold {:.6e} (printed 7.236e-09)", t)};
  });
  guarded("balancing_replay", [] {
    BalancingConfig c;
    c.M = 19;
    c.delta = 1e-6;
    BalancingTrace trace;
    trace.alpha_of_k = {4.827e-11, 8.157e-11, 1.379e-10, 3.937e-10, 1.900e-9, 9.173e-9, 3.406e-8,
                        7.482e-8,  9.728e-8,  1.265e-7,  1.644e-7,  2.778e-7, 3.612e-7, 6.104e-7,
                        1.341e-6,  2.946e-6,  8.415e-6,  1.094e-5,  1.422e-5, 1.849e-5};
    apply_threshold_rule(c, trace);
    const bool ok = trace.alpha_plus == 3.406e-8 && std::abs(trace.noise_estimate / 2.90e-8 - 1.0) < 0.01;
    return CheckResult{"balancing_replay", ok,
                       fmt::format("alpha+ {} (printed 3.406e-08), K delta {}", format_sci(trace.alpha_plus),
                                   format_sci(trace.noise_estimate))};
  });
  return checks;
}

// Subcommands -----------------------------------------------------------------

namespace {

int report_failure(std::ostream& log, std::string_view stage, const std::string& message) {
  log_line(log, stage, message);
  return 1;
}

void ensure_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw std::runtime_error(fmt::format("output directory '{}' is not writable", dir.string()));
  }
}

}  // namespace

int cmd_run(const fs::path& config_path, const Overrides& overrides, std::ostream& out, std::ostream& log) {
  RunConfig config;
  try {
    config = load_run_config(config_path, overrides);
    ensure_out_dir(config.out_dir);
  } catch (const std::exception& e) {
    return report_failure(log, "config", e.what());
  }
  log_line(log, "config", fmt::format("example {} gamma {} delta {} seed {}", config.experiment.example_id,
                                      format_sci(config.experiment.gamma), format_sci(config.experiment.delta),
                                      config.experiment.seed));
  ExperimentReport report;
  try {
    report = run_experiment(config.experiment, stage_logger(log));
  } catch (const ExperimentError& e) {
    return report_failure(log, e.stage(), e.what());
  } catch (const std::exception& e) {
    return report_failure(log, "run", e.what());
  }
  const std::string row = table_row(report);
  try {
    if (config.emit.json) write_atomic(config.out_dir / "report.json", to_json(report).dump(2) + "\n");
    if (config.emit.csv) {
      write_atomic(config.out_dir / "row.csv", table_header() + "\n" + row + "\n");
      std::ostringstream curve;
      write_curve_csv(report, curve);
      write_atomic(config.out_dir / "theta.csv", curve.str());
    }
    if (config.emit.svg) emit_svg(report, config.out_dir / "theta.svg");
  } catch (const std::exception& e) {
    return report_failure(log, "write", e.what());
  }
  log_line(log, "write", fmt::format("artifacts in {}", config.out_dir.string()));
  out << table_header() << "\n" << row << "\n";
  return 0;
}

int cmd_table(const fs::path& config_path, const Overrides& overrides, int jobs, std::ostream& out,
              std::ostream& log) {
  RunConfig config;
  try {
    config = load_run_config(config_path, overrides);
    if (config.sweep.empty()) {
      throw std::invalid_argument(fmt::format("config file '{}' has no sweep rows", config_path.string()));
    }
    if (jobs < 1) throw std::invalid_argument("--jobs must be >= 1");
    ensure_out_dir(config.out_dir);
  } catch (const std::exception& e) {
    return report_failure(log, "config", e.what());
  }
  log_line(log, "table", fmt::format("{} rows x {} seeds on {} jobs", config.sweep.size(), config.replication, jobs));
  const auto rows = run_sweep(config, jobs, log);
  const std::string csv = table_csv(rows);
  try {
    if (config.emit.csv) write_atomic(config.out_dir / "table.csv", csv);
    if (config.emit.json) {
      nlohmann::json doc = nlohmann::json::array();
      for (const auto& r : rows) {
        nlohmann::json entry = {{"gamma", r.row.gamma}, {"delta", r.row.delta}, {"error", r.error}};
        entry["runs"] = nlohmann::json::array();
        if (r.error.empty()) {
          for (const auto& run : r.runs) entry["runs"].push_back(to_json(run));
        }
        doc.push_back(entry);
      }
      write_atomic(config.out_dir / "table.json", doc.dump(2) + "\n");
    }
    if (config.emit.svg) {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].error.empty()) emit_svg(rows[i].runs.front(), config.out_dir / fmt::format("theta_row{}.svg", i));
      }
    }
  } catch (const std::exception& e) {
    return report_failure(log, "write", e.what());
  }
  out << csv;
  const bool failed = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return !r.error.empty(); });
  return failed ? 1 : 0;
}

int cmd_validate(std::ostream& out, std::ostream& log) {
  bool all = true;
  for (const auto& check : validation_checks()) {
    out << fmt::format("{} {}: {}\n", check.passed ? "PASS" : "FAIL", check.name, check.detail);
    all = all && check.passed;
  }
  log_line(log, "validate", all ? "all checks passed" : "some checks failed");
  return all ? 0 : 1;
}

}  // namespace robin::cli
