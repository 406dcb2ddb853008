#include "geonewton/harness.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "geonewton/convergence.hpp"
#include "geonewton/newton.hpp"
#include "geonewton/random.hpp"

namespace geonewton {

namespace {

using ojson = nlohmann::ordered_json;

constexpr double kEigenGap = 1e-3;
// Separates the direction/start-point stream from the instance stream.
constexpr std::uint64_t kStreamSalt = 0x9E3779B97F4A7C15ULL;

bool is_integer_column(const std::string& name) {
  return name == "direction_id" || name == "iter" || name == "k";
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ojson cell_to_json(const std::string& column, double v) {
  if (std::isnan(v)) return nullptr;
  if (is_integer_column(column)) return static_cast<long long>(v);
  return v;
}

ojson slope_json(const SlopeEstimate& s) {
  ojson j;
  j["slope"] = s.saturated ? ojson(nullptr) : ojson(s.slope);
  j["intercept"] = s.saturated ? ojson(nullptr) : ojson(s.intercept);
  j["r_squared"] = s.saturated ? ojson(nullptr) : ojson(s.r_squared);
  j["points_used"] = s.points_used;
  j["saturated"] = s.saturated;
  return j;
}

ojson config_json(const ExperimentConfig& cfg, const Manifold& m, const RetractionSpec& r,
                  const std::string& objective, const std::vector<double>& scales) {
  ojson j;
  j["command"] = to_string(cfg.command);
  j["manifold"] = m.name();
  j["retraction"] = to_string(r.family);
  j["objective"] = objective;
  j["seed"] = cfg.seed;
  j["scales"] = scales;
  j["tol"] = cfg.tol;
  j["max_iter"] = cfg.max_iter;
  j["directions"] = cfg.directions;
  j["start_distance"] = cfg.start_distance;
  j["input"] = cfg.input_path;
  j["format"] = cfg.format == ReportFormat::Csv ? "csv" : "json";
  return j;
}

std::vector<std::vector<double>> sample_rows(const std::vector<SweepSample>& samples,
                                             bool with_abscissa) {
  std::vector<std::vector<double>> rows;
  rows.reserve(samples.size());
  for (const auto& s : samples) {
    if (with_abscissa) {
      rows.push_back({static_cast<double>(s.direction_id), s.scale, s.abscissa, s.value});
    } else {
      rows.push_back({static_cast<double>(s.direction_id), s.scale, s.value});
    }
  }
  return rows;
}

std::vector<TangentVector> random_directions(const Manifold& m, const Point& p, int count,
                                             Rng& rng) {
  std::vector<TangentVector> out;
  for (int i = 0; i < count; ++i) out.push_back(random_unit_tangent(m, p, rng));
  return out;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_cell(const std::string& cell) {
  if (cell.empty()) return std::nan("");
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw IoError("malformed numeric cell '" + cell + "'");
  }
  return v;
}

Report rate_report(const ExperimentConfig& cfg) {
  const Report trace = read_report(cfg.input_path);
  const auto col = std::find(trace.columns.begin(), trace.columns.end(), "dist_to_pstar");
  if (col == trace.columns.end()) throw IoError("input report has no dist_to_pstar column");
  const auto idx = static_cast<std::size_t>(col - trace.columns.begin());
  std::vector<double> errors;
  for (const auto& row : trace.rows) errors.push_back(row.at(idx));

  Report report;
  report.config = ojson::object();
  report.config["command"] = "rate";
  report.config["input"] = cfg.input_path;
  report.config["format"] = cfg.format == ReportFormat::Csv ? "csv" : "json";
  report.columns = {"k", "error", "next"};
  const RateReport rate = convergence_rate(errors, kDefaultNoiseFloor);
  for (std::size_t k = 0; k < rate.pairs.size(); ++k) {
    report.rows.push_back({static_cast<double>(k), rate.pairs[k].error, rate.pairs[k].next});
  }
  report.summary["fitted_rate"] = rate.fitted_rate;
  report.summary["fitted_constant"] = rate.fitted_constant;
  report.summary["r_squared"] = rate.r_squared;
  report.summary["pairs_used"] = rate.pairs_used;
  return report;
}

}  // namespace

std::string to_string(Command c) {
  switch (c) {
    case Command::Order:
      return "order";
    case Command::Newton:
      return "newton";
    case Command::Lemma1:
      return "lemma1";
    case Command::Lemma2:
      return "lemma2";
    case Command::Taylor:
      return "taylor";
    case Command::Rate:
      return "rate";
  }
  return "unknown";
}

Manifold parse_manifold(const std::string& spec) {
  if (spec == "so3") return Manifold::rotations3();
  constexpr std::string_view prefix = "sphere:";
  if (spec.starts_with(prefix)) {
    const std::string digits = spec.substr(prefix.size());
    int n = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
    if (ec == std::errc() && ptr == digits.data() + digits.size() && n >= 2) {
      return Manifold::sphere(n);
    }
  }
  throw ConfigurationError("unknown manifold '" + spec + "' (expected sphere:<n>, n >= 2, or so3)");
}

RetractionSpec parse_retraction(const std::string& name) {
  if (name == "exp") return RetractionSpec::exponential();
  if (name == "projection") return RetractionSpec::projection();
  if (name == "cayley") return RetractionSpec::cayley();
  if (name == "perturbed") return RetractionSpec::perturbed_order1();
  throw ConfigurationError("unknown retraction '" + name + "'");
}

ObjectiveKind parse_objective(const std::string& name) {
  if (name == "rayleigh") return ObjectiveKind::Rayleigh;
  if (name == "procrustes") return ObjectiveKind::ProcrustesTrace;
  throw ConfigurationError("unknown objective '" + name + "'");
}

ExperimentConfig parse_config(const std::vector<std::string>& args) {
  ExperimentConfig cfg;
  CLI::App app{"Retraction-based Riemannian Newton experiments", "geonewton"};
  std::string command;
  std::string format = "csv";
  app.add_option("command", command, "order | newton | lemma1 | lemma2 | taylor | rate")
      ->required()
      ->check(CLI::IsMember({"order", "newton", "lemma1", "lemma2", "taylor", "rate"}));
  app.add_option("--manifold", cfg.manifold, "sphere:<n> or so3")->capture_default_str();
  app.add_option("--retraction", cfg.retraction, "exp | projection | cayley | perturbed")
      ->capture_default_str();
  app.add_option("--objective", cfg.objective,
                 "rayleigh | procrustes (default: rayleigh on spheres, procrustes on so3)");
  app.add_option("--seed", cfg.seed, "instance seed")->capture_default_str();
  app.add_option("--scales", cfg.scales, "comma-separated, strictly decreasing (default 2^-2..2^-12)")
      ->delimiter(',')
      ->allow_extra_args(false);
  app.add_option("--tol", cfg.tol, "Newton gradient-norm tolerance")->capture_default_str();
  app.add_option("--max-iter", cfg.max_iter, "Newton step limit")->capture_default_str();
  app.add_option("--directions", cfg.directions, "directions (or direction pairs) per sweep")
      ->capture_default_str();
  app.add_option("--start-distance", cfg.start_distance,
                 "newton: geodesic distance of the start point from the target critical point")
      ->capture_default_str();
  app.add_option("--input", cfg.input_path, "rate: newton report (csv or json) to analyse");
  app.add_option("--output", cfg.output_path, "report path (default: standard output)");
  app.add_option("--format", format, "csv | json")
      ->capture_default_str()
      ->check(CLI::IsMember({"csv", "json"}));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw UsageError(app.help(), 0);
  } catch (const CLI::ParseError& e) {
    throw UsageError(std::string(e.what()) + "\nRun with --help for more information.", 2);
  }

  static const std::pair<const char*, Command> kCommands[] = {
      {"order", Command::Order},   {"newton", Command::Newton}, {"lemma1", Command::Lemma1},
      {"lemma2", Command::Lemma2}, {"taylor", Command::Taylor}, {"rate", Command::Rate}};
  for (const auto& [name, c] : kCommands) {
    if (command == name) cfg.command = c;
  }
  cfg.format = format == "json" ? ReportFormat::Json : ReportFormat::Csv;

  try {
    const Manifold m = parse_manifold(cfg.manifold);
    const RetractionSpec r = parse_retraction(cfg.retraction);
    m.check_retraction(r);
    if (cfg.objective.empty()) {
      cfg.objective = m.kind() == ManifoldKind::Sphere ? "rayleigh" : "procrustes";
    }
    const ObjectiveKind kind = parse_objective(cfg.objective);
    const bool fits = (kind == ObjectiveKind::Rayleigh) == (m.kind() == ManifoldKind::Sphere);
    if (!fits) {
      throw ConfigurationError("objective '" + cfg.objective + "' is not defined on " + m.name());
    }
  } catch (const Error& e) {
    throw UsageError(e.what(), 2);
  }
  if (!cfg.scales.empty()) {
    for (std::size_t i = 0; i < cfg.scales.size(); ++i) {
      if (!(cfg.scales[i] > 0.0) || (i > 0 && !(cfg.scales[i] < cfg.scales[i - 1]))) {
        throw UsageError("--scales must be positive and strictly decreasing", 2);
      }
    }
  }
  if (!(cfg.tol > 0.0)) throw UsageError("--tol must be positive", 2);
  if (cfg.max_iter < 1) throw UsageError("--max-iter must be at least 1", 2);
  if (cfg.directions < 1) throw UsageError("--directions must be at least 1", 2);
  if (!(cfg.start_distance >= 0.0)) throw UsageError("--start-distance must be nonnegative", 2);
  if (cfg.command == Command::Rate && cfg.input_path.empty()) {
    throw UsageError("rate requires --input", 2);
  }
  return cfg;
}

// ---------------------------------------------------------------------------

Objective seeded_instance(std::uint64_t seed, ObjectiveKind kind, int n) {
  if (kind == ObjectiveKind::ProcrustesTrace) {
    Rng rng(seed);
    const Manifold so3m = Manifold::rotations3();
    const Eigen::Matrix3d r = so3::unflatten(random_point(so3m, rng).coords());
    return Objective::procrustes(r * Eigen::Vector3d(2.0, 1.5, 1.0).asDiagonal());
  }
  if (n < 2) throw ContractViolation("seeded Rayleigh instance needs n >= 2");
  for (std::uint64_t s = seed;; ++s) {
    Rng rng(s);
    Eigen::MatrixXd b(n, n);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < n; ++k) b(i, k) = rng.uniform(-1.0, 1.0);
    }
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < n; ++k) a(i, k) = 0.5 * (b(i, k) + b(k, i));
    }
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a).eigenvalues();
    double gap = INFINITY;
    for (int i = 1; i < n; ++i) gap = std::min(gap, ev(i) - ev(i - 1));
    if (gap > kEigenGap) return Objective::rayleigh(std::move(a));
  }
}

Report run_experiment(const ExperimentConfig& cfg) {
  if (cfg.command == Command::Rate) return rate_report(cfg);

  const Manifold m = parse_manifold(cfg.manifold);
  const RetractionSpec r = parse_retraction(cfg.retraction);
  m.check_retraction(r);
  const std::string objective_name =
      cfg.objective.empty() ? (m.kind() == ManifoldKind::Sphere ? "rayleigh" : "procrustes")
                            : cfg.objective;
  const Objective j = seeded_instance(cfg.seed, parse_objective(objective_name),
                                      m.kind() == ManifoldKind::Sphere ? m.ambient_dim() : 3);
  check_objective(j, m);

  ScaleSweep sweep;
  if (!cfg.scales.empty()) sweep.scales = cfg.scales;
  Rng rng(cfg.seed ^ kStreamSalt);

  Report report;
  report.config = config_json(cfg, m, r, objective_name, sweep.scales);

  switch (cfg.command) {
    case Command::Order: {
      const Point p = random_point(m, rng);
      sweep.directions = random_directions(m, p, cfg.directions, rng);
      const auto samples = sample_retraction_order(m, r, p, sweep);
      const SlopeEstimate fit = fit_samples(samples, sweep.noise_floor);
      report.columns = {"direction_id", "scale", "distance"};
      report.rows = sample_rows(samples, false);
      report.summary = slope_json(fit);
      report.summary["declared_order"] =
          r.declared_order == RetractionSpec::kUnboundedOrder ? ojson("unbounded")
                                                              : ojson(r.declared_order);
      report.summary["estimated_order"] = fit.saturated ? ojson(nullptr) : ojson(fit.slope - 1.0);
      break;
    }
    case Command::Lemma1:
    case Command::Taylor: {
      const bool lemma = cfg.command == Command::Lemma1;
      const Point p = lemma ? critical_points(j, m).front() : random_point(m, rng);
      sweep.directions = random_directions(m, p, cfg.directions, rng);
      const auto samples = lemma ? sample_lemma1_residual(j, m, r, p, sweep)
                                 : sample_taylor_remainder(j, m, r, p, sweep);
      report.columns = {"direction_id", "scale", "abscissa", "value"};
      report.rows = sample_rows(samples, true);
      report.summary = slope_json(fit_samples(samples, sweep.noise_floor));
      break;
    }
    case Command::Lemma2: {
      const Point p = random_point(m, rng);
      std::vector<SweepSample> samples;
      for (int k = 0; k < cfg.directions; ++k) {
        const TangentVector v = random_unit_tangent(m, p, rng);
        const TangentVector w = random_unit_tangent(m, p, rng);
        const auto part = sample_lemma2_deviation(m, r, v, w, sweep, k);
        samples.insert(samples.end(), part.begin(), part.end());
      }
      report.columns = {"direction_id", "scale", "abscissa", "value"};
      report.rows = sample_rows(samples, true);
      report.summary = slope_json(fit_samples(samples, sweep.noise_floor));
      break;
    }
    case Command::Newton: {
      const Point target = critical_points(j, m).front();
      const Point p0 = m.exp(random_unit_tangent(m, target, rng) * cfg.start_distance);
      NewtonConfig ncfg;
      ncfg.tol = cfg.tol;
      ncfg.max_iter = cfg.max_iter;
      ncfg.retraction = r;
      const IterationTrace trace = newton_run(j, m, ncfg, p0);
      const Point p_star = nearest_critical_point(j, m, trace.points.back());
      report.columns = {"iter", "grad_norm", "step_norm", "dist_to_pstar"};
      std::vector<double> errors;
      for (std::size_t k = 0; k < trace.points.size(); ++k) {
        const double step = k < trace.step_norms.size() ? trace.step_norms[k] : std::nan("");
        errors.push_back(m.distance(trace.points[k], p_star));
        report.rows.push_back({static_cast<double>(k), trace.grad_norms[k], step, errors.back()});
      }
      report.summary["status"] = to_string(trace.status);
      report.summary["iterations"] = trace.iterations();
      report.summary["final_grad_norm"] = trace.grad_norms.back();
      report.summary["final_distance"] = errors.back();
      try {
        const RateReport rate = convergence_rate(errors, kDefaultNoiseFloor);
        report.summary["fitted_rate"] = rate.fitted_rate;
        report.summary["fitted_constant"] = rate.fitted_constant;
        report.summary["pairs_used"] = rate.pairs_used;
      } catch (const InsufficientData&) {
        report.summary["fitted_rate"] = nullptr;
        report.summary["fitted_constant"] = nullptr;
        report.summary["pairs_used"] = 0;
      }
      report.measurement_failed = trace.status != NewtonStatus::Converged;
      break;
    }
    case Command::Rate:
      break;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Serialization

bool Report::operator==(const Report& other) const {
  if (config != other.config || columns != other.columns || summary != other.summary ||
      version != other.version || rows.size() != other.rows.size()) {
    return false;
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != other.rows[i].size()) return false;
    for (std::size_t k = 0; k < rows[i].size(); ++k) {
      const double a = rows[i][k];
      const double b = other.rows[i][k];
      if (!(a == b || (std::isnan(a) && std::isnan(b)))) return false;
    }
  }
  return true;
}

ojson report_to_json(const Report& report) {
  ojson j;
  j["config"] = report.config;
  ojson rows = ojson::array();
  for (const auto& row : report.rows) {
    ojson obj = ojson::object();
    for (std::size_t k = 0; k < report.columns.size(); ++k) {
      obj[report.columns[k]] = cell_to_json(report.columns[k], row.at(k));
    }
    rows.push_back(std::move(obj));
  }
  j["rows"] = std::move(rows);
  j["summary"] = report.summary;
  j["version"] = report.version;
  return j;
}

Report report_from_json(const ojson& j) {
  Report report;
  try {
    report.config = j.at("config");
    report.summary = j.at("summary");
    report.version = j.at("version").get<std::string>();
    const ojson& rows = j.at("rows");
    if (!rows.empty()) {
      for (const auto& item : rows.front().items()) report.columns.push_back(item.key());
    }
    for (const auto& row : rows) {
      std::vector<double> values;
      for (const auto& c : report.columns) {
        const ojson& cell = row.at(c);
        values.push_back(cell.is_null() ? std::nan("") : cell.get<double>());
      }
      report.rows.push_back(std::move(values));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed JSON report: ") + e.what());
  }
  return report;
}

Report parse_json_report(std::string_view text) {
  try {
    return report_from_json(ojson::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed JSON report: ") + e.what());
  }
}

Report parse_csv_report(std::string_view text) {
  Report report;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty CSV report");
  report.columns = split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != report.columns.size()) throw IoError("CSV row width mismatch");
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(parse_cell(c));
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string format_report(const Report& report, ReportFormat format) {
  if (format == ReportFormat::Json) return report_to_json(report).dump(2) + "\n";
  std::string out;
  for (std::size_t k = 0; k < report.columns.size(); ++k) {
    if (k) out += ',';
    out += report.columns[k];
  }
  out += '\n';
  for (const auto& row : report.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k) out += ',';
      const double v = row[k];
      if (std::isnan(v)) continue;
      out += is_integer_column(report.columns[k]) ? std::to_string(static_cast<long long>(v))
                                                  : format_double(v);
    }
    out += '\n';
  }
  return out;
}

Report read_report(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') return parse_json_report(text);
  return parse_csv_report(text);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  try {
    cfg = parse_config(args);
  } catch (const UsageError& e) {
    (e.exit_code() == 0 ? out : err) << e.what() << "\n";
    return e.exit_code();
  }

  Report report;
  try {
    report = run_experiment(cfg);
  } catch (const IoError& e) {
    err << "geonewton: I/O error: " << e.what() << "\n";
    return 3;
  } catch (const ConfigurationError& e) {
    err << "geonewton: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "geonewton: measurement failed: " << e.what() << "\n";
    return 1;
  }

  const std::string text = format_report(report, cfg.format);
  if (cfg.output_path.empty()) {
    out << text;
    err << report.summary.dump() << "\n";
  } else {
    std::ofstream file(cfg.output_path, std::ios::binary | std::ios::trunc);
    if (!file || !(file << text) || !file.flush()) {
      err << "geonewton: I/O error: cannot write '" << cfg.output_path << "'\n";
      return 3;
    }
    out << report.summary.dump() << "\n";
  }
  if (report.measurement_failed) {
    err << "geonewton: measurement failure status reported\n";
    return 1;
  }
  return 0;
}

}  // namespace geonewton
