#pragma once

// Experiment driver behind the `geonewton` command-line tool: configuration
// parsing, seeded problem instances, and CSV/JSON reports.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "geonewton/calculus.hpp"
#include "geonewton/errors.hpp"
#include "geonewton/manifold.hpp"

namespace geonewton {

inline constexpr const char* kVersion = "geonewton 0.1.0";

enum class Command { Order, Newton, Lemma1, Lemma2, Taylor, Rate };
enum class ReportFormat { Csv, Json };

std::string to_string(Command c);

struct ExperimentConfig {
  Command command = Command::Order;
  std::string manifold = "sphere:3";
  std::string retraction = "exp";
  std::string objective;  ///< empty: rayleigh on spheres, procrustes on so3
  std::uint64_t seed = 42;
  std::vector<double> scales;  ///< empty: 2^-2 .. 2^-12
  double tol = 1e-12;
  int max_iter = 50;
  int directions = 5;
  double start_distance = 0.1;
  std::string input_path;
  std::string output_path;
  ReportFormat format = ReportFormat::Csv;
};

/// Bad command line. exit_code is 2, or 0 when help was requested (the
/// message then holds the help text).
class UsageError : public Error {
 public:
  UsageError(const std::string& message, int exit_code)
      : Error(message), exit_code_(exit_code) {}
  int exit_code() const { return exit_code_; }

 private:
  int exit_code_;
};

/// Failure to read the input or write the output (exit code 3).
class IoError : public Error {
 public:
  using Error::Error;
};

/// `args` excludes the program name.
ExperimentConfig parse_config(const std::vector<std::string>& args);

Manifold parse_manifold(const std::string& spec);
RetractionSpec parse_retraction(const std::string& name);
ObjectiveKind parse_objective(const std::string& name);

struct Report {
  nlohmann::ordered_json config;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;  ///< NaN marks an empty cell
  nlohmann::ordered_json summary;
  std::string version = kVersion;
  bool measurement_failed = false;  ///< not serialized; drives exit code 1

  bool operator==(const Report& other) const;
};

/// Rayleigh: A = (B + B^T)/2 with B_ij uniform[-1,1] (row-major draws from
/// Rng(seed)); resampled with seed+1, seed+2, ... until adjacent eigenvalues
/// are separated by more than 1e-3. Procrustes: A = R diag(2, 1.5, 1) with
/// R a random rotation from Rng(seed).
Objective seeded_instance(std::uint64_t seed, ObjectiveKind kind, int n);

/// Runs the configured command. Measurement errors (precondition, inversion,
/// insufficient data, evaluation) propagate as exceptions; IoError for file
/// problems.
Report run_experiment(const ExperimentConfig& cfg);

std::string format_report(const Report& report, ReportFormat format);
nlohmann::ordered_json report_to_json(const Report& report);
Report report_from_json(const nlohmann::ordered_json& j);
Report parse_json_report(std::string_view text);
Report parse_csv_report(std::string_view text);
/// Reads a CSV or JSON report from disk; throws IoError.
Report read_report(const std::string& path);

/// Complete CLI behavior: returns the process exit code
/// (0 ok, 1 measurement failure, 2 usage error, 3 I/O error).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace geonewton
