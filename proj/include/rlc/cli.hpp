#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "rlc/curves.hpp"
#include "rlc/error.hpp"
#include "rlc/features.hpp"

namespace rlc::cli {

enum ExitCode : int {
  kOk = 0,
  kDataError = 2,
  kConfigError = 3,
  kSelectionInfeasible = 4,
};

/// Run parameters. Loaded from a JSON config file, then overridden by
/// command-line flags.
struct RunConfig {
  std::filesystem::path input_path;
  std::filesystem::path model_path;
  /// "system" or "node:<id>"
  std::string source = "system";
  features::FactorKind factor_kind = features::FactorKind::WeeklySystem;
  int month = 3;
  curves::CurveKind kind = curves::CurveKind::Weekly;
  std::size_t mfs_per_input = 2;
  std::size_t epochs = 100;
  std::optional<double> initial_step;
  double tolerance = 0.0;
  std::filesystem::path output_dir = ".";

  /// Throws rlc::Error(InvalidConfig).
  void validate() const;
  std::string source_label() const;
};

/// Throws rlc::Error(InvalidConfig) on unknown keys or bad values.
RunConfig parse_config(std::string_view json_text);

void cmd_convert(const std::filesystem::path& wide_csv, const std::filesystem::path& out_csv);

struct TrainSummary {
  std::size_t rules = 0;
  std::size_t linear_parameters = 0;
  std::size_t nonlinear_parameters = 0;
  std::size_t train_rows = 0;
  std::size_t check_rows = 0;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  double best_check_rmse = 0.0;
};

/// Writes model.json, history.csv and features.csv into output_dir.
TrainSummary cmd_train(const RunConfig& config);

struct EstimateSummary {
  curves::EvalReport overall;
  curves::EvalReport train;
  curves::EvalReport check;
};

/// Writes estimate.csv and estimate_report.json into output_dir.
EstimateSummary cmd_estimate(const RunConfig& config);

/// Writes curve CSVs, score tables and JSON sidecars into output_dir.
/// One selection for weekly, seven (Monday first) for daily.
std::vector<curves::RlcSelection> cmd_select(const RunConfig& config);

int exit_code_for(const Error& error);

/// Full command-line entry point; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rlc::cli
