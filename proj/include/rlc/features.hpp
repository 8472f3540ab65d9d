#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rlc/ingest.hpp"

namespace rlc::features {

/// Weekly vs daily span crossed with system vs nodal source. System and
/// nodal kinds differ only in which series is supplied.
enum class FactorKind { WeeklySystem, DailySystem, WeeklyNodal, DailyNodal };

std::string_view to_string(FactorKind kind);
std::optional<FactorKind> parse_factor_kind(std::string_view text);
bool is_weekly(FactorKind kind);
bool is_nodal(FactorKind kind);
std::size_t span_hours(FactorKind kind);

inline constexpr std::size_t kLagWeek = 168;
inline constexpr std::size_t kLagDay = 24;
inline constexpr std::size_t kHorizon = 24;
inline constexpr std::size_t kInputs = 4;
/// Shortest series that yields one valid row.
inline constexpr std::size_t kMinSeriesLength = kLagWeek + kHorizon + 1;

/// Inputs (factor, Y(t-168), Y(t-24), Y(t)) and target Y(t+24) for hour t.
/// Fields that fall outside the series are NaN and `valid` is false.
struct FeatureRow {
  double factor = 0.0;
  double y_lag168 = 0.0;
  double y_lag24 = 0.0;
  double y_now = 0.0;
  double target = 0.0;
  bool valid = false;
};

/// One row per hour of the source series.
struct Dataset {
  std::vector<FeatureRow> rows;
  std::string source_label;
  FactorKind factor_kind = FactorKind::WeeklySystem;

  /// Valid rows are exactly [kLagWeek, size - kHorizon).
  std::span<const FeatureRow> valid_rows() const;
  std::size_t first_valid() const noexcept { return kLagWeek; }
  /// Y(t+24) per row, NaN where unavailable.
  std::vector<double> targets() const;
};

/// mean(span) / max(span), in (0, 1].
double model_factor(std::span<const double> span_values);

Dataset build_dataset(const ingest::LoadSeries& series, FactorKind kind);

/// Chronological halves of the valid rows; the train half gets the floor.
struct TrainCheckSplit {
  std::span<const FeatureRow> train;
  std::span<const FeatureRow> check;
  /// Row index in the dataset of the first check row.
  std::size_t check_offset = 0;
};

TrainCheckSplit split_train_check(const Dataset& dataset);

/// `t,factor,y_lag168,y_lag24,y_now,target,valid`
std::string write_dataset_csv(const Dataset& dataset);

}  // namespace rlc::features
