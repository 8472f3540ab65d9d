#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rlc/ingest.hpp"

namespace rlc::curves {

using MaybeKw = std::optional<double>;

/// Positions compared: estimate present and actual finite. MAPE further
/// drops positions whose actual is zero (counted in n_zero_actual).
struct EvalReport {
  double mape = 0.0;  // percent
  double rmse = 0.0;  // kW
  std::size_t n = 0;
  std::size_t n_zero_actual = 0;
};

/// (100 / N) * sum |a - e| / a over positions with e present and a > 0.
double mape(std::span<const double> actual, std::span<const MaybeKw> estimate);
double rmse(std::span<const double> actual, std::span<const MaybeKw> estimate);
EvalReport evaluate(std::span<const double> actual, std::span<const MaybeKw> estimate);

enum class CurveKind { Weekly, Daily };

struct WindowScore {
  std::size_t index = 0;
  int year = 0;
  /// 1-4 within the year: week of the month, or occurrence of the weekday.
  int week = 0;
  std::string label;  // e.g. "2010-w1"
  /// Unset when the window has no comparable positions.
  std::optional<double> mape;
};

struct RlcSelection {
  CurveKind kind = CurveKind::Weekly;
  std::optional<ingest::Weekday> weekday;  // set for daily curves
  int month = 1;
  std::vector<WindowScore> scores;
  std::size_t selected = 0;
  ingest::HourRange window;
  /// Estimate values of the selected window (168 or 24 entries).
  std::vector<MaybeKw> curve;
};

/// Lowest present score, earliest index on ties. Throws AllWindowsMissing.
std::size_t argmin_window(std::span<const std::optional<double>> scores);

RlcSelection select_weekly_rlc(std::span<const double> target, std::span<const MaybeKw> estimate,
                               const ingest::MonthSlice& slice);
RlcSelection select_daily_rlc(std::span<const double> target, std::span<const MaybeKw> estimate,
                              const ingest::MonthSlice& slice, ingest::Weekday weekday);

/// `hour_of_window,estimate_kw`
std::string write_curve_csv(const RlcSelection& selection);
/// `window,year,week,mape,selected`, MAPE to 4 decimals.
std::string write_score_table(const RlcSelection& selection);
/// JSON sidecar: kind, month, weekday, scores, selected, overall report.
std::string write_selection_report(const RlcSelection& selection, const EvalReport& overall);

std::string format_mape(double percent);

}  // namespace rlc::curves
