#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rlc::ingest {

/// Hour-aligned naive local timestamp. No DST or leap-second handling.
using Hour = std::chrono::sys_time<std::chrono::hours>;

std::optional<Hour> parse_timestamp(std::string_view text);
/// `YYYY-MM-DDTHH:00`
std::string format_timestamp(Hour t);

/// Half-open range of hour indices into a LoadSeries.
struct HourRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  bool operator==(const HourRange&) const = default;
};

/// Hourly load samples in kW, one per hour starting at `start()`.
///
/// Construction enforces the invariants: non-empty, every value finite and
/// non-negative. Consecutive positions are exactly one hour apart.
class LoadSeries {
 public:
  LoadSeries(Hour start, std::vector<double> values, std::string label = {});

  Hour start() const noexcept { return start_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const noexcept { return values_.size(); }
  const std::string& label() const noexcept { return label_; }

  Hour time_at(std::size_t i) const {
    return start_ + std::chrono::hours{static_cast<long>(i)};
  }
  /// Index of hour `t`, or nullopt when outside the series.
  std::optional<std::size_t> index_of(Hour t) const;

 private:
  Hour start_;
  std::vector<double> values_;
  std::string label_;
};

/// Parse canonical `timestamp,load_kw` CSV. Errors name the 1-based file
/// line (the header is line 1).
LoadSeries parse_load_csv(std::string_view text, std::string label = {});
LoadSeries parse_load_csv(std::istream& in, std::string label = {});

/// Canonical CSV, values in shortest round-trip form.
std::string write_load_csv(const LoadSeries& series);

struct SeriesReport {
  std::size_t count = 0;
  std::size_t gaps = 0;
  std::size_t negatives = 0;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

SeriesReport validate_series(const LoadSeries& series);

/// Lenient pass over canonical CSV that counts anomalies instead of
/// failing on them. A gap is any timestamp step other than +1 hour.
/// Rows with unreadable timestamps or values still raise.
SeriesReport scan_load_csv(std::string_view text);

/// Expand wide `date,h1..h24` rows into canonical CSV text. Dates are
/// `YYYY-MM-DD` or `MM/DD/YYYY`. Output is sorted chronologically.
std::string convert_wide_csv(std::string_view text);

enum class Weekday { Monday = 0, Tuesday, Wednesday, Thursday, Friday, Saturday, Sunday };

inline constexpr std::array<Weekday, 7> kAllWeekdays{
    Weekday::Monday, Weekday::Tuesday,  Weekday::Wednesday, Weekday::Thursday,
    Weekday::Friday, Weekday::Saturday, Weekday::Sunday};

std::string_view to_string(Weekday day);
std::optional<Weekday> parse_weekday(std::string_view text);
Weekday weekday_of(Hour t);

/// Days 1-28 of one month in two years, as index ranges into a series.
struct MonthSlice {
  static constexpr std::size_t kWindows = 8;
  static constexpr std::size_t kWeekHours = 168;
  static constexpr std::size_t kDayHours = 24;

  int month = 1;
  /// Calendar year of the first and second four-week block.
  std::array<int, 2> years{};
  /// Four 168-hour blocks per year, chronological.
  std::array<HourRange, kWindows> week_ranges{};
  /// Indexed by Weekday; each group holds that weekday's eight days,
  /// chronological.
  std::array<std::array<HourRange, kWindows>, 7> weekday_groups{};

  const std::array<HourRange, kWindows>& group(Weekday day) const {
    return weekday_groups[static_cast<std::size_t>(day)];
  }
  /// Year of window k (0..7).
  int year_of(std::size_t k) const { return years[k / 4]; }
};

/// Uses the first two years whose days 1-28 of `month` lie entirely inside
/// the series.
MonthSlice month_slice(const LoadSeries& series, int month);

}  // namespace rlc::ingest
