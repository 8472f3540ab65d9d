#include "rlc/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "rlc/error.hpp"

namespace rlc::features {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void append_double(std::string& out, double v) {
  if (std::isnan(v)) {
    out += "NaN";
    return;
  }
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

}  // namespace

std::string_view to_string(FactorKind kind) {
  switch (kind) {
    case FactorKind::WeeklySystem: return "weekly-system";
    case FactorKind::DailySystem: return "daily-system";
    case FactorKind::WeeklyNodal: return "weekly-nodal";
    case FactorKind::DailyNodal: return "daily-nodal";
  }
  return "weekly-system";
}

std::optional<FactorKind> parse_factor_kind(std::string_view text) {
  for (auto k : {FactorKind::WeeklySystem, FactorKind::DailySystem, FactorKind::WeeklyNodal,
                 FactorKind::DailyNodal}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

bool is_weekly(FactorKind kind) {
  return kind == FactorKind::WeeklySystem || kind == FactorKind::WeeklyNodal;
}

bool is_nodal(FactorKind kind) {
  return kind == FactorKind::WeeklyNodal || kind == FactorKind::DailyNodal;
}

std::size_t span_hours(FactorKind kind) { return is_weekly(kind) ? 168 : 24; }

double model_factor(std::span<const double> span_values) {
  if (span_values.empty()) {
    throw Error(ErrorCode::DegenerateSpan, "empty span");
  }
  double sum = 0.0;
  double peak = 0.0;
  double floor = span_values.front();
  for (double v : span_values) {
    sum += v;
    peak = std::max(peak, v);
    floor = std::min(floor, v);
  }
  if (peak <= 0.0) {
    throw Error(ErrorCode::AllZeroSpan, "span maximum is zero");
  }
  // A constant span is exactly 1; summation rounding must not move it.
  if (floor == peak) return 1.0;
  const double mean = sum / static_cast<double>(span_values.size());
  return std::min(mean / peak, std::nextafter(1.0, 0.0));
}

Dataset build_dataset(const ingest::LoadSeries& series, FactorKind kind) {
  const std::size_t n = series.size();
  if (n < kMinSeriesLength) {
    throw Error(ErrorCode::SeriesTooShort,
                "need at least " + std::to_string(kMinSeriesLength) + " samples, got " +
                    std::to_string(n));
  }
  auto values = series.values();
  Dataset ds;
  ds.source_label = series.label();
  ds.factor_kind = kind;
  ds.rows.resize(n);

  const std::size_t width = span_hours(kind);
  for (std::size_t begin = 0; begin < n; begin += width) {
    const std::size_t len = std::min(width, n - begin);
    double factor = 0.0;
    try {
      factor = model_factor(values.subspan(begin, len));
    } catch (const Error& e) {
      throw Error(e.code(), "factor span starting at hour " + std::to_string(begin), begin);
    }
    for (std::size_t t = begin; t < begin + len; ++t) ds.rows[t].factor = factor;
  }

  for (std::size_t t = 0; t < n; ++t) {
    auto& row = ds.rows[t];
    row.y_now = values[t];
    row.y_lag24 = t >= kLagDay ? values[t - kLagDay] : kNaN;
    row.y_lag168 = t >= kLagWeek ? values[t - kLagWeek] : kNaN;
    row.target = t + kHorizon < n ? values[t + kHorizon] : kNaN;
    row.valid = t >= kLagWeek && t + kHorizon < n;
  }
  return ds;
}

std::span<const FeatureRow> Dataset::valid_rows() const {
  if (rows.size() < kMinSeriesLength) return {};
  return std::span<const FeatureRow>(rows).subspan(kLagWeek, rows.size() - kLagWeek - kHorizon);
}

std::vector<double> Dataset::targets() const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.target);
  return out;
}

TrainCheckSplit split_train_check(const Dataset& dataset) {
  auto valid = dataset.valid_rows();
  if (valid.size() < 2) {
    throw Error(ErrorCode::TooFewRows,
                "need at least 2 valid rows, got " + std::to_string(valid.size()));
  }
  const std::size_t half = valid.size() / 2;
  return {valid.first(half), valid.subspan(half), dataset.first_valid() + half};
}

std::string write_dataset_csv(const Dataset& dataset) {
  std::string out = "t,factor,y_lag168,y_lag24,y_now,target,valid\n";
  out.reserve(dataset.rows.size() * 64);
  for (std::size_t t = 0; t < dataset.rows.size(); ++t) {
    const auto& r = dataset.rows[t];
    out += std::to_string(t);
    for (double v : {r.factor, r.y_lag168, r.y_lag24, r.y_now, r.target}) {
      out += ',';
      append_double(out, v);
    }
    out += r.valid ? ",1\n" : ",0\n";
  }
  return out;
}

}  // namespace rlc::features
