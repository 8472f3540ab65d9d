#include "rlc/curves.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <json.hpp>

#include "rlc/error.hpp"

namespace rlc::curves {

namespace {

void require_same_length(std::span<const double> actual, std::span<const MaybeKw> estimate) {
  if (actual.size() != estimate.size()) {
    throw Error(ErrorCode::NoComparablePositions,
                "actual has " + std::to_string(actual.size()) + " entries, estimate " +
                    std::to_string(estimate.size()));
  }
}

bool comparable(double a, const MaybeKw& e) { return e.has_value() && std::isfinite(a); }

std::string shortest(double v) {
  if (std::isnan(v)) return "NaN";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

RlcSelection select_over(std::span<const double> target, std::span<const MaybeKw> estimate,
                         const std::array<ingest::HourRange, ingest::MonthSlice::kWindows>& windows,
                         const ingest::MonthSlice& slice, CurveKind kind) {
  require_same_length(target, estimate);
  RlcSelection sel;
  sel.kind = kind;
  sel.month = slice.month;
  std::vector<std::optional<double>> values;
  for (std::size_t k = 0; k < windows.size(); ++k) {
    const auto& w = windows[k];
    if (w.end > target.size()) {
      throw Error(ErrorCode::NoComparablePositions, "window extends past the series", w.begin);
    }
    WindowScore score;
    score.index = k;
    score.year = slice.year_of(k);
    score.week = static_cast<int>(k % 4) + 1;
    score.label = std::to_string(score.year) + "-w" + std::to_string(score.week);
    try {
      score.mape = mape(target.subspan(w.begin, w.size()), estimate.subspan(w.begin, w.size()));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoComparablePositions) throw;
    }
    values.push_back(score.mape);
    sel.scores.push_back(std::move(score));
  }
  sel.selected = argmin_window(values);
  sel.window = windows[sel.selected];
  sel.curve.assign(estimate.begin() + static_cast<std::ptrdiff_t>(sel.window.begin),
                   estimate.begin() + static_cast<std::ptrdiff_t>(sel.window.end));
  return sel;
}

}  // namespace

double mape(std::span<const double> actual, std::span<const MaybeKw> estimate) {
  require_same_length(actual, estimate);
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (!comparable(actual[i], estimate[i]) || !(actual[i] > 0.0)) continue;
    total += std::fabs(actual[i] - *estimate[i]) / actual[i];
    ++n;
  }
  if (n == 0) {
    throw Error(ErrorCode::NoComparablePositions, "no position with estimate and positive actual");
  }
  return 100.0 * total / static_cast<double>(n);
}

double rmse(std::span<const double> actual, std::span<const MaybeKw> estimate) {
  require_same_length(actual, estimate);
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (!comparable(actual[i], estimate[i])) continue;
    const double e = actual[i] - *estimate[i];
    total += e * e;
    ++n;
  }
  if (n == 0) {
    throw Error(ErrorCode::NoComparablePositions, "no position with both series present");
  }
  return std::sqrt(total / static_cast<double>(n));
}

EvalReport evaluate(std::span<const double> actual, std::span<const MaybeKw> estimate) {
  EvalReport r;
  r.rmse = rmse(actual, estimate);
  r.mape = mape(actual, estimate);
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (!comparable(actual[i], estimate[i])) continue;
    ++r.n;
    if (!(actual[i] > 0.0)) ++r.n_zero_actual;
  }
  return r;
}

std::size_t argmin_window(std::span<const std::optional<double>> scores) {
  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (!scores[k]) continue;
    if (!best || *scores[k] < *scores[*best]) best = k;
  }
  if (!best) {
    throw Error(ErrorCode::AllWindowsMissing, "every window is fully masked");
  }
  return *best;
}

RlcSelection select_weekly_rlc(std::span<const double> target, std::span<const MaybeKw> estimate,
                               const ingest::MonthSlice& slice) {
  return select_over(target, estimate, slice.week_ranges, slice, CurveKind::Weekly);
}

RlcSelection select_daily_rlc(std::span<const double> target, std::span<const MaybeKw> estimate,
                              const ingest::MonthSlice& slice, ingest::Weekday weekday) {
  auto sel = select_over(target, estimate, slice.group(weekday), slice, CurveKind::Daily);
  sel.weekday = weekday;
  return sel;
}

std::string format_mape(double percent) {
  if (!std::isfinite(percent)) return "NaN";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", percent);
  return buf;
}

std::string write_curve_csv(const RlcSelection& selection) {
  std::string out = "hour_of_window,estimate_kw\n";
  for (std::size_t h = 0; h < selection.curve.size(); ++h) {
    out += std::to_string(h);
    out += ',';
    out += selection.curve[h] ? shortest(*selection.curve[h]) : std::string("NaN");
    out += '\n';
  }
  return out;
}

std::string write_score_table(const RlcSelection& selection) {
  std::string out = "window,year,week,mape,selected\n";
  for (const auto& s : selection.scores) {
    out += std::to_string(s.index) + ',' + std::to_string(s.year) + ',' +
           std::to_string(s.week) + ',' + (s.mape ? format_mape(*s.mape) : "NaN") + ',' +
           (s.index == selection.selected ? "1" : "0") + '\n';
  }
  return out;
}

std::string write_selection_report(const RlcSelection& selection, const EvalReport& overall) {
  using nlohmann::json;
  json scores = json::array();
  for (const auto& s : selection.scores) {
    scores.push_back({{"index", s.index},
                      {"label", s.label},
                      {"year", s.year},
                      {"week", s.week},
                      {"mape", s.mape ? json(*s.mape) : json(nullptr)}});
  }
  json doc = {
      {"kind", selection.kind == CurveKind::Weekly ? "weekly" : "daily"},
      {"month", selection.month},
      {"weekday", selection.weekday ? json(std::string(ingest::to_string(*selection.weekday)))
                                    : json(nullptr)},
      {"scores", std::move(scores)},
      {"selected", selection.selected},
      {"window", {{"begin", selection.window.begin}, {"end", selection.window.end}}},
      {"overall", {{"mape", overall.mape},
                   {"rmse", overall.rmse},
                   {"n", overall.n},
                   {"n_zero_actual", overall.n_zero_actual}}},
  };
  return doc.dump(2) + "\n";
}

}  // namespace rlc::curves
