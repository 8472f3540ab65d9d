#include "rlc/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <istream>
#include <map>
#include <numeric>
#include <sstream>

#include "rlc/error.hpp"

namespace rlc::ingest {

namespace chr = std::chrono;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    auto next = line.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(trim(line.substr(pos)));
      break;
    }
    out.push_back(trim(line.substr(pos, next - pos)));
    pos = next + 1;
  }
  return out;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto next = text.find('\n', pos);
    if (next == std::string_view::npos) {
      out.push_back(text.substr(pos));
      break;
    }
    out.push_back(text.substr(pos, next - pos));
    pos = next + 1;
  }
  // Trailing blank lines carry no rows.
  while (!out.empty() && trim(out.back()).empty()) out.pop_back();
  return out;
}

template <typename T>
bool parse_int(std::string_view s, T& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

std::optional<double> parse_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

std::optional<chr::year_month_day> make_date(int y, unsigned m, unsigned d) {
  chr::year_month_day ymd{chr::year{y}, chr::month{m}, chr::day{d}};
  if (!ymd.ok()) return std::nullopt;
  return ymd;
}

std::optional<chr::year_month_day> parse_date(std::string_view s) {
  int y = 0;
  unsigned m = 0, d = 0;
  if (s.size() == 10 && s[4] == '-' && s[7] == '-') {
    if (parse_int(s.substr(0, 4), y) && parse_int(s.substr(5, 2), m) &&
        parse_int(s.substr(8, 2), d)) {
      return make_date(y, m, d);
    }
    return std::nullopt;
  }
  auto parts = split(s, '/');
  if (parts.size() == 3 && parse_int(parts[0], m) && parse_int(parts[1], d) &&
      parts[2].size() == 4 && parse_int(parts[2], y)) {
    return make_date(y, m, d);
  }
  return std::nullopt;
}

struct RawRow {
  std::size_t line = 0;
  Hour time;
  double value = 0.0;
};

// Reads header and rows of canonical CSV; validation of ordering and sign
// is left to the caller.
std::vector<RawRow> read_rows(std::string_view text) {
  auto lines = lines_of(text);
  if (lines.empty()) {
    throw Error(ErrorCode::EmptyInput, "no header row");
  }
  auto header = split(lines[0], ',');
  // Tolerate a UTF-8 byte-order mark.
  if (!header.empty() && header[0].starts_with("\xEF\xBB\xBF")) {
    header[0].remove_prefix(3);
  }
  if (header.size() != 2 || header[0] != "timestamp" || header[1] != "load_kw") {
    throw Error(ErrorCode::MissingHeader, "expected `timestamp,load_kw`", 1);
  }
  std::vector<RawRow> rows;
  rows.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    auto fields = split(lines[i], ',');
    if (fields.size() != 2) {
      throw Error(ErrorCode::NonNumericValue, "expected two fields", line_no);
    }
    auto t = parse_timestamp(fields[0]);
    if (!t) {
      throw Error(ErrorCode::MalformedTimestamp, std::string(fields[0]), line_no);
    }
    auto v = parse_double(fields[1]);
    if (!v) {
      throw Error(ErrorCode::NonNumericValue, std::string(fields[1]), line_no);
    }
    rows.push_back({line_no, *t, *v});
  }
  if (rows.empty()) {
    throw Error(ErrorCode::EmptyInput, "header but no data rows");
  }
  return rows;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::optional<Hour> parse_timestamp(std::string_view text) {
  text = trim(text);
  // YYYY-MM-DDTHH:00, optionally with trailing :00 seconds.
  if (text.size() != 16 && text.size() != 19) return std::nullopt;
  if (text[10] != 'T' && text[10] != ' ') return std::nullopt;
  auto date = parse_date(text.substr(0, 10));
  if (!date || text[4] != '-') return std::nullopt;
  unsigned hh = 0, mm = 0, ss = 0;
  if (text[13] != ':' || !parse_int(text.substr(11, 2), hh) ||
      !parse_int(text.substr(14, 2), mm)) {
    return std::nullopt;
  }
  if (text.size() == 19 && (text[16] != ':' || !parse_int(text.substr(17, 2), ss))) {
    return std::nullopt;
  }
  if (hh > 23 || mm != 0 || ss != 0) return std::nullopt;
  return Hour{chr::sys_days{*date}} + chr::hours{hh};
}

std::string format_timestamp(Hour t) {
  auto day = chr::floor<chr::days>(t);
  chr::year_month_day ymd{day};
  auto hh = (t - day).count();
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:00", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hh));
  return buf;
}

LoadSeries::LoadSeries(Hour start, std::vector<double> values, std::string label)
    : start_(start), values_(std::move(values)), label_(std::move(label)) {
  if (values_.empty()) {
    throw Error(ErrorCode::EmptyInput, "load series has no samples");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw Error(ErrorCode::NonNumericValue, "non-finite sample", i);
    }
    if (values_[i] < 0.0) {
      throw Error(ErrorCode::NegativeValue, "negative sample", i);
    }
  }
}

std::optional<std::size_t> LoadSeries::index_of(Hour t) const {
  if (t < start_) return std::nullopt;
  auto off = static_cast<std::size_t>((t - start_).count());
  if (off >= values_.size()) return std::nullopt;
  return off;
}

LoadSeries parse_load_csv(std::string_view text, std::string label) {
  auto rows = read_rows(text);
  std::vector<double> values;
  values.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && rows[i].time - rows[i - 1].time != chr::hours{1}) {
      throw Error(ErrorCode::NonMonotonicTimestamp,
                  "step from " + format_timestamp(rows[i - 1].time) + " to " +
                      format_timestamp(rows[i].time),
                  rows[i].line);
    }
    if (rows[i].value < 0.0) {
      throw Error(ErrorCode::NegativeValue, format_double(rows[i].value), rows[i].line);
    }
    values.push_back(rows[i].value);
  }
  return LoadSeries(rows.front().time, std::move(values), std::move(label));
}

LoadSeries parse_load_csv(std::istream& in, std::string label) {
  std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_load_csv(text, std::move(label));
}

std::string write_load_csv(const LoadSeries& series) {
  std::string out = "timestamp,load_kw\n";
  out.reserve(series.size() * 28);
  for (std::size_t i = 0; i < series.size(); ++i) {
    out += format_timestamp(series.time_at(i));
    out += ',';
    out += format_double(series[i]);
    out += '\n';
  }
  return out;
}

SeriesReport validate_series(const LoadSeries& series) {
  auto v = series.values();
  SeriesReport r;
  r.count = v.size();
  auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  r.min = *lo;
  r.max = *hi;
  r.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  return r;
}

SeriesReport scan_load_csv(std::string_view text) {
  auto rows = read_rows(text);
  SeriesReport r;
  r.count = rows.size();
  r.min = rows.front().value;
  r.max = rows.front().value;
  double sum = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && rows[i].time - rows[i - 1].time != chr::hours{1}) ++r.gaps;
    if (rows[i].value < 0.0) ++r.negatives;
    r.min = std::min(r.min, rows[i].value);
    r.max = std::max(r.max, rows[i].value);
    sum += rows[i].value;
  }
  r.mean = sum / static_cast<double>(rows.size());
  return r;
}

std::string convert_wide_csv(std::string_view text) {
  auto lines = lines_of(text);
  if (lines.empty()) {
    throw Error(ErrorCode::EmptyInput, "no header row");
  }
  std::size_t first = 0;
  // Header is optional; detect it by an unparseable first date.
  if (!parse_date(split(lines[0], ',').front())) first = 1;

  std::map<chr::sys_days, std::array<double, 24>> days;
  for (std::size_t i = first; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    auto fields = split(lines[i], ',');
    if (fields.size() != 25) {
      throw Error(ErrorCode::MalformedWideRow,
                  "expected 25 fields, got " + std::to_string(fields.size()), line_no);
    }
    auto date = parse_date(fields[0]);
    if (!date) {
      throw Error(ErrorCode::MalformedWideRow, "bad date " + std::string(fields[0]), line_no);
    }
    std::array<double, 24> hours{};
    for (std::size_t h = 0; h < 24; ++h) {
      auto v = parse_double(fields[h + 1]);
      if (!v) {
        throw Error(ErrorCode::MalformedWideRow,
                    "bad value in column h" + std::to_string(h + 1), line_no);
      }
      hours[h] = *v;
    }
    if (!days.emplace(chr::sys_days{*date}, hours).second) {
      throw Error(ErrorCode::MalformedWideRow, "duplicate date", line_no);
    }
  }
  if (days.empty()) {
    throw Error(ErrorCode::EmptyInput, "no data rows");
  }
  std::string out = "timestamp,load_kw\n";
  for (const auto& [day, hours] : days) {
    for (std::size_t h = 0; h < 24; ++h) {
      out += format_timestamp(Hour{day} + chr::hours{h});
      out += ',';
      out += format_double(hours[h]);
      out += '\n';
    }
  }
  return out;
}

std::string_view to_string(Weekday day) {
  static constexpr std::array<std::string_view, 7> names{
      "monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"};
  return names[static_cast<std::size_t>(day)];
}

std::optional<Weekday> parse_weekday(std::string_view text) {
  for (auto day : kAllWeekdays) {
    if (to_string(day) == text) return day;
  }
  return std::nullopt;
}

Weekday weekday_of(Hour t) {
  chr::weekday wd{chr::floor<chr::days>(t)};
  return static_cast<Weekday>(wd.iso_encoding() - 1);
}

MonthSlice month_slice(const LoadSeries& series, int month) {
  if (month < 1 || month > 12) {
    throw Error(ErrorCode::MonthNotCovered, "month must be 1-12");
  }
  MonthSlice slice;
  slice.month = month;

  auto first_year = static_cast<int>(chr::year_month_day{chr::floor<chr::days>(series.start())}.year());
  auto last_year = static_cast<int>(
      chr::year_month_day{chr::floor<chr::days>(series.time_at(series.size() - 1))}.year());

  std::vector<std::pair<int, std::size_t>> covered;
  for (int y = first_year; y <= last_year && covered.size() < 2; ++y) {
    Hour begin{chr::sys_days{chr::year{y} / chr::month{static_cast<unsigned>(month)} / 1}};
    Hour last = begin + chr::hours{28 * 24 - 1};
    auto bi = series.index_of(begin);
    if (bi && series.index_of(last)) covered.emplace_back(y, *bi);
  }
  if (covered.size() < 2) {
    throw Error(ErrorCode::MonthNotCovered,
                "days 1-28 of month " + std::to_string(month) +
                    " are not covered in two years");
  }

  std::array<std::size_t, 7> fill{};
  for (std::size_t yi = 0; yi < 2; ++yi) {
    slice.years[yi] = covered[yi].first;
    const std::size_t base = covered[yi].second;
    for (std::size_t w = 0; w < 4; ++w) {
      const std::size_t b = base + w * MonthSlice::kWeekHours;
      slice.week_ranges[yi * 4 + w] = {b, b + MonthSlice::kWeekHours};
    }
    for (std::size_t d = 0; d < 28; ++d) {
      const std::size_t b = base + d * MonthSlice::kDayHours;
      auto wd = static_cast<std::size_t>(weekday_of(series.time_at(b)));
      slice.weekday_groups[wd][fill[wd]++] = {b, b + MonthSlice::kDayHours};
    }
  }
  return slice;
}

}  // namespace rlc::ingest
