#include "rlc/cli.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "rlc/anfis.hpp"
#include "rlc/error.hpp"
#include "rlc/ingest.hpp"
#include "rlc/model_io.hpp"

namespace rlc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::EmptyInput, "cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::InvalidConfig, "cannot write " + path.string());
  }
  out << content;
}

std::string shortest(double v) {
  if (std::isnan(v)) return "NaN";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string month_tag(int month) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "m%02d", month);
  return buf;
}

ingest::LoadSeries load_series(const RunConfig& config) {
  return ingest::parse_load_csv(read_file(config.input_path), config.source_label());
}

json report_json(const curves::EvalReport& r) {
  return {{"mape", r.mape}, {"rmse", r.rmse}, {"n", r.n}, {"n_zero_actual", r.n_zero_actual}};
}

struct Estimated {
  features::Dataset dataset;
  std::vector<std::optional<double>> estimate;
  std::vector<double> target;
};

Estimated estimate_from_model(const RunConfig& config, const anfis::ModelFile& file) {
  auto series = load_series(config);
  Estimated e{features::build_dataset(series, file.factor_kind), {}, {}};
  e.estimate = anfis::predict_series(file.model, e.dataset);
  e.target = e.dataset.targets();
  return e;
}

std::string_view kind_name(curves::CurveKind kind) {
  return kind == curves::CurveKind::Weekly ? "weekly" : "daily";
}

}  // namespace

void RunConfig::validate() const {
  if (mfs_per_input != 2 && mfs_per_input != 3) {
    throw Error(ErrorCode::InvalidConfig, "mfs_per_input must be 2 or 3");
  }
  if (epochs < 1) {
    throw Error(ErrorCode::InvalidConfig, "epochs must be >= 1");
  }
  if (month < 1 || month > 12) {
    throw Error(ErrorCode::InvalidConfig, "month must be 1-12");
  }
  if (initial_step && !(*initial_step > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "initial_step must be positive");
  }
  if (!(tolerance >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "tolerance must be >= 0");
  }
  const bool nodal_source = source.starts_with("node:") && source.size() > 5;
  if (source != "system" && !nodal_source) {
    throw Error(ErrorCode::InvalidConfig, "source must be `system` or `node:<id>`");
  }
  if (nodal_source != features::is_nodal(factor_kind)) {
    throw Error(ErrorCode::InvalidConfig,
                "factor_kind " + std::string(features::to_string(factor_kind)) +
                    " does not match source " + source);
  }
}

std::string RunConfig::source_label() const {
  return source == "system" ? source : "node-" + source.substr(5);
}

RunConfig parse_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text.begin(), json_text.end());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
  RunConfig cfg;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "input") {
        cfg.input_path = value.get<std::string>();
      } else if (key == "model") {
        cfg.model_path = value.get<std::string>();
      } else if (key == "source") {
        cfg.source = value.get<std::string>();
      } else if (key == "factor_kind") {
        auto k = features::parse_factor_kind(value.get<std::string>());
        if (!k) throw Error(ErrorCode::InvalidConfig, "unknown factor_kind");
        cfg.factor_kind = *k;
      } else if (key == "month") {
        cfg.month = value.get<int>();
      } else if (key == "kind") {
        const auto s = value.get<std::string>();
        if (s != "weekly" && s != "daily") throw Error(ErrorCode::InvalidConfig, "unknown kind");
        cfg.kind = s == "weekly" ? curves::CurveKind::Weekly : curves::CurveKind::Daily;
      } else if (key == "mfs_per_input") {
        cfg.mfs_per_input = value.get<std::size_t>();
      } else if (key == "epochs") {
        cfg.epochs = value.get<std::size_t>();
      } else if (key == "initial_step") {
        if (!value.is_null()) cfg.initial_step = value.get<double>();
      } else if (key == "tolerance") {
        cfg.tolerance = value.get<double>();
      } else if (key == "output_dir") {
        cfg.output_dir = value.get<std::string>();
      } else {
        throw Error(ErrorCode::InvalidConfig, "unknown config key `" + key + "`");
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
  return cfg;
}

void cmd_convert(const fs::path& wide_csv, const fs::path& out_csv) {
  write_file(out_csv, ingest::convert_wide_csv(read_file(wide_csv)));
}

TrainSummary cmd_train(const RunConfig& config) {
  config.validate();
  auto series = load_series(config);
  auto dataset = features::build_dataset(series, config.factor_kind);
  auto split = features::split_train_check(dataset);
  auto train_batch = anfis::to_batch(split.train);
  auto check_batch = anfis::to_batch(split.check);

  const auto ranges = anfis::input_ranges(train_batch);
  const std::vector<std::size_t> counts(ranges.size(), config.mfs_per_input);
  auto model = anfis::AnfisModel::init_grid(ranges, counts);

  anfis::TrainConfig tc;
  tc.epochs = config.epochs;
  tc.initial_step = config.initial_step;
  tc.error_tolerance = config.tolerance;
  auto result = anfis::train(std::move(model), train_batch, check_batch, tc);

  TrainSummary summary;
  summary.rules = result.best_model.rule_count();
  summary.linear_parameters = result.best_model.linear_parameter_count();
  summary.nonlinear_parameters = result.best_model.nonlinear_parameter_count();
  summary.train_rows = train_batch.size();
  summary.check_rows = check_batch.size();
  summary.epochs_run = result.history.epochs.size();
  summary.best_epoch = result.history.best_epoch.value_or(0);
  summary.best_check_rmse = result.history.epochs.at(summary.best_epoch).check_rmse;

  anfis::ModelFile file{result.best_model, result.history, tc, config.factor_kind,
                        series.label()};
  write_file(config.output_dir / "model.json", anfis::save_model(file));

  std::string history = "epoch,train_rmse,check_rmse,step\n";
  for (std::size_t e = 0; e < result.history.epochs.size(); ++e) {
    const auto& rec = result.history.epochs[e];
    history += std::to_string(e) + ',' + shortest(rec.train_rmse) + ',' +
               shortest(rec.check_rmse) + ',' + shortest(rec.step) + '\n';
  }
  write_file(config.output_dir / "history.csv", history);
  write_file(config.output_dir / "features.csv", features::write_dataset_csv(dataset));
  return summary;
}

EstimateSummary cmd_estimate(const RunConfig& config) {
  auto file = anfis::load_model(read_file(config.model_path));
  auto e = estimate_from_model(config, file);
  auto split = features::split_train_check(e.dataset);

  std::string csv = "t,actual_kw,estimate_kw,error_kw\n";
  csv.reserve(e.target.size() * 64);
  for (std::size_t t = 0; t < e.target.size(); ++t) {
    const double actual = e.target[t];
    const double est = e.estimate[t].value_or(std::nan(""));
    csv += std::to_string(t) + ',' + shortest(actual) + ',' + shortest(est) + ',' +
           shortest(actual - est) + '\n';
  }

  const std::size_t check_begin = split.check_offset;
  const std::size_t check_end = check_begin + split.check.size();
  auto window = [&](std::size_t b, std::size_t end) {
    return curves::evaluate(std::span<const double>(e.target).subspan(b, end - b),
                            std::span<const curves::MaybeKw>(e.estimate).subspan(b, end - b));
  };
  EstimateSummary summary{curves::evaluate(e.target, e.estimate),
                          window(e.dataset.first_valid(), check_begin),
                          window(check_begin, check_end)};

  json report = {{"overall", report_json(summary.overall)},
                 {"train", report_json(summary.train)},
                 {"check", report_json(summary.check)}};
  write_file(config.output_dir / "estimate.csv", csv);
  write_file(config.output_dir / "estimate_report.json", report.dump(2) + "\n");
  return summary;
}

std::vector<curves::RlcSelection> cmd_select(const RunConfig& config) {
  auto file = anfis::load_model(read_file(config.model_path));
  auto e = estimate_from_model(config, file);
  auto series = load_series(config);
  auto slice = ingest::month_slice(series, config.month);
  const auto overall = curves::evaluate(e.target, e.estimate);

  std::vector<curves::RlcSelection> out;
  if (config.kind == curves::CurveKind::Weekly) {
    out.push_back(curves::select_weekly_rlc(e.target, e.estimate, slice));
  } else {
    for (auto day : ingest::kAllWeekdays) {
      out.push_back(curves::select_daily_rlc(e.target, e.estimate, slice, day));
    }
  }
  for (const auto& sel : out) {
    std::string stem = std::string(kind_name(sel.kind)) + "_" + month_tag(sel.month);
    if (sel.weekday) stem += "_" + std::string(ingest::to_string(*sel.weekday));
    write_file(config.output_dir / ("rlc_" + stem + ".csv"), curves::write_curve_csv(sel));
    write_file(config.output_dir / ("scores_" + stem + ".csv"), curves::write_score_table(sel));
    write_file(config.output_dir / ("rlc_" + stem + ".json"),
               curves::write_selection_report(sel, overall));
  }
  return out;
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::InvalidConfig: return kConfigError;
    case ErrorCode::AllWindowsMissing: return kSelectionInfeasible;
    default: return kDataError;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Neuro-fuzzy representative load curve toolkit"};
  app.require_subcommand(1);

  std::string config_path, input, model, out_path, kind, factor, source;
  int month = 0;
  std::size_t epochs = 0, mfs = 0;
  double initial_step = 0.0, tolerance = 0.0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration");
    sub->add_option("--input", input, "canonical load CSV");
    sub->add_option("--out", out_path, "output directory");
  };

  auto* convert = app.add_subcommand("convert", "wide date,h1..h24 CSV to canonical CSV");
  convert->add_option("--input", input, "wide CSV")->required();
  convert->add_option("--out", out_path, "canonical CSV to write")->required();

  auto* validate = app.add_subcommand("validate", "report anomalies in a canonical CSV");
  validate->add_option("--input", input, "canonical load CSV")->required();

  auto* train = app.add_subcommand("train", "fit a model and write model.json");
  add_common(train);
  train->add_option("--source", source, "system | node:<id>");
  train->add_option("--factor", factor, "weekly-system | daily-system | weekly-nodal | daily-nodal");
  train->add_option("--mfs", mfs, "membership functions per input (2 or 3)");
  train->add_option("--epochs", epochs, "training epochs");
  train->add_option("--initial-step", initial_step, "first premise step length");
  train->add_option("--tolerance", tolerance, "train RMSE for early stop");

  auto* estimate = app.add_subcommand("estimate", "write the fitted estimate series");
  add_common(estimate);
  estimate->add_option("--model", model, "model.json from train");

  auto* select = app.add_subcommand("select", "pick representative load curves for a month");
  add_common(select);
  select->add_option("--model", model, "model.json from train");
  select->add_option("--month", month, "month 1-12");
  select->add_option("--kind", kind, "weekly | daily");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  auto given = [](CLI::App* sub, const char* name) {
    return sub->get_option_no_throw(name) && sub->get_option(name)->count() > 0;
  };

  try {
    if (*convert) {
      cmd_convert(input, out_path);
      return kOk;
    }
    if (*validate) {
      const auto report = ingest::scan_load_csv(read_file(input));
      out << "samples " << report.count << "\ngaps " << report.gaps << "\nnegatives "
          << report.negatives << "\nmin " << shortest(report.min) << "\nmax "
          << shortest(report.max) << "\nmean " << shortest(report.mean) << "\n";
      return report.gaps == 0 && report.negatives == 0 ? kOk : kDataError;
    }

    CLI::App* sub = *train ? train : (*estimate ? estimate : select);
    RunConfig cfg;
    if (!config_path.empty()) {
      std::string text;
      try {
        text = read_file(config_path);
      } catch (const Error& e) {
        throw Error(ErrorCode::InvalidConfig, e.what());
      }
      cfg = parse_config(text);
    }
    if (given(sub, "--input")) cfg.input_path = input;
    if (given(sub, "--out")) cfg.output_dir = out_path;
    if (given(sub, "--model")) cfg.model_path = model;
    if (given(sub, "--month")) cfg.month = month;
    if (given(sub, "--kind")) {
      if (kind != "weekly" && kind != "daily") {
        throw Error(ErrorCode::InvalidConfig, "--kind must be weekly or daily");
      }
      cfg.kind = kind == "weekly" ? curves::CurveKind::Weekly : curves::CurveKind::Daily;
    }
    if (given(sub, "--source")) cfg.source = source;
    if (given(sub, "--factor")) {
      auto k = features::parse_factor_kind(factor);
      if (!k) throw Error(ErrorCode::InvalidConfig, "unknown --factor " + factor);
      cfg.factor_kind = *k;
    }
    if (given(sub, "--mfs")) cfg.mfs_per_input = mfs;
    if (given(sub, "--epochs")) cfg.epochs = epochs;
    if (given(sub, "--initial-step")) cfg.initial_step = initial_step;
    if (given(sub, "--tolerance")) cfg.tolerance = tolerance;
    if (cfg.input_path.empty()) throw Error(ErrorCode::InvalidConfig, "no input file given");
    if (sub != train && cfg.model_path.empty()) {
      throw Error(ErrorCode::InvalidConfig, "no model file given");
    }
    cfg.validate();

    if (*train) {
      const auto s = cmd_train(cfg);
      out << "rules " << s.rules << "\nlinear_parameters " << s.linear_parameters
          << "\nnonlinear_parameters " << s.nonlinear_parameters << "\ntrain_rows "
          << s.train_rows << "\ncheck_rows " << s.check_rows << "\ndata_parameter_ratio "
          << shortest(static_cast<double>(s.train_rows) /
                      static_cast<double>(s.linear_parameters + s.nonlinear_parameters))
          << "\nepochs_run " << s.epochs_run << "\nbest_epoch " << s.best_epoch
          << "\nbest_check_rmse " << shortest(s.best_check_rmse) << "\n";
    } else if (*estimate) {
      const auto s = cmd_estimate(cfg);
      out << "overall MAPE " << curves::format_mape(s.overall.mape) << "% RMSE "
          << shortest(s.overall.rmse) << " kW n " << s.overall.n << "\n"
          << "check MAPE " << curves::format_mape(s.check.mape) << "% RMSE "
          << shortest(s.check.rmse) << " kW n " << s.check.n << "\n";
    } else {
      for (const auto& sel : cmd_select(cfg)) {
        out << kind_name(sel.kind) << " month " << sel.month;
        if (sel.weekday) out << " " << ingest::to_string(*sel.weekday);
        out << "\n";
        for (const auto& s : sel.scores) {
          out << "  " << s.label << "  " << (s.mape ? curves::format_mape(*s.mape) : "NaN")
              << (s.index == sel.selected ? "  *" : "") << "\n";
        }
      }
    }
    return kOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
}

}  // namespace rlc::cli
