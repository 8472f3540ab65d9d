#include "rlc/model_io.hpp"

#include <cmath>
#include <limits>
#include <json.hpp>

#include "rlc/error.hpp"

namespace rlc::anfis {

using nlohmann::json;

namespace {

// JSON has no NaN/inf; a diverged history entry is stored as null.
json real(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double real_from(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

}  // namespace

std::string save_model(const ModelFile& file) {
  const auto& m = file.model;
  json mfs = json::array();
  for (const auto& row : m.mfs()) {
    json input = json::array();
    for (const auto& mf : row) input.push_back({{"a", mf.a}, {"b", mf.b}, {"c", mf.c}});
    mfs.push_back(std::move(input));
  }
  const std::size_t width = m.n_inputs() + 1;
  json consequents = json::array();
  for (std::size_t r = 0; r < m.rule_count(); ++r) {
    auto row = m.consequents().subspan(r * width, width);
    consequents.push_back(json(std::vector<double>(row.begin(), row.end())));
  }
  json ranges = json::array();
  for (const auto& r : m.input_ranges()) ranges.push_back({r.min, r.max});

  const auto& cfg = file.train_config;
  json train_config = {
      {"epochs", cfg.epochs},
      {"initial_step", cfg.initial_step ? json(*cfg.initial_step) : json(nullptr)},
      {"step_increase", cfg.step_increase},
      {"step_decrease", cfg.step_decrease},
      {"error_tolerance", cfg.error_tolerance},
  };
  json epochs = json::array();
  for (const auto& e : file.history.epochs) {
    epochs.push_back(
        {{"train_rmse", real(e.train_rmse)}, {"check_rmse", real(e.check_rmse)}, {"step", e.step}});
  }
  json history = {
      {"epochs", std::move(epochs)},
      {"best_epoch",
       file.history.best_epoch ? json(*file.history.best_epoch) : json(nullptr)},
  };

  json doc = {
      {"format_version", kModelFormatVersion},
      {"n_inputs", m.n_inputs()},
      {"rules", m.rule_count()},
      {"linear_parameters", m.linear_parameter_count()},
      {"nonlinear_parameters", m.nonlinear_parameter_count()},
      {"factor_kind", features::to_string(file.factor_kind)},
      {"source_label", file.source_label},
      {"mfs", std::move(mfs)},
      {"consequents", std::move(consequents)},
      {"input_ranges", std::move(ranges)},
      {"train_config", std::move(train_config)},
      {"history", std::move(history)},
  };
  return doc.dump(2) + "\n";
}

ModelFile load_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedModelFile, e.what());
  }
  if (!doc.is_object() || !doc.contains("format_version")) {
    throw Error(ErrorCode::MalformedModelFile, "missing format_version");
  }
  try {
    const int version = doc.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw Error(ErrorCode::VersionMismatch,
                  "file version " + std::to_string(version) + ", reader supports " +
                      std::to_string(kModelFormatVersion));
    }
    const auto n_inputs = doc.at("n_inputs").get<std::size_t>();

    std::vector<std::vector<BellMF>> mfs;
    for (const auto& input : doc.at("mfs")) {
      std::vector<BellMF> row;
      for (const auto& mf : input) {
        row.push_back({mf.at("a").get<double>(), mf.at("b").get<double>(),
                       mf.at("c").get<double>()});
      }
      mfs.push_back(std::move(row));
    }
    std::vector<InputRange> ranges;
    for (const auto& r : doc.at("input_ranges")) {
      if (r.size() != 2) throw Error(ErrorCode::MalformedModelFile, "input range needs 2 values");
      ranges.push_back({r.at(0).get<double>(), r.at(1).get<double>()});
    }
    std::vector<double> consequents;
    for (const auto& row : doc.at("consequents")) {
      if (row.size() != n_inputs + 1) {
        throw Error(ErrorCode::MalformedModelFile, "consequent row has the wrong width");
      }
      for (const auto& v : row) consequents.push_back(v.get<double>());
    }
    if (mfs.size() != n_inputs) {
      throw Error(ErrorCode::MalformedModelFile, "mfs does not match n_inputs");
    }

    const auto& tc = doc.at("train_config");
    TrainConfig cfg;
    cfg.epochs = tc.at("epochs").get<std::size_t>();
    if (!tc.at("initial_step").is_null()) cfg.initial_step = tc.at("initial_step").get<double>();
    cfg.step_increase = tc.at("step_increase").get<double>();
    cfg.step_decrease = tc.at("step_decrease").get<double>();
    cfg.error_tolerance = tc.at("error_tolerance").get<double>();

    TrainHistory history;
    const auto& h = doc.at("history");
    for (const auto& e : h.at("epochs")) {
      history.epochs.push_back(
          {real_from(e.at("train_rmse")), real_from(e.at("check_rmse")), e.at("step").get<double>()});
    }
    if (!h.at("best_epoch").is_null()) {
      history.best_epoch = h.at("best_epoch").get<std::size_t>();
      if (*history.best_epoch >= history.epochs.size()) {
        throw Error(ErrorCode::MalformedModelFile, "best_epoch out of range");
      }
    }

    auto kind = features::parse_factor_kind(doc.at("factor_kind").get<std::string>());
    if (!kind) throw Error(ErrorCode::MalformedModelFile, "unknown factor_kind");

    AnfisModel model(std::move(mfs), std::move(ranges), std::move(consequents));
    return {std::move(model), std::move(history), cfg, *kind,
            doc.at("source_label").get<std::string>()};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedModelFile, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::VersionMismatch || e.code() == ErrorCode::MalformedModelFile) {
      throw;
    }
    throw Error(ErrorCode::MalformedModelFile, e.what());
  }
}

}  // namespace rlc::anfis
