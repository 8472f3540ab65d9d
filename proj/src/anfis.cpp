#include "rlc/anfis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rlc/error.hpp"

namespace rlc::anfis {

double gbell_eval(double x, const BellMF& mf) {
  const double z = std::fabs((x - mf.c) / mf.a);
  return 1.0 / (1.0 + std::pow(z, 2.0 * mf.b));
}

BellGrad gbell_grad(double x, const BellMF& mf) {
  if (x == mf.c) return {};
  const double z = std::fabs((x - mf.c) / mf.a);
  const double u = std::pow(z, 2.0 * mf.b);
  const double mu = 1.0 / (1.0 + u);
  // mu^2 * u rewritten as mu * (1 - mu) so that u = inf stays finite.
  const double one_minus = std::isinf(u) ? 1.0 : u / (1.0 + u);
  const double s = mu * one_minus;
  return {2.0 * mf.b * s / mf.a, -2.0 * s * std::log(z), 2.0 * mf.b * s / (x - mf.c)};
}

AnfisModel::AnfisModel(std::vector<std::vector<BellMF>> mfs,
                       std::vector<InputRange> input_ranges, std::vector<double> consequents)
    : mfs_(std::move(mfs)), ranges_(std::move(input_ranges)) {
  if (mfs_.empty()) {
    throw Error(ErrorCode::InvalidConfig, "model needs at least one input");
  }
  if (ranges_.size() != mfs_.size()) {
    throw Error(ErrorCode::InvalidConfig, "one input range per input required");
  }
  stride_.assign(mfs_.size(), 1);
  rules_ = 1;
  for (std::size_t i = mfs_.size(); i-- > 0;) {
    if (mfs_[i].empty()) {
      throw Error(ErrorCode::InvalidConfig, "input " + std::to_string(i) + " has no MFs");
    }
    for (const auto& mf : mfs_[i]) {
      if (!std::isfinite(mf.a) || !std::isfinite(mf.b) || !std::isfinite(mf.c) ||
          !(mf.a > 0.0) || !(mf.b >= 1.0)) {
        throw Error(ErrorCode::InvalidConfig,
                    "bell MF on input " + std::to_string(i) + " needs a > 0, b >= 1");
      }
    }
    stride_[i] = rules_;
    rules_ *= mfs_[i].size();
  }
  set_consequents(std::move(consequents));
}

AnfisModel AnfisModel::init_grid(std::span<const InputRange> input_ranges,
                                 std::span<const std::size_t> mfs_per_input) {
  if (input_ranges.size() != mfs_per_input.size()) {
    throw Error(ErrorCode::InvalidConfig, "one MF count per input required");
  }
  std::vector<std::vector<BellMF>> mfs;
  for (std::size_t i = 0; i < input_ranges.size(); ++i) {
    const auto& r = input_ranges[i];
    const std::size_t count = mfs_per_input[i];
    if (count < 2) {
      throw Error(ErrorCode::InvalidConfig, "grid needs at least 2 MFs per input");
    }
    if (!std::isfinite(r.min) || !std::isfinite(r.max) || !(r.max > r.min)) {
      throw Error(ErrorCode::DegenerateRange, "input " + std::to_string(i) + " has min >= max",
                  i);
    }
    const double spacing = r.width() / static_cast<double>(count - 1);
    std::vector<BellMF> row;
    for (std::size_t j = 0; j < count; ++j) {
      const double center = j + 1 == count ? r.max : r.min + spacing * static_cast<double>(j);
      row.push_back({spacing / 2.0, 2.0, center});
    }
    mfs.push_back(std::move(row));
  }
  std::size_t rules = 1;
  for (auto c : mfs_per_input) rules *= c;
  std::vector<double> zeros(rules * (input_ranges.size() + 1), 0.0);
  return AnfisModel(std::move(mfs), {input_ranges.begin(), input_ranges.end()},
                    std::move(zeros));
}

std::size_t AnfisModel::premise_mf_count() const noexcept {
  std::size_t n = 0;
  for (const auto& row : mfs_) n += row.size();
  return n;
}

void AnfisModel::set_consequents(std::vector<double> values) {
  if (values.size() != linear_parameter_count()) {
    throw Error(ErrorCode::InvalidConfig,
                "expected " + std::to_string(linear_parameter_count()) + " consequents, got " +
                    std::to_string(values.size()));
  }
  consequents_ = std::move(values);
}

std::vector<double> AnfisModel::premise_vector() const {
  std::vector<double> out;
  out.reserve(nonlinear_parameter_count());
  for (const auto& row : mfs_) {
    for (const auto& mf : row) {
      out.push_back(mf.a);
      out.push_back(mf.b);
      out.push_back(mf.c);
    }
  }
  return out;
}

double AnfisModel::min_width(std::size_t input) const {
  return std::max(1e-9 * ranges_[input].width(), std::numeric_limits<double>::min());
}

void AnfisModel::set_premise_vector(std::span<const double> params) {
  if (params.size() != nonlinear_parameter_count()) {
    throw Error(ErrorCode::InvalidConfig, "premise vector has the wrong length");
  }
  std::size_t k = 0;
  for (std::size_t i = 0; i < mfs_.size(); ++i) {
    for (auto& mf : mfs_[i]) {
      mf.a = std::max(params[k++], min_width(i));
      mf.b = std::max(params[k++], 1.0);
      mf.c = params[k++];
    }
  }
}

void AnfisModel::forward_into(std::span<const double> x, ForwardTrace& trace) const {
  const std::size_t n = n_inputs();
  trace.mu.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    trace.mu[i].resize(mfs_[i].size());
    for (std::size_t j = 0; j < mfs_[i].size(); ++j) {
      trace.mu[i][j] = gbell_eval(x[i], mfs_[i][j]);
    }
  }
  trace.w.resize(rules_);
  trace.w_norm.resize(rules_);
  trace.f.resize(rules_);
  double w_sum = 0.0;
  for (std::size_t r = 0; r < rules_; ++r) {
    double w = trace.mu[0][rule_mf(r, 0)];
    for (std::size_t i = 1; i < n; ++i) w *= trace.mu[i][rule_mf(r, i)];
    trace.w[r] = w;
    w_sum += w;
  }
  trace.w_sum = w_sum;
  double y = 0.0;
  for (std::size_t r = 0; r < rules_; ++r) {
    trace.w_norm[r] = w_sum > 0.0 ? trace.w[r] / w_sum : 1.0 / static_cast<double>(rules_);
    const double* p = consequents_.data() + r * (n + 1);
    double f = 0.0;
    for (std::size_t k = 0; k < n; ++k) f += p[k] * x[k];
    f += p[n];
    trace.f[r] = f;
    y += trace.w_norm[r] * f;
  }
  trace.y = y;
}

ForwardTrace AnfisModel::forward(std::span<const double> x) const {
  ForwardTrace trace;
  forward_into(x, trace);
  return trace;
}

double AnfisModel::evaluate(std::span<const double> x) const { return forward(x).y; }

std::vector<double> row_inputs(const features::FeatureRow& row) {
  return {row.factor, row.y_lag168, row.y_lag24, row.y_now};
}

Batch to_batch(std::span<const features::FeatureRow> rows) {
  Batch batch;
  batch.n_inputs = features::kInputs;
  batch.inputs.reserve(rows.size() * features::kInputs);
  batch.targets.reserve(rows.size());
  for (const auto& row : rows) {
    if (!row.valid) continue;
    batch.inputs.insert(batch.inputs.end(), {row.factor, row.y_lag168, row.y_lag24, row.y_now});
    batch.targets.push_back(row.target);
  }
  return batch;
}

std::vector<InputRange> input_ranges(const Batch& batch) {
  if (batch.size() == 0) {
    throw Error(ErrorCode::EmptyBatch, "cannot take ranges of an empty batch");
  }
  std::vector<InputRange> out(batch.n_inputs);
  for (std::size_t i = 0; i < batch.n_inputs; ++i) {
    out[i] = {batch.row(0)[i], batch.row(0)[i]};
  }
  for (std::size_t s = 1; s < batch.size(); ++s) {
    auto x = batch.row(s);
    for (std::size_t i = 0; i < batch.n_inputs; ++i) {
      out[i].min = std::min(out[i].min, x[i]);
      out[i].max = std::max(out[i].max, x[i]);
    }
  }
  return out;
}

namespace {

void require_batch(const AnfisModel& model, const Batch& batch) {
  if (batch.size() == 0) {
    throw Error(ErrorCode::EmptyBatch, "batch has no rows");
  }
  if (batch.n_inputs != model.n_inputs()) {
    throw Error(ErrorCode::ArityMismatch, "batch has " + std::to_string(batch.n_inputs) +
                                              " inputs, model expects " +
                                              std::to_string(model.n_inputs()));
  }
}

}  // namespace

double sse(const AnfisModel& model, const Batch& batch) {
  require_batch(model, batch);
  ForwardTrace trace;
  double total = 0.0;
  for (std::size_t s = 0; s < batch.size(); ++s) {
    model.forward_into(batch.row(s), trace);
    const double e = trace.y - batch.targets[s];
    total += e * e;
  }
  return total;
}

double rmse(const AnfisModel& model, const Batch& batch) {
  return std::sqrt(sse(model, batch) / static_cast<double>(batch.size()));
}

AnfisModel fit_consequents(AnfisModel model, const Batch& batch) {
  require_batch(model, batch);
  const std::size_t n = model.n_inputs();
  const std::size_t cols = model.linear_parameter_count();
  Eigen::MatrixXd design(static_cast<Eigen::Index>(batch.size()), static_cast<Eigen::Index>(cols));
  Eigen::Map<const Eigen::VectorXd> rhs(batch.targets.data(),
                                        static_cast<Eigen::Index>(batch.size()));
  ForwardTrace trace;
  for (std::size_t s = 0; s < batch.size(); ++s) {
    auto x = batch.row(s);
    model.forward_into(x, trace);
    const auto row = static_cast<Eigen::Index>(s);
    for (std::size_t r = 0; r < model.rule_count(); ++r) {
      const auto base = static_cast<Eigen::Index>(r * (n + 1));
      for (std::size_t k = 0; k < n; ++k) {
        design(row, base + static_cast<Eigen::Index>(k)) = trace.w_norm[r] * x[k];
      }
      design(row, base + static_cast<Eigen::Index>(n)) = trace.w_norm[r];
    }
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
  Eigen::VectorXd solution = cod.solve(rhs);
  model.set_consequents({solution.data(), solution.data() + solution.size()});
  return model;
}

std::vector<double> premise_gradient(const AnfisModel& model, const Batch& batch) {
  require_batch(model, batch);
  const std::size_t n = model.n_inputs();
  const std::size_t rules = model.rule_count();

  // offset[i] = position of input i's first MF in premise_vector order / 3
  std::vector<std::size_t> offset(n, 0);
  for (std::size_t i = 1; i < n; ++i) offset[i] = offset[i - 1] + model.mfs()[i - 1].size();

  std::vector<double> grad(model.nonlinear_parameter_count(), 0.0);
  std::vector<double> d_mu(model.premise_mf_count());
  ForwardTrace trace;
  for (std::size_t s = 0; s < batch.size(); ++s) {
    auto x = batch.row(s);
    model.forward_into(x, trace);
    // The uniform fallback at zero total firing has no premise dependence.
    if (!(trace.w_sum > 0.0)) continue;
    const double err2 = 2.0 * (trace.y - batch.targets[s]);
    if (err2 == 0.0) continue;

    std::fill(d_mu.begin(), d_mu.end(), 0.0);
    for (std::size_t r = 0; r < rules; ++r) {
      // dE/dw_r = 2e * (f_r - y) / sum(w)
      const double d_w = err2 * (trace.f[r] - trace.y) / trace.w_sum;
      for (std::size_t i = 0; i < n; ++i) {
        double others = 1.0;
        for (std::size_t k = 0; k < n; ++k) {
          if (k != i) others *= trace.mu[k][model.rule_mf(r, k)];
        }
        d_mu[offset[i] + model.rule_mf(r, i)] += d_w * others;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < model.mfs()[i].size(); ++j) {
        const std::size_t m = offset[i] + j;
        if (d_mu[m] == 0.0) continue;
        const BellGrad g = gbell_grad(x[i], model.mfs()[i][j]);
        grad[3 * m] += d_mu[m] * g.da;
        grad[3 * m + 1] += d_mu[m] * g.db;
        grad[3 * m + 2] += d_mu[m] * g.dc;
      }
    }
  }
  return grad;
}

void TrainConfig::validate() const {
  if (!(step_decrease > 0.0 && step_decrease < 1.0 && step_increase > 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "need 0 < step_decrease < 1 < step_increase");
  }
  if (initial_step && !(*initial_step > 0.0 && std::isfinite(*initial_step))) {
    throw Error(ErrorCode::InvalidConfig, "initial_step must be positive");
  }
  if (!(error_tolerance >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "error_tolerance must be >= 0");
  }
}

double TrainConfig::resolve_initial_step(const AnfisModel& model) const {
  if (initial_step) return *initial_step;
  double total = 0.0;
  for (const auto& r : model.input_ranges()) total += r.width();
  return 0.01 * total / static_cast<double>(model.n_inputs());
}

namespace {
constexpr double kRoundoffFit = 1e-12;
}  // namespace

EpochResult train_epoch(const AnfisModel& model, const Batch& train_batch, double step) {
  AnfisModel fitted = fit_consequents(model, train_batch);
  const double train_rmse = rmse(fitted, train_batch);
  AnfisModel updated = fitted;
  // Residuals at round-off level carry no usable direction, and the
  // normalized step would otherwise amplify them to a full-length move.
  double target_power = 0.0;
  for (double t : train_batch.targets) target_power += t * t;
  const double target_rms = std::sqrt(target_power / static_cast<double>(train_batch.size()));
  const bool perfect_fit = train_rmse <= kRoundoffFit * target_rms;
  if (step > 0.0 && !perfect_fit) {
    const auto g = premise_gradient(fitted, train_batch);
    const double norm = std::sqrt(std::inner_product(g.begin(), g.end(), g.begin(), 0.0));
    if (norm > 0.0 && std::isfinite(norm)) {
      auto params = fitted.premise_vector();
      const double scale = step / norm;
      for (std::size_t k = 0; k < params.size(); ++k) params[k] -= scale * g[k];
      updated.set_premise_vector(params);
    }
  }
  return {std::move(fitted), std::move(updated), train_rmse};
}

double adapt_step(std::span<const double> history, double step, const TrainConfig& cfg) {
  if (history.size() < 4) return step;
  auto last = history.last(4);
  const double d0 = last[1] - last[0];
  const double d1 = last[2] - last[1];
  const double d2 = last[3] - last[2];
  if (d0 < 0.0 && d1 < 0.0 && d2 < 0.0) return step * cfg.step_increase;
  const bool down_up_down = d0 < 0.0 && d1 > 0.0 && d2 < 0.0;
  const bool up_down_up = d0 > 0.0 && d1 < 0.0 && d2 > 0.0;
  if (down_up_down || up_down_up) return step * cfg.step_decrease;
  return step;
}

TrainResult train(AnfisModel model, const Batch& train_batch, const Batch& check_batch,
                  const TrainConfig& cfg) {
  cfg.validate();
  require_batch(model, train_batch);
  require_batch(model, check_batch);

  TrainResult result{model, {}};
  double step = cfg.resolve_initial_step(model);
  double best_check = std::numeric_limits<double>::infinity();
  std::vector<double> train_errors;
  std::size_t window_start = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    EpochResult er = train_epoch(model, train_batch, step);
    const double check = rmse(er.fitted, check_batch);
    result.history.epochs.push_back({er.train_rmse, check, step});
    if (check < best_check || !result.history.best_epoch) {
      best_check = check;
      result.history.best_epoch = epoch;
      result.best_model = er.fitted;
    }
    if (er.train_rmse <= cfg.error_tolerance) break;
    model = std::move(er.updated);

    train_errors.push_back(er.train_rmse);
    const double next = adapt_step(std::span<const double>(train_errors).subspan(window_start),
                                   step, cfg);
    if (next != step) {
      step = next;
      window_start = train_errors.size();
    }
  }
  return result;
}

std::vector<std::optional<double>> predict_series(const AnfisModel& model,
                                                  const features::Dataset& dataset) {
  if (model.n_inputs() != features::kInputs) {
    throw Error(ErrorCode::ArityMismatch, "model expects " + std::to_string(model.n_inputs()) +
                                              " inputs, dataset rows carry 4");
  }
  std::vector<std::optional<double>> out(dataset.rows.size());
  ForwardTrace trace;
  for (std::size_t t = 0; t < dataset.rows.size(); ++t) {
    const auto& row = dataset.rows[t];
    if (!row.valid) continue;
    const double x[] = {row.factor, row.y_lag168, row.y_lag24, row.y_now};
    model.forward_into(x, trace);
    out[t] = trace.y;
  }
  return out;
}

}  // namespace rlc::anfis
