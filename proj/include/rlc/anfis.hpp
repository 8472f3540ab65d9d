#pragma once

// First-order Takagi-Sugeno neuro-fuzzy system on a grid partition.
//
// Layers: generalized-bell memberships per input, product firing strength
// per rule, normalization, linear consequent per rule, weighted sum. The
// hybrid learner solves consequents by exact least squares and moves the
// premise (a, b, c) parameters by normalized gradient descent.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "rlc/features.hpp"

namespace rlc::anfis {

/// mu(x) = 1 / (1 + |(x - c) / a|^(2b))
struct BellMF {
  double a = 1.0;
  double b = 2.0;
  double c = 0.0;

  bool operator==(const BellMF&) const = default;
};

struct BellGrad {
  double da = 0.0;
  double db = 0.0;
  double dc = 0.0;
};

double gbell_eval(double x, const BellMF& mf);
/// Partials of gbell_eval; all zero at x == c.
BellGrad gbell_grad(double x, const BellMF& mf);

struct InputRange {
  double min = 0.0;
  double max = 0.0;

  double width() const noexcept { return max - min; }
  bool operator==(const InputRange&) const = default;
};

/// Per-layer values of one forward pass.
struct ForwardTrace {
  std::vector<std::vector<double>> mu;  // [input][mf]
  std::vector<double> w;                // firing strength per rule
  std::vector<double> w_norm;
  std::vector<double> f;                // linear output per rule
  double w_sum = 0.0;
  double y = 0.0;
};

class AnfisModel {
 public:
  /// `consequents` is rule-major, (n_inputs + 1) coefficients per rule with
  /// the constant term last. Rule r picks MF indices by mixed radix over the
  /// inputs, last input varying fastest.
  AnfisModel(std::vector<std::vector<BellMF>> mfs, std::vector<InputRange> input_ranges,
             std::vector<double> consequents);

  /// Equally spaced centers spanning each range, a = half the spacing,
  /// b = 2, zero consequents.
  static AnfisModel init_grid(std::span<const InputRange> input_ranges,
                              std::span<const std::size_t> mfs_per_input);

  std::size_t n_inputs() const noexcept { return mfs_.size(); }
  std::size_t rule_count() const noexcept { return rules_; }
  std::size_t linear_parameter_count() const noexcept { return rules_ * (n_inputs() + 1); }
  std::size_t nonlinear_parameter_count() const noexcept { return 3 * premise_mf_count(); }
  std::size_t premise_mf_count() const noexcept;

  const std::vector<std::vector<BellMF>>& mfs() const noexcept { return mfs_; }
  const std::vector<InputRange>& input_ranges() const noexcept { return ranges_; }
  std::span<const double> consequents() const noexcept { return consequents_; }
  double consequent(std::size_t rule, std::size_t k) const {
    return consequents_[rule * (n_inputs() + 1) + k];
  }
  void set_consequents(std::vector<double> values);

  /// MF index chosen by `rule` on `input`.
  std::size_t rule_mf(std::size_t rule, std::size_t input) const {
    return (rule / stride_[input]) % mfs_[input].size();
  }

  /// Premise parameters flattened input-major, then MF, then (a, b, c).
  std::vector<double> premise_vector() const;
  /// Inverse of premise_vector. Applies the a and b floors.
  void set_premise_vector(std::span<const double> params);
  /// Smallest admissible width for input i.
  double min_width(std::size_t input) const;

  ForwardTrace forward(std::span<const double> x) const;
  /// Same as forward(x), reusing the buffers in `trace`.
  void forward_into(std::span<const double> x, ForwardTrace& trace) const;
  double evaluate(std::span<const double> x) const;

  bool operator==(const AnfisModel&) const = default;

 private:
  std::vector<std::vector<BellMF>> mfs_;
  std::vector<InputRange> ranges_;
  std::vector<double> consequents_;
  std::vector<std::size_t> stride_;
  std::size_t rules_ = 0;
};

/// Dense input/target samples, row-major inputs.
struct Batch {
  std::size_t n_inputs = 0;
  std::vector<double> inputs;
  std::vector<double> targets;

  std::size_t size() const noexcept { return targets.size(); }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(inputs).subspan(i * n_inputs, n_inputs);
  }
};

/// Inputs in order (factor, Y(t-168), Y(t-24), Y(t)); target Y(t+24).
/// Invalid rows are skipped.
Batch to_batch(std::span<const features::FeatureRow> rows);
std::vector<double> row_inputs(const features::FeatureRow& row);
/// Per-input (min, max) over the batch.
std::vector<InputRange> input_ranges(const Batch& batch);

double sse(const AnfisModel& model, const Batch& batch);
double rmse(const AnfisModel& model, const Batch& batch);

/// Least-squares consequents for fixed premises; minimum-norm when the
/// design matrix is rank deficient.
AnfisModel fit_consequents(AnfisModel model, const Batch& batch);

/// d(SSE)/d(premise) in premise_vector order.
std::vector<double> premise_gradient(const AnfisModel& model, const Batch& batch);

struct TrainConfig {
  std::size_t epochs = 100;
  /// Displacement length of the first premise step. Unset means
  /// 0.01 x mean input range of the model being trained.
  std::optional<double> initial_step;
  double step_increase = 1.1;
  double step_decrease = 0.9;
  double error_tolerance = 0.0;

  /// Throws InvalidConfig.
  void validate() const;
  double resolve_initial_step(const AnfisModel& model) const;
  bool operator==(const TrainConfig&) const = default;
};

struct EpochResult {
  /// Input premises with least-squares consequents; train_rmse refers to this.
  AnfisModel fitted;
  /// `fitted` after one premise step.
  AnfisModel updated;
  double train_rmse = 0.0;
};

EpochResult train_epoch(const AnfisModel& model, const Batch& train_batch, double step);

/// Grows the step after four strictly decreasing errors, shrinks it after
/// four alternating ones, otherwise keeps it. `history` runs oldest to
/// newest and should start after the last adjustment.
double adapt_step(std::span<const double> history, double step, const TrainConfig& cfg);

struct EpochRecord {
  double train_rmse = 0.0;
  double check_rmse = 0.0;
  double step = 0.0;

  bool operator==(const EpochRecord&) const = default;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  /// Epoch with the lowest check_rmse (earliest on ties); empty when no
  /// epoch ran.
  std::optional<std::size_t> best_epoch;

  bool operator==(const TrainHistory&) const = default;
};

struct TrainResult {
  AnfisModel best_model;
  TrainHistory history;
};

TrainResult train(AnfisModel model, const Batch& train_batch, const Batch& check_batch,
                  const TrainConfig& cfg);

/// One estimate per dataset row; nullopt where the row is invalid.
std::vector<std::optional<double>> predict_series(const AnfisModel& model,
                                                  const features::Dataset& dataset);

}  // namespace rlc::anfis
