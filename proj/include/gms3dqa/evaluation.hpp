#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gms3dqa/model_io.hpp"

namespace gms {

/// Five-parameter monotone-plus-linear remap
///   yhat = b1 * (0.5 - 1 / (1 + exp(b2 * (y - b3)))) + b4 * y + b5.
struct LogisticParams {
  std::array<double, 5> beta{};
  bool converged = false;  // false: best iterate returned after the iteration cap
  int iterations = 0;
  double sse = 0.0;  // final sum of squared remap errors
};

double logistic_map(const std::array<double, 5>& beta, double y);

struct LogisticFitOptions {
  int max_iterations = 500;
  double step_tolerance = 1e-10;
  double initial_damping = 1e-3;
  /// When set, receives the sum of squares after every accepted step.
  std::vector<double>* sse_trace = nullptr;
};

/// Damped least squares (Levenberg-Marquardt) with a central-difference
/// Jacobian. Needs n >= 5 and labels that are not all equal.
LogisticParams fit_logistic(std::span<const double> y, std::span<const double> mos, const LogisticFitOptions& opts = {});

/// Average (1-based) ranks; ties receive the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> v);

/// 0 when either input has zero variance.
double pearson(std::span<const double> a, std::span<const double> b);
double spearman(std::span<const double> a, std::span<const double> b);
/// Tie-corrected Kendall tau-b in O(n log n); 0 when either input is constant.
double kendall_tau_b(std::span<const double> a, std::span<const double> b);

struct MetricsReport {
  double srcc = 0, plcc = 0, krcc = 0, rmse = 0;
  LogisticParams logistic;
  std::size_t n = 0;
};

/// SRCC and KRCC on raw predictions; PLCC and RMSE after the logistic remap.
MetricsReport compute_metrics(std::span<const double> predictions, std::span<const double> mos);

struct FoldPlan {
  int k = 0;
  std::vector<std::vector<std::string>> folds;  // content ids per fold
  std::vector<std::vector<std::size_t>> train;  // entry indices per fold
  std::vector<std::vector<std::size_t>> test;
};

/// Sorted content ids dealt round-robin into k folds; a shuffle seed
/// permutes the sorted ids first.
FoldPlan make_folds(const DatasetManifest& manifest, int k, std::optional<std::uint64_t> shuffle_seed = std::nullopt);

DatasetManifest subset(const DatasetManifest& manifest, std::span<const std::size_t> indices);

/// A trainable scorer the protocol runners drive.
class QualityModel {
 public:
  virtual ~QualityModel() = default;
  virtual void fit(const DatasetManifest& train) = 0;
  virtual std::vector<double> predict(const DatasetManifest& data) = 0;
};

/// Returns the labels themselves (upper bound for harness checks).
class OracleModel final : public QualityModel {
 public:
  explicit OracleModel(double sign = 1.0) : sign_(sign) {}
  void fit(const DatasetManifest&) override {}
  std::vector<double> predict(const DatasetManifest& data) override;

 private:
  double sign_;
};

using ModelFactory = std::function<std::unique_ptr<QualityModel>(int fold)>;

struct MeanMetrics {
  double srcc = 0, plcc = 0, krcc = 0, rmse = 0;
  std::size_t folds = 0;
};

MeanMetrics mean_of(std::span<const MetricsReport> reports);

struct CrossValidationReport {
  FoldPlan plan;
  std::vector<MetricsReport> folds;
  MeanMetrics mean;
};

/// Train on k-1 folds, score the held-out fold, for every fold. Folds run on
/// up to `threads` threads; results do not depend on it.
CrossValidationReport run_cross_validation(const DatasetManifest& manifest, int k, const ModelFactory& factory,
                                           int threads = 1,
                                           std::optional<std::uint64_t> shuffle_seed = std::nullopt);

/// Train once on all of `train_set`, then score each test fold of
/// make_folds(test_set, test_k) and average. test_k = 1 scores all of it.
CrossValidationReport run_cross_database(const DatasetManifest& train_set, const DatasetManifest& test_set,
                                         int test_k, const ModelFactory& factory);

}  // namespace gms
