#pragma once

#include <span>
#include <vector>

namespace gms {

struct LossConfig {
  double lambda1 = 1.0;  // MSE weight
  double lambda2 = 1.0;  // rank weight

  void validate() const;
};

/// A loss value and its gradient with respect to the predictions.
struct LossTerm {
  double value = 0.0;
  std::vector<double> grad;
};

struct LossValue {
  double total = 0.0;
  double mse = 0.0;
  double rank = 0.0;
  std::vector<double> grad;  // d total / d predictions
};

/// (1/n) sum (q - label)^2.
LossTerm mse_loss(std::span<const double> pred, std::span<const double> label);

/// Pairwise hinge rank loss averaged over all n^2 ordered pairs:
///   max(0, |q_a - q_b| - e(q_a, q_b) * (label_a - label_b)),
///   e = +1 if q_a >= q_b else -1.
/// Subgradient: 0 where the hinge argument is exactly 0, and sign(0) = +1 in
/// the |.| term. e is treated as a constant.
LossTerm rank_loss(std::span<const double> pred, std::span<const double> label);

LossValue combined_loss(std::span<const double> pred, std::span<const double> label, const LossConfig& cfg);

}  // namespace gms
