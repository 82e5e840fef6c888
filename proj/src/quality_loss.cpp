#include "gms3dqa/quality_loss.hpp"

#include <cmath>
#include <string>

#include "gms3dqa/error.hpp"

namespace gms {

void LossConfig::validate() const {
  if (!(lambda1 >= 0) || !(lambda2 >= 0)) throw Error(Errc::InvalidConfig, "loss weights must be >= 0");
  if (lambda1 == 0 && lambda2 == 0) throw Error(Errc::InvalidConfig, "loss weights cannot both be 0");
}

namespace {

void check_batch(std::span<const double> pred, std::span<const double> label) {
  if (pred.size() != label.size()) {
    throw Error(Errc::LengthMismatch, "predictions " + std::to_string(pred.size()) + " vs labels " +
                                          std::to_string(label.size()));
  }
  if (pred.empty()) throw Error(Errc::EmptyBatch, "empty batch");
}

}  // namespace

LossTerm mse_loss(std::span<const double> pred, std::span<const double> label) {
  check_batch(pred, label);
  const auto n = static_cast<double>(pred.size());
  LossTerm out;
  out.grad.resize(pred.size());
  double sum = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = pred[i] - label[i];
    sum += r * r;
    out.grad[i] = 2.0 * r / n;
  }
  out.value = sum / n;
  return out;
}

LossTerm rank_loss(std::span<const double> pred, std::span<const double> label) {
  check_batch(pred, label);
  const std::size_t n = pred.size();
  const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  LossTerm out;
  out.grad.assign(n, 0.0);
  // Ordered pairs (a,b) and (b,a) are handled together; the diagonal is 0.
  double sum = 0;
  for (std::size_t a = 0; a < n; ++a) {
    double row = 0;
    for (std::size_t b = a + 1; b < n; ++b) {
      const double d = pred[a] - pred[b];
      const double dl = label[a] - label[b];
      if (d != 0.0) {
        // Both orderings share the hinge argument |d| - sign(d) * dl.
        const double s = d > 0 ? 1.0 : -1.0;
        const double h = std::abs(d) - s * dl;
        if (h > 0) {
          row += 2.0 * h;
          out.grad[a] += 2.0 * s;
          out.grad[b] -= 2.0 * s;
        }
      } else {
        // Tied predictions: e = +1 both ways, arguments -dl and +dl.
        if (-dl > 0) {
          row += -dl;
          out.grad[a] += 1.0;
          out.grad[b] -= 1.0;
        } else if (dl > 0) {
          row += dl;
          out.grad[b] += 1.0;
          out.grad[a] -= 1.0;
        }
      }
    }
    sum += row;
  }
  out.value = sum * scale;
  for (auto& g : out.grad) g *= scale;
  return out;
}

LossValue combined_loss(std::span<const double> pred, std::span<const double> label, const LossConfig& cfg) {
  cfg.validate();
  LossTerm mse = mse_loss(pred, label);
  LossTerm rank = rank_loss(pred, label);
  LossValue out;
  out.mse = mse.value;
  out.rank = rank.value;
  out.total = cfg.lambda1 * mse.value + cfg.lambda2 * rank.value;
  out.grad.resize(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) out.grad[i] = cfg.lambda1 * mse.grad[i] + cfg.lambda2 * rank.grad[i];
  return out;
}

}  // namespace gms
