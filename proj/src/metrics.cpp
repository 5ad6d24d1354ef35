#include "chiron/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace chiron {
namespace {

void check(std::span<const double> predictions, std::span<const double> truth) {
  if (predictions.size() != truth.size()) throw std::invalid_argument("prediction/truth length mismatch");
  if (truth.empty()) throw std::invalid_argument("error metric over an empty test set");
}

}  // namespace

double mae(std::span<const double> predictions, std::span<const double> truth) {
  check(predictions, truth);
  double total = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) total += std::abs(predictions[k] - truth[k]);
  return total / static_cast<double>(truth.size());
}

double rmse(std::span<const double> predictions, std::span<const double> truth) {
  check(predictions, truth);
  double total = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const double d = predictions[k] - truth[k];
    total += d * d;
  }
  return std::sqrt(total / static_cast<double>(truth.size()));
}

}  // namespace chiron
