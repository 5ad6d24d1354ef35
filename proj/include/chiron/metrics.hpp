#pragma once

#include <span>

namespace chiron {

/// Mean absolute error. Throws std::invalid_argument on empty or misaligned input.
double mae(std::span<const double> predictions, std::span<const double> truth);
/// Root mean squared error, same preconditions as mae.
double rmse(std::span<const double> predictions, std::span<const double> truth);

}  // namespace chiron
