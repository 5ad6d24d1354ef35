#pragma once

#include <filesystem>

#include "chiron/chiron_model.hpp"

namespace chiron {

/// Text format: a `chiron-model 1` header, `scale`, `lambda1`, `reg_sign`,
/// `floor`, then `P <rows> <K>` and `Q <rows> <K>` blocks with one profile
/// row per line. Values are printed with 17 significant digits, so a
/// save/load cycle is exact.
void save_model(const std::filesystem::path& path, const ChironModel& model);

/// Graphs are not stored; the loaded model carries edgeless graphs of the
/// right sizes, which is all prediction needs.
ChironModel load_model(const std::filesystem::path& path);

}  // namespace chiron
