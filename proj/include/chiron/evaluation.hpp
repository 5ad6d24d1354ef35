#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "chiron/attack.hpp"
#include "chiron/baselines.hpp"
#include "chiron/chiron_model.hpp"
#include "chiron/rating_matrix.hpp"

namespace chiron {

/// Chiron behind the Recommender interface: builds both k-NN graphs on the
/// training matrix, then fits. tune() selects lambda1 on the validation grid
/// unless lambda1 is pinned; the choice is kept for all later fits.
class ChironRecommender final : public Recommender {
 public:
  struct Params {
    FitConfig fit;
    std::optional<double> lambda1;  // pinned value skips the grid search
    std::vector<double> grid = default_lambda_grid();
    int user_k = 10;
    int item_k = 10;
  };

  explicit ChironRecommender(Params params);

  std::string name() const override { return "chiron"; }
  Hyperparameters hyperparameters() const override;
  void tune(const RatingMatrix& train, const RatingMatrix& validation) override;
  void fit(const RatingMatrix& train) override;
  double predict(int user, int item) const override;

  double lambda1() const { return lambda1_; }
  bool tuned() const { return search_.has_value(); }
  const std::optional<LambdaSearch>& search() const { return search_; }
  const FitResult& result() const { return result_; }

 private:
  Params params_;
  double lambda1_;
  std::optional<LambdaSearch> search_;
  FitResult result_;
};

/// Hyperparameters of every registered method.
struct MethodSettings {
  ChironRecommender::Params chiron;
  int user_knn_k = 20;
  int item_knn_k = 20;
  RegSvdParams reg_svd;
  NmfParams nmf;
};

const std::vector<std::string>& method_names();

/// Throws std::invalid_argument for unknown names. `seed` replaces the seed
/// of stochastic methods.
std::unique_ptr<Recommender> make_method(const std::string& name, const MethodSettings& settings,
                                         std::uint64_t seed);

using MethodFactory = std::function<std::unique_ptr<Recommender>(std::uint64_t seed)>;

struct ExperimentConfig {
  std::string dataset = "dataset";
  SplitFractions fractions;
  std::uint64_t seed = 0;  // split and method streams
  int trials = 10;
  AttackSpec attack;       // attack.seed roots the attack streams
};

struct TrialResult {
  int trial = 0;
  std::uint64_t split_seed = 0;
  std::uint64_t attack_seed = 0;
  double mae_before = 0.0;
  double mae_after = 0.0;
  double rmse_before = 0.0;
  double rmse_after = 0.0;
  double prediction_shift = 0.0;
};

struct ExperimentReport {
  std::string method;
  std::string dataset;
  AttackSpec attack;
  std::vector<TrialResult> trials;
  double mae_before = 0.0;
  double mae_after = 0.0;
  double rmse_before = 0.0;
  double rmse_after = 0.0;
  double prediction_shift = 0.0;
  double wall_seconds = 0.0;

  double growth_pct() const { return 100.0 * (mae_after - mae_before) / mae_before; }
};

struct SweepPoint {
  double attack_size = 0.0;
  std::vector<double> mae_after;  // one per trial
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for one trial
};

struct SweepCurve {
  std::string method;
  std::string dataset;
  std::vector<double> mae_before;  // one per trial
  std::vector<SweepPoint> points;

  double spread() const;
};

/// Seeds of trial t: split and method seeds from config.seed, attack seed
/// from config.attack.seed, so changing the attack seed keeps every "before"
/// number identical.
std::uint64_t trial_split_seed(const ExperimentConfig& config, int trial);
std::uint64_t trial_method_seed(const ExperimentConfig& config, int trial);
std::uint64_t trial_attack_seed(const ExperimentConfig& config, int trial);

/// Per trial: split, fit clean train, score test; generate the attack from the
/// clean train, inject, refit from scratch, rescore the same test set.
ExperimentReport run_before_after(const std::string& method, const MethodFactory& factory,
                                  const RatingMatrix& ratings, const ExperimentConfig& config);

/// One clean fit per trial, then one attacked refit per size. Sizes must be
/// strictly increasing and inside (0, 1].
SweepCurve run_sweep(const std::string& method, const MethodFactory& factory,
                     const RatingMatrix& ratings, const ExperimentConfig& config,
                     const std::vector<double>& sizes);

/// Header plus one row per report.
void write_report_csv(std::ostream& out, const std::vector<ExperimentReport>& reports);
void write_trials_csv(std::ostream& out, const std::vector<ExperimentReport>& reports);
void write_sweep_csv(std::ostream& out, const std::vector<SweepCurve>& curves);
/// Fixed-width Before / After / Growth table.
void write_summary_table(std::ostream& out, const std::vector<ExperimentReport>& reports);

}  // namespace chiron
