#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "chiron/rating_matrix.hpp"
#include "chiron/similarity_graph.hpp"

namespace chiron {

/// Row-stochastic profiles: row r is a distribution over the K rating levels.
class ProfileMatrix {
 public:
  ProfileMatrix() = default;
  ProfileMatrix(int rows, int levels, double fill);

  static ProfileMatrix uniform(int rows, int levels);

  int rows() const { return rows_; }
  int levels() const { return levels_; }

  double operator()(int r, int k) const { return values_[index(r, k)]; }
  double& operator()(int r, int k) { return values_[index(r, k)]; }
  std::span<const double> row(int r) const {
    return {values_.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(levels_),
            static_cast<std::size_t>(levels_)};
  }
  std::span<double> row(int r) {
    return {values_.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(levels_),
            static_cast<std::size_t>(levels_)};
  }
  std::span<const double> values() const { return values_; }

  /// Convergence residual: (1/rows) sum_r sum_k (a_rk - b_rk)^2.
  double mean_row_sq_diff(const ProfileMatrix& other) const;
  double max_abs_diff(const ProfileMatrix& other) const;
  /// Every row sums to 1 within `tolerance` and every entry is in [floor, 1].
  bool is_stochastic(double tolerance, double floor) const;

  bool operator==(const ProfileMatrix&) const = default;

 private:
  std::size_t index(int r, int k) const {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(levels_) + static_cast<std::size_t>(k);
  }

  int rows_ = 0;
  int levels_ = 0;
  std::vector<double> values_;
};

/// Projects a nonnegative row onto {x : sum x = 1, x >= floor}.
void project_to_floored_simplex(std::span<double> row, double floor);

/// Sign of the graph term in the objective. `as_written` adds the Laplacian
/// quadratic to the log-likelihood; `smoothing` subtracts it so neighbor
/// disagreement is penalized.
enum class RegSign { as_written, smoothing };

/// Which observed items enter the likelihood part of the fixed-point update
/// denominator for level k: only those rated k (`literal`), or every observed
/// item of the row (`all_observed`).
enum class DenominatorScope { literal, all_observed };

/// How the graph term's dependence on the entry being updated is treated.
/// `lagged` evaluates all of it at the previous sweep; `solved` keeps the
/// neighbors lagged but solves the entry's own equation exactly (a quadratic
/// in that entry). Before the row is renormalized the two share fixed points;
/// `lagged` can settle into a two-sweep cycle where `solved` converges.
enum class SelfTerm { lagged, solved };

std::string_view reg_sign_name(RegSign sign);
RegSign parse_reg_sign(std::string_view name);
std::string_view denominator_scope_name(DenominatorScope scope);
DenominatorScope parse_denominator_scope(std::string_view name);
std::string_view self_term_name(SelfTerm term);
SelfTerm parse_self_term(std::string_view name);

struct FitConfig {
  double epsilon = 1e-3;
  int max_sweeps = 50;
  int restarts = 3;
  RegSign reg_sign = RegSign::smoothing;
  DenominatorScope denominator_scope = DenominatorScope::all_observed;
  double floor = 1e-8;
  std::uint64_t seed = 0;
  SelfTerm self_term = SelfTerm::solved;
  double jitter_concentration = 50.0;

  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;
};

struct ChironModel {
  ProfileMatrix items;  // P: n x K
  ProfileMatrix users;  // Q: m x K
  double lambda1 = 0.5;
  RegSign reg_sign = RegSign::smoothing;
  double floor = 1e-8;
  SimilarityGraph user_graph;
  SimilarityGraph item_graph;
  RatingScale scale;

  int levels() const { return scale.levels(); }
  /// Checks profile shapes against the scale and graph sizes.
  void validate() const;
};

/// Distribution over rating levels for (item, user): normalized elementwise
/// product of the item and user profiles.
std::vector<double> theta(const ChironModel& model, int item, int user);
void theta_into(const ChironModel& model, int item, int user, std::span<double> out);

/// Sum over observed (item, user) pairs of log theta at the observed level.
double log_likelihood(const ChironModel& model, const RatingMatrix& ratings);

/// lambda1 * sum_k Q_k^T L^Q Q_k + (1 - lambda1) * sum_k P_k^T L^P P_k.
double graph_penalty(const ChironModel& model);

/// log_likelihood +/- graph_penalty according to model.reg_sign.
double regularized_objective(const ChironModel& model, const RatingMatrix& ratings);

/// Partial derivatives of regularized_objective with respect to one user or
/// item profile entry (the profile is treated as unconstrained).
double grad_q(const ChironModel& model, const RatingMatrix& ratings, int user, int level);
double grad_p(const ChironModel& model, const RatingMatrix& ratings, int item, int level);

/// One Jacobi pass of the closed-form user update, every right-hand side
/// evaluated at the current model. Rows are floored and projected back onto
/// the simplex.
ProfileMatrix update_q(const ChironModel& model, const RatingMatrix& ratings, const FitConfig& config);
/// Item counterpart of update_q.
ProfileMatrix update_p(const ChironModel& model, const RatingMatrix& ratings, const FitConfig& config);

struct SweepLog {
  int sweep = 0;
  double objective = 0.0;
  double q_residual = 0.0;
  double p_residual = 0.0;
};

struct RestartLog {
  bool converged = false;
  double objective = -std::numeric_limits<double>::infinity();
  std::vector<SweepLog> sweeps;
};

struct FitReport {
  int best_restart = 0;
  bool converged = false;
  int sweeps = 0;
  double objective = 0.0;
  std::vector<RestartLog> restarts;
};

struct FitResult {
  ChironModel model;
  FitReport report;
};

/// Alternates update_q / update_p from `config.restarts` starting points until
/// both mean squared row changes drop below epsilon (or max_sweeps), keeping
/// the run with the highest training objective.
FitResult fit(const RatingMatrix& ratings, const SimilarityGraph& user_graph,
              const SimilarityGraph& item_graph, double lambda1, const FitConfig& config);

/// Expected rating under theta, clamped to the scale.
double predict(const ChironModel& model, int user, int item);

struct LambdaSearch {
  double best = 0.0;
  std::vector<std::pair<double, double>> validation_mae;  // (lambda1, MAE)
};

std::vector<double> default_lambda_grid();

/// Picks lambda1 by validation MAE; ties keep the smaller lambda1.
LambdaSearch select_lambda1(const RatingMatrix& train, const RatingMatrix& validation,
                            const SimilarityGraph& user_graph, const SimilarityGraph& item_graph,
                            const FitConfig& config, std::span<const double> grid);

}  // namespace chiron
