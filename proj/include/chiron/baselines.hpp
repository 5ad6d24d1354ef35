#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "chiron/dense_rows.hpp"
#include "chiron/rating_matrix.hpp"

namespace chiron {

using Hyperparameters = std::vector<std::pair<std::string, std::string>>;

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shared fit/predict contract. After fit, predict(u, i) returns a value in
/// the rating scale for every in-range pair, including pairs with no data.
class Recommender {
 public:
  virtual ~Recommender() = default;

  virtual std::string name() const = 0;
  virtual Hyperparameters hyperparameters() const = 0;

  /// Hyperparameter selection on clean data. Called at most once, before the
  /// first fit; later fits reuse whatever it chose.
  virtual void tune(const RatingMatrix& /*train*/, const RatingMatrix& /*validation*/) {}
  virtual void fit(const RatingMatrix& train) = 0;
  virtual double predict(int user, int item) const = 0;
};

/// Means used by every fallback chain.
struct RatingMeans {
  RatingScale scale;
  double global = 0.0;
  std::vector<double> user;  // NaN for users without ratings
  std::vector<double> item;  // NaN for items without ratings
  std::vector<std::int32_t> user_count;
  std::vector<std::int32_t> item_count;

  explicit RatingMeans(const RatingMatrix& ratings);
  RatingMeans() = default;
  double user_or_global(int user) const;
  double item_or_global(int item) const;
};

/// Predicts the training global mean everywhere.
class GlobalMean final : public Recommender {
 public:
  std::string name() const override { return "global_mean"; }
  Hyperparameters hyperparameters() const override { return {}; }
  void fit(const RatingMatrix& train) override;
  double predict(int user, int item) const override;

 private:
  RatingMeans means_;
};

/// Mean-centered user-user kNN over Pearson similarity.
class UserKnn final : public Recommender {
 public:
  explicit UserKnn(int k = 20);

  std::string name() const override { return "user_knn"; }
  Hyperparameters hyperparameters() const override;
  void fit(const RatingMatrix& train) override;
  double predict(int user, int item) const override;

  /// NaN when undefined or a == b.
  double similarity(int a, int b) const;

 private:
  int k_;
  RatingMatrix train_;
  RatingMeans means_;
  TriangularTable<float> sims_;
};

/// Item-item kNN over adjusted cosine similarity: ratings centered on each
/// user's mean, cosine of the full centered item columns.
class ItemKnn final : public Recommender {
 public:
  explicit ItemKnn(int k = 20);

  std::string name() const override { return "item_knn"; }
  Hyperparameters hyperparameters() const override;
  void fit(const RatingMatrix& train) override;
  double predict(int user, int item) const override;

  double similarity(int a, int b) const;

 private:
  int k_;
  RatingMatrix train_;
  RatingMeans means_;
  TriangularTable<float> sims_;
};

/// Weighted Slope One.
class SlopeOne final : public Recommender {
 public:
  std::string name() const override { return "slope_one"; }
  Hyperparameters hyperparameters() const override { return {}; }
  void fit(const RatingMatrix& train) override;
  double predict(int user, int item) const override;

  /// Mean of (r_a - r_b) over users who rated both; 0 with count 0 when none.
  std::pair<double, int> deviation(int a, int b) const;

 private:
  struct Record {
    float deviation;  // a - b for a < b
    std::int32_t count;
  };
  RatingMatrix train_;
  RatingMeans means_;
  TriangularTable<Record> table_;
};

struct RegSvdParams {
  int rank = 10;
  double learning_rate = 0.005;
  double regularization = 0.02;
  int epochs = 100;
  double init_stddev = 0.1;
  std::uint64_t seed = 0;
};

/// Biased latent-factor model trained by stochastic gradient descent on the
/// observed squared error with L2 regularization.
class RegularizedSvd final : public Recommender {
 public:
  explicit RegularizedSvd(RegSvdParams params = {});

  std::string name() const override { return "reg_svd"; }
  Hyperparameters hyperparameters() const override;
  void fit(const RatingMatrix& train) override;
  double predict(int user, int item) const override;

  /// Regularized training loss after each epoch.
  const std::vector<double>& loss_history() const { return loss_history_; }
  double raw_score(int user, int item) const;

 private:
  double training_loss(const RatingMatrix& train) const;

  RegSvdParams params_;
  RatingScale scale_;
  double mu_ = 0.0;
  std::vector<double> user_bias_;
  std::vector<double> item_bias_;
  std::vector<double> user_factors_;  // m x rank
  std::vector<double> item_factors_;  // n x rank
  std::vector<double> loss_history_;
};

struct NmfParams {
  int rank = 10;
  int epochs = 200;
  double floor = 1e-9;
  std::uint64_t seed = 0;
};

/// Nonnegative factorization of the observed entries by masked multiplicative updates.
class Nmf final : public Recommender {
 public:
  explicit Nmf(NmfParams params = {});

  std::string name() const override { return "nmf"; }
  Hyperparameters hyperparameters() const override;
  void fit(const RatingMatrix& train) override;
  double predict(int user, int item) const override;

  /// Observed squared reconstruction error after each epoch.
  const std::vector<double>& loss_history() const { return loss_history_; }
  double reconstruction(int user, int item) const;
  double min_factor() const;

 private:
  NmfParams params_;
  RatingScale scale_;
  std::vector<double> w_;  // m x rank
  std::vector<double> h_;  // n x rank
  std::vector<double> loss_history_;
};

}  // namespace chiron
