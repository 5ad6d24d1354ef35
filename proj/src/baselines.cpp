#include "chiron/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>

#include "chiron/rng.hpp"

namespace chiron {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Neighbor {
  double sim;
  int index;
  double value;
};

// keeps the k entries with the largest similarity (ties: lower index)
void keep_top(std::vector<Neighbor>& candidates, int k) {
  const auto keep = std::min<std::size_t>(static_cast<std::size_t>(k), candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                    candidates.end(), [](const Neighbor& a, const Neighbor& b) {
                      return a.sim != b.sim ? a.sim > b.sim : a.index < b.index;
                    });
  candidates.resize(keep);
}

std::string to_string(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

RatingMeans::RatingMeans(const RatingMatrix& ratings)
    : scale(ratings.scale()),
      global(ratings.empty() ? (ratings.scale().min_rating + ratings.scale().max_rating) / 2.0
                             : global_mean(ratings)),
      user(static_cast<std::size_t>(ratings.users()), kNaN),
      item(static_cast<std::size_t>(ratings.items()), kNaN),
      user_count(static_cast<std::size_t>(ratings.users()), 0),
      item_count(static_cast<std::size_t>(ratings.items()), 0) {
  for (int u = 0; u < ratings.users(); ++u) {
    if (auto m = user_mean(ratings, u)) user[static_cast<std::size_t>(u)] = *m;
    user_count[static_cast<std::size_t>(u)] = static_cast<std::int32_t>(ratings.by_user(u).size());
  }
  for (int i = 0; i < ratings.items(); ++i) {
    if (auto m = item_mean(ratings, i)) item[static_cast<std::size_t>(i)] = *m;
    item_count[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(ratings.by_item(i).size());
  }
}

double RatingMeans::user_or_global(int u) const {
  const double m = user[static_cast<std::size_t>(u)];
  return std::isnan(m) ? global : m;
}

double RatingMeans::item_or_global(int i) const {
  const double m = item[static_cast<std::size_t>(i)];
  return std::isnan(m) ? global : m;
}

// ---------------------------------------------------------------------------

void GlobalMean::fit(const RatingMatrix& train) { means_ = RatingMeans(train); }

double GlobalMean::predict(int, int) const { return means_.scale.clamp(means_.global); }

// ---------------------------------------------------------------------------

UserKnn::UserKnn(int k) : k_(k) {
  if (k < 1) throw std::invalid_argument("user_knn needs k >= 1");
}

Hyperparameters UserKnn::hyperparameters() const { return {{"k", std::to_string(k_)}}; }

void UserKnn::fit(const RatingMatrix& train) {
  train_ = train;
  means_ = RatingMeans(train);
  const LevelRows rows(train, Axis::users);
  sims_ = TriangularTable<float>(train.users(), [&](int a, int b) {
    const auto r = pearson_from_stats(rows.stats(a, b));
    return r ? static_cast<float>(*r) : std::numeric_limits<float>::quiet_NaN();
  });
}

double UserKnn::similarity(int a, int b) const {
  return a == b ? kNaN : static_cast<double>(sims_.at(a, b));
}

double UserKnn::predict(int user, int item) const {
  const double base = means_.user_or_global(user);
  std::vector<Neighbor> candidates;
  for (const Cell& c : train_.by_item(item)) {
    if (c.index == user) continue;
    const double s = similarity(user, c.index);
    if (std::isnan(s)) continue;
    candidates.push_back(Neighbor{s, c.index, c.rating - means_.user[static_cast<std::size_t>(c.index)]});
  }
  keep_top(candidates, k_);
  double num = 0.0;
  double den = 0.0;
  for (const Neighbor& n : candidates) {
    num += n.sim * n.value;
    den += std::abs(n.sim);
  }
  if (den <= 0.0) return means_.scale.clamp(base);
  return means_.scale.clamp(base + num / den);
}

// ---------------------------------------------------------------------------

ItemKnn::ItemKnn(int k) : k_(k) {
  if (k < 1) throw std::invalid_argument("item_knn needs k >= 1");
}

Hyperparameters ItemKnn::hyperparameters() const { return {{"k", std::to_string(k_)}}; }

void ItemKnn::fit(const RatingMatrix& train) {
  train_ = train;
  means_ = RatingMeans(train);
  std::vector<double> offsets(static_cast<std::size_t>(train.users()));
  for (int u = 0; u < train.users(); ++u) offsets[static_cast<std::size_t>(u)] = means_.user_or_global(u);
  const DeviationRows rows(train, Axis::items, offsets);
  // norms over each item's whole centered column, not just the co-raters, so
  // pairs with a handful of co-raters do not reach similarity 1
  std::vector<double> norms(static_cast<std::size_t>(train.items()), 0.0);
  for (int i = 0; i < train.items(); ++i) {
    for (const Cell& c : train.by_item(i)) {
      const double d = c.rating - offsets[static_cast<std::size_t>(c.index)];
      norms[static_cast<std::size_t>(i)] += d * d;
    }
  }
  sims_ = TriangularTable<float>(train.items(), [&](int a, int b) {
    const double denom = std::sqrt(norms[static_cast<std::size_t>(a)] * norms[static_cast<std::size_t>(b)]);
    const simd::MaskedCross x = rows.cross(a, b);
    if (!(denom > 0.0) || !(x.norm_a > 0.0) || !(x.norm_b > 0.0)) return std::numeric_limits<float>::quiet_NaN();
    return static_cast<float>(std::clamp(x.dot / denom, -1.0, 1.0));
  });
}

double ItemKnn::similarity(int a, int b) const {
  return a == b ? kNaN : static_cast<double>(sims_.at(a, b));
}

double ItemKnn::predict(int user, int item) const {
  std::vector<Neighbor> candidates;
  for (const Cell& c : train_.by_user(user)) {
    if (c.index == item) continue;
    const double s = similarity(item, c.index);
    if (!(s > 0.0)) continue;
    candidates.push_back(Neighbor{s, c.index, static_cast<double>(c.rating)});
  }
  keep_top(candidates, k_);
  double num = 0.0;
  double den = 0.0;
  for (const Neighbor& n : candidates) {
    num += n.sim * n.value;
    den += n.sim;
  }
  if (den <= 0.0) return means_.scale.clamp(means_.item_or_global(item));
  return means_.scale.clamp(num / den);
}

// ---------------------------------------------------------------------------

void SlopeOne::fit(const RatingMatrix& train) {
  train_ = train;
  means_ = RatingMeans(train);
  const LevelRows rows(train, Axis::items);
  table_ = TriangularTable<Record>(train.items(), [&](int a, int b) {
    const simd::CoStats s = rows.stats(a, b);
    if (s.count == 0) return Record{0.0f, 0};
    return Record{static_cast<float>(static_cast<double>(s.sum_a - s.sum_b) / static_cast<double>(s.count)),
                  static_cast<std::int32_t>(s.count)};
  });
}

std::pair<double, int> SlopeOne::deviation(int a, int b) const {
  if (a == b) return {0.0, 0};
  const Record& r = table_.at(a, b);
  return {a < b ? r.deviation : -r.deviation, r.count};
}

double SlopeOne::predict(int user, int item) const {
  double num = 0.0;
  double den = 0.0;
  for (const Cell& c : train_.by_user(user)) {
    if (c.index == item) continue;
    const auto [dev, count] = deviation(item, c.index);
    if (count == 0) continue;
    num += (dev + c.rating) * count;
    den += count;
  }
  if (den <= 0.0) return means_.scale.clamp(means_.item_or_global(item));
  return means_.scale.clamp(num / den);
}

// ---------------------------------------------------------------------------

RegularizedSvd::RegularizedSvd(RegSvdParams params) : params_(params) {
  if (params.rank < 0 || params.epochs < 0 || !(params.learning_rate > 0.0) || params.regularization < 0.0) {
    throw std::invalid_argument("invalid reg_svd hyperparameters");
  }
}

Hyperparameters RegularizedSvd::hyperparameters() const {
  return {{"rank", std::to_string(params_.rank)},
          {"lr", to_string(params_.learning_rate)},
          {"reg", to_string(params_.regularization)},
          {"epochs", std::to_string(params_.epochs)}};
}

double RegularizedSvd::raw_score(int user, int item) const {
  const auto r = static_cast<std::size_t>(params_.rank);
  const double* pu = user_factors_.data() + static_cast<std::size_t>(user) * r;
  const double* qi = item_factors_.data() + static_cast<std::size_t>(item) * r;
  double s = mu_ + user_bias_[static_cast<std::size_t>(user)] + item_bias_[static_cast<std::size_t>(item)];
  for (std::size_t f = 0; f < r; ++f) s += pu[f] * qi[f];
  return s;
}

double RegularizedSvd::training_loss(const RatingMatrix& train) const {
  double loss = 0.0;
  for (const Triple& t : train.triples()) {
    const double e = t.rating - raw_score(t.user, t.item);
    loss += e * e;
  }
  double penalty = 0.0;
  for (double b : user_bias_) penalty += b * b;
  for (double b : item_bias_) penalty += b * b;
  for (double v : user_factors_) penalty += v * v;
  for (double v : item_factors_) penalty += v * v;
  return loss + params_.regularization * penalty;
}

void RegularizedSvd::fit(const RatingMatrix& train) {
  scale_ = train.scale();
  mu_ = train.empty() ? (scale_.min_rating + scale_.max_rating) / 2.0 : global_mean(train);
  const auto r = static_cast<std::size_t>(params_.rank);
  user_bias_.assign(static_cast<std::size_t>(train.users()), 0.0);
  item_bias_.assign(static_cast<std::size_t>(train.items()), 0.0);
  Rng rng = make_rng(params_.seed, "reg_svd.init");
  std::normal_distribution<double> init(0.0, params_.init_stddev);
  user_factors_.resize(static_cast<std::size_t>(train.users()) * r);
  item_factors_.resize(static_cast<std::size_t>(train.items()) * r);
  for (double& v : user_factors_) v = init(rng);
  for (double& v : item_factors_) v = init(rng);

  std::vector<std::size_t> order(train.entries());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng = make_rng(params_.seed, "reg_svd.order");
  const double lr = params_.learning_rate;
  const double reg = params_.regularization;
  const auto triples = train.triples();
  loss_history_.clear();
  for (int epoch = 0; epoch < params_.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t idx : order) {
      const Triple& t = triples[idx];
      const auto u = static_cast<std::size_t>(t.user);
      const auto i = static_cast<std::size_t>(t.item);
      const double e = t.rating - raw_score(t.user, t.item);
      user_bias_[u] += lr * (e - reg * user_bias_[u]);
      item_bias_[i] += lr * (e - reg * item_bias_[i]);
      double* pu = user_factors_.data() + u * r;
      double* qi = item_factors_.data() + i * r;
      for (std::size_t f = 0; f < r; ++f) {
        const double p = pu[f];
        const double q = qi[f];
        pu[f] += lr * (e * q - reg * p);
        qi[f] += lr * (e * p - reg * q);
      }
    }
    const double loss = training_loss(train);
    if (!std::isfinite(loss)) {
      throw FitError("reg_svd diverged at epoch " + std::to_string(epoch + 1) +
                     " (non-finite loss); lower the learning rate");
    }
    loss_history_.push_back(loss);
  }
}

double RegularizedSvd::predict(int user, int item) const { return scale_.clamp(raw_score(user, item)); }

// ---------------------------------------------------------------------------

Nmf::Nmf(NmfParams params) : params_(params) {
  if (params.rank < 1 || params.epochs < 0 || !(params.floor > 0.0)) {
    throw std::invalid_argument("invalid nmf hyperparameters");
  }
}

Hyperparameters Nmf::hyperparameters() const {
  return {{"rank", std::to_string(params_.rank)}, {"epochs", std::to_string(params_.epochs)}};
}

double Nmf::reconstruction(int user, int item) const {
  const auto r = static_cast<std::size_t>(params_.rank);
  const double* wu = w_.data() + static_cast<std::size_t>(user) * r;
  const double* hi = h_.data() + static_cast<std::size_t>(item) * r;
  double s = 0.0;
  for (std::size_t f = 0; f < r; ++f) s += wu[f] * hi[f];
  return s;
}

double Nmf::min_factor() const {
  double lo = std::numeric_limits<double>::infinity();
  for (double v : w_) lo = std::min(lo, v);
  for (double v : h_) lo = std::min(lo, v);
  return lo;
}

void Nmf::fit(const RatingMatrix& train) {
  scale_ = train.scale();
  const auto r = static_cast<std::size_t>(params_.rank);
  const double mean = train.empty() ? (scale_.min_rating + scale_.max_rating) / 2.0 : global_mean(train);
  // E[w h] summed over rank terms starts near the global mean
  const double hi = 2.0 * std::sqrt(mean / static_cast<double>(r));
  Rng rng = make_rng(params_.seed, "nmf.init");
  std::uniform_real_distribution<double> init(0.0, hi);
  w_.resize(static_cast<std::size_t>(train.users()) * r);
  h_.resize(static_cast<std::size_t>(train.items()) * r);
  for (double& v : w_) v = std::max(init(rng), params_.floor);
  for (double& v : h_) v = std::max(init(rng), params_.floor);

  std::vector<double> numer(r);
  std::vector<double> denom(r);
  auto half_step = [&](std::vector<double>& target, const std::vector<double>& fixed, int rows, auto cells_of,
                       bool target_is_user) {
    for (int row = 0; row < rows; ++row) {
      auto cells = cells_of(row);
      if (cells.empty()) continue;
      std::fill(numer.begin(), numer.end(), 0.0);
      std::fill(denom.begin(), denom.end(), 0.0);
      double* t = target.data() + static_cast<std::size_t>(row) * r;
      for (const Cell& c : cells) {
        const double* f = fixed.data() + static_cast<std::size_t>(c.index) * r;
        const double approx = target_is_user ? reconstruction(row, c.index) : reconstruction(c.index, row);
        for (std::size_t k = 0; k < r; ++k) {
          numer[k] += c.rating * f[k];
          denom[k] += approx * f[k];
        }
      }
      for (std::size_t k = 0; k < r; ++k) {
        t[k] = std::max(t[k] * numer[k] / std::max(denom[k], params_.floor), params_.floor);
      }
    }
  };

  loss_history_.clear();
  for (int epoch = 0; epoch < params_.epochs; ++epoch) {
    half_step(w_, h_, train.users(), [&](int u) { return train.by_user(u); }, true);
    half_step(h_, w_, train.items(), [&](int i) { return train.by_item(i); }, false);
    double loss = 0.0;
    for (const Triple& t : train.triples()) {
      const double e = t.rating - reconstruction(t.user, t.item);
      loss += e * e;
    }
    loss_history_.push_back(loss);
  }
}

double Nmf::predict(int user, int item) const { return scale_.clamp(reconstruction(user, item)); }

}  // namespace chiron
