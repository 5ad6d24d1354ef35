#include "chiron/chiron_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "chiron/metrics.hpp"
#include "chiron/rng.hpp"

namespace chiron {

ProfileMatrix::ProfileMatrix(int rows, int levels, double fill)
    : rows_(rows), levels_(levels),
      values_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(levels), fill) {
  if (rows < 0 || levels < 1) throw std::invalid_argument("invalid profile matrix shape");
}

ProfileMatrix ProfileMatrix::uniform(int rows, int levels) {
  return ProfileMatrix(rows, levels, 1.0 / levels);
}

double ProfileMatrix::mean_row_sq_diff(const ProfileMatrix& other) const {
  if (other.rows_ != rows_ || other.levels_ != levels_) throw std::invalid_argument("profile shape mismatch");
  if (rows_ == 0) return 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < values_.size(); ++k) {
    const double d = values_[k] - other.values_[k];
    total += d * d;
  }
  return total / rows_;
}

double ProfileMatrix::max_abs_diff(const ProfileMatrix& other) const {
  if (other.rows_ != rows_ || other.levels_ != levels_) throw std::invalid_argument("profile shape mismatch");
  double worst = 0.0;
  for (std::size_t k = 0; k < values_.size(); ++k) worst = std::max(worst, std::abs(values_[k] - other.values_[k]));
  return worst;
}

bool ProfileMatrix::is_stochastic(double tolerance, double floor) const {
  for (int r = 0; r < rows_; ++r) {
    double sum = 0.0;
    for (double v : row(r)) {
      if (!(v >= floor) || v > 1.0) return false;
      sum += v;
    }
    if (std::abs(sum - 1.0) > tolerance) return false;
  }
  return true;
}

void project_to_floored_simplex(std::span<double> row, double floor) {
  const std::size_t k = row.size();
  if (k == 0) return;
  if (floor * static_cast<double>(k) >= 1.0) throw std::invalid_argument("floor too large for the simplex");
  for (double& v : row) {
    if (!std::isfinite(v) || v < floor) v = std::isinf(v) && v > 0 ? 1.0 : floor;
  }
  std::vector<bool> pinned(k, false);
  for (std::size_t pass = 0; pass <= k; ++pass) {
    double free_sum = 0.0;
    std::size_t pinned_count = 0;
    for (std::size_t c = 0; c < k; ++c) {
      if (pinned[c]) ++pinned_count;
      else free_sum += row[c];
    }
    const double target = 1.0 - static_cast<double>(pinned_count) * floor;
    if (free_sum <= 0.0) {
      for (double& v : row) v = 1.0 / static_cast<double>(k);
      return;
    }
    const double scale = target / free_sum;
    bool changed = false;
    for (std::size_t c = 0; c < k; ++c) {
      if (pinned[c]) continue;
      row[c] *= scale;
      if (row[c] < floor) {
        row[c] = floor;
        pinned[c] = true;
        changed = true;
      }
    }
    if (!changed) return;
  }
}

std::string_view reg_sign_name(RegSign sign) {
  return sign == RegSign::as_written ? "as-written" : "smoothing";
}

RegSign parse_reg_sign(std::string_view name) {
  if (name == "as-written" || name == "as_written") return RegSign::as_written;
  if (name == "smoothing") return RegSign::smoothing;
  throw std::invalid_argument("unknown reg_sign '" + std::string(name) + "'");
}

std::string_view denominator_scope_name(DenominatorScope scope) {
  return scope == DenominatorScope::literal ? "literal" : "all-observed";
}

DenominatorScope parse_denominator_scope(std::string_view name) {
  if (name == "literal") return DenominatorScope::literal;
  if (name == "all-observed" || name == "all_observed") return DenominatorScope::all_observed;
  throw std::invalid_argument("unknown denominator_scope '" + std::string(name) + "'");
}

std::string_view self_term_name(SelfTerm term) { return term == SelfTerm::lagged ? "lagged" : "solved"; }

SelfTerm parse_self_term(std::string_view name) {
  if (name == "lagged") return SelfTerm::lagged;
  if (name == "solved") return SelfTerm::solved;
  throw std::invalid_argument("unknown self_term '" + std::string(name) + "'");
}

void FitConfig::validate() const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  if (max_sweeps < 1) throw std::invalid_argument("max_sweeps must be >= 1");
  if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
  if (!(floor > 0.0) || floor >= 0.01) throw std::invalid_argument("floor must be in (0, 0.01)");
  if (!(jitter_concentration > 0.0)) throw std::invalid_argument("jitter_concentration must be > 0");
}

void ChironModel::validate() const {
  const int k = levels();
  if (items.levels() != k || users.levels() != k) throw std::invalid_argument("profile levels do not match scale");
  if (user_graph.size() != users.rows()) throw std::invalid_argument("user graph does not match user count");
  if (item_graph.size() != items.rows()) throw std::invalid_argument("item graph does not match item count");
  if (!(lambda1 >= 0.0 && lambda1 <= 1.0)) throw std::invalid_argument("lambda1 must be in [0, 1]");
}

namespace {

double pair_normalizer(const ChironModel& model, int item, int user) {
  const auto p = model.items.row(item);
  const auto q = model.users.row(user);
  double s = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) s += p[k] * q[k];
  return s;
}

double sign_of(RegSign sign) { return sign == RegSign::as_written ? 1.0 : -1.0; }

}  // namespace

void theta_into(const ChironModel& model, int item, int user, std::span<double> out) {
  const auto p = model.items.row(item);
  const auto q = model.users.row(user);
  double s = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    out[k] = p[k] * q[k];
    s += out[k];
  }
  if (!(s >= model.floor * model.floor * static_cast<double>(p.size()))) {
    throw std::domain_error("degenerate profiles for item " + std::to_string(item) + ", user " +
                            std::to_string(user));
  }
  for (std::size_t k = 0; k < p.size(); ++k) out[k] /= s;
}

std::vector<double> theta(const ChironModel& model, int item, int user) {
  std::vector<double> out(static_cast<std::size_t>(model.levels()));
  theta_into(model, item, user, out);
  return out;
}

double log_likelihood(const ChironModel& model, const RatingMatrix& ratings) {
  const int min_rating = ratings.scale().min_rating;
  double total = 0.0;
  for (const Triple& t : ratings.triples()) {
    const int k = t.rating - min_rating;
    total += std::log(model.items(t.item, k)) + std::log(model.users(t.user, k)) -
             std::log(pair_normalizer(model, t.item, t.user));
  }
  return total;
}

namespace {

// sum over edges of w (x_a - x_b)^2 for every level, each edge once; the
// pairwise form avoids the cancellation in x' (D - W) x
double pairwise_penalty(const SimilarityGraph& graph, const ProfileMatrix& m) {
  double total = 0.0;
  for (int a = 0; a < graph.size(); ++a) {
    for (const Edge& e : graph.neighbors(a)) {
      if (e.neighbor < a) continue;
      for (int k = 0; k < m.levels(); ++k) {
        const double d = m(a, k) - m(e.neighbor, k);
        total += e.weight * d * d;
      }
    }
  }
  return total;
}

}  // namespace

double graph_penalty(const ChironModel& model) {
  return model.lambda1 * pairwise_penalty(model.user_graph, model.users) +
         (1.0 - model.lambda1) * pairwise_penalty(model.item_graph, model.items);
}

double regularized_objective(const ChironModel& model, const RatingMatrix& ratings) {
  return log_likelihood(model, ratings) + sign_of(model.reg_sign) * graph_penalty(model);
}

double grad_q(const ChironModel& model, const RatingMatrix& ratings, int user, int level) {
  const int min_rating = ratings.scale().min_rating;
  const double q = model.users(user, level);
  double g = 0.0;
  for (const Cell& c : ratings.by_user(user)) {
    if (c.rating - min_rating == level) g += 1.0 / q;
    g -= model.items(c.index, level) / pair_normalizer(model, c.index, user);
  }
  const double lq = model.user_graph.laplacian_row(user, model.users.values(),
                                                   static_cast<std::size_t>(model.levels()),
                                                   static_cast<std::size_t>(level));
  return g + sign_of(model.reg_sign) * model.lambda1 * 2.0 * lq;
}

double grad_p(const ChironModel& model, const RatingMatrix& ratings, int item, int level) {
  const int min_rating = ratings.scale().min_rating;
  const double p = model.items(item, level);
  double g = 0.0;
  for (const Cell& c : ratings.by_item(item)) {
    if (c.rating - min_rating == level) g += 1.0 / p;
    g -= model.users(c.index, level) / pair_normalizer(model, item, c.index);
  }
  const double lp = model.item_graph.laplacian_row(item, model.items.values(),
                                                   static_cast<std::size_t>(model.levels()),
                                                   static_cast<std::size_t>(level));
  return g + sign_of(model.reg_sign) * (1.0 - model.lambda1) * 2.0 * lp;
}

namespace {

// Closed-form update of one side. `target` is the profile being updated
// (Q for users), `other` the fixed side; `cells_of(r)` lists (other index,
// rating) for row r; `normalizer(r, o)` is sum_l target_rl * other_ol.
template <class CellsOf>
ProfileMatrix fixed_point_update(const ProfileMatrix& target, const ProfileMatrix& other,
                                 const SimilarityGraph& graph, double weight, RegSign reg_sign,
                                 int min_rating, CellsOf cells_of, const FitConfig& config) {
  const int levels = target.levels();
  const auto stride = static_cast<std::size_t>(levels);
  const double floor = config.floor;
  // the graph term enters the denominator with the opposite sign of the objective
  const double reg_coeff = -sign_of(reg_sign) * weight;

  ProfileMatrix next(target.rows(), levels, 0.0);
  std::vector<double> numer(stride), denom_rated(stride), denom_all(stride);
  for (int r = 0; r < target.rows(); ++r) {
    std::fill(numer.begin(), numer.end(), 0.0);
    std::fill(denom_rated.begin(), denom_rated.end(), 0.0);
    std::fill(denom_all.begin(), denom_all.end(), 0.0);
    const auto t = target.row(r);
    for (const Cell& c : cells_of(r)) {
      const auto o = other.row(c.index);
      double s = 0.0;
      for (std::size_t k = 0; k < stride; ++k) s += t[k] * o[k];
      const auto level = static_cast<std::size_t>(c.rating - min_rating);
      for (std::size_t k = 0; k < stride; ++k) denom_all[k] += o[k] / s;
      numer[level] += o[level];
      denom_rated[level] += o[level] / s;
    }
    auto out = next.row(r);
    for (std::size_t k = 0; k < stride; ++k) {
      if (numer[k] <= 0.0) {
        out[k] = floor;
        continue;
      }
      const double likelihood_part =
          config.denominator_scope == DenominatorScope::literal ? denom_rated[k] : denom_all[k];
      const double graph_part = graph.laplacian_row(r, target.values(), stride, k);
      out[k] = std::max(numer[k] / std::max(likelihood_part + reg_coeff * graph_part, floor), floor);
      if (config.self_term == SelfTerm::solved && reg_coeff != 0.0 && graph.degree(r) > 0.0) {
        // q (b + a q) = N with a = c d and b = likelihood - c * sum_t w q_t
        const double a = reg_coeff * graph.degree(r);
        const double b = likelihood_part - reg_coeff * (graph.degree(r) * t[k] - graph_part);
        const double disc = b * b + 4.0 * a * numer[k];
        if (disc >= 0.0) {
          const double root_den = b + std::sqrt(disc);
          if (root_den > 0.0) out[k] = std::max(2.0 * numer[k] / root_den, floor);
        }
      }
    }
    project_to_floored_simplex(out, floor);
  }
  return next;
}

}  // namespace

ProfileMatrix update_q(const ChironModel& model, const RatingMatrix& ratings, const FitConfig& config) {
  return fixed_point_update(model.users, model.items, model.user_graph, model.lambda1, model.reg_sign,
                            ratings.scale().min_rating,
                            [&](int j) { return ratings.by_user(j); }, config);
}

ProfileMatrix update_p(const ChironModel& model, const RatingMatrix& ratings, const FitConfig& config) {
  return fixed_point_update(model.items, model.users, model.item_graph, 1.0 - model.lambda1,
                            model.reg_sign, ratings.scale().min_rating,
                            [&](int i) { return ratings.by_item(i); }, config);
}

namespace {

void jitter_rows(ProfileMatrix& profile, double concentration, double floor, Rng& rng) {
  std::gamma_distribution<double> gamma(concentration, 1.0);
  for (int r = 0; r < profile.rows(); ++r) {
    auto row = profile.row(r);
    for (double& v : row) v = gamma(rng);
    project_to_floored_simplex(row, floor);
  }
}

}  // namespace

FitResult fit(const RatingMatrix& ratings, const SimilarityGraph& user_graph,
              const SimilarityGraph& item_graph, double lambda1, const FitConfig& config) {
  config.validate();
  const int levels = ratings.scale().levels();

  FitResult best;
  best.report.objective = -std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < config.restarts; ++restart) {
    ChironModel model;
    model.items = ProfileMatrix::uniform(ratings.items(), levels);
    model.users = ProfileMatrix::uniform(ratings.users(), levels);
    model.lambda1 = lambda1;
    model.reg_sign = config.reg_sign;
    model.floor = config.floor;
    model.user_graph = user_graph;
    model.item_graph = item_graph;
    model.scale = ratings.scale();
    model.validate();
    if (restart > 0) {
      Rng rng = make_rng(config.seed, "restart", static_cast<std::uint64_t>(restart));
      jitter_rows(model.users, config.jitter_concentration, config.floor, rng);
      jitter_rows(model.items, config.jitter_concentration, config.floor, rng);
    }

    RestartLog log;
    for (int sweep = 1; sweep <= config.max_sweeps; ++sweep) {
      ProfileMatrix q_next = update_q(model, ratings, config);
      const double q_residual = q_next.mean_row_sq_diff(model.users);
      model.users = std::move(q_next);
      ProfileMatrix p_next = update_p(model, ratings, config);
      const double p_residual = p_next.mean_row_sq_diff(model.items);
      model.items = std::move(p_next);
      log.sweeps.push_back(SweepLog{sweep, regularized_objective(model, ratings), q_residual, p_residual});
      if (q_residual < config.epsilon && p_residual < config.epsilon) {
        log.converged = true;
        break;
      }
    }
    log.objective = log.sweeps.empty() ? regularized_objective(model, ratings) : log.sweeps.back().objective;

    const bool better = restart == 0 || log.objective > best.report.objective;
    best.report.restarts.push_back(log);
    if (better) {
      best.model = std::move(model);
      best.report.best_restart = restart;
      best.report.converged = log.converged;
      best.report.sweeps = static_cast<int>(log.sweeps.size());
      best.report.objective = log.objective;
    }
  }
  return best;
}

double predict(const ChironModel& model, int user, int item) {
  const auto p = model.items.row(item);
  const auto q = model.users.row(user);
  double expected = 0.0;
  double s = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double w = p[k] * q[k];
    expected += w * model.scale.rating_of(static_cast<int>(k));
    s += w;
  }
  return model.scale.clamp(expected / s);
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid;
  for (int k = 0; k <= 10; ++k) grid.push_back(k / 10.0);
  return grid;
}

LambdaSearch select_lambda1(const RatingMatrix& train, const RatingMatrix& validation,
                            const SimilarityGraph& user_graph, const SimilarityGraph& item_graph,
                            const FitConfig& config, std::span<const double> grid) {
  if (grid.empty()) throw std::invalid_argument("empty lambda1 grid");
  if (validation.empty()) throw std::invalid_argument("lambda1 selection needs validation ratings");
  std::vector<double> truth;
  truth.reserve(validation.entries());
  for (const Triple& t : validation.triples()) truth.push_back(t.rating);

  LambdaSearch search;
  double best_mae = std::numeric_limits<double>::infinity();
  std::vector<double> predictions(validation.entries());
  for (double lambda1 : grid) {
    const FitResult result = fit(train, user_graph, item_graph, lambda1, config);
    std::size_t k = 0;
    for (const Triple& t : validation.triples()) predictions[k++] = predict(result.model, t.user, t.item);
    const double err = mae(predictions, truth);
    search.validation_mae.emplace_back(lambda1, err);
    if (err < best_mae) {
      best_mae = err;
      search.best = lambda1;
    }
  }
  return search;
}

}  // namespace chiron
