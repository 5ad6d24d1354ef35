#include "chiron/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "chiron/metrics.hpp"
#include "chiron/rng.hpp"
#include "chiron/similarity_graph.hpp"

namespace chiron {
namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

struct Scores {
  std::vector<double> predictions;
  double mae = 0.0;
  double rmse = 0.0;
};

Scores score(const Recommender& model, const RatingMatrix& test) {
  Scores s;
  std::vector<double> truth;
  s.predictions.reserve(test.entries());
  truth.reserve(test.entries());
  for (const Triple& t : test.triples()) {
    s.predictions.push_back(model.predict(t.user, t.item));
    truth.push_back(t.rating);
  }
  s.mae = mae(s.predictions, truth);
  s.rmse = rmse(s.predictions, truth);
  return s;
}

std::vector<int> test_users(const RatingMatrix& test) {
  std::vector<int> users;
  for (int u = 0; u < test.users(); ++u) {
    if (!test.by_user(u).empty()) users.push_back(u);
  }
  return users;
}

std::vector<double> target_predictions(const Recommender& model, const std::vector<int>& users,
                                       const std::vector<int>& targets) {
  std::vector<double> out;
  out.reserve(users.size() * targets.size());
  for (int u : users) {
    for (int i : targets) out.push_back(model.predict(u, i));
  }
  return out;
}

double mean_shift(const std::vector<double>& before, const std::vector<double>& after) {
  if (before.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t n = 0; n < before.size(); ++n) s += after[n] - before[n];
  return s / static_cast<double>(before.size());
}

void check_no_leakage(const RatingMatrix& test, const InjectedRatings& injected) {
  for (int a : injected.attacker_users) {
    if (a < test.users() && !test.by_user(a).empty()) {
      throw std::logic_error("attacker user " + std::to_string(a) + " appears in the test set");
    }
  }
}

template <class Fn>
void with_context(const std::string& method, int trial, Fn&& fn) {
  try {
    fn();
  } catch (const FitError& e) {
    throw FitError(method + " (trial " + std::to_string(trial) + "): " + e.what());
  }
}

struct CleanTrial {
  DatasetSplit split;
  std::unique_ptr<Recommender> model;
  Scores before;
  std::vector<int> users;
};

CleanTrial run_clean(const std::string& method, const MethodFactory& factory, const RatingMatrix& ratings,
                     const ExperimentConfig& config, int trial) {
  CleanTrial c;
  c.split = split(ratings, config.fractions, trial_split_seed(config, trial));
  c.model = factory(trial_method_seed(config, trial));
  with_context(method, trial, [&] {
    c.model->tune(c.split.train, c.split.validation);
    c.model->fit(c.split.train);
  });
  c.before = score(*c.model, c.split.test);
  c.users = test_users(c.split.test);
  return c;
}

struct AttackedTrial {
  Scores after;
  double shift = 0.0;
  AttackSpec spec;
};

AttackedTrial run_attacked(const std::string& method, CleanTrial& clean, AttackSpec spec, int trial) {
  AttackedTrial a;
  const AttackProfileSet profiles = generate(spec, clean.split.train);
  a.spec = profiles.spec;
  const InjectedRatings injected = inject(clean.split.train, profiles);
  check_no_leakage(clean.split.test, injected);
  const auto before_targets = target_predictions(*clean.model, clean.users, a.spec.target_items);
  with_context(method, trial, [&] { clean.model->fit(injected.ratings); });
  a.after = score(*clean.model, clean.split.test);
  a.shift = mean_shift(before_targets, target_predictions(*clean.model, clean.users, a.spec.target_items));
  return a;
}

}  // namespace

ChironRecommender::ChironRecommender(Params params)
    : params_(std::move(params)), lambda1_(params_.lambda1.value_or(0.5)) {
  params_.fit.validate();
  if (params_.lambda1 && !(*params_.lambda1 >= 0.0 && *params_.lambda1 <= 1.0)) {
    throw std::invalid_argument("lambda1 must lie in [0, 1]");
  }
  if (params_.grid.empty()) throw std::invalid_argument("lambda1 grid is empty");
}

Hyperparameters ChironRecommender::hyperparameters() const {
  return {{"lambda1", fmt("%g", lambda1_)},
          {"lambda1_source", params_.lambda1 ? "pinned" : (search_ ? "validation" : "default")},
          {"reg_sign", std::string(reg_sign_name(params_.fit.reg_sign))},
          {"denominator_scope", std::string(denominator_scope_name(params_.fit.denominator_scope))},
          {"user_k", std::to_string(params_.user_k)},
          {"item_k", std::to_string(params_.item_k)}};
}

void ChironRecommender::tune(const RatingMatrix& train, const RatingMatrix& validation) {
  if (params_.lambda1 || search_) return;
  const SimilarityGraph ug = build_graph(train, Axis::users, params_.user_k);
  const SimilarityGraph ig = build_graph(train, Axis::items, params_.item_k);
  search_ = select_lambda1(train, validation, ug, ig, params_.fit, params_.grid);
  lambda1_ = search_->best;
}

void ChironRecommender::fit(const RatingMatrix& train) {
  const SimilarityGraph ug = build_graph(train, Axis::users, params_.user_k);
  const SimilarityGraph ig = build_graph(train, Axis::items, params_.item_k);
  result_ = chiron::fit(train, ug, ig, lambda1_, params_.fit);
}

double ChironRecommender::predict(int user, int item) const { return chiron::predict(result_.model, user, item); }

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names = {"chiron",    "user_knn", "item_knn",   "slope_one",
                                                 "reg_svd",   "nmf",      "global_mean"};
  return names;
}

std::unique_ptr<Recommender> make_method(const std::string& name, const MethodSettings& settings,
                                         std::uint64_t seed) {
  if (name == "chiron") {
    ChironRecommender::Params p = settings.chiron;
    p.fit.seed = seed;
    return std::make_unique<ChironRecommender>(std::move(p));
  }
  if (name == "user_knn") return std::make_unique<UserKnn>(settings.user_knn_k);
  if (name == "item_knn") return std::make_unique<ItemKnn>(settings.item_knn_k);
  if (name == "slope_one") return std::make_unique<SlopeOne>();
  if (name == "reg_svd") {
    RegSvdParams p = settings.reg_svd;
    p.seed = seed;
    return std::make_unique<RegularizedSvd>(p);
  }
  if (name == "nmf") {
    NmfParams p = settings.nmf;
    p.seed = seed;
    return std::make_unique<Nmf>(p);
  }
  if (name == "global_mean") return std::make_unique<GlobalMean>();
  throw std::invalid_argument("unknown method '" + name + "'");
}

std::uint64_t trial_split_seed(const ExperimentConfig& config, int trial) {
  return derive_seed(config.seed, "split", static_cast<std::uint64_t>(trial));
}

std::uint64_t trial_method_seed(const ExperimentConfig& config, int trial) {
  return derive_seed(config.seed, "method", static_cast<std::uint64_t>(trial));
}

std::uint64_t trial_attack_seed(const ExperimentConfig& config, int trial) {
  return derive_seed(config.attack.seed, "attack", static_cast<std::uint64_t>(trial));
}

ExperimentReport run_before_after(const std::string& method, const MethodFactory& factory,
                                  const RatingMatrix& ratings, const ExperimentConfig& config) {
  if (config.trials < 1) throw std::invalid_argument("trials must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.method = method;
  report.dataset = config.dataset;
  for (int t = 0; t < config.trials; ++t) {
    CleanTrial clean = run_clean(method, factory, ratings, config, t);
    AttackSpec spec = config.attack;
    spec.seed = trial_attack_seed(config, t);
    const AttackedTrial attacked = run_attacked(method, clean, spec, t);
    if (t == 0) report.attack = attacked.spec;
    report.trials.push_back(TrialResult{t, clean.split.seed, spec.seed, clean.before.mae, attacked.after.mae,
                                        clean.before.rmse, attacked.after.rmse, attacked.shift});
  }
  const double n = static_cast<double>(report.trials.size());
  for (const TrialResult& r : report.trials) {
    report.mae_before += r.mae_before / n;
    report.mae_after += r.mae_after / n;
    report.rmse_before += r.rmse_before / n;
    report.rmse_after += r.rmse_after / n;
    report.prediction_shift += r.prediction_shift / n;
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

double SweepCurve::spread() const {
  if (points.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(points.begin(), points.end(),
                                            [](const SweepPoint& a, const SweepPoint& b) { return a.mean < b.mean; });
  return hi->mean - lo->mean;
}

SweepCurve run_sweep(const std::string& method, const MethodFactory& factory, const RatingMatrix& ratings,
                     const ExperimentConfig& config, const std::vector<double>& sizes) {
  if (config.trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (sizes.empty()) throw std::invalid_argument("sweep needs at least one attack size");
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    if (!(sizes[s] > 0.0 && sizes[s] <= 1.0)) throw std::invalid_argument("attack sizes must lie in (0, 1]");
    if (s > 0 && !(sizes[s] > sizes[s - 1])) throw std::invalid_argument("attack sizes must be strictly increasing");
  }
  SweepCurve curve;
  curve.method = method;
  curve.dataset = config.dataset;
  curve.points.resize(sizes.size());
  for (std::size_t s = 0; s < sizes.size(); ++s) curve.points[s].attack_size = sizes[s];
  for (int t = 0; t < config.trials; ++t) {
    CleanTrial clean = run_clean(method, factory, ratings, config, t);
    curve.mae_before.push_back(clean.before.mae);
    for (std::size_t s = 0; s < sizes.size(); ++s) {
      AttackSpec spec = config.attack;
      spec.attack_size = sizes[s];
      spec.seed = trial_attack_seed(config, t);
      curve.points[s].mae_after.push_back(run_attacked(method, clean, spec, t).after.mae);
    }
  }
  for (SweepPoint& p : curve.points) {
    const double n = static_cast<double>(p.mae_after.size());
    p.mean = std::accumulate(p.mae_after.begin(), p.mae_after.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : p.mae_after) ss += (v - p.mean) * (v - p.mean);
    p.stddev = p.mae_after.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  }
  return curve;
}

void write_report_csv(std::ostream& out, const std::vector<ExperimentReport>& reports) {
  out << "method,dataset,trials,mae_before,mae_after,growth_pct,rmse_before,rmse_after\n";
  for (const ExperimentReport& r : reports) {
    out << r.method << ',' << r.dataset << ',' << r.trials.size() << ',' << fmt("%.6f", r.mae_before) << ','
        << fmt("%.6f", r.mae_after) << ',' << fmt("%.4f", r.growth_pct()) << ',' << fmt("%.6f", r.rmse_before)
        << ',' << fmt("%.6f", r.rmse_after) << '\n';
  }
}

void write_trials_csv(std::ostream& out, const std::vector<ExperimentReport>& reports) {
  out << "method,dataset,trial,split_seed,attack_seed,mae_before,mae_after,rmse_before,rmse_after,"
         "prediction_shift\n";
  for (const ExperimentReport& r : reports) {
    for (const TrialResult& t : r.trials) {
      out << r.method << ',' << r.dataset << ',' << t.trial << ',' << t.split_seed << ',' << t.attack_seed << ','
          << fmt("%.6f", t.mae_before) << ',' << fmt("%.6f", t.mae_after) << ',' << fmt("%.6f", t.rmse_before)
          << ',' << fmt("%.6f", t.rmse_after) << ',' << fmt("%.6f", t.prediction_shift) << '\n';
    }
  }
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepCurve>& curves) {
  out << "method,attack_size,mae_after_mean,mae_after_stddev\n";
  for (const SweepCurve& c : curves) {
    for (const SweepPoint& p : c.points) {
      out << c.method << ',' << fmt("%g", p.attack_size) << ',' << fmt("%.6f", p.mean) << ','
          << fmt("%.6f", p.stddev) << '\n';
    }
  }
}

void write_summary_table(std::ostream& out, const std::vector<ExperimentReport>& reports) {
  char line[128];
  std::snprintf(line, sizeof line, "%-12s %8s %8s %8s %10s\n", "method", "Before", "After", "Growth", "Shift");
  out << line;
  for (const ExperimentReport& r : reports) {
    std::snprintf(line, sizeof line, "%-12s %8.4f %8.4f %7.1f%% %10.4f\n", r.method.c_str(), r.mae_before,
                  r.mae_after, r.growth_pct(), r.prediction_shift);
    out << line;
  }
}

}  // namespace chiron
