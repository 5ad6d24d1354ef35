#include "app.hpp"

#include <CLI11.hpp>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "chiron/model_io.hpp"
#include "chiron/metrics.hpp"
#include "chiron/similarity_graph.hpp"

namespace chiron::app {
namespace {

namespace pt = boost::property_tree;

struct DefaultKey {
  const char* path;
  const char* value;
};

// order here is the order of the echoed config
constexpr DefaultKey kDefaults[] = {
    {"data.path", ""},
    {"data.format", "tsv"},
    {"data.min_rating", "1"},
    {"data.max_rating", "5"},
    {"data.name", "dataset"},
    {"split.train", "0.8"},
    {"split.validation", "0.1"},
    {"split.test", "0.1"},
    {"split.seed", "0"},
    {"experiment.methods", "chiron,user_knn,item_knn,slope_one,reg_svd,nmf"},
    {"experiment.trials", "10"},
    {"experiment.output", "out"},
    {"chiron.lambda1", ""},
    {"chiron.grid", "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1"},
    {"chiron.epsilon", "0.001"},
    {"chiron.max_sweeps", "50"},
    {"chiron.restarts", "3"},
    {"chiron.reg_sign", "smoothing"},
    {"chiron.denominator_scope", "all-observed"},
    {"chiron.self_term", "solved"},
    {"chiron.floor", "1e-08"},
    {"chiron.jitter_concentration", "50"},
    {"chiron.user_k", "10"},
    {"chiron.item_k", "10"},
    {"user_knn.k", "20"},
    {"item_knn.k", "20"},
    {"reg_svd.rank", "10"},
    {"reg_svd.lr", "0.005"},
    {"reg_svd.reg", "0.02"},
    {"reg_svd.epochs", "100"},
    {"reg_svd.init_stddev", "0.1"},
    {"nmf.rank", "10"},
    {"nmf.epochs", "200"},
    {"nmf.floor", "1e-09"},
    {"attack.model", "average"},
    {"attack.size", "1"},
    {"attack.filler_size", ""},
    {"attack.targets", ""},
    {"attack.target_count", "20"},
    {"attack.popular", ""},
    {"attack.popular_count", "10"},
    {"attack.seed", "0"},
    {"sweep.sizes", "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1"},
};

void log(const std::string& line) { std::cerr << "[chiron] " << line << '\n'; }

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

pt::ptree defaults_tree() {
  pt::ptree tree;
  for (const DefaultKey& k : kDefaults) tree.put(k.path, k.value);
  return tree;
}

void set_checked(pt::ptree& tree, const std::string& path, const std::string& value) {
  if (std::count(path.begin(), path.end(), '.') != 1 || !tree.get_child_optional(path)) {
    throw ConfigError("unknown config key '" + path + "'");
  }
  tree.put(path, value);
}

pt::ptree merged_tree(const std::optional<std::filesystem::path>& path, const std::vector<std::string>& overrides) {
  pt::ptree tree = defaults_tree();
  if (path) {
    pt::ptree file;
    try {
      pt::read_ini(path->string(), file);
    } catch (const pt::ini_parser_error& e) {
      throw ConfigError(e.what());
    }
    for (const auto& [section, keys] : file) {
      if (keys.empty()) throw ConfigError(path->string() + ": key '" + section + "' outside any section");
      for (const auto& [key, value] : keys) set_checked(tree, section + "." + key, value.data());
    }
    // data paths in a file are relative to that file
    const std::filesystem::path data = tree.get<std::string>("data.path");
    if (!data.empty() && data.is_relative()) {
      tree.put("data.path", (path->parent_path() / data).lexically_normal().string());
    }
  }
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not section.key=value");
    set_checked(tree, o.substr(0, eq), o.substr(eq + 1));
  }
  const std::filesystem::path data = tree.get<std::string>("data.path");
  if (!data.empty()) tree.put("data.path", std::filesystem::absolute(data).lexically_normal().string());
  return tree;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  std::string text(const std::string& key) const { return tree_.get<std::string>(key); }

  double real(const std::string& key) const { return parse_real(key, text(key)); }

  long long integer(const std::string& key) const { return parse_integer(key, text(key)); }

  std::optional<double> optional_real(const std::string& key) const {
    const std::string v = text(key);
    return v.empty() ? std::nullopt : std::optional<double>(parse_real(key, v));
  }

  std::optional<long long> optional_integer(const std::string& key) const {
    const std::string v = text(key);
    return v.empty() ? std::nullopt : std::optional<long long>(parse_integer(key, v));
  }

  std::vector<double> reals(const std::string& key) const {
    std::vector<double> out;
    for (const std::string& v : split_list(text(key))) out.push_back(parse_real(key, v));
    return out;
  }

  std::vector<int> integers(const std::string& key) const {
    std::vector<int> out;
    for (const std::string& v : split_list(text(key))) out.push_back(static_cast<int>(parse_integer(key, v)));
    return out;
  }

  template <class Fn>
  auto choice(const std::string& key, Fn&& parse) const {
    try {
      return parse(text(key));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(key + ": " + e.what());
    }
  }

 private:
  static double parse_real(const std::string& key, const std::string& v) {
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used == v.size()) return d;
    } catch (const std::exception&) {
    }
    throw ConfigError(key + ": '" + v + "' is not a number");
  }

  static long long parse_integer(const std::string& key, const std::string& v) {
    try {
      std::size_t used = 0;
      const long long n = std::stoll(v, &used);
      if (used == v.size()) return n;
    } catch (const std::exception&) {
    }
    throw ConfigError(key + ": '" + v + "' is not an integer");
  }

  const pt::ptree& tree_;
};

RunConfig from_tree(const pt::ptree& tree) {
  const Reader r(tree);
  RunConfig c;
  c.data_path = r.text("data.path");
  c.format = r.choice("data.format", [](const std::string& v) { return parse_file_format(v); });
  try {
    c.scale = RatingScale::make(static_cast<int>(r.integer("data.min_rating")),
                                static_cast<int>(r.integer("data.max_rating")));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("data scale: ") + e.what());
  }
  c.dataset = r.text("data.name");

  c.fractions = SplitFractions{r.real("split.train"), r.real("split.validation"), r.real("split.test")};
  c.seed = static_cast<std::uint64_t>(r.integer("split.seed"));

  c.methods = split_list(r.text("experiment.methods"));
  for (const std::string& m : c.methods) {
    if (std::find(method_names().begin(), method_names().end(), m) == method_names().end()) {
      throw ConfigError("experiment.methods: unknown method '" + m + "'");
    }
  }
  c.trials = static_cast<int>(r.integer("experiment.trials"));
  if (c.trials < 1) throw ConfigError("experiment.trials must be >= 1");
  c.output = r.text("experiment.output");

  ChironRecommender::Params& ch = c.settings.chiron;
  ch.lambda1 = r.optional_real("chiron.lambda1");
  ch.grid = r.reals("chiron.grid");
  ch.fit.epsilon = r.real("chiron.epsilon");
  ch.fit.max_sweeps = static_cast<int>(r.integer("chiron.max_sweeps"));
  ch.fit.restarts = static_cast<int>(r.integer("chiron.restarts"));
  ch.fit.reg_sign = r.choice("chiron.reg_sign", [](const std::string& v) { return parse_reg_sign(v); });
  ch.fit.denominator_scope =
      r.choice("chiron.denominator_scope", [](const std::string& v) { return parse_denominator_scope(v); });
  ch.fit.self_term = r.choice("chiron.self_term", [](const std::string& v) { return parse_self_term(v); });
  ch.fit.floor = r.real("chiron.floor");
  ch.fit.jitter_concentration = r.real("chiron.jitter_concentration");
  ch.user_k = static_cast<int>(r.integer("chiron.user_k"));
  ch.item_k = static_cast<int>(r.integer("chiron.item_k"));
  try {
    ch.fit.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("chiron: ") + e.what());
  }

  c.settings.user_knn_k = static_cast<int>(r.integer("user_knn.k"));
  c.settings.item_knn_k = static_cast<int>(r.integer("item_knn.k"));
  c.settings.reg_svd.rank = static_cast<int>(r.integer("reg_svd.rank"));
  c.settings.reg_svd.learning_rate = r.real("reg_svd.lr");
  c.settings.reg_svd.regularization = r.real("reg_svd.reg");
  c.settings.reg_svd.epochs = static_cast<int>(r.integer("reg_svd.epochs"));
  c.settings.reg_svd.init_stddev = r.real("reg_svd.init_stddev");
  c.settings.nmf.rank = static_cast<int>(r.integer("nmf.rank"));
  c.settings.nmf.epochs = static_cast<int>(r.integer("nmf.epochs"));
  c.settings.nmf.floor = r.real("nmf.floor");

  c.attack.model = r.choice("attack.model", [](const std::string& v) { return parse_attack_model(v); });
  c.attack.attack_size = r.real("attack.size");
  if (auto f = r.optional_integer("attack.filler_size")) c.attack.filler_size = static_cast<int>(*f);
  c.attack.target_items = r.integers("attack.targets");
  c.attack.popular_items = r.integers("attack.popular");
  c.attack.target_count = static_cast<int>(r.integer("attack.target_count"));
  c.attack.popular_count = static_cast<int>(r.integer("attack.popular_count"));
  c.attack.seed = static_cast<std::uint64_t>(r.integer("attack.seed"));

  c.sweep_sizes = r.reals("sweep.sizes");

  // constructing each method once surfaces bad hyperparameters as config errors
  for (const std::string& m : c.methods) {
    try {
      make_method(m, c.settings, 0);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(m + ": " + e.what());
    }
  }
  return c;
}

RatingMatrix load_ratings(const RunConfig& config) {
  if (config.data_path.empty()) throw ConfigError("data.path is not set");
  log("reading " + config.data_path.string());
  return parse_ratings(config.data_path, config.format, config.scale);
}

ExperimentConfig experiment_of(const RunConfig& config) {
  ExperimentConfig e;
  e.dataset = config.dataset;
  e.fractions = config.fractions;
  e.seed = config.seed;
  e.trials = config.trials;
  e.attack = config.attack;
  return e;
}

MethodFactory factory_of(const RunConfig& config, const std::string& method) {
  return [&config, method](std::uint64_t seed) { return make_method(method, config.settings, seed); };
}

template <class Fn>
void write_file(const std::filesystem::path& path, Fn&& fn) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  fn(out);
}

}  // namespace

std::string default_config_text() {
  std::ostringstream out;
  pt::write_ini(out, defaults_tree());
  return out.str();
}

RunConfig load_config(const std::optional<std::filesystem::path>& path, const std::vector<std::string>& overrides) {
  return from_tree(merged_tree(path, overrides));
}

std::string resolved_config_text(const std::optional<std::filesystem::path>& path,
                                 const std::vector<std::string>& overrides) {
  std::ostringstream out;
  pt::write_ini(out, merged_tree(path, overrides));
  return out.str();
}

void cmd_ingest(const RunConfig& config, std::ostream& out) {
  const RatingMatrix ratings = load_ratings(config);
  const double cells = static_cast<double>(ratings.users()) * ratings.items();
  out << "users    " << ratings.users() << '\n'
      << "items    " << ratings.items() << '\n'
      << "entries  " << ratings.entries() << '\n'
      << "density  " << fmt("%.4f", cells > 0 ? 100.0 * static_cast<double>(ratings.entries()) / cells : 0.0)
      << "%\n"
      << "mean     " << (ratings.empty() ? std::string("n/a") : fmt("%.4f", global_mean(ratings))) << '\n';
}

void cmd_fit(const RunConfig& config) {
  const RatingMatrix ratings = load_ratings(config);
  const ExperimentConfig e = experiment_of(config);
  const DatasetSplit parts = split(ratings, config.fractions, trial_split_seed(e, 0));
  ChironRecommender model([&] {
    ChironRecommender::Params p = config.settings.chiron;
    p.fit.seed = trial_method_seed(e, 0);
    return p;
  }());
  if (config.settings.chiron.lambda1) {
    log("lambda1 pinned to " + fmt("%g", *config.settings.chiron.lambda1) + "; grid search skipped");
  } else {
    log("selecting lambda1 on the validation split");
  }
  model.tune(parts.train, parts.validation);
  if (const auto& search = model.search()) {
    for (const auto& [lambda, err] : search->validation_mae) {
      log("  lambda1 " + fmt("%.2f", lambda) + "  validation MAE " + fmt("%.6f", err));
    }
    log("selected lambda1 = " + fmt("%g", search->best));
    write_file(config.output / "lambda_search.csv", [&](std::ostream& out) {
      out << "lambda1,validation_mae\n";
      for (const auto& [lambda, err] : search->validation_mae) out << fmt("%g", lambda) << ',' << fmt("%.6f", err) << '\n';
    });
  }
  model.fit(parts.train);
  const FitReport& report = model.result().report;
  log("best restart " + std::to_string(report.best_restart) + ": " +
      (report.converged ? "converged" : "not converged") + " after " + std::to_string(report.sweeps) +
      " sweeps, objective " + fmt("%.6f", report.objective));

  std::vector<double> predicted, truth;
  for (const Triple& t : parts.test.triples()) {
    predicted.push_back(model.predict(t.user, t.item));
    truth.push_back(t.rating);
  }
  if (!predicted.empty()) {
    log("test MAE " + fmt("%.6f", mae(predicted, truth)) + ", RMSE " + fmt("%.6f", rmse(predicted, truth)));
  }

  save_model(config.output / "model.txt", model.result().model);
  write_id_map(config.output / "user_ids.tsv", ratings.user_ids());
  write_id_map(config.output / "item_ids.tsv", ratings.item_ids());
  write_file(config.output / "fit_log.csv", [&](std::ostream& out) {
    out << "restart,sweep,objective,q_residual,p_residual,converged\n";
    for (std::size_t r = 0; r < report.restarts.size(); ++r) {
      const RestartLog& run = report.restarts[r];
      for (const SweepLog& s : run.sweeps) {
        const bool last = &s == &run.sweeps.back();
        out << r << ',' << s.sweep << ',' << fmt("%.6f", s.objective) << ',' << fmt("%.6e", s.q_residual) << ','
            << fmt("%.6e", s.p_residual) << ',' << (last && run.converged ? 1 : 0) << '\n';
      }
    }
  });
  log("wrote " + (config.output / "model.txt").string());
}

void cmd_attack(const RunConfig& config) {
  const RatingMatrix ratings = load_ratings(config);
  const ExperimentConfig e = experiment_of(config);
  {
    const DatasetSplit parts = split(ratings, config.fractions, trial_split_seed(e, 0));
    AttackSpec spec = config.attack;
    spec.seed = trial_attack_seed(e, 0);
    write_profiles(config.output / "attack_profiles.tsv", parts.train, generate(spec, parts.train), config.format);
  }
  std::vector<ExperimentReport> reports;
  for (const std::string& method : config.methods) {
    log("attack: " + method + ", " + std::to_string(config.trials) + " trials");
    reports.push_back(run_before_after(method, factory_of(config, method), ratings, e));
    const ExperimentReport& r = reports.back();
    log("  MAE " + fmt("%.4f", r.mae_before) + " -> " + fmt("%.4f", r.mae_after) + " (" + fmt("%+.2f", r.growth_pct()) +
        "%), " + fmt("%.1f", r.wall_seconds) + "s");
    // rewritten after every method so a later failure keeps earlier rows
    write_file(config.output / "report.csv", [&](std::ostream& out) { write_report_csv(out, reports); });
    write_file(config.output / "trials.csv", [&](std::ostream& out) { write_trials_csv(out, reports); });
    write_file(config.output / "summary.txt", [&](std::ostream& out) { write_summary_table(out, reports); });
  }
  write_summary_table(std::cerr, reports);
}

void cmd_sweep(const RunConfig& config) {
  const RatingMatrix ratings = load_ratings(config);
  const ExperimentConfig e = experiment_of(config);
  std::vector<SweepCurve> curves;
  for (const std::string& method : config.methods) {
    log("sweep: " + method + ", " + std::to_string(config.sweep_sizes.size()) + " sizes x " +
        std::to_string(config.trials) + " trials");
    const auto start = std::chrono::steady_clock::now();
    curves.push_back(run_sweep(method, factory_of(config, method), ratings, e, config.sweep_sizes));
    log("  spread " + fmt("%.4f", curves.back().spread()) + ", " +
        fmt("%.1f", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()) + "s");
    write_file(config.output / "sweep.csv", [&](std::ostream& out) { write_sweep_csv(out, curves); });
    write_file(config.output / "sweep_trials.csv", [&](std::ostream& out) {
      out << "method,attack_size,trial,mae_before,mae_after\n";
      for (const SweepCurve& c : curves) {
        for (const SweepPoint& p : c.points) {
          for (std::size_t t = 0; t < p.mae_after.size(); ++t) {
            out << c.method << ',' << fmt("%g", p.attack_size) << ',' << t << ',' << fmt("%.6f", c.mae_before[t])
                << ',' << fmt("%.6f", p.mae_after[t]) << '\n';
          }
        }
      }
    });
  }
}

int run(int argc, const char* const* argv) {
  CLI::App cli{"Graph-regularized rating model and shilling-attack robustness harness"};
  cli.require_subcommand(1);
  std::optional<std::string> config_path;
  std::vector<std::string> overrides;
  std::string ingest_path;
  std::string ingest_format;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "INI config file");
    sub->add_option("--set", overrides, "override, section.key=value (repeatable)");
  };
  CLI::App* ingest = cli.add_subcommand("ingest", "parse a ratings file and print a summary");
  add_common(ingest);
  ingest->add_option("path", ingest_path, "ratings file (overrides data.path)");
  ingest->add_option("--format", ingest_format, "tsv or csv (overrides data.format)");
  CLI::App* fit = cli.add_subcommand("fit", "select lambda1, fit Chiron, write the model and fit log");
  add_common(fit);
  CLI::App* attack = cli.add_subcommand("attack", "before/after attack report for every configured method");
  add_common(attack);
  CLI::App* sweep = cli.add_subcommand("sweep", "MAE after attack over the configured attack sizes");
  add_common(sweep);
  cli.add_subcommand("defaults", "print the default config")->callback([] { std::cout << default_config_text(); });

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? ok : config_error;
  }
  if (cli.got_subcommand("defaults")) return ok;

  try {
    if (!ingest_path.empty()) overrides.insert(overrides.begin(), "data.path=" + ingest_path);
    if (!ingest_format.empty()) overrides.insert(overrides.begin(), "data.format=" + ingest_format);
    std::optional<std::filesystem::path> path;
    if (config_path) path = *config_path;
    const RunConfig config = load_config(path, overrides);

    if (cli.got_subcommand(ingest)) {
      cmd_ingest(config, std::cout);
      return ok;
    }
    std::filesystem::create_directories(config.output);
    write_file(config.output / "config.resolved.ini",
               [&](std::ostream& out) { out << resolved_config_text(path, overrides); });
    if (cli.got_subcommand(fit)) cmd_fit(config);
    if (cli.got_subcommand(attack)) cmd_attack(config);
    if (cli.got_subcommand(sweep)) cmd_sweep(config);
    return ok;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return config_error;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return data_error;
  } catch (const FitError& e) {
    std::cerr << "fit failure: " << e.what() << '\n';
    return fit_failure;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return config_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return other_error;
  }
}

}  // namespace chiron::app
