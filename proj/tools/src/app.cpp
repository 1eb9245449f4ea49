#include "app.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <functional>
#include <memory>
#include <set>

#include "artifacts.hpp"
#include "commands.hpp"
#include "dcrec/log.hpp"

namespace dcrec::cli {

namespace {

// Adds "--<key>" for every configuration key, plus "--<last segment>" when that
// segment names exactly one key. Values land in `settings`.
void add_config_flags(CLI::App& app, Settings& settings, const std::set<std::string>& skip = {}) {
  const auto keys = to_settings(TrainConfig{});
  std::map<std::string, int> suffix_count;
  auto suffix = [](const std::string& key) { return key.substr(key.rfind('.') + 1); };
  for (const auto& [key, value] : keys) ++suffix_count[suffix(key)];
  for (const auto& [key, value] : keys) {
    if (skip.count(key) != 0) continue;
    std::string names = "--" + key;
    const std::string alias = suffix(key);
    if (suffix_count[alias] == 1 && alias.size() > 1) names += ",--" + alias;
    app.add_option_function<std::string>(
           names, [&settings, key](const std::string& v) { settings[key] = v; },
           "config " + key + " (default " + value + ")")
        ->group("Config overrides");
  }
}

void set_log_level(const std::string& name) {
  if (name == "debug") log::set_level(log::Level::Debug);
  else if (name == "info") log::set_level(log::Level::Info);
  else if (name == "warn") log::set_level(log::Level::Warn);
  else if (name == "error") log::set_level(log::Level::Error);
  else if (name == "off") log::set_level(log::Level::Off);
  else throw ConfigError("unknown log level '" + name + "'");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Disentangled contrastive social recommendation", "dcrec"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(code_version()));
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "debug, info, warn, error or off")
      ->capture_default_str();

  std::function<int()> action;

  // prepare
  PrepareOptions prepare;
  std::string social_path;
  auto* p = app.add_subcommand("prepare", "Filter ratings, split 8:1:1 and write prepared data");
  p->add_option("--ratings", prepare.ratings, "ratings file: user item rating")->required();
  p->add_option("--social", social_path, "social file: user friend");
  p->add_option("--min-rating", prepare.min_rating, "keep ratings >= this")->capture_default_str();
  p->add_option("--seed", prepare.seed, "split seed")->capture_default_str();
  p->add_option("--name", prepare.name, "label for the statistics row")->capture_default_str();
  p->add_option("--out", prepare.out, "output directory")->required();
  p->callback([&] {
    action = [&] {
      if (!social_path.empty()) prepare.social = social_path;
      cmd_prepare(prepare, out);
      return kExitOk;
    };
  });

  // check-grad
  GradCheckInstance instance;
  double tolerance = 1e-4;
  bool no_projector = false;
  auto* g = app.add_subcommand("check-grad", "Compare analytic and finite-difference gradients");
  g->add_option("--seed", instance.seed)->capture_default_str();
  g->add_option("--users", instance.users)->capture_default_str();
  g->add_option("--items", instance.items)->capture_default_str();
  g->add_option("--dim", instance.dim)->capture_default_str();
  g->add_option("--item-layers", instance.item_layers)->capture_default_str();
  g->add_option("--social-layers", instance.social_layers)->capture_default_str();
  g->add_option("--projector-depth", instance.projector_depth)->capture_default_str();
  g->add_flag("--no-projector", no_projector, "identity projector (w/o MLP)");
  g->add_option("--interactions", instance.interactions)->capture_default_str();
  g->add_option("--social-edges", instance.social_edges, "0 checks the social-free case")
      ->capture_default_str();
  g->add_option("--triplets", instance.triplets)->capture_default_str();
  g->add_option("--lambda1", instance.weights.lambda1)->capture_default_str();
  g->add_option("--lambda2", instance.weights.lambda2)->capture_default_str();
  g->add_option("--lambda3", instance.weights.lambda3)->capture_default_str();
  g->add_option("--tau", instance.temperature)->capture_default_str();
  g->add_option("--epsilon", instance.epsilon, "finite-difference step")->capture_default_str();
  g->add_option("--tolerance", tolerance, "max relative error")->capture_default_str();
  g->callback([&] {
    action = [&] {
      instance.projector = !no_projector;
      return cmd_check_grad(instance, tolerance, out).passed ? kExitOk : kExitFailure;
    };
  });

  // train
  TrainOptions train;
  std::string train_config, train_manifest, train_out;
  auto* t = app.add_subcommand("train", "Train a model on prepared data");
  t->add_option("--data", train.data, "prepared data directory");
  t->add_option("--config", train_config, "settings file (key = value)");
  t->add_option("--manifest", train_manifest, "repeat the run recorded in this manifest");
  t->add_option("--out", train_out, "run directory (default: $DCREC_OUTPUT_ROOT/<time>-seed<n>)");
  t->add_flag("--quiet", train.quiet, "no per-epoch output");
  add_config_flags(*t, train.overrides);
  t->callback([&] {
    action = [&] {
      if (!train_config.empty()) train.config_file = train_config;
      if (!train_manifest.empty()) train.manifest = train_manifest;
      if (!train_out.empty()) train.out = train_out;
      cmd_train(train, out);
      return kExitOk;
    };
  });

  // evaluate
  EvaluateOptions evaluate;
  std::string eval_data, eval_config, eval_fold = "test", per_user;
  bool no_exclude = false;
  auto* e = app.add_subcommand("evaluate", "Rank all items with a trained checkpoint");
  e->add_option("--checkpoint", evaluate.checkpoint, "model checkpoint")->required();
  e->add_option("--data", eval_data, "prepared data (default: from the run manifest)");
  e->add_option("--config", eval_config, "settings file (default: config.txt beside the checkpoint)");
  e->add_option("--fold", eval_fold, "validation or test")->capture_default_str();
  e->add_option("--k", evaluate.k, "ranking cutoff")->capture_default_str();
  e->add_flag("--no-exclude-train", no_exclude, "debug: keep training items in the ranking");
  e->add_option("--per-user", per_user, "write per-user metrics to this file");
  e->callback([&] {
    action = [&] {
      if (!eval_data.empty()) evaluate.data = eval_data;
      if (!eval_config.empty()) evaluate.config_file = eval_config;
      if (!per_user.empty()) evaluate.per_user = per_user;
      evaluate.fold = parse_fold(eval_fold);
      if (evaluate.fold == Fold::Train && !no_exclude) {
        throw ConfigError("the train fold is only meaningful with --no-exclude-train");
      }
      if (evaluate.k < 1) throw ConfigError("--k must be >= 1");
      evaluate.exclude_train = !no_exclude;
      cmd_evaluate(evaluate, out);
      return kExitOk;
    };
  });

  // sweep
  SweepOptions sweep;
  std::string sweep_config, sweep_out;
  auto* s = app.add_subcommand("sweep", "Train a lambda1 x lambda2 (x tau) grid and rank the cells");
  s->add_option("--data", sweep.data, "prepared data directory")->required();
  s->add_option("--config", sweep_config, "settings file (key = value)");
  s->add_option("--lambda1", sweep.lambda1, "grid values")->delimiter(',')->capture_default_str();
  s->add_option("--lambda2", sweep.lambda2, "grid values")->delimiter(',')->capture_default_str();
  s->add_option("--tau", sweep.tau, "grid values (default: configured tau)")->delimiter(',');
  s->add_option("--out", sweep_out, "run directory");
  add_config_flags(*s, sweep.overrides, {"loss.lambda1", "loss.lambda2", "loss.tau"});
  s->callback([&] {
    action = [&] {
      if (!sweep_config.empty()) sweep.config_file = sweep_config;
      if (!sweep_out.empty()) sweep.out = sweep_out;
      const auto result = cmd_sweep(sweep, out);
      const bool any_failed = std::any_of(result.cells.begin(), result.cells.end(),
                                          [](const SweepCell& c) { return !c.test.has_value(); });
      return any_failed ? kExitFailure : kExitOk;
    };
  });

  // synth
  SynthOptions synth;
  auto* y = app.add_subcommand("synth", "Write a planted-community ratings and social dataset");
  y->add_option("--out", synth.out, "output directory")->required();
  y->add_option("--users", synth.spec.users)->capture_default_str();
  y->add_option("--items", synth.spec.items)->capture_default_str();
  y->add_option("--communities", synth.spec.communities)->capture_default_str();
  y->add_option("--p-in", synth.spec.in_community_probability, "in-community interaction probability")
      ->capture_default_str();
  y->add_option("--affinity-ratio", synth.spec.affinity_ratio, "in/out interaction probability ratio")
      ->capture_default_str();
  y->add_option("--friends", synth.spec.friends_per_user, "mean relations drawn per user")
      ->capture_default_str();
  y->add_option("--social-in", synth.spec.social_in_community, "share of in-community relations")
      ->capture_default_str();
  y->add_option("--seed", synth.spec.seed)->capture_default_str();
  y->callback([&] {
    action = [&] {
      cmd_synth(synth, out);
      return kExitOk;
    };
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::CallForVersion& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex, out, err);
    return kExitUsage;
  }

  try {
    set_log_level(log_level);
    return action ? action() : kExitUsage;
  } catch (const UsageError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& ex) {
    err << "config error: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const VersionError& ex) {
    err << "version error: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace dcrec::cli
