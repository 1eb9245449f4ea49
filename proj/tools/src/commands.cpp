#include "commands.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "artifacts.hpp"
#include "dcrec/log.hpp"

namespace dcrec::cli {

namespace {

void require_file(const std::filesystem::path& path, const std::string& what) {
  if (!std::filesystem::is_regular_file(path)) {
    throw UsageError(what + " not found: " + path.string());
  }
}

std::filesystem::path absolute_path(const std::filesystem::path& p) {
  return std::filesystem::absolute(p).lexically_normal();
}

ModelShape checkpoint_shape(const Dataset& dataset, const TrainConfig& config) {
  ModelShape shape = config.model;
  shape.users = dataset.users();
  shape.items = dataset.items();
  return shape;
}

void write_report(const std::filesystem::path& path, const RankingReport& report) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  report.write_lines(f);
  if (!f) throw IoError("write failure on " + path.string());
}

void print_epoch(std::ostream& out, const EpochRecord& r) {
  out << std::setw(6) << r.epoch << std::fixed << std::setprecision(5) << std::setw(14)
      << r.parts.main << std::setw(11) << r.parts.collaborative << std::setw(11) << r.parts.social
      << std::setw(11) << r.parts.cross_domain << std::setw(11) << r.parts.regularizer
      << std::setw(14) << r.total;
  if (r.validation) {
    out << std::setw(11) << r.validation->recall << std::setw(11) << r.validation->ndcg;
  } else {
    out << std::setw(11) << "-" << std::setw(11) << "-";
  }
  out << std::setprecision(2) << std::setw(9) << r.seconds << std::defaultfloat << '\n';
}

void print_epoch_header(std::ostream& out, Index k) {
  const std::string at = "@" + std::to_string(k);
  out << std::setw(6) << "epoch" << std::setw(14) << "main" << std::setw(11) << "item"
      << std::setw(11) << "social" << std::setw(11) << "cross" << std::setw(11) << "reg"
      << std::setw(14) << "total" << std::setw(11) << ("R" + at) << std::setw(11) << ("N" + at)
      << std::setw(9) << "sec" << '\n';
}

}  // namespace

std::string group_thousands(std::uint64_t value) {
  std::string digits = std::to_string(value);
  std::string out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i != 0 && (digits.size() - i) % 3 == 0) out += ',';
    out += digits[i];
  }
  return out;
}

void write_stats_table(std::ostream& out, const std::string& name, const DatasetStats& stats) {
  std::ostringstream density;
  density << std::fixed << std::setprecision(3) << stats.density * 100.0 << '%';
  out << std::left << std::setw(12) << "Dataset" << std::right << std::setw(10) << "Users"
      << std::setw(12) << "Items" << std::setw(12) << "Ratings" << std::setw(12) << "Relations"
      << std::setw(10) << "Density" << '\n';
  out << std::left << std::setw(12) << name << std::right << std::setw(10)
      << group_thousands(static_cast<std::uint64_t>(stats.users)) << std::setw(12)
      << group_thousands(static_cast<std::uint64_t>(stats.items)) << std::setw(12)
      << group_thousands(stats.ratings) << std::setw(12) << group_thousands(stats.relations)
      << std::setw(10) << density.str() << '\n';
}

PrepareResult cmd_prepare(const PrepareOptions& options, std::ostream& out) {
  require_file(options.ratings, "ratings file");
  if (options.social) require_file(*options.social, "social file");

  const auto records = load_interactions(options.ratings, options.min_rating);
  IdIndex index = IdIndex::from_records(records);
  DatasetSplit split = split_interactions(records, index, {8, 1, 1}, options.seed);

  std::size_t directed_relations = 0;
  std::vector<SocialRecord> social;
  if (options.social) social = load_social(*options.social, index, &directed_relations);
  const EdgeSet social_edges = social_edge_set(social, index);
  PrepareResult result;
  result.social_free = social_edges.size() == 0;
  if (result.social_free) {
    log::warn("no usable social relations: social-free mode (social and cross-domain losses off)");
  }

  std::filesystem::create_directories(options.out);
  write_split_manifest(options.out / kSplitFile, index, records, split);
  write_social_edges(options.out / kSocialFile, index, social_edges);
  std::map<std::string, std::string> info{
      {"split_seed", std::to_string(options.seed)},
      {"min_rating", std::to_string(options.min_rating)},
      {"ratings.source", absolute_path(options.ratings).string()},
      {"ratings.checksum", file_checksum(options.ratings)},
      {"social.source", options.social ? absolute_path(*options.social).string() : "-"},
      {"social.checksum", options.social ? file_checksum(*options.social) : "-"},
      {"users", std::to_string(index.users())},
      {"items", std::to_string(index.items())},
      {"ratings", std::to_string(records.size())},
      {"relations", std::to_string(directed_relations)},
      {"social_edges", std::to_string(social_edges.size())},
      {"social_free", result.social_free ? "yes" : "no"},
      {"train", std::to_string(split.train.size())},
      {"validation", std::to_string(split.validation.size())},
      {"test", std::to_string(split.test.size())},
  };
  write_key_values(options.out / kDatasetInfoFile, info);

  result.stats = compute_stats(index, records.size(), directed_relations);
  write_stats_table(out, options.name, result.stats);
  out << "split (train/validation/test): " << split.train.size() << " / " << split.validation.size()
      << " / " << split.test.size() << "\n";
  out << "prepared data written to " << options.out.string() << "\n";
  return result;
}

TrainConfig resolve_config(const std::optional<std::filesystem::path>& config_file,
                           const Settings& overrides) {
  Settings settings;
  if (config_file) {
    require_file(*config_file, "config file");
    settings = read_settings_file(*config_file);
  }
  for (const auto& [k, v] : overrides) settings[k] = v;
  TrainConfig config = config_from_settings(settings);
  config.validate();
  return config;
}

TrainResult cmd_train(const TrainOptions& options, std::ostream& out) {
  TrainConfig config;
  std::filesystem::path data_dir = options.data;
  std::optional<RunManifest> recorded;
  if (options.manifest) {
    require_file(*options.manifest, "run manifest");
    recorded = RunManifest::read(*options.manifest);
    Settings settings = recorded->config;
    for (const auto& [k, v] : options.overrides) settings[k] = v;
    config = config_from_settings(settings);
    config.validate();
    if (data_dir.empty()) data_dir = recorded->data_dir;
  } else {
    config = resolve_config(options.config_file, options.overrides);
  }
  if (data_dir.empty()) throw UsageError("train needs --data or --manifest");

  const PreparedDataset prepared = load_prepared(data_dir);
  if (recorded && (recorded->split_checksum != prepared.split_checksum ||
                   recorded->social_checksum != prepared.social_checksum)) {
    throw ConfigError("prepared data in " + data_dir.string() +
                      " differs from the data recorded in the manifest");
  }
  const Dataset& dataset = prepared.dataset;

  TrainResult result;
  if (options.out) {
    result.run_dir = *options.out;
    std::filesystem::create_directories(result.run_dir);
  } else {
    result.run_dir = create_run_dir(output_root(), config.seed);
  }

  RunManifest manifest;
  manifest.command = "train";
  manifest.code_version = code_version();
  manifest.seed = config.seed;
  manifest.data_dir = absolute_path(data_dir);
  manifest.split_checksum = prepared.split_checksum;
  manifest.social_checksum = prepared.social_checksum;
  manifest.output_dir = absolute_path(result.run_dir);
  manifest.config = to_settings(config);
  manifest.write(result.run_dir / kManifestFile);
  write_config(result.run_dir / kConfigFile, config);

  if (!options.quiet) {
    out << "run directory: " << result.run_dir.string() << "\n";
    out << "users " << dataset.users() << ", items " << dataset.items() << ", train "
        << dataset.split.train.size() << ", social edges " << dataset.social_edges.size()
        << (dataset.social_free() ? " (social-free)" : "") << "\n";
    print_epoch_header(out, config.eval_k);
  }
  const EpochCallback on_epoch = [&](const EpochRecord& r) {
    if (!options.quiet) print_epoch(out, r);
  };
  FitResult fit_result = fit(dataset, config, nullptr, on_epoch);
  result.log = fit_result.log;

  save_checkpoint(result.run_dir / kCheckpointFile,
                  Checkpoint{checkpoint_shape(dataset, config), config.seed, fit_result.best});
  {
    std::ofstream f(result.run_dir / kLogFile);
    if (!f) throw IoError("cannot write " + (result.run_dir / kLogFile).string());
    result.log.write(f, false);
  }

  const auto [users, items] = representations(dataset, fit_result.best.params, config);
  dcrec::EvaluateOptions eval_options;
  eval_options.k = config.eval_k;
  result.test = evaluate(dataset, Fold::Test, users, items, eval_options);
  write_report(result.run_dir / "report_test.tsv", result.test);
  if (!dataset.split.validation.empty()) {
    write_report(result.run_dir / "report_validation.tsv",
                 evaluate(dataset, Fold::Validation, users, items, eval_options));
  }
  if (!options.quiet) {
    out << "best epoch " << result.log.best_epoch << " of " << result.log.epochs.size() << "\n";
    out << "test metrics (best checkpoint):\n";
    result.test.write_table(out);
  }
  return result;
}

RankingReport cmd_evaluate(const EvaluateOptions& options, std::ostream& out) {
  require_file(options.checkpoint, "checkpoint");
  const std::filesystem::path run_dir = options.checkpoint.parent_path();

  std::filesystem::path data_dir;
  if (options.data) {
    data_dir = *options.data;
  } else {
    const auto manifest_path = run_dir / kManifestFile;
    if (!std::filesystem::exists(manifest_path)) {
      throw UsageError("no run manifest next to the checkpoint; pass --data");
    }
    data_dir = RunManifest::read(manifest_path).data_dir;
  }
  const auto config_path = options.config_file ? *options.config_file : run_dir / kConfigFile;
  const TrainConfig config = resolve_config(config_path, {});

  const PreparedDataset prepared = load_prepared(data_dir);
  const Checkpoint checkpoint = load_checkpoint(options.checkpoint);
  const ModelShape expected = checkpoint_shape(prepared.dataset, config);
  if (!(checkpoint.shape == expected)) {
    throw VersionError("checkpoint/config mismatch: checkpoint has " + checkpoint.shape.describe() +
                       ", config and data give " + expected.describe());
  }

  const auto [users, items] = representations(prepared.dataset, checkpoint.state.params, config);
  dcrec::EvaluateOptions eval_options;
  eval_options.k = options.k;
  eval_options.exclude_train = options.exclude_train;
  eval_options.keep_per_user = options.per_user.has_value();
  const RankingReport report = evaluate(prepared.dataset, options.fold, users, items, eval_options);

  out << "fold " << fold_name(options.fold)
      << (options.exclude_train ? "" : " (training items not excluded)") << ", epoch "
      << checkpoint.state.epoch << "\n";
  report.write_table(out);
  if (options.per_user) {
    std::ofstream f(*options.per_user);
    if (!f) throw IoError("cannot write " + options.per_user->string());
    report.write_per_user(f);
  }
  return report;
}

SweepResult cmd_sweep(const SweepOptions& options, std::ostream& out) {
  const TrainConfig base = resolve_config(options.config_file, options.overrides);
  if (options.lambda1.empty() || options.lambda2.empty()) {
    throw ConfigError("sweep grid needs at least one value per lambda");
  }
  const std::vector<double> taus =
      options.tau.empty() ? std::vector<double>{base.temperature} : options.tau;
  for (double l : options.lambda1) LossWeights{l, 0.0, base.weights.lambda3}.validate();
  for (double l : options.lambda2) LossWeights{0.0, l, base.weights.lambda3}.validate();
  for (double t : taus) {
    if (!(t > 0.0)) throw ConfigError("sweep temperature must be positive");
  }

  const PreparedDataset prepared = load_prepared(options.data);
  SweepResult result;
  result.run_dir = options.out ? *options.out : create_run_dir(output_root(), base.seed);
  std::filesystem::create_directories(result.run_dir);
  write_config(result.run_dir / kConfigFile, base);

  for (double tau : taus) {
    for (double l1 : options.lambda1) {
      for (double l2 : options.lambda2) {
        SweepCell cell{l1, l2, tau, std::nullopt, 0, ""};
        try {
          TrainConfig config = base;
          config.weights.lambda1 = l1;
          config.weights.lambda2 = l2;
          config.temperature = tau;
          const FitResult fitted = fit(prepared.dataset, config);
          const auto [users, items] = representations(prepared.dataset, fitted.best.params, config);
          dcrec::EvaluateOptions eval_options;
          eval_options.k = config.eval_k;
          cell.test = evaluate(prepared.dataset, Fold::Test, users, items, eval_options).mean;
          cell.epochs = fitted.log.epochs.size();
        } catch (const std::exception& e) {
          cell.error = e.what();
          log::error("sweep cell lambda1=" + std::to_string(l1) + " lambda2=" + std::to_string(l2) +
                     " failed: " + e.what());
        }
        result.cells.push_back(cell);
      }
    }
  }
  std::stable_sort(result.cells.begin(), result.cells.end(),
                   [](const SweepCell& a, const SweepCell& b) {
                     if (a.test.has_value() != b.test.has_value()) return a.test.has_value();
                     return a.test && a.test->ndcg > b.test->ndcg;
                   });

  auto write_table = [&](std::ostream& s, bool tsv) {
    const auto col = [&](int width) { return tsv ? 0 : width; };
    const char* sep = tsv ? "\t" : "";
    s << std::setw(col(10)) << "lambda1" << sep << std::setw(col(10)) << "lambda2" << sep
      << std::setw(col(8)) << "tau" << sep << std::setw(col(12)) << "ndcg" << sep
      << std::setw(col(12)) << "recall" << sep << std::setw(col(12)) << "precision" << sep
      << std::setw(col(8)) << "epochs" << sep << "  status" << '\n';
    for (const auto& c : result.cells) {
      s << std::setw(col(10)) << c.lambda1 << sep << std::setw(col(10)) << c.lambda2 << sep
        << std::setw(col(8)) << c.tau << sep;
      if (c.test) {
        s << std::fixed << std::setprecision(6) << std::setw(col(12)) << c.test->ndcg << sep
          << std::setw(col(12)) << c.test->recall << sep << std::setw(col(12)) << c.test->precision
          << std::defaultfloat << sep << std::setw(col(8)) << c.epochs << sep << "  ok\n";
      } else {
        s << std::setw(col(12)) << "-" << sep << std::setw(col(12)) << "-" << sep
          << std::setw(col(12)) << "-" << sep << std::setw(col(8)) << "-" << sep
          << "  failed: " << c.error << '\n';
      }
    }
  };
  write_table(out, false);
  std::ofstream f(result.run_dir / "sweep.tsv");
  if (!f) throw IoError("cannot write sweep table");
  write_table(f, true);
  out << "sweep table written to " << (result.run_dir / "sweep.tsv").string() << "\n";
  return result;
}

GradCheckReport cmd_check_grad(const GradCheckInstance& instance, double tolerance,
                               std::ostream& out) {
  GradCheckOptions options;
  options.tolerance = tolerance;
  const GradCheckReport report = check_gradients(instance, options);
  out << report.to_text();
  return report;
}

void cmd_synth(const SynthOptions& options, std::ostream& out) {
  const SyntheticData data = generate_planted_communities(options.spec);
  std::filesystem::create_directories(options.out);
  write_synthetic(data, options.out / "ratings.txt", options.out / "social.txt");
  out << "wrote " << data.interactions.size() << " interactions and " << data.relations.size()
      << " relations to " << options.out.string() << "\n";
}

}  // namespace dcrec::cli
