#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dcrec/evaluation.hpp"
#include "dcrec/gradcheck.hpp"
#include "dcrec/synthetic.hpp"
#include "dcrec/training.hpp"

namespace dcrec::cli {

using Settings = std::map<std::string, std::string>;

struct PrepareOptions {
  std::filesystem::path ratings;
  std::optional<std::filesystem::path> social;
  double min_rating = 4.0;
  std::uint64_t seed = 2023;
  std::filesystem::path out;
  std::string name = "dataset";  // label of the statistics row
};

struct PrepareResult {
  DatasetStats stats;
  bool social_free = false;
};

PrepareResult cmd_prepare(const PrepareOptions& options, std::ostream& out);

/// Training configuration from an optional settings file plus overrides.
TrainConfig resolve_config(const std::optional<std::filesystem::path>& config_file,
                           const Settings& overrides);

struct TrainOptions {
  std::filesystem::path data;
  std::optional<std::filesystem::path> config_file;
  Settings overrides;
  std::optional<std::filesystem::path> manifest;  // repeat a recorded run
  std::optional<std::filesystem::path> out;       // exact run directory
  bool quiet = false;
};

struct TrainResult {
  std::filesystem::path run_dir;
  TrainLog log;
  RankingReport test;
};

TrainResult cmd_train(const TrainOptions& options, std::ostream& out);

struct EvaluateOptions {
  std::filesystem::path checkpoint;
  std::optional<std::filesystem::path> data;         // default: recorded in the run manifest
  std::optional<std::filesystem::path> config_file;  // default: config next to the checkpoint
  Fold fold = Fold::Test;
  Index k = 5;
  bool exclude_train = true;
  std::optional<std::filesystem::path> per_user;
};

RankingReport cmd_evaluate(const EvaluateOptions& options, std::ostream& out);

struct SweepOptions {
  std::filesystem::path data;
  std::optional<std::filesystem::path> config_file;
  Settings overrides;
  std::vector<double> lambda1{0.0, 0.001, 0.01, 0.1, 1.0, 10.0};
  std::vector<double> lambda2{0.0, 0.001, 0.01, 0.1, 1.0, 10.0};
  std::vector<double> tau;  // empty: the configured temperature only
  std::optional<std::filesystem::path> out;
};

struct SweepCell {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double tau = 0.0;
  std::optional<RankingMetrics> test;  // empty when the cell failed
  std::size_t epochs = 0;
  std::string error;
};

struct SweepResult {
  std::filesystem::path run_dir;
  std::vector<SweepCell> cells;  // sorted by NDCG descending, failures last
};

SweepResult cmd_sweep(const SweepOptions& options, std::ostream& out);

GradCheckReport cmd_check_grad(const GradCheckInstance& instance, double tolerance,
                               std::ostream& out);

struct SynthOptions {
  PlantedCommunitySpec spec;
  std::filesystem::path out;
};

void cmd_synth(const SynthOptions& options, std::ostream& out);

/// Aligned statistics table: Dataset, Users, Items, Ratings, Relations, Density.
void write_stats_table(std::ostream& out, const std::string& name, const DatasetStats& stats);

/// "12,345" style grouping.
std::string group_thousands(std::uint64_t value);

}  // namespace dcrec::cli
