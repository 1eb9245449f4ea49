#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "dcrec/batch_objective.hpp"
#include "dcrec/config.hpp"
#include "dcrec/data.hpp"
#include "dcrec/evaluation.hpp"
#include "dcrec/model.hpp"

namespace dcrec {

struct AdamSettings {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamSettings from(const TrainConfig& config);
};

struct AdamState {
  ParameterSet first_moment;
  ParameterSet second_moment;
  std::int64_t step = 0;

  static AdamState zeros_like(const ParameterSet& params);
};

/// Bias-corrected Adam, elementwise over every parameter matrix.
void adam_step(ParameterSet& params, const GradientSet& grads, AdamState& state,
               const AdamSettings& settings);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  std::size_t batches = 0;
  LossParts parts;        // batch means
  double total = 0.0;     // batch mean of the joint objective
  std::optional<RankingMetrics> validation;
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 0 when no validation ran
  double best_validation_recall = -1.0;

  /// Tab-separated, one row per epoch. Wall time goes last so that
  /// deterministic columns can be compared by prefix; `with_timing = false`
  /// drops it.
  void write(std::ostream& out, bool with_timing = true) const;
};

/// Mutable state of a run.
struct TrainerState {
  ParameterSet params;
  AdamState adam;
  std::size_t epoch = 0;  // completed epochs
};

TrainerState initial_state(const Dataset& dataset, const TrainConfig& config);

/// Samples fresh views, shuffles the training edges into batches and takes one
/// Adam step per batch. Throws NumericError naming epoch and batch on a
/// non-finite loss.
EpochRecord train_epoch(const Dataset& dataset, TrainerState& state, const TrainConfig& config);

/// Validation metrics for model selection; recall is the selection key.
using Validator = std::function<RankingMetrics(const ParameterSet&, std::size_t epoch)>;

struct FitResult {
  TrainerState best;  // state right after the best validation epoch
  TrainerState final_state;
  TrainLog log;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Trains up to config.epochs, scoring every epoch with `validator` (validation
/// Recall@k by default). Keeps the best-scoring state; stops once more than
/// config.patience consecutive epochs fail to strictly improve. Without a
/// validator and without validation data the final state counts as best.
FitResult fit(const Dataset& dataset, const TrainConfig& config,
              const Validator& validator = nullptr, const EpochCallback& on_epoch = nullptr);

/// Default validator: metrics@k on the validation fold, train items excluded.
/// Empty when the validation fold is empty.
Validator validation_recall(const Dataset& dataset, const TrainConfig& config);

/// Final U, V for a parameter set.
std::pair<Matrix, Matrix> representations(const Dataset& dataset, const ParameterSet& params,
                                          const TrainConfig& config);

// Checkpoint layout (little-endian):
//   "DCRECKPT" | u32 version | 7 x i32 model shape | u64 epoch | u64 seed
//   | u32 groups | groups x {u32 name_len, name, i64 rows, i64 cols, f64[rows*cols]}
//   | i64 adam_step | first moments (same group encoding) | second moments
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelShape shape;
  std::uint64_t seed = 0;
  TrainerState state;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dcrec
