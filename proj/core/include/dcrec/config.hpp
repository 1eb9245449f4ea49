#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "dcrec/augment.hpp"
#include "dcrec/model.hpp"
#include "dcrec/objectives.hpp"

namespace dcrec {

/// Which instances serve as negatives in the contrastive losses.
enum class NegativeScope { Batch, Full };

/// How BPR terms are combined into the main loss of one minibatch.
enum class BprReduction { Mean, Sum };

struct TrainConfig {
  ModelShape model;  // users/items are filled from the data

  std::size_t epochs = 500;
  std::size_t batch_size = 2048;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;

  LossWeights weights;
  double temperature = 0.2;
  NegativeScope negatives_scope = NegativeScope::Batch;
  BprReduction bpr_reduction = BprReduction::Sum;

  AugmentationSpec item_view1{AugmentationKind::EdgeDrop, 0.1, 0};
  AugmentationSpec item_view2{AugmentationKind::EdgeDrop, 0.1, 0};
  AugmentationSpec social_view1{AugmentationKind::EdgeDrop, 0.1, 0};
  AugmentationSpec social_view2{AugmentationKind::EdgeAdd, 0.1, 0};
  bool views_per_batch = false;

  std::size_t patience = 20;
  Index eval_k = 5;
  std::uint64_t seed = 2023;

  void validate() const;
};

/// Applies one "key = value" setting; throws ConfigError for unknown keys or
/// malformed values.
void apply_setting(TrainConfig& config, const std::string& key, const std::string& value);

/// Every key with its current value, in a stable order. Feeding the result
/// back through apply_setting reproduces the configuration exactly.
std::map<std::string, std::string> to_settings(const TrainConfig& config);

/// Reads "key = value" lines; '#' starts a comment, blank lines are skipped.
std::map<std::string, std::string> read_settings_file(const std::filesystem::path& path);

TrainConfig config_from_settings(const std::map<std::string, std::string>& settings);

void write_config(const std::filesystem::path& path, const TrainConfig& config);

/// Derives an independent 64-bit stream seed from a root seed and a tag list.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

}  // namespace dcrec
