#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "dcrec/common.hpp"
#include "dcrec/data.hpp"

namespace dcrec {

struct RankingMetrics {
  double ndcg = 0.0;
  double recall = 0.0;
  double precision = 0.0;

  friend bool operator==(const RankingMetrics&, const RankingMetrics&) = default;
};

struct UserMetrics {
  Index user = 0;
  RankingMetrics metrics;
};

struct RankingReport {
  Index k = 5;
  RankingMetrics mean;
  Index users_evaluated = 0;
  std::vector<UserMetrics> per_user;

  /// Aligned table for humans.
  void write_table(std::ostream& out) const;
  /// "metric<TAB>k<TAB>value" lines.
  void write_lines(std::ostream& out) const;
  void write_per_user(std::ostream& out) const;
};

/// Items ordered by descending <U_u, V_i>, ties by ascending item index, with
/// `exclude` (sorted) removed. Returns the first `limit` entries (all when
/// limit is empty).
std::vector<Index> rank_items(Index user, const Matrix& users, const Matrix& items,
                              std::span<const Index> exclude,
                              std::optional<std::size_t> limit = std::nullopt);

/// Binary-gain metrics at cutoff k against a non-empty relevant set (sorted).
RankingMetrics metrics_at_k(std::span<const Index> ranked, std::span<const Index> relevant, Index k);

/// Mean metrics over users with at least one item in `relevant_by_user`.
/// Throws when no user is evaluable.
RankingReport evaluate_ranking(const Matrix& users, const Matrix& items,
                               const std::vector<std::vector<Index>>& relevant_by_user,
                               const std::vector<std::vector<Index>>& exclude_by_user, Index k,
                               bool keep_per_user = false);

struct EvaluateOptions {
  Index k = 5;
  bool exclude_train = true;
  bool keep_per_user = false;
};

/// Ranks every item for each user of `fold`, excluding that user's training
/// items unless disabled.
RankingReport evaluate(const Dataset& dataset, Fold fold, const Matrix& users,
                       const Matrix& items, const EvaluateOptions& options = {});

}  // namespace dcrec
