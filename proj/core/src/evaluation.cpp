#include "dcrec/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>

namespace dcrec {

std::vector<Index> rank_items(Index user, const Matrix& users, const Matrix& items,
                              std::span<const Index> exclude, std::optional<std::size_t> limit) {
  if (user < 0 || user >= users.rows()) throw ShapeError("rank_items: user out of range");
  if (users.cols() != items.cols()) throw ShapeError("rank_items: dimension mismatch");
  const Vector scores = items * users.row(user).transpose();

  std::vector<Index> candidates;
  candidates.reserve(static_cast<std::size_t>(items.rows()));
  std::size_t cursor = 0;
  for (Index i = 0; i < items.rows(); ++i) {
    while (cursor < exclude.size() && exclude[cursor] < i) ++cursor;
    if (cursor < exclude.size() && exclude[cursor] == i) continue;
    candidates.push_back(i);
  }
  const auto better = [&scores](Index a, Index b) {
    if (scores(a) != scores(b)) return scores(a) > scores(b);
    return a < b;
  };
  const std::size_t keep = std::min(limit.value_or(candidates.size()), candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                    candidates.end(), better);
  candidates.resize(keep);
  return candidates;
}

RankingMetrics metrics_at_k(std::span<const Index> ranked, std::span<const Index> relevant, Index k) {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (relevant.empty()) throw ConfigError("metrics_at_k needs at least one relevant item");
  const std::size_t cutoff = std::min<std::size_t>(static_cast<std::size_t>(k), ranked.size());
  double dcg = 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < cutoff; ++r) {
    if (std::binary_search(relevant.begin(), relevant.end(), ranked[r])) {
      ++hits;
      dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    }
  }
  double idcg = 0.0;
  const std::size_t ideal = std::min<std::size_t>(relevant.size(), static_cast<std::size_t>(k));
  for (std::size_t r = 0; r < ideal; ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);

  RankingMetrics m;
  m.ndcg = dcg / idcg;
  m.recall = static_cast<double>(hits) / static_cast<double>(relevant.size());
  m.precision = static_cast<double>(hits) / static_cast<double>(k);
  return m;
}

RankingReport evaluate_ranking(const Matrix& users, const Matrix& items,
                               const std::vector<std::vector<Index>>& relevant_by_user,
                               const std::vector<std::vector<Index>>& exclude_by_user, Index k,
                               bool keep_per_user) {
  if (relevant_by_user.size() != static_cast<std::size_t>(users.rows())) {
    throw ShapeError("evaluate: relevance lists do not match user count");
  }
  RankingReport report;
  report.k = k;
  double ndcg = 0.0, recall = 0.0, precision = 0.0;
  static const std::vector<Index> kNone;
  for (Index u = 0; u < users.rows(); ++u) {
    const auto& relevant = relevant_by_user[u];
    if (relevant.empty()) continue;
    const auto& exclude = exclude_by_user.empty() ? kNone : exclude_by_user[u];
    const auto ranked = rank_items(u, users, items, exclude, static_cast<std::size_t>(k));
    const RankingMetrics m = metrics_at_k(ranked, relevant, k);
    ndcg += m.ndcg;
    recall += m.recall;
    precision += m.precision;
    ++report.users_evaluated;
    if (keep_per_user) report.per_user.push_back({u, m});
  }
  if (report.users_evaluated == 0) throw ConfigError("no evaluable users in the selected fold");
  const double n = static_cast<double>(report.users_evaluated);
  report.mean = {ndcg / n, recall / n, precision / n};
  return report;
}

RankingReport evaluate(const Dataset& dataset, Fold fold, const Matrix& users,
                       const Matrix& items, const EvaluateOptions& options) {
  const auto relevant = dataset.items_by_user(fold);
  std::vector<std::vector<Index>> exclude;
  if (options.exclude_train && fold != Fold::Train) exclude = dataset.items_by_user(Fold::Train);
  return evaluate_ranking(users, items, relevant, exclude, options.k, options.keep_per_user);
}

void RankingReport::write_table(std::ostream& out) const {
  out << std::left << std::setw(12) << "metric" << std::right << std::setw(6) << "k"
      << std::setw(12) << "value" << '\n';
  const std::pair<const char*, double> rows[] = {
      {"NDCG", mean.ndcg}, {"Recall", mean.recall}, {"Precision", mean.precision}};
  for (const auto& [name, value] : rows) {
    out << std::left << std::setw(12) << name << std::right << std::setw(6) << k << std::setw(12)
        << std::fixed << std::setprecision(6) << value << std::defaultfloat << '\n';
  }
  out << "users evaluated: " << users_evaluated << '\n';
}

void RankingReport::write_lines(std::ostream& out) const {
  out << std::setprecision(17);
  out << "ndcg\t" << k << '\t' << mean.ndcg << '\n';
  out << "recall\t" << k << '\t' << mean.recall << '\n';
  out << "precision\t" << k << '\t' << mean.precision << '\n';
  out << "users\t" << k << '\t' << users_evaluated << '\n';
}

void RankingReport::write_per_user(std::ostream& out) const {
  out << "# user\tndcg\trecall\tprecision\n" << std::setprecision(17);
  for (const auto& u : per_user) {
    out << u.user << '\t' << u.metrics.ndcg << '\t' << u.metrics.recall << '\t'
        << u.metrics.precision << '\n';
  }
}

}  // namespace dcrec
