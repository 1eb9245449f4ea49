#include "dcrec/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

namespace dcrec {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r')) ++pos;
    if (pos >= line.size()) break;
    std::size_t end = pos;
    while (end < line.size() && line[end] != ' ' && line[end] != '\t' && line[end] != '\r') ++end;
    fields.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  return fields;
}

bool skip_line(const std::vector<std::string_view>& fields) {
  return fields.empty() || fields.front().starts_with('#');
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  return in;
}

std::string location(const std::string& source, std::size_t line_no) {
  return source + ":" + std::to_string(line_no);
}

}  // namespace

IdIndex IdIndex::from_records(const std::vector<InteractionRecord>& records) {
  IdIndex index;
  for (const auto& r : records) {
    index.add_user(r.user_raw_id);
    index.add_item(r.item_raw_id);
  }
  return index;
}

Index IdIndex::add_user(const std::string& raw) {
  auto [it, inserted] = user_map_.try_emplace(raw, static_cast<Index>(user_names_.size()));
  if (inserted) user_names_.push_back(raw);
  return it->second;
}

Index IdIndex::add_item(const std::string& raw) {
  auto [it, inserted] = item_map_.try_emplace(raw, static_cast<Index>(item_names_.size()));
  if (inserted) item_names_.push_back(raw);
  return it->second;
}

Index IdIndex::user(const std::string& raw) const {
  const auto it = user_map_.find(raw);
  return it == user_map_.end() ? -1 : it->second;
}

Index IdIndex::item(const std::string& raw) const {
  const auto it = item_map_.find(raw);
  return it == item_map_.end() ? -1 : it->second;
}

const char* fold_name(Fold fold) {
  switch (fold) {
    case Fold::Train: return "train";
    case Fold::Validation: return "validation";
    case Fold::Test: return "test";
  }
  return "?";
}

Fold parse_fold(const std::string& name) {
  if (name == "train") return Fold::Train;
  if (name == "validation" || name == "valid" || name == "val") return Fold::Validation;
  if (name == "test") return Fold::Test;
  throw ConfigError("unknown fold '" + name + "' (expected train, validation or test)");
}

const std::vector<Edge>& DatasetSplit::fold(Fold f) const {
  switch (f) {
    case Fold::Train: return train;
    case Fold::Validation: return validation;
    case Fold::Test: return test;
  }
  return train;
}

std::vector<InteractionRecord> parse_interactions(std::istream& in, double min_rating,
                                                  const std::string& source) {
  std::vector<InteractionRecord> records;
  std::unordered_map<std::string, std::size_t> seen;  // "user\0item" -> position
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_fields(line);
    if (skip_line(fields)) continue;
    if (fields.size() < 3) {
      throw ParseError(location(source, line_no) + ": expected 'user item rating', got " +
                       std::to_string(fields.size()) + " field(s)");
    }
    double rating = 0.0;
    const auto token = fields[2];
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), rating);
    if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(rating)) {
      throw ParseError(location(source, line_no) + ": rating '" + std::string(token) +
                       "' is not a finite number");
    }
    if (rating < min_rating) continue;
    std::string user(fields[0]);
    std::string item(fields[1]);
    std::string key = user + '\0' + item;
    const auto it = seen.find(key);
    if (it != seen.end()) {
      auto& kept = records[it->second];
      kept.rating = std::max(kept.rating, rating);
      continue;
    }
    seen.emplace(std::move(key), records.size());
    records.push_back({std::move(user), std::move(item), rating});
  }
  if (in.bad()) throw IoError("read failure on " + source);
  return records;
}

std::vector<InteractionRecord> load_interactions(const std::filesystem::path& path,
                                                 double min_rating) {
  auto in = open_input(path);
  return parse_interactions(in, min_rating, path.string());
}

std::vector<SocialRecord> parse_social(std::istream& in, const IdIndex& index,
                                       const std::string& source,
                                       std::size_t* directed_relations) {
  std::vector<Edge> directed;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_fields(line);
    if (skip_line(fields)) continue;
    if (fields.size() < 2) {
      throw ParseError(location(source, line_no) + ": expected 'user friend'");
    }
    const Index a = index.user(std::string(fields[0]));
    const Index b = index.user(std::string(fields[1]));
    if (a < 0 || b < 0 || a == b) continue;
    directed.push_back({a, b});
  }
  if (in.bad()) throw IoError("read failure on " + source);

  std::sort(directed.begin(), directed.end());
  directed.erase(std::unique(directed.begin(), directed.end()), directed.end());
  if (directed_relations != nullptr) *directed_relations = directed.size();

  const std::size_t raw = directed.size();
  for (std::size_t k = 0; k < raw; ++k) directed.push_back({directed[k].b, directed[k].a});
  std::sort(directed.begin(), directed.end());
  directed.erase(std::unique(directed.begin(), directed.end()), directed.end());

  std::vector<SocialRecord> records;
  records.reserve(directed.size());
  for (const auto& e : directed) records.push_back({index.user_raw(e.a), index.user_raw(e.b)});
  return records;
}

std::vector<SocialRecord> load_social(const std::filesystem::path& path, const IdIndex& index,
                                      std::size_t* directed_relations) {
  auto in = open_input(path);
  return parse_social(in, index, path.string(), directed_relations);
}

EdgeSet social_edge_set(const std::vector<SocialRecord>& records, const IdIndex& index) {
  std::vector<Edge> edges;
  edges.reserve(records.size());
  for (const auto& r : records) {
    const Index a = index.user(r.user_raw_id);
    const Index b = index.user(r.friend_raw_id);
    if (a < 0 || b < 0) throw ConfigError("social record references unknown user");
    edges.push_back({a, b});
  }
  return EdgeSet::social(index.users(), std::move(edges));
}

DatasetSplit split_interactions(const std::vector<InteractionRecord>& records,
                                const IdIndex& index, std::array<double, 3> ratios,
                                std::uint64_t seed) {
  const std::size_t total = records.size();
  if (total < 10) {
    throw ConfigError("need at least 10 interactions to split 8:1:1-style, got " +
                      std::to_string(total));
  }
  for (double r : ratios) {
    if (!(r > 0.0) || !std::isfinite(r)) throw ConfigError("split ratios must be positive");
  }
  const double sum = ratios[0] + ratios[1] + ratios[2];
  const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(total) * ratios[1] / sum));
  const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(total) * ratios[2] / sum));

  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<Fold> assignment(total, Fold::Train);
  for (std::size_t k = 0; k < n_val; ++k) assignment[order[k]] = Fold::Validation;
  for (std::size_t k = n_val; k < n_val + n_test; ++k) assignment[order[k]] = Fold::Test;

  // Each fold keeps record order so that a split read back from its manifest
  // is identical to the one produced here.
  DatasetSplit split;
  split.seed = seed;
  for (std::size_t k = 0; k < total; ++k) {
    const Index u = index.user(records[k].user_raw_id);
    const Index i = index.item(records[k].item_raw_id);
    if (u < 0 || i < 0) throw ConfigError("record not covered by the id index");
    switch (assignment[k]) {
      case Fold::Train: split.train.push_back({u, i}); break;
      case Fold::Validation: split.validation.push_back({u, i}); break;
      case Fold::Test: split.test.push_back({u, i}); break;
    }
  }
  return split;
}

std::vector<std::vector<Index>> Dataset::items_by_user(Fold fold) const {
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(users()));
  for (const auto& e : split.fold(fold)) out[e.a].push_back(e.b);
  for (auto& items : out) {
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
  }
  return out;
}

Dataset assemble_dataset(IdIndex index, DatasetSplit split, EdgeSet social_edges) {
  Dataset ds;
  ds.train_edges = EdgeSet::bipartite(index.users(), index.items(), split.train);
  if (social_edges.left_count != index.users() || !social_edges.square) {
    throw ShapeError("social edge set does not match the user count");
  }
  ds.social_edges = std::move(social_edges);
  ds.interaction_adjacency = build_interaction_adjacency(ds.train_edges);
  ds.social_adjacency = build_social_adjacency(ds.social_edges, true);
  ds.index = std::move(index);
  ds.split = std::move(split);
  return ds;
}

void write_split_manifest(const std::filesystem::path& path, const IdIndex& index,
                          const std::vector<InteractionRecord>& records,
                          const DatasetSplit& split) {
  // Recover the fold of each record by walking the folds in record order.
  std::array<std::size_t, 3> cursor{0, 0, 0};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "# user\titem\tfold\n";
  for (const auto& r : records) {
    const Edge e{index.user(r.user_raw_id), index.item(r.item_raw_id)};
    bool placed = false;
    for (Fold f : {Fold::Train, Fold::Validation, Fold::Test}) {
      const auto& edges = split.fold(f);
      auto& c = cursor[static_cast<std::size_t>(f)];
      if (c < edges.size() && edges[c] == e) {
        out << r.user_raw_id << '\t' << r.item_raw_id << '\t' << fold_name(f) << '\n';
        ++c;
        placed = true;
        break;
      }
    }
    if (!placed) throw ConfigError("split does not match the record list");
  }
  if (!out) throw IoError("write failure on " + path.string());
}

PreparedData read_split_manifest(const std::filesystem::path& path, std::uint64_t seed) {
  auto in = open_input(path);
  PreparedData data;
  data.split.seed = seed;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_fields(line);
    if (skip_line(fields)) continue;
    if (fields.size() < 3) {
      throw ParseError(location(path.string(), line_no) + ": expected 'user item fold'");
    }
    const Index u = data.index.add_user(std::string(fields[0]));
    const Index i = data.index.add_item(std::string(fields[1]));
    Fold fold{};
    try {
      fold = parse_fold(std::string(fields[2]));
    } catch (const ConfigError& e) {
      throw ParseError(location(path.string(), line_no) + ": " + e.what());
    }
    switch (fold) {
      case Fold::Train: data.split.train.push_back({u, i}); break;
      case Fold::Validation: data.split.validation.push_back({u, i}); break;
      case Fold::Test: data.split.test.push_back({u, i}); break;
    }
  }
  return data;
}

void write_social_edges(const std::filesystem::path& path, const IdIndex& index,
                        const EdgeSet& edges) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "# user\tfriend (undirected, one line per edge)\n";
  for (const auto& e : edges.edges) {
    out << index.user_raw(e.a) << '\t' << index.user_raw(e.b) << '\n';
  }
  if (!out) throw IoError("write failure on " + path.string());
}

EdgeSet read_social_edges(const std::filesystem::path& path, const IdIndex& index) {
  auto in = open_input(path);
  return social_edge_set(parse_social(in, index, path.string()), index);
}

DatasetStats compute_stats(const IdIndex& index, std::size_t ratings, std::size_t relations) {
  DatasetStats s;
  s.users = index.users();
  s.items = index.items();
  s.ratings = ratings;
  s.relations = relations;
  const double cells = static_cast<double>(s.users) * static_cast<double>(s.items);
  s.density = cells > 0 ? static_cast<double>(ratings) / cells : 0.0;
  return s;
}

}  // namespace dcrec
