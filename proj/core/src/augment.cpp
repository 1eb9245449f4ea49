#include "dcrec/augment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "dcrec/log.hpp"

namespace dcrec {

namespace {

void check_rate(double rate) {
  if (!(rate >= 0.0 && rate <= 1.0)) {
    throw ConfigError("augmentation rate must lie in [0, 1], got " + std::to_string(rate));
  }
}

}  // namespace

AugmentationSpec AugmentationSpec::parse(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  AugmentationSpec spec;
  if (kind == "Identity" || kind == "identity" || kind == "none") {
    spec.kind = AugmentationKind::Identity;
  } else if (kind == "EdgeDrop" || kind == "edge_drop") {
    spec.kind = AugmentationKind::EdgeDrop;
  } else if (kind == "NodeDrop" || kind == "node_drop") {
    spec.kind = AugmentationKind::NodeDrop;
  } else if (kind == "EdgeAdd" || kind == "edge_add") {
    spec.kind = AugmentationKind::EdgeAdd;
  } else {
    throw ConfigError("unknown augmentation '" + kind + "'");
  }
  if (colon != std::string::npos) {
    try {
      std::size_t used = 0;
      spec.rate = std::stod(text.substr(colon + 1), &used);
      if (used != text.size() - colon - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ConfigError("bad augmentation rate in '" + text + "'");
    }
  } else if (spec.kind != AugmentationKind::Identity) {
    throw ConfigError("augmentation '" + text + "' needs a rate, e.g. EdgeDrop:0.1");
  }
  check_rate(spec.rate);
  return spec;
}

std::string AugmentationSpec::to_string() const {
  const char* name = "Identity";
  switch (kind) {
    case AugmentationKind::Identity: name = "Identity"; break;
    case AugmentationKind::EdgeDrop: name = "EdgeDrop"; break;
    case AugmentationKind::NodeDrop: name = "NodeDrop"; break;
    case AugmentationKind::EdgeAdd: name = "EdgeAdd"; break;
  }
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), rate);
  return std::string(name) + ':' + std::string(buf, ptr);
}

void AugmentationSpec::validate(GraphDomain domain) const {
  check_rate(rate);
  if (kind == AugmentationKind::EdgeAdd && domain == GraphDomain::Collaborative) {
    throw ConfigError("EdgeAdd applies only to the social graph");
  }
}

EdgeSet edge_dropout(const EdgeSet& edges, double rate, std::uint64_t seed) {
  check_rate(rate);
  if (rate == 0.0) return edges;
  EdgeSet out{edges.left_count, edges.right_count, edges.square, {}};
  if (rate == 1.0) return out;
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution keep(1.0 - rate);
  out.edges.reserve(edges.size());
  for (const auto& e : edges.edges) {
    if (keep(rng)) out.edges.push_back(e);
  }
  return out;
}

EdgeSet node_dropout(const EdgeSet& edges, double rate, std::uint64_t seed) {
  check_rate(rate);
  if (rate == 0.0) return edges;
  const Index nodes = edges.node_count();
  const auto drop_count = static_cast<std::size_t>(std::floor(rate * nodes));
  std::vector<Index> order(static_cast<std::size_t>(nodes));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first drop_count entries are a uniform subset.
  for (std::size_t k = 0; k < drop_count; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, order.size() - 1);
    std::swap(order[k], order[pick(rng)]);
  }
  std::vector<char> dropped(static_cast<std::size_t>(nodes), 0);
  for (std::size_t k = 0; k < drop_count; ++k) dropped[order[k]] = 1;

  const Index offset = edges.square ? 0 : edges.left_count;
  EdgeSet out{edges.left_count, edges.right_count, edges.square, {}};
  for (const auto& e : edges.edges) {
    if (!dropped[e.a] && !dropped[e.b + offset]) out.edges.push_back(e);
  }
  return out;
}

EdgeSet edge_add(const EdgeSet& edges, double rate, std::uint64_t seed) {
  check_rate(rate);
  if (!edges.square) throw ConfigError("EdgeAdd applies only to the social graph");
  const auto wanted = static_cast<std::size_t>(std::floor(rate * static_cast<double>(edges.size())));
  if (wanted == 0) return edges;

  const auto m = static_cast<std::uint64_t>(edges.left_count);
  const std::uint64_t all_pairs = m * (m - 1) / 2;
  const std::uint64_t available = all_pairs - edges.size();

  EdgeSet out = edges;
  std::mt19937_64 rng(seed);
  if (available <= wanted) {
    if (available < wanted) {
      log::warn("edge_add: requested " + std::to_string(wanted) + " new edges but only " +
                std::to_string(available) + " absent pairs exist");
    }
    for (Index a = 0; a < edges.left_count; ++a) {
      for (Index b = a + 1; b < edges.left_count; ++b) {
        if (!edges.contains({a, b})) out.edges.push_back({a, b});
      }
    }
    out.normalize();
    return out;
  }

  std::set<Edge> added;
  std::uniform_int_distribution<Index> node(0, edges.left_count - 1);
  if (available < 4 * wanted) {
    // Dense regime: sample without replacement from the explicit complement.
    std::vector<Edge> complement;
    complement.reserve(available);
    for (Index a = 0; a < edges.left_count; ++a) {
      for (Index b = a + 1; b < edges.left_count; ++b) {
        if (!edges.contains({a, b})) complement.push_back({a, b});
      }
    }
    for (std::size_t k = 0; k < wanted; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, complement.size() - 1);
      std::swap(complement[k], complement[pick(rng)]);
      added.insert(complement[k]);
    }
  } else {
    while (added.size() < wanted) {
      Index a = node(rng);
      Index b = node(rng);
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      if (edges.contains({a, b})) continue;
      added.insert({a, b});
    }
  }
  out.edges.insert(out.edges.end(), added.begin(), added.end());
  out.normalize();
  return out;
}

EdgeSet apply_augmentation(const EdgeSet& edges, const AugmentationSpec& spec) {
  switch (spec.kind) {
    case AugmentationKind::Identity: return edges;
    case AugmentationKind::EdgeDrop: return edge_dropout(edges, spec.rate, spec.seed);
    case AugmentationKind::NodeDrop: return node_dropout(edges, spec.rate, spec.seed);
    case AugmentationKind::EdgeAdd: return edge_add(edges, spec.rate, spec.seed);
  }
  return edges;
}

SparseAdjacency normalize_for_domain(GraphDomain domain, const EdgeSet& edges) {
  if (domain == GraphDomain::Collaborative) return build_interaction_adjacency(edges);
  return build_social_adjacency(edges, true);
}

std::pair<AugmentedView, AugmentedView> make_views(GraphDomain domain, const EdgeSet& base,
                                                   const AugmentationSpec& first,
                                                   const AugmentationSpec& second) {
  if ((domain == GraphDomain::Social) != base.square) {
    throw ConfigError("edge set shape does not match the requested domain");
  }
  first.validate(domain);
  second.validate(domain);
  auto build = [&](const AugmentationSpec& spec, int id) {
    AugmentedView view;
    view.edges = apply_augmentation(base, spec);
    view.adjacency = normalize_for_domain(domain, view.edges);
    view.spec = spec;
    view.view_id = id;
    return view;
  };
  return {build(first, 1), build(second, 2)};
}

}  // namespace dcrec
