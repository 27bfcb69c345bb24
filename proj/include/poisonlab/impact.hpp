#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "poisonlab/attacks.hpp"
#include "poisonlab/classifier.hpp"
#include "poisonlab/dataset.hpp"

namespace poisonlab {

/// Leave-one-out influence: retrain without `removed_id` and return the absolute change in
/// the probe's positive-class probability relative to `baseline_probability`.
inline double relative_impact(const Dataset& poisoned_dataset, std::size_t removed_id, std::size_t probe_id,
                              const ModelConfig& model_config, double baseline_probability) {
  if (removed_id == probe_id) throw DataError("removed and probe instance must differ");
  const Instance& probe = poisoned_dataset.by_id(probe_id);
  const Dataset reduced = poisoned_dataset.without_id(removed_id);
  if (reduced.count(Label::Positive) == 0 || reduced.count(Label::Negative) == 0) {
    throw DataError("removing instance " + std::to_string(removed_id) + " leaves a single-class dataset");
  }
  const Model retrained = train(reduced, model_config);
  return std::abs(predict_proba(retrained, probe.features) - baseline_probability);
}

/// Ids of the k nearest instances to `point` (Euclidean; ties by position), skipping `exclude`.
inline std::vector<std::size_t> k_nearest(const Dataset& dataset, std::span<const double> point, std::size_t k,
                                          std::optional<std::size_t> exclude) {
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(dataset.size());
  for (std::size_t pos = 0; pos < dataset.size(); ++pos) {
    if (exclude && dataset[pos].id == *exclude) continue;
    scored.emplace_back(squared_distance(dataset[pos].features, point), pos);
  }
  k = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end());
  std::vector<std::size_t> ids;
  ids.reserve(k);
  for (std::size_t i = 0; i < k; ++i) ids.push_back(dataset[scored[i].second].id);
  return ids;
}

enum class NodeType { Target, Poison, Innocent, Context };

inline constexpr std::string_view to_string(NodeType t) {
  switch (t) {
    case NodeType::Target: return "target";
    case NodeType::Poison: return "poison";
    case NodeType::Innocent: return "innocent";
    case NodeType::Context: return "context";
  }
  return "context";
}

struct LocalImpactNode {
  std::size_t instance_id = 0;
  NodeType node_type = NodeType::Context;
  std::optional<Label> victim_prediction;  // absent for poisons
  Label poisoned_prediction = Label::Negative;
  double poisoned_probability = 0.0;
  bool flipped = false;
  std::array<std::size_t, 2> inner_ring{};  // {negative, positive} over k nearest originals
  std::array<std::size_t, 3> outer_ring{};  // {negative, positive, poison} over k nearest in poisoned data
  std::vector<std::size_t> neighbors_before;  // k nearest original instances
  std::vector<std::size_t> neighbors_after;   // k nearest in the poisoned dataset
  double total_outgoing_impact = 0.0;

  friend bool operator==(const LocalImpactNode&, const LocalImpactNode&) = default;
};

/// Directed kNN edge from a neighbour to the instance whose kNN list contains it.
struct ImpactEdge {
  std::size_t from = 0;
  std::size_t to = 0;
  std::optional<double> impact;  // absent on context-to-context edges

  friend bool operator==(const ImpactEdge&, const ImpactEdge&) = default;
};

struct ConnectorEdge {
  std::size_t from = 0;
  std::size_t to = 0;
  double distance = 0.0;

  friend bool operator==(const ConnectorEdge&, const ConnectorEdge&) = default;
};

struct LocalImpactGraph {
  std::size_t k = 0;
  std::vector<LocalImpactNode> nodes;  // ordered by instance id
  std::vector<ImpactEdge> edges;
  std::vector<ConnectorEdge> connector_edges;

  const LocalImpactNode* find(std::size_t id) const {
    const auto it = std::lower_bound(nodes.begin(), nodes.end(), id,
                                     [](const LocalImpactNode& n, std::size_t v) { return n.instance_id < v; });
    return it != nodes.end() && it->instance_id == id ? &*it : nullptr;
  }

  friend bool operator==(const LocalImpactGraph&, const LocalImpactGraph&) = default;
};

namespace detail {

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
};

}  // namespace detail

/// Greedy component joining: repeatedly link the closest pair of nodes lying in different
/// components until one component remains.
inline std::vector<ConnectorEdge> connect_components(const std::vector<std::vector<double>>& points,
                                                     const std::vector<std::size_t>& ids,
                                                     const std::vector<std::pair<std::size_t, std::size_t>>& links) {
  const std::size_t n = points.size();
  detail::DisjointSets sets(n);
  for (const auto& [a, b] : links) sets.unite(a, b);
  std::vector<ConnectorEdge> out;
  while (true) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_a = 0, best_b = 0;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        if (sets.find(a) == sets.find(b)) continue;
        const double d2 = squared_distance(points[a], points[b]);
        if (d2 < best) {
          best = d2;
          best_a = a;
          best_b = b;
        }
      }
    }
    if (!std::isfinite(best)) break;
    sets.unite(best_a, best_b);
    out.push_back({ids[best_a], ids[best_b], std::sqrt(best)});
  }
  return out;
}

/// Condensed kNN graph around the target, the poisons and the innocents, plus each of their
/// k nearest neighbours in the poisoned dataset. Edges touching a target, poison or innocent
/// carry the leave-one-out impact of the source on the destination under the poisoned model.
inline LocalImpactGraph build_local_impact_graph(const Dataset& victim_dataset, const AttackResult& result,
                                                 std::size_t k, const ModelConfig& model_config) {
  if (k < 1 || k >= victim_dataset.size()) {
    throw DataError("k must lie in [1, n-1], got " + std::to_string(k));
  }
  const Dataset poisoned = poisoned_dataset(victim_dataset, result);
  const Model& model = result.poisoned_model;

  std::map<std::size_t, NodeType> types;
  for (std::size_t id : result.innocents) types[id] = NodeType::Innocent;
  for (const auto& p : result.poisons) types[p.id] = NodeType::Poison;
  types[result.target_id] = NodeType::Target;

  std::map<std::size_t, std::vector<std::size_t>> after;
  const auto knn_after = [&](std::size_t id) -> const std::vector<std::size_t>& {
    auto it = after.find(id);
    if (it == after.end()) {
      it = after.emplace(id, k_nearest(poisoned, poisoned.by_id(id).features, k, id)).first;
    }
    return it->second;
  };

  std::set<std::size_t> node_ids;
  for (const auto& [id, type] : types) {
    node_ids.insert(id);
    for (std::size_t nb : knn_after(id)) node_ids.insert(nb);
  }

  LocalImpactGraph graph;
  graph.k = k;
  for (std::size_t id : node_ids) {
    const Instance& inst = poisoned.by_id(id);
    LocalImpactNode node;
    node.instance_id = id;
    const auto t = types.find(id);
    node.node_type = t == types.end() ? NodeType::Context : t->second;
    node.poisoned_prediction = predict(model, inst.features);
    node.poisoned_probability = predict_proba(model, inst.features);
    if (inst.provenance == Provenance::Original) {
      node.victim_prediction = predict(result.victim_model, inst.features);
      node.flipped = *node.victim_prediction != node.poisoned_prediction;
    }
    node.neighbors_before = k_nearest(victim_dataset, inst.features, k, id);
    for (std::size_t nb : node.neighbors_before) {
      ++node.inner_ring[victim_dataset.by_id(nb).label == Label::Positive ? 1 : 0];
    }
    node.neighbors_after = knn_after(id);
    for (std::size_t nb : node.neighbors_after) {
      const Instance& other = poisoned.by_id(nb);
      const std::size_t slot =
          other.provenance == Provenance::Poisoned ? 2 : (other.label == Label::Positive ? 1 : 0);
      ++node.outer_ring[slot];
    }
    graph.nodes.push_back(std::move(node));
  }

  // kNN edges within the node set; one leave-one-out retrain per distinct source.
  std::map<std::size_t, Model> without;
  for (const auto& node : graph.nodes) {
    for (std::size_t nb : node.neighbors_after) {
      if (!node_ids.contains(nb)) continue;
      ImpactEdge edge{nb, node.instance_id, std::nullopt};
      const bool relevant =
          node.node_type != NodeType::Context || graph.find(nb)->node_type != NodeType::Context;
      if (relevant) {
        auto it = without.find(nb);
        if (it == without.end()) {
          const Dataset reduced = poisoned.without_id(nb);
          if (reduced.count(Label::Positive) == 0 || reduced.count(Label::Negative) == 0) {
            throw DataError("removing instance " + std::to_string(nb) + " leaves a single-class dataset");
          }
          it = without.emplace(nb, train(reduced, model_config)).first;
        }
        const Instance& probe = poisoned.by_id(node.instance_id);
        edge.impact = std::abs(predict_proba(it->second, probe.features) - node.poisoned_probability);
      }
      graph.edges.push_back(edge);
    }
  }
  for (auto& node : graph.nodes) {
    if (node.node_type != NodeType::Poison) continue;
    for (const auto& e : graph.edges) {
      if (e.from == node.instance_id && e.impact) node.total_outgoing_impact += *e.impact;
    }
  }

  std::vector<std::vector<double>> points;
  std::vector<std::size_t> ids;
  std::map<std::size_t, std::size_t> slot_of;
  for (const auto& node : graph.nodes) {
    slot_of[node.instance_id] = ids.size();
    ids.push_back(node.instance_id);
    points.push_back(poisoned.by_id(node.instance_id).features);
  }
  std::vector<std::pair<std::size_t, std::size_t>> links;
  for (const auto& e : graph.edges) links.emplace_back(slot_of[e.from], slot_of[e.to]);
  graph.connector_edges = connect_components(points, ids, links);
  return graph;
}

}  // namespace poisonlab
