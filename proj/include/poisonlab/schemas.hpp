#pragma once

// JSON Schemas (draft 2020-12 subset) for every payload the service publishes.

#include <map>
#include <string>
#include <string_view>

#include "poisonlab/dataset.hpp"

namespace poisonlab {

namespace detail {

inline constexpr std::string_view kMetricsSchema = R"({
  "type": "object",
  "required": ["tn", "fn", "tp", "fp", "accuracy", "recall", "f1", "roc_auc"],
  "properties": {
    "tn": {"type": "integer", "minimum": 0},
    "fn": {"type": "integer", "minimum": 0},
    "tp": {"type": "integer", "minimum": 0},
    "fp": {"type": "integer", "minimum": 0},
    "accuracy": {"type": "number", "minimum": 0, "maximum": 1},
    "recall": {"type": "number", "minimum": 0, "maximum": 1},
    "f1": {"type": "number", "minimum": 0, "maximum": 1},
    "roc_auc": {"type": "number", "minimum": 0, "maximum": 1}
  }
})";

inline std::string with_metrics(std::string_view text) {
  std::string out(text);
  const std::string marker = "\"$metrics\"";
  for (auto pos = out.find(marker); pos != std::string::npos; pos = out.find(marker)) {
    out.replace(pos, marker.size(), kMetricsSchema);
  }
  return out;
}

}  // namespace detail

/// Schema names: overview, projection, instances, features, graph, sweep, attack, job, session, error.
inline const std::map<std::string, std::string, std::less<>>& schemas() {
  static const std::map<std::string, std::string, std::less<>> table = [] {
    std::map<std::string, std::string, std::less<>> t;
    t["overview"] = detail::with_metrics(R"({
  "title": "overview",
  "type": "object",
  "required": ["victim_model", "poisoned_model", "target_id", "desired_label", "success", "poison_count",
               "poisoning_rate", "victim_metrics", "poisoned_metrics"],
  "properties": {
    "victim_model": {"type": "string"},
    "poisoned_model": {"type": "string"},
    "target_id": {"type": "integer", "minimum": 0},
    "desired_label": {"enum": [1, -1]},
    "success": {"type": "boolean"},
    "poison_count": {"type": "integer", "minimum": 0},
    "poisoning_rate": {"type": "number", "minimum": 0, "maximum": 1},
    "victim_metrics": "$metrics",
    "poisoned_metrics": "$metrics"
  }
})");
    t["projection"] = R"({
  "title": "projection",
  "type": "array",
  "items": {
    "type": "object",
    "required": ["id", "x", "y"],
    "properties": {
      "id": {"type": "integer", "minimum": 0},
      "x": {"type": "number"},
      "y": {"type": "number"}
    }
  }
})";
    t["instances"] = R"({
  "title": "instances",
  "type": "array",
  "items": {
    "type": "object",
    "required": ["id", "kind", "victim_probability", "poisoned_probability", "victim_dbd", "poisoned_dbd",
                 "victim_label", "poisoned_label", "flipped"],
    "properties": {
      "id": {"type": "integer", "minimum": 0},
      "kind": {"enum": ["target", "innocent", "poison", "other"]},
      "victim_probability": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
      "poisoned_probability": {"type": "number", "minimum": 0, "maximum": 1},
      "victim_dbd": {"type": ["number", "null"], "minimum": 0},
      "poisoned_dbd": {"type": ["number", "null"], "minimum": 0},
      "victim_label": {"enum": [1, -1, null]},
      "poisoned_label": {"enum": [1, -1]},
      "flipped": {"type": "boolean"}
    }
  }
})";
    t["features"] = R"({
  "title": "features",
  "type": "array",
  "items": {
    "type": "object",
    "required": ["feature", "name", "bin_edges", "histograms", "variance", "victim_importance",
                 "poisoned_importance", "victim_rank", "poisoned_rank", "rank_delta"],
    "properties": {
      "feature": {"type": "integer", "minimum": 0},
      "name": {"type": "string"},
      "bin_edges": {"type": "array", "items": {"type": "number"}, "minItems": 3},
      "histograms": {
        "type": "object",
        "required": ["negative", "positive", "poison"],
        "properties": {
          "negative": {"type": "array", "items": {"type": "integer", "minimum": 0}},
          "positive": {"type": "array", "items": {"type": "integer", "minimum": 0}},
          "poison": {"type": "array", "items": {"type": "integer", "minimum": 0}}
        }
      },
      "variance": {
        "type": "object",
        "required": ["negative", "positive", "poison"],
        "properties": {
          "negative": {"type": "number", "minimum": 0},
          "positive": {"type": "number", "minimum": 0},
          "poison": {"type": "number", "minimum": 0}
        }
      },
      "victim_importance": {"type": "number", "minimum": 0},
      "poisoned_importance": {"type": "number", "minimum": 0},
      "victim_rank": {"type": "integer", "minimum": 1},
      "poisoned_rank": {"type": "integer", "minimum": 1},
      "rank_delta": {"type": "integer"}
    }
  }
})";
    t["graph"] = R"({
  "title": "graph",
  "type": "object",
  "required": ["k", "nodes", "edges", "connectors"],
  "properties": {
    "k": {"type": "integer", "minimum": 1},
    "nodes": {
      "type": "array",
      "items": {
        "type": "object",
        "required": ["id", "type", "victim_prediction", "poisoned_prediction", "poisoned_probability", "flipped",
                     "inner_ring", "outer_ring", "neighbors_before", "neighbors_after", "total_outgoing_impact"],
        "properties": {
          "id": {"type": "integer", "minimum": 0},
          "type": {"enum": ["target", "poison", "innocent", "context"]},
          "victim_prediction": {"enum": [1, -1, null]},
          "poisoned_prediction": {"enum": [1, -1]},
          "poisoned_probability": {"type": "number", "minimum": 0, "maximum": 1},
          "flipped": {"type": "boolean"},
          "inner_ring": {
            "type": "object",
            "required": ["negative", "positive"],
            "properties": {
              "negative": {"type": "integer", "minimum": 0},
              "positive": {"type": "integer", "minimum": 0}
            }
          },
          "outer_ring": {
            "type": "object",
            "required": ["negative", "positive", "poison"],
            "properties": {
              "negative": {"type": "integer", "minimum": 0},
              "positive": {"type": "integer", "minimum": 0},
              "poison": {"type": "integer", "minimum": 0}
            }
          },
          "neighbors_before": {"type": "array", "items": {"type": "integer", "minimum": 0}},
          "neighbors_after": {"type": "array", "items": {"type": "integer", "minimum": 0}},
          "total_outgoing_impact": {"type": "number", "minimum": 0}
        }
      }
    },
    "edges": {
      "type": "array",
      "items": {
        "type": "object",
        "required": ["from", "to", "impact"],
        "properties": {
          "from": {"type": "integer", "minimum": 0},
          "to": {"type": "integer", "minimum": 0},
          "impact": {"type": ["number", "null"], "minimum": 0, "maximum": 1}
        }
      }
    },
    "connectors": {
      "type": "array",
      "items": {
        "type": "object",
        "required": ["from", "to", "distance"],
        "properties": {
          "from": {"type": "integer", "minimum": 0},
          "to": {"type": "integer", "minimum": 0},
          "distance": {"type": "number", "minimum": 0}
        }
      }
    }
  }
})";
    t["sweep"] = detail::with_metrics(R"({
  "title": "sweep",
  "type": "object",
  "required": ["victim_metrics", "cap", "algorithms", "rows"],
  "properties": {
    "victim_metrics": "$metrics",
    "cap": {"type": "integer", "minimum": 0},
    "algorithms": {"type": "array", "items": {"enum": ["binary_search", "stingray"]}},
    "total_rows": {"type": "integer", "minimum": 0},
    "page": {"type": "integer", "minimum": 0},
    "rows": {
      "type": "array",
      "items": {
        "type": "object",
        "required": ["id", "label", "predicted", "dbd", "error", "algorithms"],
        "properties": {
          "id": {"type": "integer", "minimum": 0},
          "label": {"enum": [1, -1]},
          "predicted": {"enum": [1, -1]},
          "dbd": {"type": ["number", "null"], "minimum": 0},
          "error": {"type": ["string", "null"]},
          "algorithms": {
            "type": "object",
            "additionalProperties": {
              "type": "object",
              "required": ["mcsa", "risk", "metrics", "error"],
              "properties": {
                "mcsa": {"type": ["integer", "null"], "minimum": 0},
                "risk": {"enum": ["high", "intermediate", "low", "unknown"]},
                "metrics": "$metrics",
                "error": {"type": ["string", "null"]}
              }
            }
          }
        }
      }
    }
  }
})");
    t["attack"] = R"({
  "title": "attack",
  "type": "object",
  "required": ["target_id", "desired_label", "success", "poison_count", "poisoning_rate", "original_size",
               "config", "poisons", "innocents", "victim_model", "poisoned_model", "trace"],
  "properties": {
    "target_id": {"type": "integer", "minimum": 0},
    "desired_label": {"enum": [1, -1]},
    "success": {"type": "boolean"},
    "poison_count": {"type": "integer", "minimum": 0},
    "poisoning_rate": {"type": "number", "minimum": 0, "maximum": 1},
    "original_size": {"type": "integer", "minimum": 2},
    "config": {"type": "object", "required": ["algorithm", "budget", "seed"]},
    "poisons": {
      "type": "array",
      "items": {
        "type": "object",
        "required": ["id", "label", "features"],
        "properties": {
          "id": {"type": "integer", "minimum": 0},
          "label": {"enum": [1, -1]},
          "features": {"type": "array", "items": {"type": "number"}}
        }
      }
    },
    "innocents": {"type": "array", "items": {"type": "integer", "minimum": 0}},
    "victim_model": {"type": "object", "required": ["weights", "bias", "config", "trained_on"]},
    "poisoned_model": {"type": "object", "required": ["weights", "bias", "config", "trained_on"]},
    "trace": {"type": "array", "items": {"type": "object", "required": ["base_id", "candidate", "accepted"]}}
  }
})";
    t["job"] = R"({
  "title": "job",
  "type": "object",
  "required": ["id", "kind", "state", "progress"],
  "properties": {
    "id": {"type": "string"},
    "kind": {"enum": ["sweep", "attack"]},
    "state": {"enum": ["pending", "running", "done", "failed"]},
    "progress": {"type": "number", "minimum": 0, "maximum": 1},
    "error": {"type": ["string", "null"]},
    "result": {"type": ["string", "null"]}
  }
})";
    t["session"] = R"({
  "title": "session",
  "type": "object",
  "required": ["id", "size", "dim", "feature_names", "seed"],
  "properties": {
    "id": {"type": "string"},
    "size": {"type": "integer", "minimum": 2},
    "dim": {"type": "integer", "minimum": 1},
    "feature_names": {"type": "array", "items": {"type": "string"}},
    "seed": {"type": "integer", "minimum": 0},
    "positive": {"type": "integer", "minimum": 0},
    "negative": {"type": "integer", "minimum": 0}
  }
})";
    t["error"] = R"({
  "title": "error",
  "type": "object",
  "required": ["error"],
  "properties": {
    "error": {
      "type": "object",
      "required": ["code", "message"],
      "properties": {
        "code": {"type": "string"},
        "message": {"type": "string"}
      }
    }
  }
})";
    return t;
  }();
  return table;
}

inline const std::string& schema(std::string_view name) {
  const auto it = schemas().find(name);
  if (it == schemas().end()) throw DataError("unknown schema '" + std::string(name) + "'");
  return it->second;
}

}  // namespace poisonlab
