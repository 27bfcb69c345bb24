#pragma once

// JSON and CSV encodings of the workbench's payloads.

#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "poisonlab/attacks.hpp"
#include "poisonlab/classifier.hpp"
#include "poisonlab/dataset.hpp"
#include "poisonlab/impact.hpp"
#include "poisonlab/projection.hpp"
#include "poisonlab/reporting.hpp"
#include "poisonlab/vulnerability.hpp"

namespace poisonlab {

using Json = nlohmann::ordered_json;

namespace detail {

template <typename T>
Json optional_json(const std::optional<T>& value) {
  return value ? Json(*value) : Json(nullptr);
}

template <typename T>
void read_if(const Json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

inline Json label_json(Label l) { return to_int(l); }

inline Label label_from(const Json& j) {
  const int v = j.get<int>();
  if (v != 1 && v != -1) throw DataError("label must be 1 or -1");
  return v == 1 ? Label::Positive : Label::Negative;
}

}  // namespace detail

inline Json to_json(const Metrics& m) {
  return Json{{"tn", m.tn}, {"fn", m.fn}, {"tp", m.tp}, {"fp", m.fp},
              {"accuracy", m.accuracy}, {"recall", m.recall}, {"f1", m.f1}, {"roc_auc", m.roc_auc}};
}

inline Json to_json(const ModelConfig& c) {
  return Json{{"learning_rate", c.learning_rate},
              {"l2_lambda", c.l2_lambda},
              {"max_epochs", c.max_epochs},
              {"convergence_tol", c.convergence_tol}};
}

/// Missing keys keep their defaults.
inline ModelConfig model_config_from_json(const Json& j) {
  ModelConfig c;
  detail::read_if(j, "learning_rate", c.learning_rate);
  detail::read_if(j, "l2_lambda", c.l2_lambda);
  detail::read_if(j, "max_epochs", c.max_epochs);
  detail::read_if(j, "convergence_tol", c.convergence_tol);
  c.validate();
  return c;
}

inline Json to_json(const Model& m) {
  return Json{{"weights", m.weights}, {"bias", m.bias}, {"config", to_json(m.config)}, {"trained_on", m.trained_on}};
}

inline Model model_from_json(const Json& j) {
  Model m;
  m.weights = j.at("weights").get<std::vector<double>>();
  m.bias = j.at("bias").get<double>();
  m.config = model_config_from_json(j.at("config"));
  m.trained_on = j.at("trained_on").get<std::string>();
  return m;
}

inline Json to_json(const AttackConfig& c) {
  return Json{{"algorithm", std::string(to_string(c.algorithm))},
              {"budget", c.budget},
              {"bisection_cap", c.bisection_cap},
              {"candidate_count", c.candidate_count},
              {"perturb_fraction", c.perturb_fraction},
              {"perturb_scale", c.perturb_scale},
              {"seed", c.seed}};
}

inline AttackConfig attack_config_from_json(const Json& j, AttackConfig c = {}) {
  if (j.contains("algorithm")) c.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
  detail::read_if(j, "budget", c.budget);
  detail::read_if(j, "bisection_cap", c.bisection_cap);
  detail::read_if(j, "candidate_count", c.candidate_count);
  detail::read_if(j, "perturb_fraction", c.perturb_fraction);
  detail::read_if(j, "perturb_scale", c.perturb_scale);
  detail::read_if(j, "seed", c.seed);
  c.validate();
  return c;
}

inline Json to_json(const DbdConfig& c) {
  return Json{{"n_directions", c.n_directions}, {"step_length", c.step_length}, {"max_steps", c.max_steps},
              {"seed", c.seed}};
}

inline DbdConfig dbd_config_from_json(const Json& j) {
  DbdConfig c;
  detail::read_if(j, "n_directions", c.n_directions);
  detail::read_if(j, "step_length", c.step_length);
  detail::read_if(j, "max_steps", c.max_steps);
  detail::read_if(j, "seed", c.seed);
  c.validate();
  return c;
}

inline Json to_json(const ProjectionConfig& c) {
  return Json{{"perplexity", detail::optional_json(c.perplexity)},
              {"iterations", c.iterations},
              {"early_exaggeration", c.early_exaggeration},
              {"exaggeration_iterations", c.exaggeration_iterations},
              {"learning_rate", c.learning_rate},
              {"seed", c.seed}};
}

inline ProjectionConfig projection_config_from_json(const Json& j) {
  ProjectionConfig c;
  if (j.contains("perplexity") && !j.at("perplexity").is_null()) c.perplexity = j.at("perplexity").get<double>();
  detail::read_if(j, "iterations", c.iterations);
  detail::read_if(j, "early_exaggeration", c.early_exaggeration);
  detail::read_if(j, "exaggeration_iterations", c.exaggeration_iterations);
  detail::read_if(j, "learning_rate", c.learning_rate);
  detail::read_if(j, "seed", c.seed);
  return c;
}

/// Poison and candidate vectors are written on the raw (de-standardised) feature scale.
inline Json to_json(const AttackResult& r, const Dataset& dataset) {
  Json poisons = Json::array();
  for (const auto& p : r.poisons) {
    poisons.push_back(
        Json{{"id", p.id}, {"label", detail::label_json(p.label)}, {"features", dataset.raw_features(p.features)}});
  }
  Json trace = Json::array();
  for (const auto& it : r.trace) {
    trace.push_back(Json{{"base_id", detail::optional_json(it.base_id)},
                         {"candidate", it.candidate.empty() ? Json(nullptr) : Json(dataset.raw_features(it.candidate))},
                         {"accepted", it.accepted},
                         {"resets", it.resets},
                         {"target_probability", it.target_probability}});
  }
  return Json{{"target_id", r.target_id},
              {"desired_label", detail::label_json(r.desired_label)},
              {"success", r.success},
              {"poison_count", r.poisons.size()},
              {"poisoning_rate", r.poisoning_rate},
              {"original_size", r.original_size},
              {"config", to_json(r.config)},
              {"poisons", std::move(poisons)},
              {"innocents", r.innocents},
              {"victim_model", to_json(r.victim_model)},
              {"poisoned_model", to_json(r.poisoned_model)},
              {"trace", std::move(trace)}};
}

inline Json to_json(const ModelOverview& o) {
  return Json{{"victim_model", "victim"},
              {"poisoned_model", "poisoned"},
              {"target_id", o.target_id},
              {"desired_label", detail::label_json(o.desired_label)},
              {"success", o.success},
              {"poison_count", o.poison_count},
              {"poisoning_rate", o.poisoning_rate},
              {"victim_metrics", to_json(o.victim_metrics)},
              {"poisoned_metrics", to_json(o.poisoned_metrics)}};
}

inline Json to_json(const std::vector<InstanceAttributeRow>& rows) {
  Json out = Json::array();
  for (const auto& r : rows) {
    out.push_back(Json{{"id", r.instance_id},
                       {"kind", std::string(to_string(r.instance_kind))},
                       {"victim_probability", detail::optional_json(r.victim_probability)},
                       {"poisoned_probability", r.poisoned_probability},
                       {"victim_dbd", detail::optional_json(r.victim_dbd)},
                       {"poisoned_dbd", detail::optional_json(r.poisoned_dbd)},
                       {"victim_label", r.victim_label ? detail::label_json(*r.victim_label) : Json(nullptr)},
                       {"poisoned_label", detail::label_json(r.poisoned_label)},
                       {"flipped", r.flipped}});
  }
  return out;
}

inline Json to_json(const std::vector<FeatureReportRow>& rows) {
  Json out = Json::array();
  for (const auto& r : rows) {
    out.push_back(Json{{"feature", r.feature},
                       {"name", r.feature_name},
                       {"bin_edges", r.bin_edges},
                       {"histograms",
                        Json{{"negative", r.histograms[0]}, {"positive", r.histograms[1]}, {"poison", r.histograms[2]}}},
                       {"variance",
                        Json{{"negative", r.group_variance[0]},
                             {"positive", r.group_variance[1]},
                             {"poison", r.group_variance[2]}}},
                       {"victim_importance", r.victim_importance},
                       {"poisoned_importance", r.poisoned_importance},
                       {"victim_rank", r.victim_rank},
                       {"poisoned_rank", r.poisoned_rank},
                       {"rank_delta", r.rank_delta}});
  }
  return out;
}

inline Json to_json(const LocalImpactGraph& g) {
  Json nodes = Json::array();
  for (const auto& n : g.nodes) {
    nodes.push_back(Json{
        {"id", n.instance_id},
        {"type", std::string(to_string(n.node_type))},
        {"victim_prediction", n.victim_prediction ? detail::label_json(*n.victim_prediction) : Json(nullptr)},
        {"poisoned_prediction", detail::label_json(n.poisoned_prediction)},
        {"poisoned_probability", n.poisoned_probability},
        {"flipped", n.flipped},
        {"inner_ring", Json{{"negative", n.inner_ring[0]}, {"positive", n.inner_ring[1]}}},
        {"outer_ring", Json{{"negative", n.outer_ring[0]}, {"positive", n.outer_ring[1]}, {"poison", n.outer_ring[2]}}},
        {"neighbors_before", n.neighbors_before},
        {"neighbors_after", n.neighbors_after},
        {"total_outgoing_impact", n.total_outgoing_impact}});
  }
  Json edges = Json::array();
  for (const auto& e : g.edges) {
    edges.push_back(Json{{"from", e.from}, {"to", e.to}, {"impact", detail::optional_json(e.impact)}});
  }
  Json connectors = Json::array();
  for (const auto& c : g.connector_edges) {
    connectors.push_back(Json{{"from", c.from}, {"to", c.to}, {"distance", c.distance}});
  }
  return Json{{"k", g.k}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}, {"connectors", std::move(connectors)}};
}

inline Json to_json(const ProjectionResult& p) {
  Json out = Json::array();
  for (std::size_t i = 0; i < p.ids.size(); ++i) {
    out.push_back(Json{{"id", p.ids[i]}, {"x", p.coordinates[i][0]}, {"y", p.coordinates[i][1]}});
  }
  return out;
}

inline Json to_json(const SweepReport& s) {
  Json rows = Json::array();
  for (const auto& r : s.rows) {
    Json algs = Json::object();
    for (const auto& o : r.outcomes) {
      algs[std::string(column_name(o.algorithm))] = Json{{"mcsa", detail::optional_json(o.mcsa)},
                                                         {"risk", std::string(to_string(o.risk))},
                                                         {"metrics", to_json(o.post_attack_metrics)},
                                                         {"error", detail::optional_json(o.error)}};
    }
    rows.push_back(Json{{"id", r.instance_id},
                        {"label", detail::label_json(r.true_label)},
                        {"predicted", detail::label_json(r.predicted_label)},
                        {"dbd", detail::optional_json(r.dbd)},
                        {"error", detail::optional_json(r.error)},
                        {"algorithms", std::move(algs)}});
  }
  Json algorithms = Json::array();
  for (auto a : s.algorithms) algorithms.push_back(std::string(column_name(a)));
  return Json{{"victim_metrics", to_json(s.victim_metrics)},
              {"cap", s.cap},
              {"algorithms", std::move(algorithms)},
              {"rows", std::move(rows)}};
}

/// Columns: id, label, predicted, dbd, then mcsa_/risk_/accuracy_/recall_<alg> per algorithm.
/// Unreached DBDs are written as NA and failed MCSAs as "failed".
inline void write_sweep_csv(std::ostream& out, const SweepReport& s) {
  out << "id,label,predicted,dbd";
  for (auto a : s.algorithms) {
    const std::string n(column_name(a));
    out << ",mcsa_" << n << ",risk_" << n << ",accuracy_" << n << ",recall_" << n;
  }
  out << '\n';
  for (const auto& r : s.rows) {
    out << r.instance_id << ',' << to_int(r.true_label) << ',' << to_int(r.predicted_label) << ','
        << (r.dbd ? detail::format_double(*r.dbd) : "NA");
    for (const auto& o : r.outcomes) {
      out << ',' << (o.mcsa ? std::to_string(*o.mcsa) : (o.error ? "error" : "failed")) << ',' << to_string(o.risk)
          << ',' << detail::format_double(o.post_attack_metrics.accuracy) << ','
          << detail::format_double(o.post_attack_metrics.recall);
    }
    out << '\n';
  }
}

inline std::string sweep_csv(const SweepReport& s) {
  std::ostringstream out;
  write_sweep_csv(out, s);
  return out.str();
}

/// Canonical text form used for files, HTTP bodies and byte comparisons.
inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace poisonlab
