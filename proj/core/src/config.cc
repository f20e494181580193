/*
 * Copyright 2026 The fedsim Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "fedsim/config.h"

#include <charconv>
#include <cstdio>
#include <initializer_list>
#include <set>
#include <utility>

#include <nlohmann/json.hpp>

#include "fedsim/errors.h"
#include "fedsim/rng.h"

namespace fedsim {
namespace {

using nlohmann::json;

std::string_view TaskName(TaskKind kind) {
  return kind == TaskKind::kClassification ? "classification" : "next-token";
}

TaskKind ParseTask(const std::string& name) {
  if (name == "classification" || name == "classifier") return TaskKind::kClassification;
  if (name == "next-token") return TaskKind::kNextToken;
  throw ConfigError("unknown task '" + name + "'");
}

void RequireKeys(const json& object, const char* where, std::initializer_list<const char*> known) {
  if (!object.is_object()) throw ConfigError(std::string(where) + " must be an object");
  std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& item : object.items()) {
    if (!allowed.count(item.key())) {
      throw ConfigError("unknown config key '" + std::string(where) + "." + item.key() + "'");
    }
  }
}

template <typename T>
void Read(const json& object, const char* key, T& out) {
  if (auto it = object.find(key); it != object.end()) out = it->template get<T>();
}

json ScenarioToJson(const ScenarioSpec& s) {
  json corruptions = json::array();
  for (const Corruption& c : s.corruptions) {
    corruptions.push_back({{"agents", c.agents},
                           {"treatment", std::string(TreatmentName(c.treatment))},
                           {"magnitude", c.magnitude}});
  }
  json external = nullptr;
  if (s.external) {
    external = {{"format", s.external->format},
                {"path", s.external->path},
                {"eval_fraction", s.external->eval_fraction}};
  }
  return {{"task", std::string(TaskName(s.task))},
          {"num_agents", s.num_agents},
          {"samples_per_agent", s.samples_per_agent},
          {"eval_samples", s.eval_samples},
          {"corruptions", corruptions},
          {"num_classes", s.num_classes},
          {"feature_dim", s.feature_dim},
          {"class_separation", s.class_separation},
          {"vocabulary", s.vocabulary},
          {"context_window", s.context_window},
          {"successors", s.successors},
          {"external", external}};
}

ScenarioSpec ScenarioFromJson(const json& j, ScenarioSpec s) {
  RequireKeys(j, "scenario",
              {"task", "num_agents", "samples_per_agent", "eval_samples", "corruptions",
               "num_classes", "feature_dim", "class_separation", "vocabulary", "context_window",
               "successors", "external"});
  if (j.contains("task")) s.task = ParseTask(j["task"].get<std::string>());
  Read(j, "num_agents", s.num_agents);
  Read(j, "samples_per_agent", s.samples_per_agent);
  Read(j, "eval_samples", s.eval_samples);
  Read(j, "num_classes", s.num_classes);
  Read(j, "feature_dim", s.feature_dim);
  Read(j, "class_separation", s.class_separation);
  Read(j, "vocabulary", s.vocabulary);
  Read(j, "context_window", s.context_window);
  Read(j, "successors", s.successors);
  if (j.contains("corruptions")) {
    s.corruptions.clear();
    for (const json& c : j["corruptions"]) {
      RequireKeys(c, "scenario.corruptions[]", {"agents", "treatment", "magnitude"});
      Corruption corruption;
      corruption.agents = c.at("agents").get<std::vector<AgentId>>();
      corruption.treatment = ParseTreatment(c.at("treatment").get<std::string>());
      Read(c, "magnitude", corruption.magnitude);
      s.corruptions.push_back(std::move(corruption));
    }
  }
  if (j.contains("external")) {
    if (j["external"].is_null()) {
      s.external.reset();
    } else {
      RequireKeys(j["external"], "scenario.external", {"format", "path", "eval_fraction"});
      ExternalSource src = s.external.value_or(ExternalSource{});
      Read(j["external"], "format", src.format);
      Read(j["external"], "path", src.path);
      Read(j["external"], "eval_fraction", src.eval_fraction);
      s.external = std::move(src);
    }
  }
  return s;
}

json ModelToJson(const ModelSpec& m) {
  return {{"kind", std::string(TaskName(m.kind))},
          {"input_dim", m.input_dim},
          {"hidden_dims", m.hidden_dims},
          {"output_dim", m.output_dim},
          {"context_window", m.context_window}};
}

ModelSpec ModelFromJson(const json& j, ModelSpec m) {
  RequireKeys(j, "model", {"kind", "input_dim", "hidden_dims", "output_dim", "context_window"});
  if (j.contains("kind")) m.kind = ParseTask(j["kind"].get<std::string>());
  Read(j, "input_dim", m.input_dim);
  Read(j, "hidden_dims", m.hidden_dims);
  Read(j, "output_dim", m.output_dim);
  Read(j, "context_window", m.context_window);
  return m;
}

json ToJsonDoc(const ExperimentConfig& c) {
  return {
      {"preset", c.preset},
      {"scenario", ScenarioToJson(c.scenario)},
      {"model", ModelToJson(c.model)},
      {"trainer",
       {{"local_epochs", c.trainer.local_epochs},
        {"batch_size", c.trainer.batch_size},
        {"learning_rate", c.trainer.learning_rate}}},
      {"aggregation",
       {{"stepsize", c.aggregation.stepsize},
        {"dp_weight", c.aggregation.dp_weight},
        {"dp_sigma", c.aggregation.dp_sigma},
        {"norm_order", c.aggregation.norm_order}}},
      {"attention", {{"negate_scores", c.aggregation.negate_scores}}},
      {"selection", {{"fraction", c.selection_fraction}}},
      {"gamma", c.gamma},
      {"impact", {{"share_dp_noise", c.share_dp_noise}}},
      {"contribution", {{"every_n_rounds", c.contribution_every_n_rounds}}},
      {"rounds", c.rounds},
      {"master_seed", c.master_seed},
      {"aggregator", c.aggregator == Aggregator::kAttention ? "attention" : "fedavg"},
      {"fedavg", {{"weighted", c.weighted_fedavg}}},
      {"shapley", c.shapley.ToString()},
      {"output_dir", c.output_dir},
      {"workers", c.workers},
  };
}

ExperimentConfig FromJsonDoc(const json& doc) {
  RequireKeys(doc, "config",
              {"preset", "scenario", "model", "trainer", "aggregation", "attention", "selection",
               "gamma", "impact", "contribution", "rounds", "master_seed", "aggregator", "fedavg",
               "shapley", "output_dir", "workers"});
  const std::string preset = doc.value("preset", std::string("normal"));
  ExperimentConfig c = DefaultConfig(preset);
  if (doc.contains("scenario")) c.scenario = ScenarioFromJson(doc["scenario"], c.scenario);
  c.model = DefaultModelFor(c.scenario);
  if (doc.contains("model")) c.model = ModelFromJson(doc["model"], c.model);
  if (doc.contains("trainer")) {
    const json& t = doc["trainer"];
    RequireKeys(t, "trainer", {"local_epochs", "batch_size", "learning_rate"});
    Read(t, "local_epochs", c.trainer.local_epochs);
    Read(t, "batch_size", c.trainer.batch_size);
    Read(t, "learning_rate", c.trainer.learning_rate);
  }
  if (doc.contains("aggregation")) {
    const json& a = doc["aggregation"];
    RequireKeys(a, "aggregation", {"stepsize", "dp_weight", "dp_sigma", "norm_order"});
    Read(a, "stepsize", c.aggregation.stepsize);
    Read(a, "dp_weight", c.aggregation.dp_weight);
    Read(a, "dp_sigma", c.aggregation.dp_sigma);
    Read(a, "norm_order", c.aggregation.norm_order);
  }
  if (doc.contains("attention")) {
    RequireKeys(doc["attention"], "attention", {"negate_scores"});
    Read(doc["attention"], "negate_scores", c.aggregation.negate_scores);
  }
  if (doc.contains("selection")) {
    RequireKeys(doc["selection"], "selection", {"fraction"});
    Read(doc["selection"], "fraction", c.selection_fraction);
  }
  if (doc.contains("impact")) {
    RequireKeys(doc["impact"], "impact", {"share_dp_noise"});
    Read(doc["impact"], "share_dp_noise", c.share_dp_noise);
  }
  if (doc.contains("contribution")) {
    RequireKeys(doc["contribution"], "contribution", {"every_n_rounds"});
    Read(doc["contribution"], "every_n_rounds", c.contribution_every_n_rounds);
  }
  if (doc.contains("fedavg")) {
    RequireKeys(doc["fedavg"], "fedavg", {"weighted"});
    Read(doc["fedavg"], "weighted", c.weighted_fedavg);
  }
  Read(doc, "gamma", c.gamma);
  Read(doc, "rounds", c.rounds);
  Read(doc, "master_seed", c.master_seed);
  Read(doc, "output_dir", c.output_dir);
  Read(doc, "workers", c.workers);
  if (doc.contains("aggregator")) {
    const auto name = doc["aggregator"].get<std::string>();
    if (name == "attention") {
      c.aggregator = Aggregator::kAttention;
    } else if (name == "fedavg") {
      c.aggregator = Aggregator::kFedAvg;
    } else {
      throw ConfigError("aggregator must be 'attention' or 'fedavg'");
    }
  }
  if (doc.contains("shapley")) c.shapley = ShapleyMode::Parse(doc["shapley"].get<std::string>());
  c.Validate();
  return c;
}

void ApplyOverrideToDoc(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = raw;
  json* node = &doc;
  std::size_t begin = 0;
  while (true) {
    const auto dot = key.find('.', begin);
    const std::string part = key.substr(begin, dot == std::string::npos ? dot : dot - begin);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty segment");
    if (!node->is_object()) *node = json::object();
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    begin = dot + 1;
  }
}

}  // namespace

ShapleyMode ShapleyMode::Parse(std::string_view text) {
  if (text == "off") return {};
  if (text == "exact") return {Kind::kExact, 0};
  if (text.size() > 4 && text.substr(0, 3) == "mc(" && text.back() == ')') {
    int m = 0;
    const auto digits = text.substr(3, text.size() - 4);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), m);
    if (ec == std::errc() && ptr == digits.data() + digits.size() && m >= 1) {
      return {Kind::kMonteCarlo, m};
    }
  }
  throw ConfigError("shapley must be 'off', 'exact' or 'mc(M)' with M >= 1, got '" +
                    std::string(text) + "'");
}

std::string ShapleyMode::ToString() const {
  switch (kind) {
    case Kind::kOff: return "off";
    case Kind::kExact: return "exact";
    case Kind::kMonteCarlo: return "mc(" + std::to_string(iterations) + ")";
  }
  return "off";
}

void ExperimentConfig::Validate() const {
  scenario.Validate();
  model.Validate();
  trainer.Validate();
  aggregation.Validate();
  selection().Validate();
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must be in (0, 1)");
  if (rounds < 1) throw ConfigError("rounds must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (contribution_every_n_rounds < 1) {
    throw ConfigError("contribution.every_n_rounds must be >= 1");
  }
  if (model.kind != scenario.task) throw ConfigError("model.kind does not match scenario.task");
  if (!scenario.external) {
    if (model.kind == TaskKind::kClassification) {
      if (model.input_dim != scenario.feature_dim || model.output_dim != scenario.num_classes) {
        throw ConfigError("classifier dimensions must match scenario.feature_dim/num_classes");
      }
    } else if (model.output_dim != scenario.vocabulary ||
               model.context_window != scenario.context_window) {
      throw ConfigError("next-token model must match scenario.vocabulary/context_window");
    }
  }
}

ModelSpec DefaultModelFor(const ScenarioSpec& scenario) {
  ModelSpec m;
  m.kind = scenario.task;
  if (scenario.task == TaskKind::kClassification) {
    m.input_dim = scenario.feature_dim;
    m.hidden_dims = {32};
    m.output_dim = scenario.num_classes;
  } else {
    m.input_dim = 8;
    m.hidden_dims = {32};
    m.output_dim = scenario.vocabulary;
    m.context_window = scenario.context_window;
  }
  return m;
}

ExperimentConfig DefaultConfig(std::string_view preset) {
  ExperimentConfig c;
  c.preset = std::string(preset);
  c.scenario = ScenarioPreset(preset);
  c.model = DefaultModelFor(c.scenario);
  return c;
}

ExperimentConfig ParseConfig(std::string_view json_text,
                             std::span<const std::string> overrides) {
  json doc;
  try {
    doc = json_text.empty() ? json::object() : json::parse(json_text);
    for (const std::string& o : overrides) ApplyOverrideToDoc(doc, o);
    return FromJsonDoc(doc);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

std::string SerializeConfig(const ExperimentConfig& config) {
  return ToJsonDoc(config).dump(2);
}

std::string RunId(const ExperimentConfig& config) {
  json doc = ToJsonDoc(config);
  doc.erase("output_dir");
  doc.erase("workers");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(Fnv1a64(doc.dump())));
  return buf;
}

}  // namespace fedsim
