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

#include "fedsim/scenario.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <utility>

#include "fedsim/errors.h"

namespace fedsim {
namespace {

Dataset EmptyLike(TaskKind task, std::size_t width) {
  Dataset d;
  d.task = task;
  d.width = width;
  return d;
}

// ---- classification -------------------------------------------------------

struct Blobs {
  std::vector<std::vector<double>> means;
};

Blobs MakeBlobs(const ScenarioSpec& spec, RngStream& stream) {
  std::normal_distribution<double> normal(0.0, spec.class_separation);
  Blobs blobs;
  blobs.means.resize(static_cast<std::size_t>(spec.num_classes));
  for (auto& mean : blobs.means) {
    mean.resize(static_cast<std::size_t>(spec.feature_dim));
    for (double& v : mean) v = normal(stream);
  }
  return blobs;
}

// Exactly balanced labels (up to the remainder), in shuffled order.
Dataset SampleBlobs(const Blobs& blobs, int count, RngStream& stream) {
  const std::size_t classes = blobs.means.size();
  const std::size_t dim = blobs.means.front().size();
  Dataset d = EmptyLike(TaskKind::kClassification, dim);
  d.targets.resize(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < d.targets.size(); ++i) d.targets[i] = static_cast<int>(i % classes);
  std::shuffle(d.targets.begin(), d.targets.end(), stream);
  std::normal_distribution<double> noise(0.0, 1.0);
  d.features.resize(d.targets.size() * dim);
  for (std::size_t r = 0; r < d.targets.size(); ++r) {
    const auto& mean = blobs.means[static_cast<std::size_t>(d.targets[r])];
    for (std::size_t j = 0; j < dim; ++j) d.features[r * dim + j] = mean[j] + noise(stream);
  }
  return d;
}

// ---- next-token -----------------------------------------------------------

struct Grammar {
  int vocabulary;
  int successors;
  std::vector<int> next;        // token * successors + s
  std::vector<double> weights;  // cumulative weights, same indexing
};

Grammar MakeGrammar(const ScenarioSpec& spec, RngStream& stream) {
  Grammar g{spec.vocabulary, spec.successors, {}, {}};
  const auto pairs = static_cast<std::size_t>(spec.vocabulary);
  std::vector<int> tokens(static_cast<std::size_t>(spec.vocabulary));
  std::iota(tokens.begin(), tokens.end(), 0);
  std::exponential_distribution<double> gamma1(1.0);
  for (std::size_t p = 0; p < pairs; ++p) {
    std::shuffle(tokens.begin(), tokens.end(), stream);
    double total = 0.0;
    std::vector<double> w(static_cast<std::size_t>(spec.successors));
    for (double& x : w) total += (x = gamma1(stream));
    double cumulative = 0.0;
    for (int s = 0; s < spec.successors; ++s) {
      g.next.push_back(tokens[static_cast<std::size_t>(s)]);
      cumulative += w[static_cast<std::size_t>(s)] / total;
      g.weights.push_back(cumulative);
    }
    g.weights.back() = 1.0;
  }
  return g;
}

Dataset SampleGrammar(const Grammar& g, int context_window, int count, RngStream& stream) {
  Dataset d = EmptyLike(TaskKind::kNextToken, static_cast<std::size_t>(context_window));
  std::uniform_int_distribution<int> any(0, g.vocabulary - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> text;
  const std::size_t length = static_cast<std::size_t>(count + context_window);
  text.reserve(length);
  text.push_back(any(stream));
  while (text.size() < length) {
    const auto pair = static_cast<std::size_t>(text.back());
    const double u = unit(stream);
    const auto begin = g.weights.begin() + static_cast<std::ptrdiff_t>(pair * g.successors);
    const auto pick = std::lower_bound(begin, begin + g.successors, u) - begin;
    text.push_back(g.next[pair * static_cast<std::size_t>(g.successors) +
                          static_cast<std::size_t>(std::min<std::ptrdiff_t>(pick, g.successors - 1))]);
  }
  // One window per position; windows overlap.
  for (int i = 0; i < count; ++i) {
    for (int j = 0; j < context_window; ++j) d.contexts.push_back(text[static_cast<std::size_t>(i + j)]);
    d.targets.push_back(text[static_cast<std::size_t>(i + context_window)]);
  }
  return d;
}

// ---- external data --------------------------------------------------------

std::vector<std::string> SplitWhitespace(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(w);
  return words;
}

bool ParseInt(std::string_view text, int& out) {
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

Dataset LoadCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset '" + path + "'");
  Dataset d = EmptyLike(TaskKind::kClassification, 0);
  std::string line;
  bool first = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    int label = 0;
    if (!ParseInt(fields[0], label)) {
      if (first) {
        first = false;
        continue;
      }
      throw DataError(path + ":" + std::to_string(line_no) + ": label is not an integer");
    }
    first = false;
    if (fields.size() < 2) throw DataError(path + ":" + std::to_string(line_no) + ": no features");
    if (d.width == 0) d.width = fields.size() - 1;
    if (fields.size() - 1 != d.width) {
      throw DataError(path + ":" + std::to_string(line_no) + ": inconsistent feature count");
    }
    if (label < 0) throw DataError(path + ":" + std::to_string(line_no) + ": negative label");
    for (std::size_t i = 1; i < fields.size(); ++i) {
      try {
        d.features.push_back(std::stod(fields[i]));
      } catch (const std::exception&) {
        throw DataError(path + ":" + std::to_string(line_no) + ": bad feature value");
      }
    }
    d.targets.push_back(label);
  }
  if (d.empty()) throw DataError("dataset '" + path + "' has no rows");
  return d;
}

Dataset LoadTokens(const std::string& path, int context_window, int& vocabulary) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open token file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const auto words = SplitWhitespace(buffer.str());
  std::set<std::string> distinct(words.begin(), words.end());
  std::map<std::string, int> ids;
  for (const auto& w : distinct) ids.emplace(w, static_cast<int>(ids.size()));
  vocabulary = static_cast<int>(ids.size());
  Dataset d = EmptyLike(TaskKind::kNextToken, static_cast<std::size_t>(context_window));
  for (std::size_t i = 0; i + static_cast<std::size_t>(context_window) < words.size(); ++i) {
    for (int j = 0; j < context_window; ++j) d.contexts.push_back(ids[words[i + static_cast<std::size_t>(j)]]);
    d.targets.push_back(ids[words[i + static_cast<std::size_t>(context_window)]]);
  }
  if (d.empty()) throw DataError("token file '" + path + "' is shorter than one window");
  return d;
}

ScenarioData LoadExternal(const ScenarioSpec& spec, RngStream& stream) {
  const ExternalSource& src = *spec.external;
  ScenarioData out;
  Dataset all;
  if (src.format == "csv") {
    all = LoadCsv(src.path);
    out.label_count = *std::max_element(all.targets.begin(), all.targets.end()) + 1;
  } else if (src.format == "tokens") {
    all = LoadTokens(src.path, spec.context_window, out.label_count);
  } else {
    throw ConfigError("scenario.external.format must be 'csv' or 'tokens'");
  }
  out.input_width = all.width;
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), stream);
  const auto held = static_cast<std::size_t>(std::llround(src.eval_fraction * static_cast<double>(all.size())));
  const std::size_t per_agent = (all.size() - held) / static_cast<std::size_t>(spec.num_agents);
  if (held == 0 || per_agent == 0) {
    throw ScenarioError("external dataset too small for " + std::to_string(spec.num_agents) +
                        " agents plus an evaluation split");
  }
  out.eval = all.Subset(std::span(order).first(held));
  for (int k = 0; k < spec.num_agents; ++k) {
    out.shards.push_back(all.Subset(
        std::span(order).subspan(held + static_cast<std::size_t>(k) * per_agent, per_agent)));
  }
  return out;
}

// Indices of `count` distinct rows out of `n`, ascending.
std::vector<std::size_t> ChooseRows(std::size_t n, std::size_t count, RngStream& stream) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(rows[i], rows[pick(stream)]);
  }
  rows.resize(count);
  std::sort(rows.begin(), rows.end());
  return rows;
}

std::size_t AffectedRows(std::size_t n, double magnitude) {
  return static_cast<std::size_t>(std::llround(static_cast<double>(n) * magnitude));
}

void FeatureNoise(Dataset& shard, double magnitude, RngStream& stream) {
  const std::size_t n = shard.size(), dim = shard.width;
  std::vector<double> mean(dim, 0.0), sq(dim, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < dim; ++j) {
      const double v = shard.features[r * dim + j];
      mean[j] += v;
      sq[j] += v * v;
    }
  }
  std::vector<double> stddev(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    mean[j] /= static_cast<double>(n);
    stddev[j] = std::sqrt(std::max(0.0, sq[j] / static_cast<double>(n) - mean[j] * mean[j]));
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t r : ChooseRows(n, AffectedRows(n, magnitude), stream)) {
    for (std::size_t j = 0; j < dim; ++j) {
      shard.features[r * dim + j] = mean[j] + stddev[j] * normal(stream);
    }
  }
}

void Mislabel(Dataset& shard, double magnitude, int labels, RngStream& stream) {
  std::uniform_int_distribution<int> offset(1, labels - 1);
  for (std::size_t r : ChooseRows(shard.size(), AffectedRows(shard.size(), magnitude), stream)) {
    shard.targets[r] = (shard.targets[r] + offset(stream)) % labels;
  }
}

void Reduce(Dataset& shard, double magnitude, AgentId agent, RngStream& stream) {
  const auto keep = static_cast<std::size_t>(
      std::llround(static_cast<double>(shard.size()) * (1.0 - magnitude)));
  if (keep < 1) {
    throw ScenarioError("reducing agent " + std::to_string(agent) + " by " +
                        std::to_string(magnitude) + " leaves no data");
  }
  shard = shard.Subset(ChooseRows(shard.size(), keep, stream));
}

void ShuffleTokens(Dataset& shard, double magnitude, int vocabulary, RngStream& stream) {
  std::uniform_int_distribution<int> any(0, vocabulary - 1);
  for (std::size_t r : ChooseRows(shard.size(), AffectedRows(shard.size(), magnitude), stream)) {
    for (std::size_t j = 0; j < shard.width; ++j) shard.contexts[r * shard.width + j] = any(stream);
    shard.targets[r] = any(stream);
  }
}

}  // namespace

std::string_view TreatmentName(Treatment treatment) {
  switch (treatment) {
    case Treatment::kFeatureNoise: return "feature-noise";
    case Treatment::kMislabel: return "mislabel";
    case Treatment::kReduce: return "reduce";
    case Treatment::kShuffleTokens: return "shuffle-tokens";
  }
  return "unknown";
}

Treatment ParseTreatment(std::string_view name) {
  for (Treatment t : {Treatment::kFeatureNoise, Treatment::kMislabel, Treatment::kReduce,
                      Treatment::kShuffleTokens}) {
    if (TreatmentName(t) == name) return t;
  }
  throw ConfigError("unknown corruption treatment '" + std::string(name) + "'");
}

int ScenarioSpec::label_count() const {
  return task == TaskKind::kClassification ? num_classes : vocabulary;
}

void ScenarioSpec::Validate() const {
  if (num_agents < 1) throw ConfigError("scenario.num_agents must be >= 1");
  if (num_agents > 63) throw ConfigError("scenario.num_agents must be <= 63");
  if (!external) {
    if (samples_per_agent < 1) throw ConfigError("scenario.samples_per_agent must be >= 1");
    if (eval_samples < 1) throw ConfigError("scenario.eval_samples must be >= 1");
    if (task == TaskKind::kClassification) {
      if (num_classes < 2 || feature_dim < 1 || !(class_separation >= 0.0)) {
        throw ConfigError("scenario: invalid blob generator settings");
      }
    } else {
      if (vocabulary < 2 || context_window < 1 || successors < 1 || successors > vocabulary) {
        throw ConfigError("scenario: invalid grammar generator settings");
      }
    }
  } else if (!(external->eval_fraction > 0.0 && external->eval_fraction < 1.0)) {
    throw ConfigError("scenario.external.eval_fraction must be in (0, 1)");
  }
  for (const Corruption& c : corruptions) {
    for (AgentId a : c.agents) {
      if (a < 0 || a >= num_agents) {
        throw ConfigError("corruption targets agent " + std::to_string(a) + " outside 0.." +
                          std::to_string(num_agents - 1));
      }
    }
    if (c.treatment == Treatment::kReduce) {
      if (!(c.magnitude > 0.0 && c.magnitude < 1.0)) {
        throw ConfigError("reduce magnitude must be in (0, 1)");
      }
    } else if (!(c.magnitude > 0.0 && c.magnitude <= 1.0)) {
      throw ConfigError(std::string(TreatmentName(c.treatment)) + " magnitude must be in (0, 1]");
    }
    const bool text_only = c.treatment == Treatment::kShuffleTokens;
    const bool features_only = c.treatment == Treatment::kFeatureNoise;
    if ((text_only && task != TaskKind::kNextToken) ||
        (features_only && task != TaskKind::kClassification)) {
      throw ConfigError(std::string(TreatmentName(c.treatment)) +
                        " does not apply to this task");
    }
  }
}

ScenarioData GenerateDataset(const ScenarioSpec& spec, RngStream& stream) {
  spec.Validate();
  if (spec.external) return LoadExternal(spec, stream);
  ScenarioData out;
  out.label_count = spec.label_count();
  if (spec.task == TaskKind::kClassification) {
    const Blobs blobs = MakeBlobs(spec, stream);
    for (int k = 0; k < spec.num_agents; ++k) {
      out.shards.push_back(SampleBlobs(blobs, spec.samples_per_agent, stream));
    }
    out.eval = SampleBlobs(blobs, spec.eval_samples, stream);
    out.input_width = static_cast<std::size_t>(spec.feature_dim);
  } else {
    const Grammar grammar = MakeGrammar(spec, stream);
    for (int k = 0; k < spec.num_agents; ++k) {
      out.shards.push_back(SampleGrammar(grammar, spec.context_window, spec.samples_per_agent, stream));
    }
    out.eval = SampleGrammar(grammar, spec.context_window, spec.eval_samples, stream);
    out.input_width = static_cast<std::size_t>(spec.context_window);
  }
  return out;
}

std::vector<Dataset> ApplyCorruptions(std::vector<Dataset> shards, const ScenarioSpec& spec,
                                      RngStream& stream) {
  spec.Validate();
  if (shards.size() != static_cast<std::size_t>(spec.num_agents)) {
    throw ScenarioError("shard count does not match the scenario's agent count");
  }
  for (const Corruption& c : spec.corruptions) {
    for (AgentId agent : c.agents) {
      Dataset& shard = shards[static_cast<std::size_t>(agent)];
      switch (c.treatment) {
        case Treatment::kFeatureNoise:
          FeatureNoise(shard, c.magnitude, stream);
          break;
        case Treatment::kMislabel:
          Mislabel(shard, c.magnitude, spec.label_count(), stream);
          break;
        case Treatment::kReduce:
          Reduce(shard, c.magnitude, agent, stream);
          break;
        case Treatment::kShuffleTokens:
          ShuffleTokens(shard, c.magnitude, spec.label_count(), stream);
          break;
      }
    }
  }
  return shards;
}

ScenarioData BuildScenario(const ScenarioSpec& spec, const StreamFactory& streams) {
  RngStream data_stream = streams.Derive("data");
  ScenarioData data = GenerateDataset(spec, data_stream);
  RngStream corrupt_stream = streams.Derive("corrupt");
  data.shards = ApplyCorruptions(std::move(data.shards), spec, corrupt_stream);
  return data;
}

std::vector<PresetInfo> ListPresets() {
  return {
      {"normal", "classification, K=10, clean IID shards"},
      {"noise-last2", "classification, K=10, agents 8-9 inputs replaced by random noise"},
      {"mislabel-last2", "classification, K=10, agents 8-9 labels reassigned to other classes"},
      {"normal-text", "next-token, K=20, clean IID shards"},
      {"reduce-last4-70", "next-token, K=20, agents 16-19 keep 30% of their data"},
      {"reduce-graded", "next-token, K=20, agents 16-17 reduced by 30%, 18-19 by 70%"},
      {"shuffle-last4", "next-token, K=20, agents 16-19 token sequences randomized"},
  };
}

ScenarioSpec ScenarioPreset(std::string_view name) {
  ScenarioSpec spec;
  if (name == "normal") return spec;
  if (name == "noise-last2") {
    spec.corruptions = {{{8, 9}, Treatment::kFeatureNoise, 1.0}};
    return spec;
  }
  if (name == "mislabel-last2") {
    spec.corruptions = {{{8, 9}, Treatment::kMislabel, 1.0}};
    return spec;
  }
  spec.task = TaskKind::kNextToken;
  spec.num_agents = 20;
  if (name == "normal-text") return spec;
  if (name == "reduce-last4-70") {
    spec.corruptions = {{{16, 17, 18, 19}, Treatment::kReduce, 0.7}};
    return spec;
  }
  if (name == "reduce-graded") {
    spec.corruptions = {{{16, 17}, Treatment::kReduce, 0.3}, {{18, 19}, Treatment::kReduce, 0.7}};
    return spec;
  }
  if (name == "shuffle-last4") {
    spec.corruptions = {{{16, 17, 18, 19}, Treatment::kShuffleTokens, 1.0}};
    return spec;
  }
  throw ConfigError("unknown scenario preset '" + std::string(name) + "'");
}

}  // namespace fedsim
