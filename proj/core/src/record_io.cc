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

#include "fedsim/record_io.h"

#include <charconv>
#include <sstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "fedsim/errors.h"

namespace fedsim {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json EvalToJson(const EvalReport& e) {
  return {{"metric", std::string(MetricName(e.kind))},
          {"value", e.value},
          {"samples", e.sample_count},
          {"round", e.round}};
}

EvalReport EvalFromJson(const json& j) {
  EvalReport e;
  e.kind = j.at("metric").get<std::string>() == "accuracy" ? MetricKind::kAccuracy
                                                           : MetricKind::kPerplexity;
  e.value = j.at("value").get<double>();
  e.sample_count = j.at("samples").get<std::size_t>();
  e.round = j.at("round").get<int>();
  return e;
}

json TimingsToJson(const PhaseTimings& t) {
  return {{"selection", t.selection},
          {"training", t.training},
          {"aggregation", t.aggregation},
          {"bookkeeping", t.bookkeeping},
          {"evaluation", t.evaluation}};
}

PhaseTimings TimingsFromJson(const json& j) {
  PhaseTimings t;
  t.selection = j.at("selection").get<double>();
  t.training = j.at("training").get<double>();
  t.aggregation = j.at("aggregation").get<double>();
  t.bookkeeping = j.at("bookkeeping").get<double>();
  t.evaluation = j.at("evaluation").get<double>();
  return t;
}

json RoundToJson(const RoundRecord& r) {
  json attention = json::array();
  for (std::size_t k = 0; k < r.attention.agent_count(); ++k) {
    json row = json::array();
    for (std::size_t l = 0; l < r.attention.layer_count(); ++l) row.push_back(r.attention.at(k, l));
    attention.push_back(std::move(row));
  }
  return {{"type", "round"},
          {"round", r.round},
          {"selected", r.selected},
          {"layers", r.attention.layer_ids()},
          {"attention", attention},
          {"impact", r.impact},
          {"round_term", r.round_term},
          {"contribution", r.contribution},
          {"measured", r.measured},
          {"eval", EvalToJson(r.eval)},
          {"timings", TimingsToJson(r.timings)}};
}

RoundRecord RoundFromJson(const json& j) {
  RoundRecord r;
  r.round = j.at("round").get<int>();
  r.selected = j.at("selected").get<std::vector<AgentId>>();
  std::vector<double> alpha;
  for (const json& row : j.at("attention")) {
    for (const json& v : row) alpha.push_back(v.get<double>());
  }
  r.attention = AttentionMatrix(r.selected, j.at("layers").get<std::vector<std::string>>(),
                                std::move(alpha));
  r.impact = j.at("impact").get<std::vector<double>>();
  r.round_term = j.at("round_term").get<std::vector<double>>();
  r.contribution = j.at("contribution").get<std::vector<double>>();
  r.measured = j.at("measured").get<bool>();
  r.eval = EvalFromJson(j.at("eval"));
  r.timings = TimingsFromJson(j.at("timings"));
  return r;
}

json ShapleyToJson(const ShapleyResult& s) {
  return {{"mode", s.mode.ToString()},
          {"seed", s.seed},
          {"raw", s.raw},
          {"normalized", s.normalized},
          {"evaluations", s.evaluations},
          {"seconds", s.seconds}};
}

ShapleyResult ShapleyFromJson(const json& j) {
  ShapleyResult s;
  s.mode = ShapleyMode::Parse(j.at("mode").get<std::string>());
  s.seed = j.at("seed").get<std::uint64_t>();
  s.raw = j.at("raw").get<std::vector<double>>();
  s.normalized = j.at("normalized").get<std::vector<double>>();
  s.evaluations = j.at("evaluations").get<std::uint64_t>();
  s.seconds = j.at("seconds").get<double>();
  return s;
}

void WriteFile(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void EnsureDir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory '" + dir.string() + "'");
  }
}

template <typename T>
void PutRaw(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
bool GetRaw(std::istream& in, T& value) {
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  return static_cast<bool>(in);
}

}  // namespace

std::string FormatDouble(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

RecordWriter::RecordWriter(const fs::path& dir, const RunRecord& header) {
  EnsureDir(dir);
  record_.open(dir / "record.jsonl", std::ios::trunc);
  trace_.open(dir / "trace.bin", std::ios::binary | std::ios::trunc);
  if (!record_ || !trace_) throw IoError("cannot open record files in '" + dir.string() + "'");
  json line = {{"type", "header"},
               {"run_id", header.run_id},
               {"config", json::parse(SerializeConfig(header.config))},
               {"shard_sizes", header.shard_sizes},
               {"initial_eval", EvalToJson(header.initial_eval)}};
  WriteLine(line.dump());
  trace_.write("FSTR", 4);
  PutRaw<std::uint32_t>(trace_, 1);
  trace_.flush();
}

void RecordWriter::WriteLine(const std::string& line) {
  record_ << line << '\n';
  record_.flush();
  if (!record_) throw IoError("failed appending to record.jsonl");
}

void RecordWriter::AppendRound(const RoundRecord& round, const RoundTrace& trace) {
  WriteLine(RoundToJson(round).dump());
  PutRaw<std::int32_t>(trace_, trace.round);
  WriteBinary(trace.server_before, trace_);
  PutRaw<std::uint32_t>(trace_, static_cast<std::uint32_t>(trace.clients.size()));
  for (const auto& [agent, params] : trace.clients) {
    PutRaw<std::int32_t>(trace_, agent);
    WriteBinary(params, trace_);
  }
  trace_.flush();
  if (!trace_) throw IoError("failed appending to trace.bin");
}

void RecordWriter::Finish(const RunRecord& record) {
  WriteLine(json{{"type", "final"}, {"rounds", record.rounds.size()}}.dump());
}

void PersistShapley(const fs::path& dir, const RunRecord& record, const ShapleyResult& result) {
  EnsureDir(dir);
  json line = ShapleyToJson(result);
  line["type"] = "shapley";
  {
    std::ofstream out(dir / "record.jsonl", std::ios::app);
    if (!out) throw IoError("cannot append to record.jsonl in '" + dir.string() + "'");
    out << line.dump() << '\n';
  }
  json artifact = ShapleyToJson(result);
  artifact["run_id"] = record.run_id;
  artifact["fedcm"] = record.rounds.empty() ? json::array() : json(record.final_round().contribution);
  WriteFile(dir / ("shapley_" + record.run_id + ".json"), artifact.dump(2));
}

RunRecord LoadRecord(const fs::path& dir) {
  std::ifstream in(dir / "record.jsonl");
  if (!in) throw IoError("no record.jsonl in '" + dir.string() + "'");
  RunRecord record;
  bool have_header = false;
  std::string line;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (type == "header") {
        record.run_id = j.at("run_id").get<std::string>();
        record.config = ParseConfig(j.at("config").dump());
        record.shard_sizes = j.at("shard_sizes").get<std::vector<std::size_t>>();
        record.initial_eval = EvalFromJson(j.at("initial_eval"));
        have_header = true;
      } else if (type == "round") {
        record.rounds.push_back(RoundFromJson(j));
      } else if (type == "shapley") {
        record.shapley = ShapleyFromJson(j);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed record.jsonl: " + std::string(e.what()));
  }
  if (!have_header) throw IoError("record.jsonl has no header line");
  record.config.output_dir = dir.string();

  std::ifstream tin(dir / "trace.bin", std::ios::binary);
  if (!tin) throw IoError("no trace.bin in '" + dir.string() + "'");
  char magic[4];
  std::uint32_t version = 0;
  tin.read(magic, 4);
  if (!tin || std::string(magic, 4) != "FSTR" || !GetRaw(tin, version) || version != 1) {
    throw IoError("trace.bin: bad header");
  }
  auto trace = std::make_shared<RunTrace>();
  trace->model = record.config.model;
  trace->aggregation = record.config.aggregation;
  trace->aggregator = record.config.aggregator;
  trace->weighted_fedavg = record.config.weighted_fedavg;
  trace->master_seed = record.config.master_seed;
  trace->num_agents = record.config.scenario.num_agents;
  for (std::size_t k = 0; k < record.shard_sizes.size(); ++k) {
    trace->shard_sizes[static_cast<AgentId>(k)] = static_cast<double>(record.shard_sizes[k]);
  }
  for (const RoundRecord& r : record.rounds) {
    std::int32_t round = 0;
    if (!GetRaw(tin, round) || round != r.round) throw IoError("trace.bin: round mismatch");
    ParamSet server = ReadBinary(tin);
    std::uint32_t count = 0;
    if (!GetRaw(tin, count)) throw IoError("trace.bin: truncated");
    ClientParams clients;
    for (std::uint32_t i = 0; i < count; ++i) {
      std::int32_t agent = 0;
      if (!GetRaw(tin, agent)) throw IoError("trace.bin: truncated");
      clients.emplace(agent, ReadBinary(tin));
    }
    trace->rounds.push_back(RoundTrace{r.round, std::move(server), std::move(clients), r.attention});
  }
  if (!trace->rounds.empty()) record.trace = trace;
  return record;
}

std::string ContributionsCsv(const RunRecord& record) {
  std::ostringstream out;
  out << "round,agent_id,selected,imp,con\n";
  for (const RoundRecord& r : record.rounds) {
    std::vector<bool> selected(r.impact.size(), false);
    for (AgentId a : r.selected) selected[static_cast<std::size_t>(a)] = true;
    for (std::size_t k = 0; k < r.impact.size(); ++k) {
      out << r.round << ',' << k << ',' << (selected[k] ? 1 : 0) << ','
          << FormatDouble(r.impact[k]) << ',' << FormatDouble(r.contribution[k]) << '\n';
    }
  }
  return out.str();
}

std::string AttentionCsv(const RunRecord& record) {
  std::ostringstream out;
  out << "round,agent_id,layer_id,alpha\n";
  for (const RoundRecord& r : record.rounds) {
    const AttentionMatrix& a = r.attention;
    for (std::size_t k = 0; k < a.agent_count(); ++k) {
      for (std::size_t l = 0; l < a.layer_count(); ++l) {
        out << r.round << ',' << a.agents()[k] << ',' << a.layer_ids()[l] << ','
            << FormatDouble(a.at(k, l)) << '\n';
      }
    }
  }
  return out.str();
}

std::string SummaryJson(const RunRecord& record) {
  json doc;
  doc["run_id"] = record.run_id;
  doc["config"] = json::parse(SerializeConfig(record.config));
  doc["rounds"] = record.rounds.size();
  doc["initial_eval"] = EvalToJson(record.initial_eval);
  if (!record.rounds.empty()) {
    const RoundRecord& last = record.final_round();
    doc["final"] = {{"round", last.round},
                    {"impact", last.impact},
                    {"contribution", last.contribution},
                    {"eval", EvalToJson(last.eval)}};
  } else {
    doc["final"] = nullptr;
  }
  if (record.shapley) {
    doc["shapley"] = ShapleyToJson(*record.shapley);
    json comparison = json::array();
    for (std::size_t k = 0; k < record.shapley->normalized.size(); ++k) {
      comparison.push_back({{"agent_id", k},
                            {"fedcm", record.rounds.empty() ? 0.0 : record.final_round().contribution[k]},
                            {"shapley", record.shapley->normalized[k]}});
    }
    doc["comparison"] = comparison;
  } else {
    doc["shapley"] = nullptr;
    doc["comparison"] = json::array();
  }
  const PhaseTimings total = record.total_timings();
  doc["timings"] = {{"total", TimingsToJson(total)},
                    {"shapley_seconds", record.shapley ? record.shapley->seconds : 0.0}};
  return doc.dump(2);
}

void ExportRecord(const RunRecord& record, ExportFormat format, const fs::path& dir) {
  EnsureDir(dir);
  if (format == ExportFormat::kCsv) {
    WriteFile(dir / "contributions.csv", ContributionsCsv(record));
    WriteFile(dir / "attention.csv", AttentionCsv(record));
  } else {
    WriteFile(dir / "summary.json", SummaryJson(record));
  }
}

}  // namespace fedsim
