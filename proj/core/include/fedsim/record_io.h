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

#ifndef FEDSIM_RECORD_IO_H_
#define FEDSIM_RECORD_IO_H_

#include <filesystem>
#include <fstream>
#include <string>

#include "fedsim/replay.h"
#include "fedsim/runner.h"

namespace fedsim {

// On-disk layout of a run directory:
//
//   record.jsonl  append-only; one JSON object per line:
//                   {"type":"header", run_id, config, shard_sizes, initial_eval}
//                   {"type":"round", round, selected, layers, attention,
//                    impact, round_term, contribution, measured, eval, timings}
//                   {"type":"final", rounds}
//                   {"type":"shapley", mode, seed, raw, normalized, ...}
//   trace.bin     "FSTR" u32 version(=1), then per round:
//                   i32 round | ParamSet server_before | u32 n |
//                   n x (i32 agent | ParamSet upload)
//                 (ParamSet in the binary form of params.h)
//   shapley_<run_id>.json   post-hoc Shapley artifact
//
// Export files:
//   contributions.csv  round,agent_id,selected,imp,con      (K rows per round)
//   attention.csv      round,agent_id,layer_id,alpha         (selected agents)
//   summary.json       config, final vectors, Shapley comparison, timings
class RecordWriter {
 public:
  RecordWriter(const std::filesystem::path& dir, const RunRecord& header);

  void AppendRound(const RoundRecord& round, const RoundTrace& trace);
  void Finish(const RunRecord& record);

 private:
  void WriteLine(const std::string& line);

  std::ofstream record_;
  std::ofstream trace_;
};

// Appends the Shapley line to record.jsonl and writes shapley_<run_id>.json.
void PersistShapley(const std::filesystem::path& dir, const RunRecord& record,
                    const ShapleyResult& result);

// Rebuilds a RunRecord (including its trace) from a run directory.
RunRecord LoadRecord(const std::filesystem::path& dir);

enum class ExportFormat { kCsv, kJson };

std::string ContributionsCsv(const RunRecord& record);
std::string AttentionCsv(const RunRecord& record);
std::string SummaryJson(const RunRecord& record);

void ExportRecord(const RunRecord& record, ExportFormat format,
                  const std::filesystem::path& dir);

// Shortest decimal text that parses back to exactly `value`.
std::string FormatDouble(double value);

}  // namespace fedsim

#endif  // FEDSIM_RECORD_IO_H_
