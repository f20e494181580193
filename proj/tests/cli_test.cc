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


#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "test_support.h"

namespace {

using fedsim::testing::ReadFile;
using fedsim::testing::ScratchDir;

int Fedsim(const std::string& args) {
  const std::string cmd = std::string(FEDSIM_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kSmall =
    "-s scenario.samples_per_agent=60 -s scenario.eval_samples=100 -s rounds=2";

TEST(CliTest, RunExportAndShapley) {
  ScratchDir dir("cli");
  const auto out = dir.path() / "run";
  ASSERT_EQ(Fedsim("run -p noise-last2 " + std::string(kSmall) + " -o " + out.string()), 0);
  EXPECT_TRUE(std::filesystem::exists(out / "record.jsonl"));
  EXPECT_TRUE(std::filesystem::exists(out / "contributions.csv"));
  EXPECT_TRUE(std::filesystem::exists(out / "summary.json"));

  const auto csv = ReadFile(out / "contributions.csv");
  ASSERT_EQ(Fedsim("run -p noise-last2 " + std::string(kSmall) + " -w 2 -o " +
                   (dir.path() / "again").string()),
            0);
  EXPECT_EQ(ReadFile(dir.path() / "again" / "contributions.csv"), csv);

  EXPECT_EQ(Fedsim("shapley --record " + out.string() + " --mode 'mc(10)' --seed 3"), 0);
  EXPECT_EQ(Fedsim("export --record " + out.string() + " --format csv --out " +
                   (dir.path() / "csv").string()),
            0);
  EXPECT_EQ(ReadFile(dir.path() / "csv" / "contributions.csv"), csv);
  EXPECT_EQ(Fedsim("presets"), 0);
}

TEST(CliTest, ExitCodes) {
  ScratchDir dir("cli_codes");
  EXPECT_EQ(Fedsim("run -p nonexistent -o " + dir.path().string()), 1);
  EXPECT_EQ(Fedsim("run -s rounds=0 -o " + dir.path().string()), 1);
  EXPECT_EQ(Fedsim("frobnicate"), 1);
  EXPECT_EQ(Fedsim("run -c " + (dir.path() / "missing.json").string()), 1);
  EXPECT_EQ(Fedsim("run " + std::string(kSmall) + " -s trainer.learning_rate=1e300 -o " +
                   (dir.path() / "boom").string()),
            2);
  const auto big = dir.path() / "big";
  ASSERT_EQ(Fedsim("run -p reduce-graded -s scenario.samples_per_agent=40 -s rounds=1 -o " +
                   big.string()),
            0);
  EXPECT_EQ(Fedsim("shapley --record " + big.string() + " --mode exact"), 3);
}

}  // namespace
