// Copyright 2026 The uqtsc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "uqtsc/kv.hpp"

namespace uqtsc::cli {

struct KeySpec {
  std::string key;
  /// nullopt marks a required key.
  std::optional<std::string> fallback;
  std::string help;
  /// Also accepted as trailing positional arguments, joined with ','.
  bool positional = false;
};

struct Command {
  std::string name;
  std::string description;
  std::vector<KeySpec> keys;
  std::function<void(const KeyValues&)> run;
};

const std::vector<Command>& commands();
const Command& find_command(const std::string& name);

/// Defaults, then `file`, then `flags`. Unknown or missing required keys throw InvalidArgument.
KeyValues resolve(const Command& cmd, const KeyValues& file, const KeyValues& flags);

/// Entry point shared by the executable and the tests. Returns the process exit status.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);

/// Written next to every command's outputs.
inline constexpr const char* kRunConfigFile = "run_config.txt";

void cmd_generate(const KeyValues& rc);
void cmd_prepare(const KeyValues& rc);
void cmd_train(const KeyValues& rc);
void cmd_search(const KeyValues& rc);
void cmd_evaluate(const KeyValues& rc);
void cmd_select(const KeyValues& rc);
void cmd_report(const KeyValues& rc);

}  // namespace uqtsc::cli
