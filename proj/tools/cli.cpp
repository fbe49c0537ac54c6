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

#include "cli.hpp"

#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "uqtsc/error.hpp"

namespace uqtsc::cli {

namespace {

std::string flag_name(const std::string& key) {
  std::string s = key;
  for (auto& c : s) {
    if (c == '_') c = '-';
  }
  return s;
}

std::vector<Command> build_commands() {
  return {
      {"generate",
       "Write synthetic rover logs and a manifest",
       {{"out", std::nullopt, "output directory"},
        {"spec", "", "key-value file overriding the synthetic spec keys below"},
        {"seed", "0", "random seed"},
        {"logs", "24", "number of logs"},
        {"duration_s", "25", "seconds per log"},
        {"segments", "3", "terrain segments per log, alternating rock and sand"},
        {"min_purity", "0.53", "segment purity is drawn uniformly from [min_purity, 1]"},
        {"sample_rate_hz", "100", "sample rate"},
        {"joints", "1", "include joint channels (0 or 1)"},
        {"rock_roughness", "-0.5", "AR(1) coefficient of the rock roughness process"},
        {"sand_roughness", "0.95", "AR(1) coefficient of the sand roughness process"}},
       cmd_generate},
      {"prepare",
       "Trim, split, window and standardise logs into datasets",
       {{"manifest", std::nullopt, "manifest of log CSVs"},
        {"out", std::nullopt, "output directory"},
        {"window", "400x100", "sliding window length x step"},
        {"subsample", "0", "subsampling factor f; when positive, windows are the window length at stride f"},
        {"channels", "imu", "imu, joints or fused"},
        {"test_fraction", "0.3", "fraction of logs held out for test"},
        {"val_fraction", "0.2", "fraction of the remaining logs used for validation"},
        {"idle_speed", "0.05", "activity threshold for idle trimming"},
        {"idle_gap_s", "1.0", "minimum idle run removed, in seconds"},
        {"seed", "0", "random seed for the log split"}},
       cmd_prepare},
      {"train",
       "Train one model configuration",
       {{"data", std::nullopt, "prepared dataset directory"},
        {"model", std::nullopt, "model config key-value file"},
        {"out", std::nullopt, "output directory"},
        {"uq", "", "override the model's UQ method"},
        {"epochs", "50", "training epochs"},
        {"samples", "10", "predictive samples for validation"},
        {"seed", "0", "random seed"}},
       cmd_train},
      {"search",
       "BOHB hyperparameter search",
       {{"data", std::nullopt, "prepared dataset directory"},
        {"out", std::nullopt, "output directory"},
        {"family", "cnn", "cnn, lstm, cnn_lstm, fcn or resnet"},
        {"uq", "mc_dropout", "none, mc_dropout, dropconnect or flipout"},
        {"space", "", "key-value file with <param>.min / <param>.max overrides"},
        {"iterations", "20", "BOHB iterations"},
        {"mode", "full_sweep", "full_sweep (every bracket per iteration) or single_bracket"},
        {"min_budget", "16", "smallest budget in epochs"},
        {"max_budget", "50", "largest budget in epochs"},
        {"eta", "3", "halving rate"},
        {"samples", "10", "predictive samples for validation"},
        {"workers", "1", "parallel trial evaluations"},
        {"seed", "0", "random seed"}},
       cmd_search},
      {"evaluate",
       "Predictive posterior, entropy, ECE and F1 on the test split",
       {{"checkpoint", std::nullopt, "model checkpoint"},
        {"data", std::nullopt, "test dataset file or prepared dataset directory"},
        {"out", std::nullopt, "output directory"},
        {"samples", "10", "predictive samples M"},
        {"bins", "10", "ECE bins K"},
        {"ece_mode", "confidence", "confidence or positive_class"},
        {"seed", "0", "random seed"}},
       cmd_evaluate},
      {"select",
       "Apply the F1 and entropy gate to evaluation reports",
       {{"reports", std::nullopt, "report CSVs", true},
        {"out", std::nullopt, "output directory"},
        {"min_f1", "0.9", "minimum per-class F1"},
        {"max_entropy", "0.1", "maximum mean predictive entropy"}},
       cmd_select},
      {"report",
       "SVG figures and a summary table from evaluation reports",
       {{"reports", std::nullopt, "report CSVs", true}, {"out", std::nullopt, "output directory"}},
       cmd_report},
  };
}

}  // namespace

const std::vector<Command>& commands() {
  static const std::vector<Command> table = build_commands();
  return table;
}

const Command& find_command(const std::string& name) {
  for (const auto& c : commands()) {
    if (c.name == name) return c;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown command " + name);
}

KeyValues resolve(const Command& cmd, const KeyValues& file, const KeyValues& flags) {
  std::vector<std::string> allowed;
  for (const auto& k : cmd.keys) allowed.push_back(k.key);
  file.reject_unknown(allowed);
  flags.reject_unknown(allowed);

  // generate also reads its synthetic spec keys from the `spec` file.
  KeyValues spec;
  const auto spec_path = flags.find("spec") ? flags.find("spec") : file.find("spec");
  if (cmd.name == "generate" && spec_path && !spec_path->empty()) {
    spec = KeyValues::read_file(*spec_path);
    std::vector<std::string> spec_keys;
    for (const auto& k : cmd.keys) {
      if (k.key != "out" && k.key != "spec") spec_keys.push_back(k.key);
    }
    try {
      spec.reject_unknown(spec_keys);
    } catch (const Error& e) {
      throw Error(ErrorKind::InvalidSpec, e.what());
    }
  }

  KeyValues rc;
  for (const auto& k : cmd.keys) {
    std::optional<std::string> v = k.fallback;
    if (auto s = spec.find(k.key)) v = s;
    if (auto f = file.find(k.key)) v = f;
    if (auto f = flags.find(k.key)) v = f;
    if (!v) throw Error(ErrorKind::InvalidArgument, cmd.name + " needs --" + flag_name(k.key));
    rc.set(k.key, *v);
  }
  return rc;
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Uncertainty-aware terrain classification from rover time series"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "uqtsc 0.1.0");

  struct Bound {
    const Command* cmd;
    CLI::App* sub;
    std::string config_path;
    std::map<std::string, std::string> scalars;
    std::map<std::string, std::vector<std::string>> lists;
  };
  std::vector<std::unique_ptr<Bound>> bound;
  for (const auto& cmd : commands()) {
    auto b = std::make_unique<Bound>();
    b->cmd = &cmd;
    b->sub = app.add_subcommand(cmd.name, cmd.description);
    b->sub->add_option("--config", b->config_path, "run config written by an earlier run");
    for (const auto& k : cmd.keys) {
      std::string help = k.help;
      if (k.fallback && !k.fallback->empty()) help += " [" + *k.fallback + "]";
      if (k.positional) {
        b->sub->add_option(k.key + ",--" + flag_name(k.key), b->lists[k.key], help);
      } else {
        b->sub->add_option("--" + flag_name(k.key), b->scalars[k.key], help);
      }
    }
    bound.push_back(std::move(b));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  for (const auto& b : bound) {
    if (!b->sub->parsed()) continue;
    try {
      KeyValues flags;
      for (const auto& k : b->cmd->keys) {
        const std::string name = k.positional ? k.key : "--" + flag_name(k.key);
        if (b->sub->get_option(name)->count() == 0) continue;
        if (k.positional) {
          std::string joined;
          for (const auto& v : b->lists[k.key]) {
            for (const auto& part : split(v, ',')) {
              if (!trim(part).empty()) joined += (joined.empty() ? "" : ",") + std::string(trim(part));
            }
          }
          flags.set(k.key, joined);
        } else {
          flags.set(k.key, b->scalars[k.key]);
        }
      }
      const KeyValues file = b->config_path.empty() ? KeyValues{} : KeyValues::read_file(b->config_path);
      b->cmd->run(resolve(*b->cmd, file, flags));
      return 0;
    } catch (const std::exception& e) {
      std::cerr << "uqtsc " << b->cmd->name << ": error: " << e.what() << "\n";
      return 1;
    }
  }
  return 1;
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("uqtsc");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace uqtsc::cli
