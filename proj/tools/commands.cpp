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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "cli.hpp"
#include "svg.hpp"
#include "uqtsc/arch.hpp"
#include "uqtsc/data.hpp"
#include "uqtsc/error.hpp"
#include "uqtsc/hpo.hpp"
#include "uqtsc/metrics.hpp"
#include "uqtsc/training.hpp"

namespace fs = std::filesystem;

namespace uqtsc::cli {

namespace {

constexpr const char* kSplitFiles[] = {"train.ds", "val.ds", "test.ds"};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot write " + path.string());
  f << text;
  if (!f) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

fs::path make_out_dir(const KeyValues& rc) {
  const fs::path out = rc.get_string("out");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + out.string() + ": " + ec.message());
  rc.write_file((out / kRunConfigFile).string());
  return out;
}

std::uint64_t seed_of(const KeyValues& rc) {
  const long s = rc.get_int("seed");
  if (s < 0) throw Error(ErrorKind::InvalidArgument, "seed must be nonnegative");
  return static_cast<std::uint64_t>(s);
}

std::size_t positive(const KeyValues& rc, const char* key) {
  const long v = rc.get_int(key);
  if (v <= 0) throw Error(ErrorKind::InvalidArgument, std::string(key) + " must be positive");
  return static_cast<std::size_t>(v);
}

std::vector<std::string> list_of(const KeyValues& rc, const char* key) {
  std::vector<std::string> out;
  for (const auto& s : split(rc.get_string(key), ',')) {
    if (!trim(s).empty()) out.emplace_back(trim(s));
  }
  if (out.empty()) throw Error(ErrorKind::InvalidArgument, std::string("no values for ") + key);
  return out;
}

std::pair<std::size_t, std::size_t> parse_window(const std::string& text) {
  const auto parts = split(text, 'x');
  if (parts.size() == 2) {
    const auto w = parse_long(parts[0]), s = parse_long(parts[1]);
    if (w && s && *w > 0 && *s > 0) return {static_cast<std::size_t>(*w), static_cast<std::size_t>(*s)};
  }
  throw Error(ErrorKind::InvalidArgument, "window must look like 400x100, got '" + text + "'");
}

/// Accepts a dataset file or a directory holding `<split>.ds`.
SequenceDataset load_split(const std::string& path, const char* split_file) {
  const fs::path p(path);
  if (fs::is_directory(p)) {
    const fs::path f = p / split_file;
    if (!fs::exists(f)) throw Error(ErrorKind::EmptyDataset, "missing " + f.string());
    return read_dataset(f.string());
  }
  if (!fs::exists(p)) throw Error(ErrorKind::Io, "no such file or directory: " + path);
  return read_dataset(path);
}

std::string compact_config(const ModelConfig& c) {
  std::string s;
  const auto kv = c.to_kv();
  for (const auto& [k, v] : kv.entries()) {
    if (!s.empty()) s += ';';
    s += k + "=" + v;
  }
  return s;
}

EceMode parse_ece_mode(const std::string& text) {
  if (text == "confidence") return EceMode::Confidence;
  if (text == "positive_class") return EceMode::PositiveClass;
  throw Error(ErrorKind::InvalidArgument, "ece_mode must be confidence or positive_class");
}

std::vector<EvalReport> read_reports(const KeyValues& rc) {
  std::vector<EvalReport> reports;
  for (const auto& path : list_of(rc, "reports")) {
    auto r = read_report_csv(path);
    if (!r.tag("source")) r.tags.emplace_back("source", fs::path(path).filename().string());
    reports.push_back(std::move(r));
  }
  return reports;
}

}  // namespace

void cmd_generate(const KeyValues& rc) {
  const auto n_logs = positive(rc, "logs");
  const auto segments = positive(rc, "segments");
  const double duration = rc.get_double("duration_s");
  const double min_purity = rc.get_double("min_purity");
  const std::uint64_t seed = seed_of(rc);

  // Build and validate every spec before touching the output directory.
  std::vector<SynthSpec> specs;
  const Rng root(seed);
  for (std::size_t i = 0; i < n_logs; ++i) {
    SynthSpec spec;
    char id[32];
    std::snprintf(id, sizeof id, "log_%03zu", i);
    spec.log_id = id;
    spec.seed = root.split(i).seed();
    spec.duration_s = duration;
    spec.sample_rate_hz = rc.get_double("sample_rate_hz");
    spec.include_joints = rc.get_int("joints") != 0;
    spec.rock.roughness = rc.get_double("rock_roughness");
    spec.sand.roughness = rc.get_double("sand_roughness");
    // Alternate the starting terrain so both classes are balanced across logs.
    Rng patch = root.split(i).split(1);
    for (std::size_t k = 0; k < segments; ++k) {
      const double purity = min_purity < 1.0 ? min_purity + (1.0 - min_purity) * patch.uniform() : 1.0;
      spec.class_segments.push_back({static_cast<int>((i + k) % 2), duration / static_cast<double>(segments), purity});
    }
    spec.validate();
    specs.push_back(std::move(spec));
  }

  const auto out = make_out_dir(rc);
  std::string manifest = "# synthetic logs\n";
  for (const auto& spec : specs) {
    const std::string name = spec.log_id + ".csv";
    write_log(synth_generate(spec), (out / name).string());
    manifest += name + "\n";
  }
  write_file(out / "manifest.txt", manifest);
  std::cout << "generated " << specs.size() << " logs in " << out.string() << "\n";
}

void cmd_prepare(const KeyValues& rc) {
  const auto mode = parse_channel_mode(rc.get_string("channels"));
  const auto [w, s] = parse_window(rc.get_string("window"));
  const long factor = rc.get_int("subsample");
  if (factor < 0) throw Error(ErrorKind::InvalidArgument, "subsample must be nonnegative");
  const double idle_speed = rc.get_double("idle_speed");
  const double idle_gap = rc.get_double("idle_gap_s");

  std::vector<TimeSeriesLog> logs;
  for (const auto& path : read_manifest(rc.get_string("manifest"))) {
    logs.push_back(select_channels(trim_idle(load_log(path), idle_speed, idle_gap), mode));
  }
  const auto split = split_logs(logs, rc.get_double("test_fraction"), rc.get_double("val_fraction"), seed_of(rc));

  std::map<std::string, const TimeSeriesLog*> by_id;
  for (const auto& log : logs) by_id[log.log_id] = &log;
  auto windows_for = [&](const std::vector<std::string>& ids, SplitTag tag) {
    SequenceDataset ds;
    bool first = true;
    for (const auto& id : ids) {
      const auto& log = *by_id.at(id);
      auto part = factor > 0 ? subsample(log, static_cast<std::size_t>(factor), w) : slide_windows(log, w, s);
      if (first) {
        ds = std::move(part);
        first = false;
      } else {
        ds.append(part);
      }
    }
    ds.split = tag;
    return ds;
  };
  SequenceDataset sets[3] = {windows_for(split.train, SplitTag::Train), windows_for(split.val, SplitTag::Val),
                             windows_for(split.test, SplitTag::Test)};
  if (sets[0].empty()) throw Error(ErrorKind::EmptyDataset, "training split has no windows");
  const auto stats = fit_stats(sets[0]);
  for (auto& ds : sets) {
    const auto tag = ds.split;
    ds = standardize(ds, stats);
    ds.split = tag;
  }

  const auto out = make_out_dir(rc);
  const std::vector<std::string>* ids[3] = {&split.train, &split.val, &split.test};
  std::string summary = "split,logs,windows,discarded_ties,rock,sand,log_ids\n";
  for (int i = 0; i < 3; ++i) {
    write_dataset(sets[i], (out / kSplitFiles[i]).string());
    std::string joined;
    for (const auto& id : *ids[i]) joined += (joined.empty() ? "" : ";") + id;
    summary += std::string(to_string(sets[i].split)) + "," + std::to_string(ids[i]->size()) + "," +
               std::to_string(sets[i].size()) + "," + std::to_string(sets[i].discarded_ties) + "," +
               std::to_string(sets[i].class_count(kRock)) + "," + std::to_string(sets[i].class_count(kSand)) + "," +
               joined + "\n";
  }
  write_stats(stats, sets[0].channel_names, (out / "stats.txt").string());
  write_file(out / "summary.csv", summary);
  std::cout << "prepared " << sets[0].size() << "/" << sets[1].size() << "/" << sets[2].size()
            << " train/val/test windows in " << out.string() << "\n";
}

void cmd_train(const KeyValues& rc) {
  auto config = ModelConfig::from_kv(KeyValues::read_file(rc.get_string("model")));
  if (const auto uq = rc.get_string("uq"); !uq.empty()) config.uq = parse_uq(uq);
  config.validate();
  const auto train_set = load_split(rc.get_string("data"), "train.ds");
  const auto val_set = load_split(rc.get_string("data"), "val.ds");
  if (train_set.empty()) throw Error(ErrorKind::EmptyDataset, "training split has no windows");
  const std::uint64_t seed = seed_of(rc);
  auto net = build_network(config, input_shape_of(train_set), Rng(seed).split(1).seed());

  const auto out = make_out_dir(rc);
  const bool with_kl = config.uq == UqMethod::Flipout;
  std::ofstream log(out / "training_log.csv");
  log << training_log_header(with_kl) << "\n";
  TrainOptions opt;
  opt.epochs = static_cast<int>(positive(rc, "epochs"));
  opt.seed = Rng(seed).split(2).seed();
  opt.val_samples = positive(rc, "samples");
  opt.validate_every_epoch = !val_set.empty();
  opt.on_epoch = [&](const EpochLog& e) {
    log << training_log_row(e, with_kl) << "\n";
    log.flush();
  };
  train(net, train_set, val_set.empty() ? nullptr : &val_set, opt);
  write_checkpoint(net, (out / "model.ckpt").string());
  std::cout << "trained " << to_string(config.family) << "/" << to_string(config.uq) << " for " << opt.epochs
            << " epochs; checkpoint in " << out.string() << "\n";
}

void cmd_search(const KeyValues& rc) {
  KeyValues space_kv;
  if (const auto path = rc.get_string("space"); !path.empty()) space_kv = KeyValues::read_file(path);
  space_kv.set("family", rc.get_string("family"));
  space_kv.set("uq", rc.get_string("uq"));
  const auto space = ConfigSpace::from_kv(space_kv);

  BohbOptions opt;
  opt.min_budget = static_cast<int>(positive(rc, "min_budget"));
  opt.max_budget = static_cast<int>(positive(rc, "max_budget"));
  opt.eta = static_cast<int>(rc.get_int("eta"));
  opt.iterations = static_cast<int>(rc.get_int("iterations"));
  opt.seed = seed_of(rc);
  opt.workers = static_cast<int>(positive(rc, "workers"));
  const auto mode = rc.get_string("mode");
  if (mode == "full_sweep") {
    opt.mode = IterationMode::FullSweep;
  } else if (mode == "single_bracket") {
    opt.mode = IterationMode::SingleBracket;
  } else {
    throw Error(ErrorKind::InvalidArgument, "mode must be full_sweep or single_bracket");
  }
  hyperband_schedule(opt.min_budget, opt.max_budget, opt.eta);
  if (opt.iterations < 0) throw Error(ErrorKind::InvalidArgument, "iterations must be nonnegative");

  const auto train_set = load_split(rc.get_string("data"), "train.ds");
  const auto val_set = load_split(rc.get_string("data"), "val.ds");
  SearchObjective objective(space, train_set, val_set, positive(rc, "samples"), opt.max_budget);

  const auto out = make_out_dir(rc);
  std::ofstream trials(out / "trials.csv");
  trials << trial_csv_header(space) << "\n";
  opt.on_trial = [&](const TrialRecord& t) {
    trials << trial_csv_row(space, t) << "\n";
    trials.flush();
    std::cerr << "trial " << t.trial_id << " bracket " << t.bracket << " budget " << t.budget_epochs << " "
              << to_string(t.status) << " val_loss " << t.val_loss << "\n";
  };
  const auto result = run_bohb(space, objective.as_objective(), opt);
  if (!result.incumbent) {
    std::cout << "search finished with " << result.trials.size() << " trials and no incumbent\n";
    return;
  }
  const auto& best = result.trials[*result.incumbent];
  auto net = objective.network_for(best.seed);
  if (!net) {
    objective(best.config, best.budget_epochs, best.seed);
    net = objective.network_for(best.seed);
  }
  if (!net) throw Error(ErrorKind::InvalidArgument, "incumbent network could not be rebuilt");
  write_checkpoint(*net, (out / "incumbent.ckpt").string());
  net->config().to_kv().write_file((out / "incumbent.txt").string());
  std::cout << "search finished: " << result.trials.size() << " trials, " << result.charged_epochs()
            << " epochs, incumbent trial " << best.trial_id << " val_loss " << format_double(best.val_loss) << "\n";
}

void cmd_evaluate(const KeyValues& rc) {
  auto net = read_checkpoint(rc.get_string("checkpoint"));
  const auto test_set = load_split(rc.get_string("data"), "test.ds");
  if (test_set.empty()) throw Error(ErrorKind::EmptyDataset, "test split has no windows");
  if (input_shape_of(test_set) != net.input()) {
    throw Error(ErrorKind::CheckpointMismatch,
                "model expects " + std::to_string(net.input().channels) + "x" + std::to_string(net.input().length) +
                    " inputs, dataset has " + std::to_string(test_set.channel_count()) + "x" +
                    std::to_string(test_set.window_length));
  }
  const auto K = positive(rc, "bins");
  const auto mode = parse_ece_mode(rc.get_string("ece_mode"));
  Rng rng = Rng(seed_of(rc)).split(3);
  const auto dist = predictive_posterior(net, to_tensor(test_set), positive(rc, "samples"), rng);
  const auto labels = labels_of(test_set);
  auto report = make_report(dist, labels, K, mode);
  report.tags.emplace_back("family", std::string(to_string(net.config().family)));
  report.tags.emplace_back("uq", std::string(to_string(net.config().uq)));
  report.tags.emplace_back("samples", rc.get_string("samples"));
  report.tags.emplace_back("config", compact_config(net.config()));

  const auto out = make_out_dir(rc);
  write_report_csv(report, (out / "report.csv").string());
  const auto& a = report.aggregates;
  std::cout << "evaluated " << a.count << " windows: weighted F1 " << format_double(a.f1_weighted) << ", ECE "
            << format_double(a.ece) << ", mean entropy " << format_double(a.mean_entropy) << "\n";
}

void cmd_select(const KeyValues& rc) {
  const auto reports = read_reports(rc);
  SelectionThresholds t;
  t.min_f1 = rc.get_double("min_f1");
  t.max_entropy = rc.get_double("max_entropy");
  const auto sel = select_candidates(reports, t);

  std::vector<std::size_t> order(reports.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return reports[a].aggregates.mean_entropy < reports[b].aggregates.mean_entropy;
  });
  std::string csv = "decision,family,uq,entropy,ece,f1_cl0,f1_cl1,f1_weighted,accuracy,config,source\n";
  for (auto i : order) {
    const auto& r = reports[i];
    const auto& a = r.aggregates;
    const bool chosen = std::find(sel.selected.begin(), sel.selected.end(), i) != sel.selected.end();
    csv += std::string(chosen ? "Select" : "Reject") + "," + r.tag("family").value_or("") + "," +
           r.tag("uq").value_or("") + "," + format_double(a.mean_entropy) + "," + format_double(a.ece) + "," +
           format_double(a.f1_cl0) + "," + format_double(a.f1_cl1) + "," + format_double(a.f1_weighted) + "," +
           format_double(a.accuracy) + "," + r.tag("config").value_or("") + "," + r.tag("source").value_or("") +
           "\n";
  }
  const auto out = make_out_dir(rc);
  write_file(out / "selection.csv", csv);
  std::cout << sel.selected.size() << " of " << reports.size() << " candidates selected\n";
}

void cmd_report(const KeyValues& rc) {
  const auto reports = read_reports(rc);

  // Bars average over reports sharing a UQ label, in first-seen order.
  std::vector<std::string> labels;
  std::vector<double> ece_sum, entropy_sum, counts;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto label = report_label(reports[i], i);
    auto it = std::find(labels.begin(), labels.end(), label);
    std::size_t k = static_cast<std::size_t>(it - labels.begin());
    if (it == labels.end()) {
      labels.push_back(label);
      ece_sum.push_back(0.0);
      entropy_sum.push_back(0.0);
      counts.push_back(0.0);
    }
    ece_sum[k] += reports[i].aggregates.ece;
    entropy_sum[k] += reports[i].aggregates.mean_entropy;
    counts[k] += 1.0;
  }
  for (std::size_t k = 0; k < labels.size(); ++k) {
    ece_sum[k] /= counts[k];
    entropy_sum[k] /= counts[k];
  }

  std::string summary = "label,source,count,accuracy,f1_cl0,f1_cl1,f1_weighted,mean_entropy,ece,decision\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& a = reports[i].aggregates;
    summary += report_label(reports[i], i) + "," + reports[i].tag("source").value_or("") + "," +
               std::to_string(a.count) + "," + format_double(a.accuracy) + "," + format_double(a.f1_cl0) + "," +
               format_double(a.f1_cl1) + "," + format_double(a.f1_weighted) + "," + format_double(a.mean_entropy) +
               "," + format_double(a.ece) + "," +
               (passes_gate(a.f1_cl0, a.f1_cl1, a.mean_entropy) ? "Select" : "Reject") + "\n";
  }

  const auto out = make_out_dir(rc);
  write_file(out / "reliability.svg", reliability_svg(reports));
  write_file(out / "ece_by_uq.svg", bar_svg("ECE by UQ method", "ECE", labels, ece_sum));
  write_file(out / "entropy_by_uq.svg", bar_svg("Mean predictive entropy by UQ method", "entropy (nats)", labels,
                                                entropy_sum));
  write_file(out / "entropy_scatter.svg", entropy_scatter_svg(reports));
  write_file(out / "summary.csv", summary);
  std::cout << "wrote 4 figures and summary.csv for " << reports.size() << " reports to " << out.string() << "\n";
}

}  // namespace uqtsc::cli
