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

// Acceptance checks 1-10. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Usage: acceptance [--work DIR] [criterion numbers...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "uqtsc/arch.hpp"
#include "uqtsc/data.hpp"
#include "uqtsc/error.hpp"
#include "uqtsc/hpo.hpp"
#include "uqtsc/layers.hpp"
#include "uqtsc/metrics.hpp"
#include "uqtsc/uq.hpp"

using namespace uqtsc;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string read_text(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Tensor random_tensor(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = rng.uniform(-1.0, 1.0);
  return t;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// ---- 1. gradient suite -------------------------------------------------------

Verdict gradient_suite() {
  const auto t0 = Clock::now();
  std::vector<LayerSpec> specs;
  specs.push_back({LayerKind::Dense, 4, 3});
  LayerSpec conv{LayerKind::Conv1d, 2, 3, 4};
  conv.length = 10;
  specs.push_back(conv);
  LayerSpec bn{LayerKind::BatchNorm1d, 3};
  bn.length = 4;
  specs.push_back(bn);
  LayerSpec pool{LayerKind::MaxPool1d, 2};
  pool.pool = 3;
  pool.length = 10;
  specs.push_back(pool);
  LayerSpec gap{LayerKind::GlobalAvgPool, 3};
  gap.length = 6;
  specs.push_back(gap);
  LayerSpec lstm{LayerKind::Lstm, 3, 4};
  lstm.length = 5;
  specs.push_back(lstm);
  specs.push_back({LayerKind::FlipoutDense, 4, 3});

  double worst = 0.0;
  std::string worst_kind;
  for (const auto& spec : specs) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto r = grad_check(spec, seed);
      if (r.checked == 0) return {false, std::string("no gradients checked for ") + to_string(spec.kind)};
      if (r.max_rel_error > worst) {
        worst = r.max_rel_error;
        worst_kind = to_string(spec.kind);
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-5 && secs < 60.0, "max relative error " + fmt("%.3g", worst) + " (" + worst_kind + ") over " +
                                           std::to_string(specs.size()) + " layer kinds x 20 seeds in " +
                                           fmt("%.1f", secs) + " s; tolerance 1e-5, limit 60 s"};
}

// ---- 2. metric oracles ---------------------------------------------------------

Verdict metric_oracles() {
  std::vector<std::string> failures;
  const double half[2] = {0.5, 0.5};
  if (std::abs(predictive_entropy(half) - std::log(2.0)) > 1e-12) failures.push_back("entropy");

  Tensor probs({4, 2});
  const double p1[4] = {0.9, 0.9, 0.6, 0.6};
  for (std::size_t i = 0; i < 4; ++i) {
    probs.at(i, 0) = 1 - p1[i];
    probs.at(i, 1) = p1[i];
  }
  const std::vector<int> ece_labels = {1, 1, 0, 1};
  const double ece4 = ece(probs, ece_labels, 4).value;
  if (std::abs(ece4 - 0.1) > 1e-12) failures.push_back("ECE K=4 = " + fmt("%.17g", ece4));

  const auto s = f1_and_accuracy(std::vector<int>{0, 1, 1, 1}, std::vector<int>{0, 0, 1, 1});
  if (std::abs(s.f1_cl0 - 0.6667) > 1e-4 || std::abs(s.f1_cl1 - 0.8) > 1e-4 || std::abs(s.f1_weighted - 0.7333) > 1e-4 ||
      std::abs(s.accuracy - 0.75) > 1e-4) {
    failures.push_back("F1 example");
  }

  Rng rng(2);
  Tensor many({500, 2});
  std::vector<int> labels(500);
  double conf = 0.0, hits = 0.0;
  for (std::size_t i = 0; i < 500; ++i) {
    const double p = rng.uniform();
    many.at(i, 0) = 1 - p;
    many.at(i, 1) = p;
    labels[i] = rng.bernoulli(0.5) ? 1 : 0;
    conf += std::max(p, 1 - p);
    hits += (p > 0.5 ? 1 : 0) == labels[i];
  }
  const double gap = std::abs(hits / 500.0 - conf / 500.0);
  if (ece(many, labels, 1).value != gap) failures.push_back("K=1 ECE");

  std::string detail = failures.empty() ? "entropy, ECE K=4, F1 example and K=1 ECE match" : "failed:";
  for (const auto& f : failures) detail += " " + f;
  return {failures.empty(), detail};
}

// ---- 3. UQ degeneracy ----------------------------------------------------------

Verdict uq_degeneracy() {
  Rng rng(3);
  Dense dense(5, 3, rng);
  Conv1d conv(2, 4, 5, Padding::Same, rng);
  const auto xd = random_tensor({4, 5}, rng);
  const auto xc = random_tensor({3, 2, 12}, rng);
  Context plain{Mode::Infer, nullptr};
  const auto yd = dense.forward(xd, plain);
  const auto yc = conv.forward(xc, plain);

  double worst = 0.0;
  for (auto mode : {Mode::Train, Mode::McInfer}) {
    Context ctx{mode, &rng};
    Dropout drop(0.0);
    worst = std::max(worst, max_abs_diff(drop.forward(xd, ctx), xd));
    DropConnectDense dcd(dense, 0.0);
    worst = std::max(worst, max_abs_diff(dcd.forward(xd, ctx), yd));
    DropConnectConv1d dcc(conv, 0.0);
    worst = std::max(worst, max_abs_diff(dcc.forward(xc, ctx), yc));
    FlipoutDense flip(dense);
    flip.rho_weight().value.fill(-1000.0);
    flip.rho_bias().value.fill(-1000.0);
    worst = std::max(worst, max_abs_diff(flip.forward(xd, ctx), yd));
  }

  // Masked-pass means over 1e5 draws.
  const int draws = 100000;
  const Tensor one({1, 1}, {1.5});
  double dropout_sum = 0.0;
  for (int i = 0; i < draws; ++i) dropout_sum += mc_dropout_forward(one, 0.3, Mode::McInfer, rng)[0];
  const double dropout_err = std::abs(dropout_sum / draws - 1.5) / 1.5;

  Dense small(Tensor({3, 1}, {0.5, -1.0, 2.0}), Tensor({1}, {0.0}));
  const Tensor xs({1, 3}, {1.0, 0.5, -0.25});
  const double exact = 0.5 - 0.5 - 0.5;
  double dc_sum = 0.0;
  for (int i = 0; i < draws; ++i) dc_sum += dropconnect_dense_forward(xs, small, 0.25, Mode::McInfer, rng)[0];
  const double dc_err = std::abs(dc_sum / draws - exact) / std::abs(exact);

  const bool pass = worst <= 1e-12 && dropout_err < 0.01 && dc_err < 0.01;
  return {pass, "max deviation of degenerate layers " + fmt("%.3g", worst) + " (tol 1e-12); mean error dropout " +
                    fmt("%.4f", 100 * dropout_err) + "%, DropConnect " + fmt("%.4f", 100 * dc_err) +
                    "% over 1e5 draws (tol 1%)"};
}

// ---- 4. selection gate ----------------------------------------------------------

Verdict selection_gate() {
  const bool row24 = passes_gate(0.9942, 0.9814, 0.0142);
  const bool boundary = passes_gate(0.9, 0.9, 0.1);
  const bool below = !passes_gate(0.8999999, 0.95, 0.05) && !passes_gate(0.95, 0.95, 0.1000001);
  return {row24 && boundary && below, std::string("row 24 ") + (row24 ? "Select" : "Reject") + ", (0.9, 0.9, 0.1) " +
                                          (boundary ? "Select" : "Reject") + ", just outside " +
                                          (below ? "Reject" : "Select")};
}

// ---- 5. scheduler accounting ----------------------------------------------------

Verdict scheduler_accounting() {
  const auto s = hyperband_schedule(16, 50, 3);
  bool shape = s.s_max == 1 && s.brackets.size() == 2 && s.brackets[0].rungs.size() == 2 &&
               s.brackets[0].rungs[0].n_configs == 3 && s.brackets[0].rungs[0].budget == 16 &&
               s.brackets[0].rungs[1].n_configs == 1 && s.brackets[0].rungs[1].budget == 50 &&
               s.brackets[1].rungs.size() == 1 && s.brackets[1].rungs[0].n_configs == 2 &&
               s.brackets[1].rungs[0].budget == 50;
  BohbOptions opt;
  opt.iterations = 20;
  const auto r = run_bohb(ConfigSpace::toy_space(), toy_objective, opt);
  return {shape && r.charged_epochs() == 3960,
          std::string("brackets ") + (shape ? "{3@16 -> 1@50; 2@50}" : "unexpected") + ", 20 iterations charged " +
              std::to_string(r.charged_epochs()) + " epochs (expected 3960)"};
}

// ---- 6. BOHB versus random search ----------------------------------------------

double regret(const BohbResult& r) {
  if (!r.incumbent) return INFINITY;
  const double d = r.trials[*r.incumbent].config[0] - 0.3;
  return d * d;
}

Verdict bohb_vs_random() {
  const auto t0 = Clock::now();
  const auto space = ConfigSpace::toy_space();
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    BohbOptions opt;
    opt.seed = seed;
    const auto bohb = run_bohb(space, toy_objective, opt);
    const int n_random = static_cast<int>(bohb.charged_epochs() / opt.max_budget);
    const auto random = random_search(space, toy_objective, n_random, opt.max_budget, seed + 1000);
    wins += regret(bohb) <= regret(random);
  }
  const double secs = seconds_since(t0);
  return {wins >= 35 && secs < 120.0, std::to_string(wins) + "/50 paired seeds (20 iterations each) with BOHB regret <= random-search "
                                          "regret at equal epochs (need 35) in " + fmt("%.1f", secs) + " s"};
}

// ---- 7, 8, 10. end-to-end pipeline ------------------------------------------------

struct Pipeline {
  fs::path work;
  bool ran = false;
  bool ok = false;
  std::string error;
  double seconds = 0.0;

  fs::path at(const std::string& name) const { return work / name; }

  bool cli(const std::vector<std::string>& args) {
    if (cli::run_cli(args) == 0) return true;
    error = "command failed: uqtsc";
    for (const auto& a : args) error += " " + a;
    return false;
  }

  void run() {
    if (ran) return;
    ran = true;
    fs::remove_all(work);
    fs::create_directories(work);
    const auto t0 = Clock::now();
    ok = cli({"generate", "--out", at("gen").string()}) &&
         cli({"prepare", "--manifest", at("gen/manifest.txt").string(), "--out", at("data").string(), "--window",
              "400x100", "--channels", "imu"}) &&
         cli({"search", "--data", at("data").string(), "--out", at("search").string(), "--family", "cnn", "--uq",
              "mc_dropout", "--iterations", "4"}) &&
         cli({"evaluate", "--checkpoint", at("search/incumbent.ckpt").string(), "--data", at("data").string(),
              "--out", at("eval").string(), "--samples", "10"});
    seconds = seconds_since(t0);
  }
};

Verdict end_to_end(Pipeline& p) {
  p.run();
  if (!p.ok) return {false, p.error};
  const auto report = read_report_csv(p.at("eval/report.csv").string());
  const auto& a = report.aggregates;
  const bool pass = a.f1_weighted >= 0.95 && a.ece <= 0.1 && p.seconds < 1800.0;
  return {pass, "incumbent weighted F1 " + fmt("%.4f", a.f1_weighted) + " (need >= 0.95), ECE " + fmt("%.4f", a.ece) +
                    " (need <= 0.1) on " + std::to_string(a.count) + " test windows; pipeline " +
                    fmt("%.0f", p.seconds) + " s (limit 1800 s)"};
}

Verdict entropy_vs_correctness(Pipeline& p) {
  p.run();
  if (!p.ok) return {false, p.error};
  auto report = read_report_csv(p.at("eval/report.csv").string());
  if (report.tag("uq") != "mc_dropout") return {false, "incumbent is not an MC Dropout model"};
  auto errors_of = [](const EvalReport& r) {
    std::size_t n = 0;
    for (const auto& s : r.samples) n += s.outcome == uqtsc::Outcome::FP || s.outcome == uqtsc::Outcome::FN;
    return n;
  };
  std::string note;
  const std::size_t natural = errors_of(report);
  if (natural < 5) {
    // Flip 5% of the test labels (at least one) and re-derive outcomes.
    Rng rng(8);
    std::vector<std::size_t> idx(report.samples.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng.engine());
    const std::size_t flips = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(0.05 * idx.size())));
    for (std::size_t k = 0; k < flips; ++k) {
      auto& s = report.samples[idx[k]];
      s.label = 1 - s.label;
      s.outcome = outcome_of(s.label, s.pred);
    }
    note = "; " + std::to_string(natural) + " natural errors, so " + std::to_string(flips) + " test labels flipped";
  }
  const auto groups = entropy_by_outcome(report);
  std::vector<double> wrong, right;
  for (auto o : {uqtsc::Outcome::FP, uqtsc::Outcome::FN}) {
    for (double h : groups.group(o)) wrong.push_back(h);
  }
  for (auto o : {uqtsc::Outcome::TP, uqtsc::Outcome::TN}) {
    for (double h : groups.group(o)) right.push_back(h);
  }
  if (wrong.empty() || right.empty()) return {false, "an outcome group is empty" + note};
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  const auto test = rank_sum_test(wrong, right);
  const bool pass = mean(wrong) > mean(right) && test.p_greater < 0.05;
  return {pass, "mean entropy incorrect " + fmt("%.4f", mean(wrong)) + " (n=" + std::to_string(wrong.size()) +
                    ") vs correct " + fmt("%.4f", mean(right)) + " (n=" + std::to_string(right.size()) +
                    "), one-sided rank-sum p = " + fmt("%.3g", test.p_greater) + " (need < 0.05)" + note};
}

// ---- 9. windowing fuzz ------------------------------------------------------------

Verdict windowing_fuzz() {
  Rng rng(9);
  std::size_t mismatches = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto L = static_cast<std::size_t>(rng.uniform_int(0, 3000));
    const auto w = static_cast<std::size_t>(rng.uniform_int(1, 500));
    const auto s = static_cast<std::size_t>(rng.uniform_int(1, 500));
    std::size_t brute = 0;
    for (std::size_t start = 0; start + w <= L; start += s) ++brute;
    mismatches += sliding_window_count(L, w, s) != brute;
  }
  // Spot-check the produced start indices on real logs.
  for (int i = 0; i < 200; ++i) {
    const auto L = static_cast<std::size_t>(rng.uniform_int(1, 300));
    const auto w = static_cast<std::size_t>(rng.uniform_int(1, 60));
    const auto s = static_cast<std::size_t>(rng.uniform_int(1, 60));
    TimeSeriesLog log;
    log.log_id = "fuzz";
    log.labels.assign(L, kRock);
    log.channel_names = {"acc_x"};
    log.groups = {ChannelGroup::Imu};
    log.channels = {std::vector<double>(L, 0.0)};
    const auto ds = slide_windows(log, w, s);
    std::size_t k = 0;
    for (std::size_t start = 0; start + w <= L; start += s, ++k) {
      if (k >= ds.size() || ds.windows[k].start_index != start) {
        ++mismatches;
        break;
      }
    }
    mismatches += k != ds.size();
  }
  return {mismatches == 0, "10000 random (L, w, s) counts plus 200 start-index enumerations, " +
                               std::to_string(mismatches) + " mismatches"};
}

// ---- 10. determinism ----------------------------------------------------------------

std::string without_wall_time(const std::string& csv) {
  std::string out;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    auto cells = split(line, ',');
    if (cells.size() > 7) cells.erase(cells.begin() + 7);
    for (const auto& c : cells) out += c + ",";
    out += "\n";
  }
  return out;
}

Verdict determinism(Pipeline& p) {
  p.run();
  if (!p.ok) return {false, p.error};
  // Steps not covered by the end-to-end run.
  std::ofstream(p.at("model.txt")) << "family = cnn\nuq = flipout\ncnn_blocks = 1\nf1 = 16\nk1 = 8\nmax_pool = 4\n";
  if (!p.cli({"train", "--data", p.at("data").string(), "--model", p.at("model.txt").string(), "--out",
              p.at("train").string(), "--epochs", "2"}) ||
      !p.cli({"select", p.at("eval/report.csv").string(), "--out", p.at("select").string()}) ||
      !p.cli({"report", p.at("eval/report.csv").string(), "--out", p.at("report").string()})) {
    return {false, p.error};
  }

  const std::vector<std::string> steps = {"gen", "data", "search", "eval", "train", "select", "report"};
  const std::vector<std::string> names = {"generate", "prepare", "search", "evaluate", "train", "select", "report"};
  std::size_t compared = 0;
  std::vector<std::string> differing;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto original = p.at(steps[i]);
    const auto rerun = p.at(steps[i] + "_rerun");
    fs::remove_all(rerun);
    if (!p.cli({names[i], "--config", (original / cli::kRunConfigFile).string(), "--out", rerun.string()})) {
      return {false, p.error};
    }
    for (const auto& entry : fs::directory_iterator(original)) {
      const auto name = entry.path().filename().string();
      if (name == cli::kRunConfigFile) continue;
      std::string a = read_text(entry.path()), b = read_text(rerun / name);
      if (name == "trials.csv") {
        a = without_wall_time(a);
        b = without_wall_time(b);
      }
      ++compared;
      if (a != b) differing.push_back(steps[i] + "/" + name);
    }
  }
  std::string detail = std::to_string(compared) + " output files from 7 commands re-run from run_config.txt";
  if (differing.empty()) {
    detail += ", all byte-identical (trials.csv compared without wall_seconds)";
  } else {
    detail += "; differing:";
    for (const auto& d : differing) detail += " " + d;
  }
  return {differing.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  Pipeline pipeline;
  pipeline.work = fs::temp_directory_path() / "uqtsc_acceptance";
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--work" && i + 1 < argc) {
      pipeline.work = argv[++i];
    } else if (auto n = parse_long(arg)) {
      only.insert(static_cast<int>(*n));
    } else {
      std::fprintf(stderr, "usage: acceptance [--work DIR] [criterion numbers...]\n");
      return 2;
    }
  }

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"gradient suite", gradient_suite},
      {"metric oracles", metric_oracles},
      {"UQ degeneracy", uq_degeneracy},
      {"selection gate", selection_gate},
      {"scheduler accounting", scheduler_accounting},
      {"BOHB vs random search", bohb_vs_random},
      {"end-to-end synthetic benchmark", [&] { return end_to_end(pipeline); }},
      {"entropy vs correctness", [&] { return entropy_vs_correctness(pipeline); }},
      {"windowing formula fuzz", windowing_fuzz},
      {"determinism", [&] { return determinism(pipeline); }},
  };

  std::vector<std::string> lines;
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i + 1);
    if (!only.empty() && !only.contains(number)) continue;
    Verdict o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    char head[96];
    std::snprintf(head, sizeof head, "criterion %2d %-4s %s: ", number, o.pass ? "PASS" : "FAIL",
                  criteria[i].first.c_str());
    lines.push_back(head + o.detail);
    std::printf("%s\n", lines.back().c_str());
    std::fflush(stdout);
  }
  std::printf("\n== acceptance summary ==\n");
  for (const auto& l : lines) std::printf("%s\n", l.c_str());
  return failed == 0 ? 0 : 1;
}
