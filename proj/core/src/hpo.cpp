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

#include "uqtsc/hpo.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <thread>

#include "uqtsc/error.hpp"

namespace uqtsc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

ParamSpec int_param(std::string name, double lo, double hi, std::optional<std::size_t> parent = {},
                    double min_parent = 0.0) {
  return ParamSpec{std::move(name), true, lo, hi, parent, min_parent};
}

}  // namespace

ConfigSpace::ConfigSpace(std::vector<ParamSpec> params, KeyValues fixed)
    : params_(std::move(params)), fixed_(std::move(fixed)) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& p = params_[i];
    if (!(p.lo <= p.hi)) throw Error(ErrorKind::InvalidConfig, "empty range for " + p.name);
    if (p.parent && *p.parent >= i) throw Error(ErrorKind::InvalidConfig, "parent must precede " + p.name);
  }
}

ConfigSpace ConfigSpace::model_space(Family family, UqMethod uq) {
  using R = ConfigRanges;
  std::vector<ParamSpec> p;
  const bool cnn = family == Family::Cnn || family == Family::CnnLstm;
  const bool lstm = family == Family::Lstm || family == Family::CnnLstm;
  if (cnn) {
    const std::size_t blocks = p.size();
    p.push_back(int_param("cnn_blocks", R::kMinBlocks, R::kMaxBlocks));
    for (int b = 1; b <= 3; ++b) {
      std::optional<std::size_t> parent;
      if (b > 1) parent = blocks;
      p.push_back(int_param("f" + std::to_string(b), R::kMinFilters, R::kMaxFilters, parent, b));
      p.push_back(int_param("k" + std::to_string(b), R::kMinKernel, R::kMaxKernel, parent, b));
    }
    p.push_back(int_param("max_pool", R::kMinPool, R::kMaxPool));
  }
  if (lstm) {
    const std::size_t layers = p.size();
    p.push_back(int_param("lstm_layers", R::kMinBlocks, R::kMaxBlocks));
    for (int l = 1; l <= 3; ++l) {
      std::optional<std::size_t> parent;
      if (l > 1) parent = layers;
      p.push_back(int_param("u" + std::to_string(l), R::kMinCells, R::kMaxCells, parent, l));
    }
  }
  p.push_back(int_param("batch_size", R::kMinBatch, R::kMaxBatch));
  p.push_back(ParamSpec{"dropout_rate", false, R::kMinDropout, R::kMaxDropout, std::nullopt, 0.0});
  KeyValues fixed;
  fixed.set("family", std::string(to_string(family)));
  fixed.set("uq", std::string(to_string(uq)));
  return ConfigSpace(std::move(p), std::move(fixed));
}

ConfigSpace ConfigSpace::toy_space() {
  return ConfigSpace({ParamSpec{"x", false, 0.0, 1.0, std::nullopt, 0.0}});
}

ConfigSpace ConfigSpace::from_kv(const KeyValues& kv) {
  const Family family = parse_family(kv.get_string("family"));
  const UqMethod uq = parse_uq(kv.get_string("uq", "none"));
  ConfigSpace space = model_space(family, uq);
  auto targets = [&](const std::string& name) {
    std::vector<std::size_t> out;
    static const std::map<std::string, std::string> groups = {{"filters", "f"}, {"kernels", "k"}, {"cells", "u"}};
    if (auto g = groups.find(name); g != groups.end()) {
      for (int i = 1; i <= 3; ++i) {
        if (auto idx = space.index(g->second + std::to_string(i))) out.push_back(*idx);
      }
    } else if (auto idx = space.index(name)) {
      out.push_back(*idx);
    }
    return out;
  };
  for (const auto& [key, value] : kv.entries()) {
    if (key == "family" || key == "uq") continue;
    const auto dot = key.rfind('.');
    const std::string name = dot == std::string::npos ? key : key.substr(0, dot);
    const std::string bound = dot == std::string::npos ? "" : key.substr(dot + 1);
    const auto idx = targets(name);
    if ((bound != "min" && bound != "max") || idx.empty()) {
      throw Error(ErrorKind::InvalidConfig, "unknown search-space key '" + key + "' for family " + to_string(family));
    }
    const auto v = parse_double(value);
    if (!v) throw Error(ErrorKind::InvalidConfig, "non-numeric bound for " + key);
    for (auto i : idx) {
      auto& p = space.params_[i];
      if (*v < p.lo || *v > p.hi) {
        throw Error(ErrorKind::InvalidConfig, key + " = " + value + " leaves the allowed range");
      }
      (bound == "min" ? p.lo : p.hi) = *v;
      if (p.lo > p.hi) throw Error(ErrorKind::InvalidConfig, "empty range after " + key);
    }
  }
  return space;
}

std::optional<std::size_t> ConfigSpace::index(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  return std::nullopt;
}

bool ConfigSpace::is_parent(std::size_t i) const {
  return std::any_of(params_.begin(), params_.end(), [&](const ParamSpec& p) { return p.parent == i; });
}

bool ConfigSpace::is_active(const Assignment& a, std::size_t i) const {
  const auto& p = params_[i];
  if (!p.parent) return true;
  return is_active(a, *p.parent) && !std::isnan(a[*p.parent]) && a[*p.parent] >= p.min_parent;
}

Assignment ConfigSpace::repair(Assignment a) const {
  a.resize(params_.size(), kNaN);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& p = params_[i];
    if (!is_active(a, i)) {
      a[i] = kNaN;
      continue;
    }
    double v = std::isnan(a[i]) ? 0.5 * (p.lo + p.hi) : a[i];
    if (p.integer) v = std::round(v);
    a[i] = std::clamp(v, p.lo, p.hi);
  }
  return a;
}

void ConfigSpace::validate(const Assignment& a) const {
  if (a.size() != params_.size()) throw Error(ErrorKind::InvalidConfig, "assignment has the wrong dimension");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& p = params_[i];
    if (!is_active(a, i)) {
      if (!std::isnan(a[i])) throw Error(ErrorKind::InvalidConfig, p.name + " set while inactive");
      continue;
    }
    if (!(a[i] >= p.lo && a[i] <= p.hi)) {
      throw Error(ErrorKind::InvalidConfig, p.name + " = " + format_double(a[i]) + " outside range");
    }
    if (p.integer && a[i] != std::round(a[i])) throw Error(ErrorKind::InvalidConfig, p.name + " must be integer");
  }
  if (is_model_space()) to_model_config(a).validate();
}

ModelConfig ConfigSpace::to_model_config(const Assignment& a) const {
  if (!is_model_space()) throw Error(ErrorKind::InvalidConfig, "space does not describe a model");
  ModelConfig c;
  c.family = parse_family(fixed_.get_string("family"));
  c.uq = parse_uq(fixed_.get_string("uq"));
  c.cnn_blocks = 0;
  c.filters = {0, 0, 0};
  c.kernels = {0, 0, 0};
  c.max_pool = 0;
  c.lstm_layers = 0;
  c.cells = {0, 0, 0};
  auto get = [&](const std::string& name) -> std::optional<double> {
    auto i = index(name);
    if (!i || std::isnan(a[*i])) return std::nullopt;
    return a[*i];
  };
  auto as_int = [&](const std::string& name, int& field) {
    if (auto v = get(name)) field = static_cast<int>(*v);
  };
  as_int("cnn_blocks", c.cnn_blocks);
  as_int("max_pool", c.max_pool);
  as_int("lstm_layers", c.lstm_layers);
  as_int("batch_size", c.batch_size);
  for (int i = 0; i < 3; ++i) {
    as_int("f" + std::to_string(i + 1), c.filters[i]);
    as_int("k" + std::to_string(i + 1), c.kernels[i]);
    as_int("u" + std::to_string(i + 1), c.cells[i]);
  }
  if (auto v = get("dropout_rate")) c.dropout_rate = *v;
  return c;
}

std::vector<std::string> ConfigSpace::flat_keys() const {
  if (is_model_space()) return ModelConfig::keys();
  std::vector<std::string> keys;
  for (const auto& p : params_) keys.push_back(p.name);
  return keys;
}

std::vector<std::string> ConfigSpace::flat_values(const Assignment& a) const {
  std::vector<std::string> out;
  if (is_model_space()) {
    const auto kv = to_model_config(a).to_kv();
    for (const auto& k : ModelConfig::keys()) out.push_back(kv.get_string(k));
    return out;
  }
  for (double v : a) out.push_back(std::isnan(v) ? std::string() : format_double(v));
  return out;
}

Assignment sample_random(const ConfigSpace& space, Rng& rng) {
  const auto& params = space.params();
  Assignment a(params.size(), kNaN);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!space.is_active(a, i)) continue;
    const auto& p = params[i];
    a[i] = p.integer ? static_cast<double>(rng.uniform_int(static_cast<long>(p.lo), static_cast<long>(p.hi)))
                     : rng.uniform(p.lo, p.hi);
  }
  return a;
}

const char* to_string(TrialStatus s) { return s == TrialStatus::Ok ? "ok" : "failed"; }

long Bracket::epochs() const {
  long total = 0;
  for (const auto& r : rungs) total += static_cast<long>(r.budget) * r.n_configs;
  return total;
}

long HyperbandSchedule::epochs_per_sweep() const {
  long total = 0;
  for (const auto& b : brackets) total += b.epochs();
  return total;
}

HyperbandSchedule hyperband_schedule(int min_budget, int max_budget, int eta) {
  if (min_budget < 1 || min_budget >= max_budget || eta < 2) {
    throw Error(ErrorKind::InvalidBudgets, "need 1 <= min_budget < max_budget and eta >= 2, got (" +
                                               std::to_string(min_budget) + ", " + std::to_string(max_budget) +
                                               ", " + std::to_string(eta) + ")");
  }
  HyperbandSchedule h;
  h.min_budget = min_budget;
  h.max_budget = max_budget;
  h.eta = eta;
  // Largest s with min_budget * eta^s <= max_budget, in exact integer arithmetic.
  long reach = min_budget;
  while (reach * eta <= max_budget) {
    reach *= eta;
    ++h.s_max;
  }
  for (int s = h.s_max; s >= 0; --s) {
    Bracket b;
    b.s = s;
    long eta_s = 1;
    for (int i = 0; i < s; ++i) eta_s *= eta;
    long n = ((h.s_max + 1) * eta_s + s) / (s + 1);  // ceil
    for (int i = 0; i <= s; ++i) {
      long eta_down = 1;
      for (int j = 0; j < s - i; ++j) eta_down *= eta;
      b.rungs.push_back(Rung{static_cast<int>(max_budget / eta_down), static_cast<int>(n)});
      n = (n + eta - 1) / eta;
    }
    h.brackets.push_back(std::move(b));
  }
  return h;
}

std::vector<std::size_t> rank_trials(const std::vector<TrialRecord>& trials) {
  std::vector<std::size_t> order(trials.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const bool fa = trials[a].status == TrialStatus::Failed, fb = trials[b].status == TrialStatus::Failed;
    if (fa != fb) return fb;
    if (fa) return false;
    return trials[a].val_loss < trials[b].val_loss;
  });
  return order;
}

// ---------------------------------------------------------------------------
// KDE proposal

namespace {

struct Kde {
  std::vector<Assignment> points;  // normalized; categorical dims hold the category index
  std::vector<double> bandwidth;
};

struct Encoder {
  const ConfigSpace& space;
  std::vector<bool> categorical;
  std::vector<int> categories;

  explicit Encoder(const ConfigSpace& s) : space(s) {
    for (std::size_t i = 0; i < s.dims(); ++i) {
      const auto& p = s.params()[i];
      const bool cat = s.is_parent(i) && p.integer;
      categorical.push_back(cat);
      categories.push_back(cat ? static_cast<int>(p.hi - p.lo) + 1 : 0);
    }
  }

  Assignment encode(const Assignment& a) const {
    Assignment z(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto& p = space.params()[i];
      if (categorical[i]) {
        z[i] = std::isnan(a[i]) ? std::floor(0.5 * (p.hi - p.lo)) : a[i] - p.lo;
      } else if (std::isnan(a[i]) || p.hi == p.lo) {
        z[i] = 0.5;
      } else {
        z[i] = (a[i] - p.lo) / (p.hi - p.lo);
      }
    }
    return z;
  }

  Assignment decode(const Assignment& z) const {
    Assignment a(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      const auto& p = space.params()[i];
      a[i] = categorical[i] ? p.lo + z[i] : p.lo + z[i] * (p.hi - p.lo);
    }
    return space.repair(a);
  }
};

std::vector<double> scott_bandwidth(const std::vector<Assignment>& pts, std::size_t dims, double min_bw) {
  std::vector<double> bw(dims, min_bw);
  const auto n = static_cast<double>(pts.size());
  if (pts.size() < 2) return bw;
  const double factor = std::pow(n, -1.0 / (static_cast<double>(dims) + 4.0));
  for (std::size_t d = 0; d < dims; ++d) {
    double mean = 0.0;
    for (const auto& p : pts) mean += p[d];
    mean /= n;
    double var = 0.0;
    for (const auto& p : pts) var += (p[d] - mean) * (p[d] - mean);
    var /= (n - 1.0);
    bw[d] = std::max(min_bw, std::sqrt(var) * factor);
  }
  return bw;
}

double log_density(const Kde& kde, const Encoder& enc, const Assignment& z, double lambda) {
  constexpr double kLogSqrt2Pi = 0.91893853320467274178;
  std::vector<double> terms;
  terms.reserve(kde.points.size());
  for (const auto& p : kde.points) {
    double s = 0.0;
    for (std::size_t d = 0; d < z.size(); ++d) {
      if (enc.categorical[d]) {
        const int k = enc.categories[d];
        if (k <= 1) continue;
        s += z[d] == p[d] ? std::log(1.0 - lambda) : std::log(lambda / (k - 1));
      } else {
        const double u = (z[d] - p[d]) / kde.bandwidth[d];
        s += -0.5 * u * u - std::log(kde.bandwidth[d]) - kLogSqrt2Pi;
      }
    }
    terms.push_back(s);
  }
  const double mx = *std::max_element(terms.begin(), terms.end());
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - mx);
  return mx + std::log(acc) - std::log(static_cast<double>(terms.size()));
}

Assignment sample_kde(const Kde& kde, const Encoder& enc, Rng& rng, double factor, double lambda) {
  const auto& centre = kde.points[static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(kde.points.size()) - 1))];
  Assignment z(centre.size());
  for (std::size_t d = 0; d < z.size(); ++d) {
    if (enc.categorical[d]) {
      const int k = enc.categories[d];
      if (k > 1 && rng.bernoulli(std::min(1.0, lambda))) {
        // Uniform over the other categories.
        long other = rng.uniform_int(0, k - 2);
        if (other >= static_cast<long>(centre[d])) ++other;
        z[d] = static_cast<double>(other);
      } else {
        z[d] = centre[d];
      }
      continue;
    }
    const double sd = kde.bandwidth[d] * factor;
    double v = rng.normal(centre[d], sd);
    for (int tries = 0; tries < 100 && (v < 0.0 || v > 1.0); ++tries) v = rng.normal(centre[d], sd);
    z[d] = std::clamp(v, 0.0, 1.0);
  }
  return z;
}

}  // namespace

Assignment kde_propose(const std::vector<TrialRecord>& trials, const ConfigSpace& space, Rng& rng,
                       const KdeOptions& opt) {
  const std::size_t d = space.dims();
  const std::size_t need = d + 2;
  std::map<int, std::size_t> ok_per_budget;
  for (const auto& t : trials) {
    if (t.status == TrialStatus::Ok) ++ok_per_budget[t.budget_epochs];
  }
  std::optional<int> budget;
  for (auto it = ok_per_budget.rbegin(); it != ok_per_budget.rend(); ++it) {
    if (it->second >= need) {
      budget = it->first;
      break;
    }
  }
  if (!budget) {
    throw Error(ErrorKind::InsufficientData, "no budget has " + std::to_string(need) + " successful trials");
  }
  if (opt.random_fraction > 0.0 && rng.bernoulli(opt.random_fraction)) return sample_random(space, rng);

  std::vector<TrialRecord> at_budget;
  for (const auto& t : trials) {
    if (t.budget_epochs == *budget) at_budget.push_back(t);
  }
  const auto order = rank_trials(at_budget);
  const std::size_t n_ok = ok_per_budget[*budget];
  const std::size_t n_good =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(opt.top_fraction * static_cast<double>(n_ok))));

  const Encoder enc(space);
  Kde good, bad;
  for (std::size_t r = 0; r < order.size(); ++r) {
    (r < n_good ? good : bad).points.push_back(enc.encode(at_budget[order[r]].config));
  }
  std::vector<Assignment> pooled = good.points;
  pooled.insert(pooled.end(), bad.points.begin(), bad.points.end());
  // A single good point has no spread of its own; it borrows the pooled bandwidth.
  good.bandwidth = scott_bandwidth(good.points.size() > 1 ? good.points : pooled, d, opt.min_bandwidth);
  bad.bandwidth = scott_bandwidth(bad.points, d, opt.min_bandwidth);

  Assignment best;
  double best_score = -kInf;
  const double sample_lambda = opt.discrete_lambda * opt.bandwidth_factor;
  for (int c = 0; c < std::max(1, opt.candidates); ++c) {
    const Assignment cand = enc.decode(sample_kde(good, enc, rng, opt.bandwidth_factor, sample_lambda));
    const Assignment z = enc.encode(cand);
    const double score = log_density(good, enc, z, opt.discrete_lambda) -
                         std::max(log_density(bad, enc, z, opt.discrete_lambda), std::log(1e-32));
    if (best.empty() || score > best_score) {
      best_score = score;
      best = cand;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Scheduling

namespace {

struct Job {
  std::size_t config;
  TrialRecord record;
};

void evaluate_jobs(std::vector<Job>& jobs, const std::vector<Assignment>& configs, const Objective& objective,
                   int workers) {
  auto run = [&](Job& job) {
    const auto start = std::chrono::steady_clock::now();
    auto& rec = job.record;
    try {
      const auto r = objective(configs[job.config], rec.budget_epochs, rec.seed);
      rec.val_loss = r.val_loss;
      rec.val_wf1 = r.val_wf1;
      rec.status = std::isfinite(r.val_loss) ? TrialStatus::Ok : TrialStatus::Failed;
    } catch (const std::exception&) {
      rec.status = TrialStatus::Failed;
    }
    if (rec.status == TrialStatus::Failed) {
      rec.val_loss = kInf;
      rec.val_wf1 = 0.0;
    }
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  if (workers <= 1 || jobs.size() <= 1) {
    for (auto& j : jobs) run(j);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(workers), jobs.size());
  for (std::size_t w = 0; w < n; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();) run(jobs[i]);
    });
  }
  for (auto& t : pool) t.join();
}

struct HalvingContext {
  const Objective& objective;
  std::uint64_t seed;
  int workers;
  int bracket;
  std::size_t next_trial_id;
  std::size_t config_uid_base;
  const std::function<void(const TrialRecord&)>* on_trial;
};

HalvingResult halve(const std::vector<Assignment>& configs, const std::vector<int>& budgets, int eta,
                    HalvingContext& ctx) {
  HalvingResult out;
  if (configs.empty()) return out;
  std::vector<std::size_t> members(configs.size());
  std::iota(members.begin(), members.end(), 0);
  const Rng base(ctx.seed);
  for (std::size_t r = 0; r < budgets.size(); ++r) {
    if (r > 0) {
      const std::size_t keep = (members.size() + static_cast<std::size_t>(eta) - 1) / static_cast<std::size_t>(eta);
      std::vector<TrialRecord> last(out.trials.end() - static_cast<std::ptrdiff_t>(members.size()), out.trials.end());
      const auto order = rank_trials(last);
      std::vector<std::size_t> next;
      for (std::size_t i = 0; i < keep && i < order.size(); ++i) next.push_back(members[order[i]]);
      members = std::move(next);
    }
    out.rung_members.push_back(members);
    std::vector<Job> jobs;
    for (auto m : members) {
      TrialRecord rec;
      rec.trial_id = ctx.next_trial_id++;
      rec.bracket = ctx.bracket;
      rec.rung = static_cast<int>(r);
      rec.budget_epochs = budgets[r];
      rec.seed = base.split(ctx.config_uid_base + m).seed();
      rec.config = configs[m];
      jobs.push_back(Job{m, std::move(rec)});
    }
    evaluate_jobs(jobs, configs, ctx.objective, ctx.workers);
    for (auto& j : jobs) {
      if (ctx.on_trial && *ctx.on_trial) (*ctx.on_trial)(j.record);
      out.trials.push_back(std::move(j.record));
    }
  }
  return out;
}

std::optional<std::size_t> find_incumbent(const std::vector<TrialRecord>& trials, int budget) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto& t = trials[i];
    if (t.status != TrialStatus::Ok || t.budget_epochs != budget) continue;
    if (!best || t.val_loss < trials[*best].val_loss) best = i;
  }
  return best;
}

}  // namespace

HalvingResult successive_halving(const std::vector<Assignment>& configs, const std::vector<int>& budgets, int eta,
                                 const Objective& objective, std::uint64_t seed, int workers) {
  if (eta < 2) throw Error(ErrorKind::InvalidBudgets, "eta must be at least 2");
  if (budgets.empty()) throw Error(ErrorKind::InvalidBudgets, "no rung budgets");
  HalvingContext ctx{objective, seed, workers, 0, 0, 0, nullptr};
  return halve(configs, budgets, eta, ctx);
}

long BohbResult::charged_epochs() const {
  long total = 0;
  for (const auto& t : trials) total += t.budget_epochs;
  return total;
}

BohbResult run_bohb(const ConfigSpace& space, const Objective& objective, const BohbOptions& opt) {
  if (opt.iterations < 0) throw Error(ErrorKind::InvalidArgument, "iterations must be nonnegative");
  BohbResult result;
  result.schedule = hyperband_schedule(opt.min_budget, opt.max_budget, opt.eta);
  const auto& brackets = result.schedule.brackets;
  const Rng root(opt.seed);
  std::size_t config_uid = 0;

  auto run_bracket = [&](int iteration, const Bracket& b) {
    Rng proposal = root.split(0x50000000ULL + static_cast<std::uint64_t>(iteration) * 64 + static_cast<std::uint64_t>(b.s));
    std::vector<Assignment> configs;
    for (int i = 0; i < b.rungs.front().n_configs; ++i) {
      Assignment a;
      try {
        a = kde_propose(result.trials, space, proposal, opt.kde);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::InsufficientData) throw;
        a = sample_random(space, proposal);
      }
      space.validate(a);
      configs.push_back(std::move(a));
    }
    std::vector<int> budgets;
    for (const auto& r : b.rungs) budgets.push_back(r.budget);
    HalvingContext ctx{objective, root.split(0x7A1A1ULL).seed(), opt.workers, b.s, result.trials.size(), config_uid,
                       &opt.on_trial};
    auto h = halve(configs, budgets, opt.eta, ctx);
    config_uid += configs.size();
    for (auto& t : h.trials) result.trials.push_back(std::move(t));
  };

  for (int it = 0; it < opt.iterations; ++it) {
    if (opt.mode == IterationMode::FullSweep) {
      for (const auto& b : brackets) run_bracket(it, b);
    } else {
      run_bracket(it, brackets[static_cast<std::size_t>(it) % brackets.size()]);
    }
  }
  result.incumbent = find_incumbent(result.trials, opt.max_budget);
  return result;
}

TrialResult toy_objective(const Assignment& config, int budget_epochs, std::uint64_t) {
  if (config.size() != 1 || budget_epochs <= 0) throw Error(ErrorKind::InvalidArgument, "toy objective takes one x");
  const double d = config[0] - 0.3;
  return {d * d, 1.0 - std::abs(d)};
}

BohbResult random_search(const ConfigSpace& space, const Objective& objective, int n_trials, int budget,
                         std::uint64_t seed) {
  BohbResult result;
  Rng rng = Rng(seed).split(0x4A4D);
  std::vector<Assignment> configs;
  for (int i = 0; i < n_trials; ++i) configs.push_back(sample_random(space, rng));
  HalvingContext ctx{objective, Rng(seed).split(0x7A1A1ULL).seed(), 1, 0, 0, 0, nullptr};
  auto h = halve(configs, {budget}, 2, ctx);
  result.trials = std::move(h.trials);
  result.incumbent = find_incumbent(result.trials, budget);
  return result;
}

std::string trial_csv_header(const ConfigSpace& space) {
  std::string s = "trial_id,bracket,rung,budget_epochs,status,val_loss,val_wF1,wall_seconds";
  for (const auto& k : space.flat_keys()) s += "," + k;
  return s;
}

std::string trial_csv_row(const ConfigSpace& space, const TrialRecord& t) {
  char wall[32];
  std::snprintf(wall, sizeof wall, "%.3f", t.wall_seconds);
  std::string s = std::to_string(t.trial_id) + "," + std::to_string(t.bracket) + "," + std::to_string(t.rung) + "," +
                  std::to_string(t.budget_epochs) + "," + to_string(t.status) + "," + format_double(t.val_loss) +
                  "," + format_double(t.val_wf1) + "," + wall;
  for (const auto& v : space.flat_values(t.config)) s += "," + v;
  return s;
}

}  // namespace uqtsc
