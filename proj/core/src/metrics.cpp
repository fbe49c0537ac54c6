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

#include "uqtsc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "uqtsc/error.hpp"
#include "uqtsc/kv.hpp"

namespace uqtsc {

PredictiveDistribution PredictiveDistribution::from_samples(std::vector<Tensor> samples) {
  if (samples.empty()) throw Error(ErrorKind::EmptyInput, "no samples");
  const Shape shape = samples.front().shape();
  if (shape.size() != 2) throw Error(ErrorKind::ShapeMismatch, "samples must be [N x C]");
  PredictiveDistribution d;
  d.mean_probs = Tensor(shape);
  for (const auto& s : samples) {
    if (s.shape() != shape) throw Error(ErrorKind::ShapeMismatch, "sample shapes differ");
    for (std::size_t i = 0; i < s.size(); ++i) d.mean_probs[i] += s[i];
  }
  const double inv = 1.0 / static_cast<double>(samples.size());
  for (auto& v : d.mean_probs.values()) v *= inv;
  const std::size_t n = shape[0], c = shape[1];
  d.predicted_class.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = d.mean_probs.data() + i * c;
    d.predicted_class[i] = static_cast<int>(std::max_element(row, row + c) - row);
  }
  d.samples = std::move(samples);
  return d;
}

PredictiveDistribution predictive_posterior(Network& net, const Tensor& x, std::size_t M, Rng& rng,
                                            std::size_t chunk) {
  if (M == 0) throw Error(ErrorKind::InvalidArgument, "M must be at least 1");
  if (x.rank() != 3) throw Error(ErrorKind::ShapeMismatch, "input must be [batch x channels x time]");
  const std::size_t n = x.dim(0);
  const std::size_t per = x.dim(1) * x.dim(2);
  chunk = std::max<std::size_t>(1, chunk);
  std::vector<Tensor> samples(M, Tensor({n, 2}));
  Context ctx{Mode::McInfer, &rng};
  for (std::size_t begin = 0; begin < n; begin += chunk) {
    const std::size_t len = std::min(chunk, n - begin);
    Tensor part({len, x.dim(1), x.dim(2)});
    std::copy_n(x.data() + begin * per, len * per, part.data());
    for (std::size_t m = 0; m < M; ++m) {
      const Tensor probs = softmax(net.forward(part, ctx));
      std::copy_n(probs.data(), len * 2, samples[m].data() + begin * 2);
    }
  }
  return PredictiveDistribution::from_samples(std::move(samples));
}

double predictive_entropy(std::span<const double> probs) {
  const double sum = std::accumulate(probs.begin(), probs.end(), 0.0);
  if (probs.empty() || std::abs(sum - 1.0) > 1e-6) {
    throw Error(ErrorKind::NotNormalized, "probabilities sum to " + format_double(sum));
  }
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::max(0.0, h);
}

namespace {

std::size_t bin_index(double c, std::size_t K) {
  c = std::clamp(c, 0.0, 1.0);
  auto idx = static_cast<std::size_t>(std::max(0.0, std::ceil(c * static_cast<double>(K)) - 1.0));
  idx = std::min(idx, K - 1);
  // Right-inclusive edges: a value sitting exactly on an edge belongs to the lower bin.
  if (idx > 0 && c <= static_cast<double>(idx) / static_cast<double>(K)) --idx;
  return idx;
}

}  // namespace

EceResult ece(const Tensor& mean_probs, std::span<const int> labels, std::size_t K, EceMode mode) {
  if (K == 0) throw Error(ErrorKind::InvalidArgument, "K must be at least 1");
  if (labels.empty() || mean_probs.size() == 0) throw Error(ErrorKind::EmptyInput, "ece on empty input");
  if (mean_probs.rank() != 2 || mean_probs.dim(0) != labels.size()) {
    throw Error(ErrorKind::ShapeMismatch, "probabilities and labels disagree in count");
  }
  const std::size_t n = labels.size(), c = mean_probs.dim(1);
  EceResult r;
  r.bins.resize(K);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = mean_probs.data() + i * c;
    double score;
    double hit;
    if (mode == EceMode::Confidence) {
      const auto pred = static_cast<int>(std::max_element(row, row + c) - row);
      score = row[pred];
      hit = pred == labels[i] ? 1.0 : 0.0;
    } else {
      score = row[1];
      hit = labels[i] == 1 ? 1.0 : 0.0;
    }
    auto& b = r.bins[bin_index(score, K)];
    ++b.count;
    b.confidence += score;
    b.accuracy += hit;
  }
  for (auto& b : r.bins) {
    if (b.count == 0) continue;
    b.confidence /= static_cast<double>(b.count);
    b.accuracy /= static_cast<double>(b.count);
    r.value += static_cast<double>(b.count) / static_cast<double>(n) * std::abs(b.accuracy - b.confidence);
  }
  return r;
}

ClassScores f1_and_accuracy(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.empty() || labels.empty()) throw Error(ErrorKind::EmptyInput, "f1 on empty input");
  if (predictions.size() != labels.size()) throw Error(ErrorKind::ShapeMismatch, "prediction/label count mismatch");
  std::array<std::array<std::size_t, 2>, 2> cm{};  // cm[label][pred]
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] > 1 || predictions[i] < 0 || predictions[i] > 1) {
      throw Error(ErrorKind::LabelOutOfRange, "binary labels expected");
    }
    ++cm[labels[i]][predictions[i]];
  }
  const auto n = static_cast<double>(labels.size());
  ClassScores s;
  std::array<double, 2> f1{};
  for (int c = 0; c < 2; ++c) {
    const double tp = static_cast<double>(cm[c][c]);
    const double fp = static_cast<double>(cm[1 - c][c]);
    const double fn = static_cast<double>(cm[c][1 - c]);
    if (tp + fp + fn == 0.0) {
      s.undefined[c] = true;
      f1[c] = 0.0;
    } else {
      f1[c] = 2.0 * tp / (2.0 * tp + fp + fn);
    }
  }
  s.f1_cl0 = f1[0];
  s.f1_cl1 = f1[1];
  const double support0 = static_cast<double>(cm[0][0] + cm[0][1]);
  const double support1 = static_cast<double>(cm[1][0] + cm[1][1]);
  s.f1_weighted = support0 / n * f1[0] + support1 / n * f1[1];
  s.accuracy = static_cast<double>(cm[0][0] + cm[1][1]) / n;
  return s;
}

const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::TP: return "TP";
    case Outcome::TN: return "TN";
    case Outcome::FP: return "FP";
    case Outcome::FN: return "FN";
  }
  return "?";
}

Outcome parse_outcome(const std::string& text) {
  if (text == "TP") return Outcome::TP;
  if (text == "TN") return Outcome::TN;
  if (text == "FP") return Outcome::FP;
  if (text == "FN") return Outcome::FN;
  throw Error(ErrorKind::MalformedReport, "unknown outcome '" + text + "'");
}

Outcome outcome_of(int label, int prediction) {
  if (prediction == 1) return label == 1 ? Outcome::TP : Outcome::FP;
  return label == 0 ? Outcome::TN : Outcome::FN;
}

std::optional<std::string> EvalReport::tag(const std::string& key) const {
  for (const auto& [k, v] : tags) {
    if (k == key) return v;
  }
  return std::nullopt;
}

void recompute_aggregates(EvalReport& report, std::size_t K, EceMode mode) {
  if (report.samples.empty()) throw Error(ErrorKind::EmptyInput, "report has no samples");
  const std::size_t n = report.samples.size();
  std::vector<int> labels(n), preds(n);
  Tensor probs({n, 2});
  double entropy_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = report.samples[i];
    labels[i] = s.label;
    preds[i] = s.pred;
    probs.at(i, 0) = s.p0;
    probs.at(i, 1) = s.p1;
    entropy_sum += s.entropy;
  }
  const auto scores = f1_and_accuracy(preds, labels);
  const auto cal = ece(probs, labels, K, mode);
  auto& a = report.aggregates;
  a.count = n;
  a.accuracy = scores.accuracy;
  a.f1_cl0 = scores.f1_cl0;
  a.f1_cl1 = scores.f1_cl1;
  a.f1_weighted = scores.f1_weighted;
  a.mean_entropy = entropy_sum / static_cast<double>(n);
  a.ece = cal.value;
  report.bins = cal.bins;
}

EvalReport make_report(const PredictiveDistribution& dist, std::span<const int> labels, std::size_t K,
                       EceMode mode) {
  const std::size_t n = dist.input_count();
  if (n == 0) throw Error(ErrorKind::EmptyInput, "empty predictive distribution");
  if (labels.size() != n) throw Error(ErrorKind::ShapeMismatch, "label count differs from inputs");
  EvalReport r;
  r.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& s = r.samples[i];
    s.sample_id = i;
    s.p0 = dist.mean_probs.at(i, 0);
    s.p1 = dist.mean_probs.at(i, 1);
    const double p[2] = {s.p0, s.p1};
    s.entropy = predictive_entropy(p);
    s.label = labels[i];
    s.pred = dist.predicted_class[i];
    s.outcome = outcome_of(s.label, s.pred);
  }
  recompute_aggregates(r, K, mode);
  return r;
}

namespace {

constexpr const char* kReportHeader = "sample_id,p0,p1,entropy,label,pred,outcome";

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorKind::MalformedReport, what); }

double number(const std::string& text, const std::string& what) {
  auto v = parse_double(text);
  if (!v) malformed("non-numeric " + what + " '" + text + "'");
  return *v;
}

long integer(const std::string& text, const std::string& what) {
  auto v = parse_long(text);
  if (!v) malformed("non-integer " + what + " '" + text + "'");
  return *v;
}

}  // namespace

std::string format_report_csv(const EvalReport& report) {
  std::ostringstream out;
  out << kReportHeader << '\n';
  for (const auto& s : report.samples) {
    out << s.sample_id << ',' << format_double(s.p0) << ',' << format_double(s.p1) << ','
        << format_double(s.entropy) << ',' << s.label << ',' << s.pred << ',' << to_string(s.outcome) << '\n';
  }
  for (const auto& [k, v] : report.tags) out << "#agg," << k << ',' << v << '\n';
  const auto& a = report.aggregates;
  out << "#agg,count," << a.count << '\n';
  out << "#agg,entropy," << format_double(a.mean_entropy) << '\n';
  out << "#agg,ece," << format_double(a.ece) << '\n';
  out << "#agg,f1_cl0," << format_double(a.f1_cl0) << '\n';
  out << "#agg,f1_cl1," << format_double(a.f1_cl1) << '\n';
  out << "#agg,f1_weighted," << format_double(a.f1_weighted) << '\n';
  out << "#agg,accuracy," << format_double(a.accuracy) << '\n';
  for (std::size_t i = 0; i < report.bins.size(); ++i) {
    const auto& b = report.bins[i];
    out << "#bin," << i << ',' << b.count << ',' << format_double(b.confidence) << ',' << format_double(b.accuracy)
        << '\n';
  }
  return out.str();
}

void write_report_csv(const EvalReport& report, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot write report " + path);
  f << format_report_csv(report);
}

EvalReport parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || trim(line) != kReportHeader) malformed("missing report header");
  EvalReport r;
  std::map<std::string, double> agg;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t(trim(line));
    if (t.empty()) continue;
    const auto f = split(t, ',');
    const std::string where = " (line " + std::to_string(lineno) + ")";
    if (f[0] == "#agg") {
      if (f.size() != 3) malformed("bad #agg row" + where);
      static const std::vector<std::string> numeric = {"count", "entropy", "ece", "f1_cl0",
                                                       "f1_cl1", "f1_weighted", "accuracy"};
      if (std::find(numeric.begin(), numeric.end(), f[1]) != numeric.end()) {
        agg[f[1]] = number(f[2], f[1] + where);
      } else {
        r.tags.emplace_back(f[1], f[2]);
      }
    } else if (f[0] == "#bin") {
      if (f.size() != 5) malformed("bad #bin row" + where);
      CalibrationBin b;
      b.count = static_cast<std::size_t>(integer(f[2], "bin count" + where));
      b.confidence = number(f[3], "bin confidence" + where);
      b.accuracy = number(f[4], "bin accuracy" + where);
      r.bins.push_back(b);
    } else {
      if (f.size() != 7) malformed("sample row needs 7 fields" + where);
      SampleRow s;
      s.sample_id = static_cast<std::size_t>(integer(f[0], "sample_id" + where));
      s.p0 = number(f[1], "p0" + where);
      s.p1 = number(f[2], "p1" + where);
      s.entropy = number(f[3], "entropy" + where);
      s.label = static_cast<int>(integer(f[4], "label" + where));
      s.pred = static_cast<int>(integer(f[5], "pred" + where));
      s.outcome = parse_outcome(f[6]);
      r.samples.push_back(s);
    }
  }
  for (const char* key : {"entropy", "ece", "f1_cl0", "f1_cl1", "f1_weighted", "accuracy"}) {
    if (!agg.count(key)) malformed(std::string("report missing #agg ") + key);
  }
  auto& a = r.aggregates;
  a.mean_entropy = agg["entropy"];
  a.ece = agg["ece"];
  a.f1_cl0 = agg["f1_cl0"];
  a.f1_cl1 = agg["f1_cl1"];
  a.f1_weighted = agg["f1_weighted"];
  a.accuracy = agg["accuracy"];
  a.count = agg.count("count") ? static_cast<std::size_t>(agg["count"]) : r.samples.size();
  return r;
}

EvalReport read_report_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot open report " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_report_csv(ss.str());
}

bool passes_gate(double f1_cl0, double f1_cl1, double mean_entropy, SelectionThresholds t) {
  return f1_cl0 >= t.min_f1 && f1_cl1 >= t.min_f1 && mean_entropy <= t.max_entropy;
}

Selection select_candidates(const std::vector<EvalReport>& reports, SelectionThresholds t) {
  Selection s;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& a = reports[i].aggregates;
    (passes_gate(a.f1_cl0, a.f1_cl1, a.mean_entropy, t) ? s.selected : s.rejected).push_back(i);
  }
  return s;
}

OutcomeEntropy entropy_by_outcome(const EvalReport& report) {
  OutcomeEntropy o;
  for (const auto& s : report.samples) o.groups[static_cast<std::size_t>(s.outcome)].push_back(s.entropy);
  for (std::size_t g = 0; g < 4; ++g) {
    if (o.groups[g].empty()) continue;
    o.means[g] = std::accumulate(o.groups[g].begin(), o.groups[g].end(), 0.0) / static_cast<double>(o.groups[g].size());
  }
  return o;
}

RankSumResult rank_sum_test(std::span<const double> a, std::span<const double> b) {
  RankSumResult r;
  const std::size_t na = a.size(), nb = b.size(), n = na + nb;
  if (na == 0 || nb == 0) return r;
  std::vector<std::pair<double, int>> all;
  all.reserve(n);
  for (double v : a) all.emplace_back(v, 0);
  for (double v : b) all.emplace_back(v, 1);
  std::sort(all.begin(), all.end());
  double rank_a = 0.0, tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && all[j].first == all[i].first) ++j;
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    const auto t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    for (std::size_t k = i; k < j; ++k) {
      if (all[k].second == 0) rank_a += avg;
    }
    i = j;
  }
  const double dna = static_cast<double>(na), dnb = static_cast<double>(nb), dn = static_cast<double>(n);
  r.u = rank_a - dna * (dna + 1.0) / 2.0;
  const double mean = dna * dnb / 2.0;
  const double var = dna * dnb / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
  if (var <= 0.0) return r;
  r.z = (r.u - mean - 0.5) / std::sqrt(var);
  r.p_greater = 0.5 * std::erfc(r.z / std::sqrt(2.0));
  return r;
}

}  // namespace uqtsc
