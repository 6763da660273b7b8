// Copyright 2026 The ipa-pipe Authors
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

// Word error rate and region reports.

#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ipapipe/dataq.hpp"
#include "ipapipe/error.hpp"
#include "ipapipe/utf8.hpp"

namespace ipapipe::eval {

using dataq::Region;

/// Unit-cost Levenshtein distance over token sequences.
template <typename T>
std::size_t edit_distance(const std::vector<T>& ref, const std::vector<T>& hyp) {
  std::vector<std::size_t> prev(hyp.size() + 1), cur(hyp.size() + 1);
  for (std::size_t j = 0; j <= hyp.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= ref.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= hyp.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[hyp.size()];
}

struct EditCount {
  std::size_t edits = 0;
  std::size_t ref_words = 0;
};

inline EditCount count_edits(std::string_view reference, std::string_view hypothesis) {
  const auto ref = utf8::split_ws(reference);
  if (ref.empty()) throw Error("reference has no words");
  return {edit_distance(ref, utf8::split_ws(hypothesis)), ref.size()};
}

/// 100 * edits / reference words. Not clamped: insertions can push it past 100.
inline double wer(std::string_view reference, std::string_view hypothesis) {
  const auto c = count_edits(reference, hypothesis);
  return 100.0 * static_cast<double>(c.edits) / static_cast<double>(c.ref_words);
}

struct EvalPair {
  std::string reference;
  std::string hypothesis;
  Region region = Region::Standard;
};

struct RegionStats {
  double wer = 0.0;
  std::size_t n_samples = 0;
  std::size_t n_ref_words = 0;
  std::size_t n_edits = 0;
};

struct WerReport {
  std::map<Region, RegionStats> per_region;
  double mean = 0.0;                  // pooled: total edits / total reference words
  double sample_weighted_mean = 0.0;  // region WERs weighted by sample counts
};

inline double improvement(double baseline_wer, double system_wer) {
  if (!(baseline_wer > 0.0)) throw Error("baseline WER must be positive");
  return 100.0 * (baseline_wer - system_wer) / baseline_wer;
}

/// Sum(w_r * wer_r) / Sum(w_r) over identical key sets.
inline double weighted_mean(const std::map<Region, double>& region_wers, const std::map<Region, double>& weights) {
  if (region_wers.empty()) throw Error("weighted mean of nothing");
  if (region_wers.size() != weights.size()) throw Error("region WERs and weights cover different regions");
  double num = 0.0, den = 0.0;
  for (const auto& [r, w] : region_wers) {
    auto it = weights.find(r);
    if (it == weights.end()) throw Error("no weight for region " + std::string(dataq::to_string(r)));
    if (!(it->second > 0.0)) throw Error("weight for region " + std::string(dataq::to_string(r)) + " is not positive");
    num += it->second * w;
    den += it->second;
  }
  return num / den;
}

/// Test-split sample counts per region of the reference evaluation set.
inline const std::map<Region, double>& reference_test_counts() {
  static const std::map<Region, double> counts = {
      {Region::Chittagong, 605}, {Region::Kishoreganj, 642}, {Region::Narail, 573}, {Region::Narsingdi, 586},
      {Region::Rangpur, 503},    {Region::Tangail, 513},     {Region::Standard, 3117}};
  return counts;
}

/// Pooled per-region WER. `weights` (e.g. reference_test_counts) drive the
/// sample-weighted mean; without them the per-region sample counts are used.
inline WerReport corpus_wer(const std::vector<EvalPair>& pairs, const std::map<Region, double>* weights = nullptr) {
  if (pairs.empty()) throw Error("no evaluation pairs");
  WerReport report;
  std::size_t total_edits = 0, total_words = 0;
  for (const auto& p : pairs) {
    const auto c = count_edits(p.reference, p.hypothesis);
    auto& st = report.per_region[p.region];
    st.n_samples += 1;
    st.n_ref_words += c.ref_words;
    st.n_edits += c.edits;
    total_edits += c.edits;
    total_words += c.ref_words;
  }
  std::map<Region, double> region_wers, region_weights;
  for (auto& [r, st] : report.per_region) {
    st.wer = 100.0 * static_cast<double>(st.n_edits) / static_cast<double>(st.n_ref_words);
    region_wers[r] = st.wer;
    if (weights) {
      auto it = weights->find(r);
      if (it == weights->end()) throw Error("no weight for region " + std::string(dataq::to_string(r)));
      region_weights[r] = it->second;
    } else {
      region_weights[r] = static_cast<double>(st.n_samples);
    }
  }
  report.mean = 100.0 * static_cast<double>(total_edits) / static_cast<double>(total_words);
  report.sample_weighted_mean = weighted_mean(region_wers, region_weights);
  return report;
}

/// Eval input: `reference<TAB>hypothesis<TAB>region`.
inline std::vector<EvalPair> parse_pairs(std::string_view content, const std::string& source = "<pairs>") {
  std::vector<EvalPair> pairs;
  const auto all = utf8::lines(content);
  for (std::size_t n = 0; n < all.size(); ++n) {
    if (utf8::trim(all[n]).empty()) continue;
    auto f = utf8::split_char(all[n], '\t');
    if (f.size() != 3) throw ParseError(source, n + 1, "expected 'reference<TAB>hypothesis<TAB>region'");
    if (pairs.empty() && utf8::trim(f[0]) == "reference" && utf8::trim(f[1]) == "hypothesis") continue;
    EvalPair p;
    p.reference = f[0];
    p.hypothesis = f[1];
    if (utf8::split_ws(p.reference).empty()) throw ParseError(source, n + 1, "empty reference");
    try {
      p.region = dataq::parse_region(f[2]);
    } catch (const Error& e) {
      throw ParseError(source, n + 1, e.what());
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

inline std::vector<EvalPair> load_pairs(const std::string& path) { return parse_pairs(utf8::read_file(path), path); }

/// Weights file: `region<TAB>count` (or `region=count`) per line.
inline std::map<Region, double> parse_weights(std::string_view content, const std::string& source = "<weights>") {
  std::map<Region, double> w;
  const auto all = utf8::lines(content);
  for (std::size_t n = 0; n < all.size(); ++n) {
    std::string_view line = utf8::trim(all[n]);
    if (line.empty() || line.front() == '#') continue;
    auto sep = line.find_first_of("\t=,");
    if (sep == std::string_view::npos) throw ParseError(source, n + 1, "expected 'region<TAB>count'");
    Region r;
    double v;
    try {
      r = dataq::parse_region(line.substr(0, sep));
      v = std::stod(std::string(utf8::trim(line.substr(sep + 1))));
    } catch (const Error& e) {
      throw ParseError(source, n + 1, e.what());
    } catch (const std::exception&) {
      throw ParseError(source, n + 1, "bad count");
    }
    if (!(v > 0)) throw ParseError(source, n + 1, "count must be positive");
    if (!w.emplace(r, v).second) throw ParseError(source, n + 1, "duplicate region");
  }
  return w;
}

inline std::string fmt(double v, int precision = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

inline std::string format_report_csv(const WerReport& report) {
  std::string out = "region,wer,n_samples,n_ref_words\n";
  for (const auto& [r, st] : report.per_region)
    out += std::string(dataq::to_string(r)) + "," + fmt(st.wer, 4) + "," + std::to_string(st.n_samples) + "," +
           std::to_string(st.n_ref_words) + "\n";
  return out;
}

inline std::string format_report_table(const WerReport& report) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-12s %8s %10s %12s\n", "region", "WER(%)", "samples", "ref_words");
  out += line;
  for (const auto& [r, st] : report.per_region) {
    std::snprintf(line, sizeof line, "%-12s %8.2f %10zu %12zu\n", std::string(dataq::to_string(r)).c_str(), st.wer,
                  st.n_samples, st.n_ref_words);
    out += line;
  }
  std::snprintf(line, sizeof line, "%-12s %8.2f\n", "pooled-mean", report.mean);
  out += line;
  std::snprintf(line, sizeof line, "%-12s %8.2f\n", "weighted-mean", report.sample_weighted_mean);
  out += line;
  return out;
}

}  // namespace ipapipe::eval
