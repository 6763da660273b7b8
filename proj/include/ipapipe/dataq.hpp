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

// Parallel text/IPA corpora and the novelty-driven train/test split.
//
// The split greedily moves the training sample that contributes the most
// IPA tokens not yet seen in the test set, and stops once that best score
// drops below the elbow point.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ipapipe/error.hpp"
#include "ipapipe/utf8.hpp"

namespace ipapipe::dataq {

enum class Region { Chittagong, Kishoreganj, Narail, Narsingdi, Rangpur, Tangail, Standard };

inline constexpr std::array<Region, 7> kAllRegions = {Region::Chittagong, Region::Kishoreganj, Region::Narail,
                                                      Region::Narsingdi,  Region::Rangpur,     Region::Tangail,
                                                      Region::Standard};

inline std::string_view to_string(Region r) {
  switch (r) {
    case Region::Chittagong: return "Chittagong";
    case Region::Kishoreganj: return "Kishoreganj";
    case Region::Narail: return "Narail";
    case Region::Narsingdi: return "Narsingdi";
    case Region::Rangpur: return "Rangpur";
    case Region::Tangail: return "Tangail";
    case Region::Standard: return "Standard";
  }
  return "?";
}

/// Case-insensitive region name.
inline Region parse_region(std::string_view name) {
  auto lower = [](std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
  };
  const std::string key = lower(utf8::trim(name));
  for (Region r : kAllRegions)
    if (lower(to_string(r)) == key) return r;
  throw Error("unknown region '" + std::string(name) + "'");
}

struct Sample {
  std::string text;
  std::string ipa;
  Region region = Region::Standard;
  std::uint64_t id = 0;

  bool operator==(const Sample&) const = default;
};

/// TSV `text<TAB>ipa<TAB>region` with an optional header row, or JSON lines
/// with the same three fields. Ids follow file order from 0.
inline std::vector<Sample> parse_corpus(std::string_view content, const std::string& source = "<corpus>") {
  std::vector<Sample> samples;
  const auto all = utf8::lines(content);
  std::optional<bool> jsonl;
  bool first_row = true;
  for (std::size_t n = 0; n < all.size(); ++n) {
    const std::string& raw = all[n];
    std::string_view line = utf8::trim(raw);
    if (line.empty()) continue;
    if (!jsonl) jsonl = line.front() == '{';
    Sample s;
    if (*jsonl) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(source, n + 1, std::string("malformed JSON: ") + e.what());
      }
      for (const char* field : {"text", "ipa", "region"})
        if (!j.is_object() || !j.contains(field) || !j.at(field).is_string())
          throw ParseError(source, n + 1, std::string("missing string field '") + field + "'");
      s.text = j.at("text").get<std::string>();
      s.ipa = j.at("ipa").get<std::string>();
      try {
        s.region = parse_region(j.at("region").get<std::string>());
      } catch (const Error& e) {
        throw ParseError(source, n + 1, e.what());
      }
    } else {
      auto fields = utf8::split_char(raw, '\t');
      if (first_row && fields.size() == 3 && utf8::trim(fields[0]) == "text" && utf8::trim(fields[1]) == "ipa" &&
          utf8::trim(fields[2]) == "region") {
        first_row = false;
        continue;
      }
      if (fields.size() != 3) throw ParseError(source, n + 1, "expected 'text<TAB>ipa<TAB>region'");
      s.text = std::string(utf8::trim(fields[0]));
      s.ipa = std::string(utf8::trim(fields[1]));
      try {
        s.region = parse_region(fields[2]);
      } catch (const Error& e) {
        throw ParseError(source, n + 1, e.what());
      }
    }
    first_row = false;
    if (utf8::trim(s.text).empty()) throw ParseError(source, n + 1, "empty text field");
    if (utf8::trim(s.ipa).empty()) throw ParseError(source, n + 1, "empty ipa field");
    s.id = samples.size();
    samples.push_back(std::move(s));
  }
  return samples;
}

inline std::vector<Sample> load_corpus(const std::string& path) { return parse_corpus(utf8::read_file(path), path); }

inline std::string format_corpus(const std::vector<Sample>& samples) {
  std::string out = "text\tipa\tregion\n";
  for (const auto& s : samples) {
    out += s.text;
    out += '\t';
    out += s.ipa;
    out += '\t';
    out += to_string(s.region);
    out += '\n';
  }
  return out;
}

inline void write_corpus(const std::vector<Sample>& samples, const std::string& path) {
  utf8::write_file(path, format_corpus(samples));
}

using WordSet = std::unordered_set<std::string>;

inline WordSet ipa_word_set(const Sample& s) {
  auto toks = utf8::split_ws(s.ipa);
  return WordSet(toks.begin(), toks.end());
}

/// Number of distinct IPA tokens of `sample` absent from `test_words`.
inline std::size_t novelty_score(const Sample& sample, const WordSet& test_words) {
  std::size_t n = 0;
  for (const auto& w : ipa_word_set(sample))
    if (!test_words.count(w)) ++n;
  return n;
}

struct SplitConfig {
  std::size_t elbow_point = 3;
  double max_test_fraction = 0.25;

  void validate() const {
    if (!(max_test_fraction > 0.0 && max_test_fraction <= 1.0))
      throw Error("max_test_fraction must be in (0, 1]");
  }
};

enum class StopReason { below_elbow, test_cap, train_exhausted };

inline std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::below_elbow: return "below_elbow";
    case StopReason::test_cap: return "test_cap";
    case StopReason::train_exhausted: return "train_exhausted";
  }
  return "?";
}

struct ScorePoint {
  std::size_t iteration;  // 1-based
  std::size_t score;
  bool operator==(const ScorePoint&) const = default;
};

struct SplitResult {
  std::vector<Sample> train;  // original order
  std::vector<Sample> test;   // selection order
  std::vector<ScorePoint> score_curve;
  StopReason stop = StopReason::below_elbow;
};

/// Largest test set allowed by the fraction cap.
inline std::size_t test_cap(std::size_t corpus_size, double fraction) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(corpus_size) + 1e-9));
}

/// Greedy novelty split. Every iteration rescores all remaining training
/// samples against the current test vocabulary, moves the best one (lowest
/// id on ties), and stops when the best score is below the elbow point, the
/// test cap is reached, or training is empty.
inline SplitResult split_dataset(const std::vector<Sample>& corpus, const SplitConfig& config) {
  config.validate();
  if (corpus.empty()) throw Error("cannot split an empty corpus");
  SplitResult result;
  result.train = corpus;
  WordSet test_words;
  const std::size_t cap = test_cap(corpus.size(), config.max_test_fraction);
  for (std::size_t iteration = 1;; ++iteration) {
    if (result.train.empty()) {
      result.stop = StopReason::train_exhausted;
      break;
    }
    if (result.test.size() >= cap) {
      result.stop = StopReason::test_cap;
      break;
    }
    std::size_t best = 0, best_score = 0;
    for (std::size_t i = 0; i < result.train.size(); ++i) {
      const std::size_t score = novelty_score(result.train[i], test_words);
      if (i == 0 || score > best_score || (score == best_score && result.train[i].id < result.train[best].id)) {
        best = i;
        best_score = score;
      }
    }
    if (best_score < config.elbow_point) {
      result.stop = StopReason::below_elbow;
      break;
    }
    for (auto& w : ipa_word_set(result.train[best])) test_words.insert(std::move(w));
    result.test.push_back(std::move(result.train[best]));
    result.train.erase(result.train.begin() + static_cast<std::ptrdiff_t>(best));
    result.score_curve.push_back({iteration, best_score});
  }
  return result;
}

struct RegionalSplit {
  std::map<Region, SplitResult> per_region;
  std::vector<Sample> train;
  std::vector<Sample> test;
};

/// Runs split_dataset independently per region; merged outputs follow region
/// order. The fraction cap applies per region.
inline RegionalSplit split_by_region(const std::vector<Sample>& corpus, const SplitConfig& config) {
  RegionalSplit out;
  for (Region r : kAllRegions) {
    std::vector<Sample> part;
    for (const auto& s : corpus)
      if (s.region == r) part.push_back(s);
    if (part.empty()) continue;
    auto res = split_dataset(part, config);
    out.train.insert(out.train.end(), res.train.begin(), res.train.end());
    out.test.insert(out.test.end(), res.test.begin(), res.test.end());
    out.per_region.emplace(r, std::move(res));
  }
  return out;
}

inline std::string format_score_curve(const std::vector<ScorePoint>& curve) {
  std::string out = "iteration,score\n";
  for (const auto& p : curve) out += std::to_string(p.iteration) + "," + std::to_string(p.score) + "\n";
  return out;
}

/// Multi-region variant: `region,iteration,score`.
inline std::string format_score_curve(const RegionalSplit& split) {
  std::string out = "region,iteration,score\n";
  for (const auto& [r, res] : split.per_region)
    for (const auto& p : res.score_curve)
      out += std::string(to_string(r)) + "," + std::to_string(p.iteration) + "," + std::to_string(p.score) + "\n";
  return out;
}

inline void export_score_curve(const SplitResult& result, const std::string& path) {
  utf8::write_file(path, format_score_curve(result.score_curve));
}

inline std::vector<ScorePoint> parse_score_curve(std::string_view content) {
  std::vector<ScorePoint> curve;
  const auto all = utf8::lines(content);
  if (all.empty() || utf8::trim(all[0]) != "iteration,score") throw Error("score curve lacks 'iteration,score' header");
  for (std::size_t n = 1; n < all.size(); ++n) {
    if (utf8::trim(all[n]).empty()) continue;
    auto f = utf8::split_char(all[n], ',');
    if (f.size() != 2) throw ParseError("<curve>", n + 1, "expected 'iteration,score'");
    try {
      curve.push_back({std::stoul(f[0]), std::stoul(f[1])});
    } catch (const std::exception&) {
      throw ParseError("<curve>", n + 1, "bad number");
    }
  }
  return curve;
}

}  // namespace ipapipe::dataq
