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

// Word-level IPA generation. Subwords that the state alignment marks for
// transcription are framed as space-separated characters, sent through a
// backend, and unframed; other segments are copied. Backends:
//
//   DictionaryBackend   exact recall of known (word, IPA) pairs
//   GreedyRuleBackend   longest-match grapheme rules
//   RemoteBackend       HTTP model endpoint (see remote.hpp)

#pragma once

#include <algorithm>
#include <concepts>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ipapipe/error.hpp"
#include "ipapipe/stat.hpp"
#include "ipapipe/utf8.hpp"

namespace ipapipe::transcribe {

/// Backend failure for one subword. `miss` marks an out-of-vocabulary answer
/// (the next backend in a chain may still succeed).
class BackendError : public Error {
 public:
  BackendError(std::string subword, const std::string& what, bool miss = false)
      : Error(what), subword_(std::move(subword)), miss_(miss) {}

  const std::string& subword() const noexcept { return subword_; }
  bool miss() const noexcept { return miss_; }

 private:
  std::string subword_;
  bool miss_;
};

/// Maps a space-separated grapheme sequence to a space-separated IPA symbol
/// sequence. Implementations throw on failure.
class TranscriptionBackend {
 public:
  virtual ~TranscriptionBackend() = default;
  virtual std::string generate(const std::string& framed) const = 0;
  virtual std::string name() const = 0;
};

inline std::string frame_subword(std::string_view subword) {
  const std::u32string cps = utf8::decode(subword);
  if (cps.empty()) throw Error("cannot frame an empty subword");
  std::string out;
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (utf8::is_space(cps[i])) throw Error("subword contains whitespace: '" + std::string(subword) + "'");
    if (i) out.push_back(' ');
    utf8::append(out, cps[i]);
  }
  return out;
}

inline std::string unframe(std::string_view spaced) {
  std::string out;
  for (char32_t c : utf8::decode(spaced))
    if (!utf8::is_space(c)) utf8::append(out, c);
  return out;
}

/// Frames arbitrary backend output; empty input stays empty.
inline std::string frame_or_empty(std::string_view s) {
  std::string joined = unframe(s);
  return joined.empty() ? std::string() : frame_subword(joined);
}

inline std::string transcribe_subword(std::string_view subword, const TranscriptionBackend& backend) {
  std::string framed = frame_subword(subword);
  try {
    return unframe(backend.generate(framed));
  } catch (const BackendError& e) {
    if (e.subword() == subword) throw;
    throw BackendError(std::string(subword), "'" + std::string(subword) + "': " + e.what(), e.miss());
  } catch (const std::exception& e) {
    throw BackendError(std::string(subword), backend.name() + " failed on '" + std::string(subword) + "': " + e.what());
  }
}

/// Concatenates segment outputs: in-set segments through `generate_subword`,
/// the rest verbatim.
template <typename SubwordFn>
  requires std::invocable<SubwordFn&, const std::string&>
std::string merge_segments(const stat::SegmentedToken& seg, SubwordFn&& generate_subword) {
  std::string out;
  for (std::size_t i = 0; i < seg.subtokens.size(); ++i)
    out += seg.states[i] ? std::string(generate_subword(seg.subtokens[i])) : seg.subtokens[i];
  return out;
}

inline std::string transcribe_word(std::string_view word, const stat::CharSet& charset, const TranscriptionBackend& backend) {
  if (word.empty()) throw Error("cannot transcribe an empty word");
  const auto seg = stat::align(word, charset);
  return merge_segments(seg, [&](const std::string& sub) { return transcribe_subword(sub, backend); });
}

// ---------------------------------------------------------------------------
// Dictionary backend

class DictionaryBackend final : public TranscriptionBackend {
 public:
  DictionaryBackend() = default;
  DictionaryBackend(std::unordered_map<std::string, std::string> framed, std::size_t skipped)
      : framed_(std::move(framed)), skipped_(skipped) {}

  std::string generate(const std::string& framed) const override {
    auto it = framed_.find(framed);
    if (it == framed_.end()) throw BackendError(unframe(framed), "not in dictionary", true);
    return it->second;
  }

  std::string name() const override { return "dictionary"; }
  std::size_t size() const noexcept { return framed_.size(); }
  /// Pairs ignored because the word had characters outside the charset.
  std::size_t skipped() const noexcept { return skipped_; }

 private:
  std::unordered_map<std::string, std::string> framed_;
  std::size_t skipped_ = 0;
};

/// Keys are framed words. Words with any codepoint outside `charset` can
/// never be queried (the alignment never emits them as one subword) and are
/// skipped.
inline DictionaryBackend build_dictionary_backend(const std::vector<std::pair<std::string, std::string>>& pairs,
                                                  const stat::CharSet& charset) {
  std::unordered_map<std::string, std::string> table;
  std::unordered_map<std::string, std::string> raw;
  std::size_t skipped = 0;
  for (const auto& [word, ipa] : pairs) {
    if (word.empty()) throw Error("dictionary pair with empty word");
    if (utf8::has_space(word)) throw Error("dictionary word contains whitespace: '" + word + "'");
    const std::string ipa_joined = unframe(ipa);
    if (ipa_joined.empty()) throw Error("dictionary pair with empty IPA for '" + word + "'");
    const auto cps = utf8::decode(word);
    if (!std::all_of(cps.begin(), cps.end(), [&](char32_t c) { return charset.contains(c); })) {
      ++skipped;
      continue;
    }
    auto [it, inserted] = raw.emplace(word, ipa_joined);
    if (!inserted) {
      if (it->second != ipa_joined)
        throw Error("duplicate dictionary word '" + word + "' with conflicting IPA '" + it->second + "' and '" +
                    ipa_joined + "'");
      continue;
    }
    table.emplace(frame_subword(word), frame_subword(ipa_joined));
  }
  return DictionaryBackend(std::move(table), skipped);
}

/// Word-pair file: `word<TAB>ipa` per line, `#` comments.
inline std::vector<std::pair<std::string, std::string>> load_word_pairs(const std::string& path) {
  std::vector<std::pair<std::string, std::string>> pairs;
  const auto all = utf8::lines(utf8::read_file(path));
  for (std::size_t n = 0; n < all.size(); ++n) {
    std::string_view line = all[n];
    if (utf8::trim(line).empty() || line.front() == '#') continue;
    auto fields = utf8::split_char(line, '\t');
    if (fields.size() != 2) throw ParseError(path, n + 1, "expected 'word<TAB>ipa'");
    std::string word(utf8::trim(fields[0])), ipa(utf8::trim(fields[1]));
    if (word.empty() || ipa.empty()) throw ParseError(path, n + 1, "empty field");
    pairs.emplace_back(std::move(word), std::move(ipa));
  }
  return pairs;
}

// ---------------------------------------------------------------------------
// Greedy rule backend

struct Rule {
  std::u32string graphemes;
  std::string phonemes;
  int priority = 0;
};

struct RuleTable {
  std::vector<Rule> rules;
  /// Emitted for a grapheme no rule covers; unset copies the grapheme.
  std::optional<std::string> default_phoneme;
};

/// At each position: longest matching graphemes, then highest priority, then
/// the earliest declared rule. Unmatched codepoints emit the default.
class GreedyRuleBackend final : public TranscriptionBackend {
 public:
  explicit GreedyRuleBackend(RuleTable table) : table_(std::move(table)) {
    std::map<std::u32string, std::size_t> seen;
    for (std::size_t i = 0; i < table_.rules.size(); ++i) {
      const auto& r = table_.rules[i];
      if (r.graphemes.empty()) throw Error("rule " + std::to_string(i + 1) + " has empty graphemes");
      if (utf8::has_space(r.phonemes)) throw Error("rule " + std::to_string(i + 1) + " has whitespace in phonemes");
      if (auto [it, ok] = seen.emplace(r.graphemes, i); !ok)
        throw Error("rules " + std::to_string(it->second + 1) + " and " + std::to_string(i + 1) +
                    " share graphemes '" + utf8::encode(r.graphemes) + "'");
      by_first_[r.graphemes.front()].push_back(i);
    }
    for (auto& [cp, ids] : by_first_) {
      std::stable_sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) {
        const auto& ra = table_.rules[a];
        const auto& rb = table_.rules[b];
        if (ra.graphemes.size() != rb.graphemes.size()) return ra.graphemes.size() > rb.graphemes.size();
        return ra.priority > rb.priority;
      });
    }
  }

  std::string generate(const std::string& framed) const override {
    const std::u32string in = utf8::decode(unframe(framed));
    std::string out;
    std::size_t i = 0;
    while (i < in.size()) {
      const Rule* hit = nullptr;
      if (auto it = by_first_.find(in[i]); it != by_first_.end()) {
        for (std::size_t id : it->second) {
          const auto& g = table_.rules[id].graphemes;
          if (in.compare(i, g.size(), g) == 0) {
            hit = &table_.rules[id];
            break;
          }
        }
      }
      if (hit) {
        out += hit->phonemes;
        i += hit->graphemes.size();
      } else {
        out += table_.default_phoneme ? *table_.default_phoneme : utf8::encode(in[i]);
        ++i;
      }
    }
    return frame_or_empty(out);
  }

  std::string name() const override { return "rules"; }
  const RuleTable& table() const noexcept { return table_; }

 private:
  RuleTable table_;
  std::map<char32_t, std::vector<std::size_t>> by_first_;
};

/// Rule file: `graphemes<TAB>phonemes<TAB>priority` per line; an optional
/// `@default<TAB>PHONEME` line sets the fallback phoneme. Empty phonemes are
/// allowed (silent graphemes).
inline RuleTable parse_rule_table(std::string_view content, const std::string& source = "<rules>") {
  RuleTable table;
  std::map<std::u32string, std::size_t> seen;
  const auto all = utf8::lines(content);
  for (std::size_t n = 0; n < all.size(); ++n) {
    const std::string& line = all[n];
    if (utf8::trim(line).empty() || line.front() == '#') continue;
    auto fields = utf8::split_char(line, '\t');
    if (fields[0] == "@default") {
      if (fields.size() != 2) throw ParseError(source, n + 1, "expected '@default<TAB>PHONEME'");
      table.default_phoneme = fields[1];
      continue;
    }
    if (fields.size() != 3) throw ParseError(source, n + 1, "expected 'graphemes<TAB>phonemes<TAB>priority'");
    Rule rule;
    try {
      rule.graphemes = utf8::decode(fields[0]);
    } catch (const Error& e) {
      throw ParseError(source, n + 1, e.what());
    }
    if (rule.graphemes.empty()) throw ParseError(source, n + 1, "empty graphemes");
    rule.phonemes = fields[1];
    if (utf8::has_space(rule.phonemes)) throw ParseError(source, n + 1, "whitespace in phonemes");
    try {
      std::size_t used = 0;
      rule.priority = std::stoi(fields[2], &used);
      if (used != fields[2].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError(source, n + 1, "bad priority '" + fields[2] + "'");
    }
    if (auto [it, ok] = seen.emplace(rule.graphemes, n + 1); !ok)
      throw ParseError(source, n + 1, "duplicate graphemes (first declared on line " + std::to_string(it->second) + ")");
    table.rules.push_back(std::move(rule));
  }
  return table;
}

inline RuleTable load_rule_table(const std::string& path) { return parse_rule_table(utf8::read_file(path), path); }

}  // namespace ipapipe::transcribe
