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

// Bengali text canonicalization: optional Unicode NFC followed by a table of
// codepoint-sequence rewrites (nukta compositions, joiner stripping, ...).
//
// Table file format, one rule per line:
//
//   nfc=true                # optional, first directive line only
//   09A1 09BC -> 09DC       # pattern -> replacement, hex codepoints
//   200D ->                 # empty replacement deletes the pattern
//
// Blank lines and `#` comments are ignored.

#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include "ipapipe/error.hpp"
#include "ipapipe/utf8.hpp"

namespace ipapipe::textnorm {

struct NormalizationRule {
  std::u32string pattern;
  std::u32string replacement;
  std::size_t line = 0;  // source line, 0 when built in code
};

class NormalizationTable {
 public:
  NormalizationTable() = default;

  /// Validates the table invariants. Throws Error naming the offending rules.
  NormalizationTable(std::vector<NormalizationRule> rules, bool apply_nfc)
      : rules_(std::move(rules)), apply_nfc_(apply_nfc) {
    validate();
    for (std::size_t i = 0; i < rules_.size(); ++i) by_first_[rules_[i].pattern.front()].push_back(i);
    for (auto& [cp, ids] : by_first_) {
      std::stable_sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) {
        return rules_[a].pattern.size() > rules_[b].pattern.size();
      });
    }
  }

  const std::vector<NormalizationRule>& rules() const noexcept { return rules_; }
  bool apply_nfc() const noexcept { return apply_nfc_; }

  /// One left-to-right pass; at each position the longest matching pattern
  /// wins and scanning resumes after it. Replaced output is not re-scanned.
  std::u32string apply_rules(std::u32string_view text) const {
    std::u32string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
      const NormalizationRule* hit = nullptr;
      if (auto it = by_first_.find(text[i]); it != by_first_.end()) {
        for (std::size_t id : it->second) {
          const auto& p = rules_[id].pattern;
          if (text.substr(i, p.size()) == p) {
            hit = &rules_[id];
            break;
          }
        }
      }
      if (hit) {
        out += hit->replacement;
        i += hit->pattern.size();
      } else {
        out.push_back(text[i++]);
      }
    }
    return out;
  }

 private:
  static std::string describe(const NormalizationRule& r, std::size_t index) {
    std::string s = "rule " + std::to_string(index + 1);
    if (r.line) s += " (line " + std::to_string(r.line) + ")";
    return s;
  }

  void validate() const {
    for (std::size_t i = 0; i < rules_.size(); ++i) {
      if (rules_[i].pattern.empty()) throw Error(describe(rules_[i], i) + ": empty pattern");
    }
    for (std::size_t i = 0; i < rules_.size(); ++i) {
      for (std::size_t j = 0; j < rules_.size(); ++j) {
        if (i != j && rules_[i].pattern == rules_[j].pattern)
          throw Error(describe(rules_[i], i) + " and " + describe(rules_[j], j) + " share a pattern");
        if (rules_[i].replacement.find(rules_[j].pattern) != std::u32string::npos)
          throw Error("replacement of " + describe(rules_[i], i) + " contains the pattern of " +
                      describe(rules_[j], j));
      }
    }
  }

  std::vector<NormalizationRule> rules_;
  bool apply_nfc_ = true;
  std::map<char32_t, std::vector<std::size_t>> by_first_;
};

inline std::string nfc(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw InternalError("ICU NFC normalizer unavailable");
  icu::UnicodeString src = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  icu::UnicodeString dst = n->normalize(src, status);
  if (U_FAILURE(status)) throw Error("NFC normalization failed");
  std::string out;
  dst.toUTF8String(out);
  return out;
}

inline NormalizationTable parse_table(std::string_view content, const std::string& source = "<table>") {
  std::vector<NormalizationRule> rules;
  bool apply_nfc = true;
  bool seen_rule_or_directive = false;
  const auto all = utf8::lines(content);
  for (std::size_t n = 0; n < all.size(); ++n) {
    std::string_view line = all[n];
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = utf8::trim(line);
    if (line.empty()) continue;
    if (line.starts_with("nfc=") || line.starts_with("nfc =")) {
      if (seen_rule_or_directive) throw ParseError(source, n + 1, "nfc directive must be the first line");
      auto value = utf8::trim(line.substr(line.find('=') + 1));
      if (value == "true") apply_nfc = true;
      else if (value == "false") apply_nfc = false;
      else throw ParseError(source, n + 1, "nfc must be true or false");
      seen_rule_or_directive = true;
      continue;
    }
    seen_rule_or_directive = true;
    auto arrow = line.find("->");
    if (arrow == std::string_view::npos) throw ParseError(source, n + 1, "expected 'PATTERN -> REPLACEMENT'");
    NormalizationRule rule;
    rule.line = n + 1;
    try {
      for (const auto& tok : utf8::split_ws(line.substr(0, arrow))) rule.pattern.push_back(utf8::parse_hex_cp(tok));
      for (const auto& tok : utf8::split_ws(line.substr(arrow + 2))) rule.replacement.push_back(utf8::parse_hex_cp(tok));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(source, n + 1, e.what());
    }
    if (rule.pattern.empty()) throw ParseError(source, n + 1, "empty pattern");
    rules.push_back(std::move(rule));
  }
  return NormalizationTable(std::move(rules), apply_nfc);
}

inline NormalizationTable load_table(const std::string& path) {
  return parse_table(utf8::read_file(path), path);
}

/// Bound on NFC+rules rounds; real tables settle in one or two.
inline constexpr int kMaxNormalizeRounds = 16;

/// NFC (when flagged) then one rule pass, repeated until the text stops
/// changing so that deletions and NFC reordering cannot leave work for a
/// second call.
inline std::string normalize(std::string_view text, const NormalizationTable& table) {
  std::string current(text);
  for (int round = 0; round < kMaxNormalizeRounds; ++round) {
    std::string composed = table.apply_nfc() ? nfc(current) : current;
    std::string next = utf8::encode(table.apply_rules(utf8::decode(composed)));
    if (next == current) break;
    current = std::move(next);
  }
  return current;
}

}  // namespace ipapipe::textnorm
