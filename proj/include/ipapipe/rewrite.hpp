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

// Numeral rewriting. Bengali digit runs are turned into word form before
// transcription, either by a remote completion model that sees the whole
// sentence, or offline by cardinal verbalization.

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ipapipe/error.hpp"
#include "ipapipe/utf8.hpp"

namespace ipapipe::rewrite {

inline constexpr char32_t kDigitZero = 0x09E6;
inline constexpr char32_t kDigitNine = 0x09EF;
inline constexpr std::uint64_t kCardinalLimit = 100'000'000'000'000ULL;  // 10^14

constexpr bool is_digit_glyph(char32_t c) noexcept { return c >= kDigitZero && c <= kDigitNine; }

inline bool has_digit_glyph(std::string_view text) {
  for (char32_t c : utf8::decode(text))
    if (is_digit_glyph(c)) return true;
  return false;
}

class NumeralLexicon {
 public:
  static constexpr std::array<std::uint64_t, 4> kScaleValues = {100, 1000, 100'000, 10'000'000};

  NumeralLexicon() = default;

  NumeralLexicon(std::array<std::string, 100> units, std::map<std::uint64_t, std::string> scales)
      : units_(std::move(units)), scales_(std::move(scales)) {
    for (std::size_t v = 0; v < units_.size(); ++v)
      if (units_[v].empty()) throw Error("numeral lexicon is missing a word for " + std::to_string(v));
    for (auto v : kScaleValues)
      if (!scales_.count(v) || scales_.at(v).empty())
        throw Error("numeral lexicon is missing the scale word for " + std::to_string(v));
    for (const auto& [v, w] : scales_)
      if (std::find(kScaleValues.begin(), kScaleValues.end(), v) == kScaleValues.end())
        throw Error("unsupported scale value " + std::to_string(v));
  }

  const std::string& unit(std::size_t v) const { return units_.at(v); }
  const std::string& scale(std::uint64_t v) const { return scales_.at(v); }

  /// Value of a Bengali digit glyph (U+09E6..U+09EF).
  static int digit_value(char32_t c) {
    if (!is_digit_glyph(c)) throw Error("not a Bengali digit: U+" + std::to_string(c));
    return static_cast<int>(c - kDigitZero);
  }

 private:
  std::array<std::string, 100> units_{};
  std::map<std::uint64_t, std::string> scales_;
};

/// Lexicon file: `[units]` and `[scales]` sections, lines `value<TAB>word`.
inline NumeralLexicon parse_lexicon(std::string_view content, const std::string& source = "<lexicon>") {
  std::array<std::string, 100> units{};
  std::map<std::uint64_t, std::string> scales;
  enum class Section { none, units, scales } section = Section::none;
  const auto all = utf8::lines(content);
  for (std::size_t n = 0; n < all.size(); ++n) {
    std::string_view line = utf8::trim(all[n]);
    if (line.empty() || line.front() == '#') continue;
    if (line == "[units]") {
      section = Section::units;
      continue;
    }
    if (line == "[scales]") {
      section = Section::scales;
      continue;
    }
    if (section == Section::none) throw ParseError(source, n + 1, "entry outside of a section");
    auto fields = utf8::split_char(line, '\t');
    if (fields.size() != 2) throw ParseError(source, n + 1, "expected 'value<TAB>word'");
    std::uint64_t value = 0;
    try {
      std::size_t used = 0;
      value = std::stoull(fields[0], &used);
      if (used != fields[0].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError(source, n + 1, "bad numeric value '" + fields[0] + "'");
    }
    std::string word(utf8::trim(fields[1]));
    if (word.empty()) throw ParseError(source, n + 1, "empty word");
    if (section == Section::units) {
      if (value >= 100) throw ParseError(source, n + 1, "unit value must be 0-99");
      if (!units[value].empty()) throw ParseError(source, n + 1, "duplicate unit " + std::to_string(value));
      units[value] = std::move(word);
    } else {
      if (scales.count(value)) throw ParseError(source, n + 1, "duplicate scale " + std::to_string(value));
      scales[value] = std::move(word);
    }
  }
  try {
    return NumeralLexicon(std::move(units), std::move(scales));
  } catch (const Error& e) {
    throw Error(source + ": " + e.what());
  }
}

inline NumeralLexicon load_lexicon(const std::string& path) { return parse_lexicon(utf8::read_file(path), path); }

namespace detail {

// Words for 1 <= n < 10^7 (below one crore).
inline void verbalize_below_crore(std::uint64_t n, const NumeralLexicon& lex, std::vector<std::string>& words) {
  const std::uint64_t lakh = n / 100'000;
  const std::uint64_t thousand = (n / 1000) % 100;
  const std::uint64_t hundred = (n / 100) % 10;
  const std::uint64_t rest = n % 100;
  if (lakh) {
    words.push_back(lex.unit(lakh));
    words.push_back(lex.scale(100'000));
  }
  if (thousand) {
    words.push_back(lex.unit(thousand));
    words.push_back(lex.scale(1000));
  }
  if (hundred) {
    words.push_back(lex.unit(hundred));
    words.push_back(lex.scale(100));
  }
  if (rest) words.push_back(lex.unit(rest));
}

}  // namespace detail

/// Cardinal reading in the South Asian grouping: crore, lakh, thousand,
/// hundred, then 0-99. Zero groups are omitted; the crore multiplier is
/// itself read in full (so 10^13 reads as "ten lakh crore").
inline std::string verbalize_cardinal(std::uint64_t n, const NumeralLexicon& lex) {
  if (n >= kCardinalLimit) throw Error("number out of range for cardinal reading: " + std::to_string(n));
  if (n == 0) return lex.unit(0);
  std::vector<std::string> words;
  const std::uint64_t crore = n / 10'000'000;
  if (crore) {
    detail::verbalize_below_crore(crore, lex, words);
    words.push_back(lex.scale(10'000'000));
  }
  detail::verbalize_below_crore(n % 10'000'000, lex, words);
  return utf8::join(words, " ");
}

/// Replaces each maximal digit-glyph run with words. Runs with a leading
/// zero, and runs too long for a cardinal reading, are read digit by digit.
inline std::string rewrite_rule_based(std::string_view text, const NumeralLexicon& lex) {
  const std::u32string t = utf8::decode(text);
  std::string out;
  out.reserve(text.size() * 2);
  std::size_t i = 0;
  while (i < t.size()) {
    if (!is_digit_glyph(t[i])) {
      utf8::append(out, t[i++]);
      continue;
    }
    std::size_t j = i;
    while (j < t.size() && is_digit_glyph(t[j])) ++j;
    const std::size_t len = j - i;
    const bool leading_zero = len > 1 && t[i] == kDigitZero;
    if (leading_zero || len > 14) {
      std::vector<std::string> words;
      for (std::size_t k = i; k < j; ++k) words.push_back(lex.unit(NumeralLexicon::digit_value(t[k])));
      out += utf8::join(words, " ");
    } else {
      std::uint64_t value = 0;
      for (std::size_t k = i; k < j; ++k) value = value * 10 + NumeralLexicon::digit_value(t[k]);
      out += verbalize_cardinal(value, lex);
    }
    i = j;
  }
  return out;
}

/// True when every whitespace token of `original` that carries no digit
/// glyph survives verbatim and in order in `rewritten`, and every extra
/// token of `rewritten` sits where a digit-bearing token used to be.
inline bool validate_rewrite(std::string_view original, std::string_view rewritten) {
  const auto orig = utf8::split_ws(original);
  const auto rew = utf8::split_ws(rewritten);
  std::vector<bool> wildcard(orig.size());
  for (std::size_t i = 0; i < orig.size(); ++i) wildcard[i] = has_digit_glyph(orig[i]);

  // ok[i][j]: orig[0, i) aligns with rew[0, j).
  const std::size_t m = orig.size(), n = rew.size();
  std::vector<std::vector<char>> ok(m + 1, std::vector<char>(n + 1, 0));
  ok[0][0] = 1;
  for (std::size_t i = 1; i <= m; ++i) {
    for (std::size_t j = 0; j <= n; ++j) {
      if (wildcard[i - 1]) {
        ok[i][j] = ok[i - 1][j] || (j > 0 && ok[i][j - 1]);
      } else {
        ok[i][j] = j > 0 && ok[i - 1][j - 1] && orig[i - 1] == rew[j - 1];
      }
    }
  }
  return ok[m][n];
}

struct PromptTemplate {
  static constexpr std::string_view kPlaceholder = "{user_text}";
  static constexpr std::string_view kDefaultSystem =
      "You are a helpful chatbot who understands Bengali numerals in different contexts.";
  static constexpr std::string_view kDefaultUser =
      "Please rewrite the provided text so that no Bengali digits are present. Convert the numbers to word "
      "form based on the context. Do not modify any words.\n\nHere is the text: {user_text}.";

  std::string system_text{kDefaultSystem};
  std::string user_text_template{kDefaultUser};

  PromptTemplate() = default;
  PromptTemplate(std::string system, std::string user) : system_text(std::move(system)), user_text_template(std::move(user)) {
    validate();
  }

  void validate() const {
    auto first = user_text_template.find(kPlaceholder);
    if (first == std::string::npos) throw Error("prompt template lacks the {user_text} placeholder");
    if (user_text_template.find(kPlaceholder, first + 1) != std::string::npos)
      throw Error("prompt template contains more than one {user_text} placeholder");
  }

  std::string render(std::string_view text) const {
    validate();
    std::string out = user_text_template;
    out.replace(out.find(kPlaceholder), kPlaceholder.size(), text);
    return out;
  }
};

/// A remote completion endpoint. Implementations throw on any failure.
class CompletionClient {
 public:
  virtual ~CompletionClient() = default;
  virtual std::string complete(const std::string& system, const std::string& user) = 0;
};

enum class RewriteSource { remote, rule_fallback, unchanged };

inline std::string_view to_string(RewriteSource s) {
  switch (s) {
    case RewriteSource::remote: return "remote";
    case RewriteSource::rule_fallback: return "rule_fallback";
    case RewriteSource::unchanged: return "unchanged";
  }
  return "?";
}

struct RewriteResult {
  std::string rewritten;
  RewriteSource source = RewriteSource::unchanged;
  bool validated = false;  // false when a remote answer was attempted and rejected
  std::vector<std::string> warnings;
};

/// Offline rewriting wrapped in a result.
inline RewriteResult rewrite_offline(std::string_view text, const NumeralLexicon& lex) {
  if (!has_digit_glyph(text)) return {std::string(text), RewriteSource::unchanged, true, {}};
  std::string out = rewrite_rule_based(text, lex);
  bool valid = validate_rewrite(text, out);
  if (!valid) throw InternalError("rule-based rewrite failed its own validation");
  return {std::move(out), RewriteSource::rule_fallback, true, {}};
}

/// Remote rewriting guarded by validate_rewrite. Any failure, including a
/// remote answer that still contains digit glyphs, drops to the rule-based
/// reading with a warning; `validated` then reports the remote attempt.
inline RewriteResult rewrite_contextual(std::string_view text, const PromptTemplate& prompt, CompletionClient& client,
                                        const NumeralLexicon& lex) {
  if (!has_digit_glyph(text)) return {std::string(text), RewriteSource::unchanged, true, {}};
  RewriteResult result;
  try {
    std::string remote = client.complete(prompt.system_text, prompt.render(text));
    if (has_digit_glyph(remote)) {
      result.warnings.push_back("remote rewrite still contains digit glyphs");
    } else if (!validate_rewrite(text, remote)) {
      result.warnings.push_back("remote rewrite modified non-numeric words");
    } else {
      result.rewritten = std::move(remote);
      result.source = RewriteSource::remote;
      result.validated = true;
      return result;
    }
  } catch (const std::exception& e) {
    result.warnings.push_back(std::string("remote rewrite failed: ") + e.what());
  }
  result.rewritten = rewrite_rule_based(text, lex);
  result.source = RewriteSource::rule_fallback;
  result.validated = false;
  return result;
}

}  // namespace ipapipe::rewrite
