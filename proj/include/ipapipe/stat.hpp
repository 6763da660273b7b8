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

// State alignment: split a token into maximal runs that are entirely inside
// or entirely outside a character set. In-set runs are the ones handed to a
// transcription backend; out-of-set runs are copied through untouched.

#pragma once

#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "ipapipe/error.hpp"
#include "ipapipe/utf8.hpp"

namespace ipapipe::stat {

class CharSet {
 public:
  CharSet() = default;

  explicit CharSet(std::unordered_set<char32_t> members) : members_(std::move(members)) {
    if (members_.empty()) throw Error("character set is empty");
    for (char32_t c : members_)
      if (utf8::is_space(c)) throw Error("character set contains whitespace U+" + hex(c));
  }

  bool contains(char32_t c) const noexcept { return members_.count(c) != 0; }
  std::size_t size() const noexcept { return members_.size(); }
  const std::unordered_set<char32_t>& members() const noexcept { return members_; }

  static std::string hex(char32_t c) {
    static const char* digits = "0123456789ABCDEF";
    std::string s;
    for (int shift = c > 0xFFFF ? 20 : 12; shift >= 0; shift -= 4) s.push_back(digits[(c >> shift) & 0xF]);
    return s;
  }

 private:
  std::unordered_set<char32_t> members_;
};

/// Parallel state/subtoken lists. states[i] is true when subtokens[i] needs
/// model-based transcription.
struct SegmentedToken {
  std::vector<bool> states;
  std::vector<std::string> subtokens;

  bool operator==(const SegmentedToken&) const = default;
};

/// Left-to-right scan: a codepoint in the set opens a maximal in-set run,
/// anything else opens a maximal out-of-set run.
inline SegmentedToken align(std::string_view token, const CharSet& charset) {
  const std::u32string t = utf8::decode(token);
  SegmentedToken out;
  const std::size_t n = t.size();
  std::size_t i = 0;
  while (i < n) {
    if (utf8::is_space(t[i])) throw Error("token contains whitespace: '" + std::string(token) + "'");
    const bool in_set = charset.contains(t[i]);
    std::u32string segment;
    while (i < n && charset.contains(t[i]) == in_set) {
      if (utf8::is_space(t[i])) throw Error("token contains whitespace: '" + std::string(token) + "'");
      segment.push_back(t[i++]);
    }
    out.states.push_back(in_set);
    out.subtokens.push_back(utf8::encode(segment));
  }
  return out;
}

inline CharSet parse_charset(std::string_view content, const std::string& source = "<charset>") {
  std::unordered_set<char32_t> members;
  const auto all = utf8::lines(content);
  for (std::size_t n = 0; n < all.size(); ++n) {
    std::string_view line = all[n];
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = utf8::trim(line);
    if (line.empty()) continue;
    try {
      if (auto dash = line.find('-'); dash != std::string_view::npos) {
        char32_t lo = utf8::parse_hex_cp(utf8::trim(line.substr(0, dash)));
        char32_t hi = utf8::parse_hex_cp(utf8::trim(line.substr(dash + 1)));
        if (hi < lo) throw Error("range end precedes start");
        for (char32_t c = lo; c <= hi; ++c) members.insert(c);
      } else {
        members.insert(utf8::parse_hex_cp(line));
      }
    } catch (const Error& e) {
      throw ParseError(source, n + 1, e.what());
    }
  }
  return CharSet(std::move(members));
}

inline CharSet load_charset(const std::string& path) { return parse_charset(utf8::read_file(path), path); }

}  // namespace ipapipe::stat
