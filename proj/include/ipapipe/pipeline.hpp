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

// End-to-end transcription:
//
//   normalize -> rewrite numerals -> unique words -> state alignment
//     -> per-subword generation -> merge -> rebuild
//
// Every unique word is transcribed once and stored in a WordIpaCache; the
// output is rebuilt by looking each token up in that cache.

#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ipapipe/error.hpp"
#include "ipapipe/remote.hpp"
#include "ipapipe/rewrite.hpp"
#include "ipapipe/stat.hpp"
#include "ipapipe/textnorm.hpp"
#include "ipapipe/transcribe.hpp"
#include "ipapipe/utf8.hpp"

namespace ipapipe::pipeline {

/// Word -> IPA map that remembers insertion order.
class WordIpaCache {
 public:
  bool contains(const std::string& word) const { return index_.count(word) != 0; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  const std::string& at(const std::string& word) const {
    auto it = index_.find(word);
    if (it == index_.end()) throw Error("word not in cache: '" + word + "'");
    return entries_[it->second].second;
  }

  /// Throws on whitespace keys and on re-inserting an existing key.
  void insert(std::string word, std::string ipa) {
    if (word.empty() || utf8::has_space(word)) throw Error("invalid cache key: '" + word + "'");
    if (index_.count(word)) throw Error("duplicate cache key: '" + word + "'");
    index_.emplace(word, entries_.size());
    entries_.emplace_back(std::move(word), std::move(ipa));
  }

  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }

  bool operator==(const WordIpaCache& other) const { return entries_ == other.entries_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Unique whitespace tokens in first-occurrence order.
inline std::vector<std::string> collect_unique_words(std::string_view text) {
  std::vector<std::string> unique;
  std::unordered_set<std::string> seen;
  for (auto& tok : utf8::split_ws(text))
    if (seen.insert(tok).second) unique.push_back(std::move(tok));
  return unique;
}

inline std::string rebuild(const std::vector<std::string>& tokens, const WordIpaCache& cache) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!cache.contains(tokens[i])) throw InternalError("rebuild: token missing from cache: '" + tokens[i] + "'");
    if (i) out.push_back(' ');
    out += cache.at(tokens[i]);
  }
  return out;
}

// Cache file: a JSON object, keys in insertion order. nlohmann::json sorts
// object keys, so both directions go through the SAX/ordered interfaces.

inline std::string dump_cache(const WordIpaCache& cache) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [w, ipa] : cache.entries()) j[w] = ipa;
  return j.dump(2) + "\n";
}

inline WordIpaCache parse_cache(std::string_view content, const std::string& source = "<cache>") {
  // Duplicate keys must be detected, which json::parse silently collapses,
  // so walk the document with a SAX handler.
  struct Handler : nlohmann::json_sax<nlohmann::json> {
    WordIpaCache cache;
    std::string source;
    std::string current_key;
    int depth = 0;
    bool have_key = false;
    std::string error;

    bool fail(const std::string& msg) {
      if (error.empty()) error = msg;
      return false;
    }
    bool null() override { return fail("cache values must be strings"); }
    bool boolean(bool) override { return fail("cache values must be strings"); }
    bool number_integer(number_integer_t) override { return fail("cache values must be strings"); }
    bool number_unsigned(number_unsigned_t) override { return fail("cache values must be strings"); }
    bool number_float(number_float_t, const string_t&) override { return fail("cache values must be strings"); }
    bool binary(binary_t&) override { return fail("cache values must be strings"); }
    bool string(string_t& val) override {
      if (depth != 1 || !have_key) return fail("cache must be a flat JSON object");
      try {
        cache.insert(current_key, val);
      } catch (const Error& e) {
        return fail(e.what());
      }
      have_key = false;
      return true;
    }
    bool start_object(std::size_t) override { return ++depth == 1 || fail("cache must be a flat JSON object"); }
    bool key(string_t& val) override {
      current_key = val;
      have_key = true;
      return true;
    }
    bool end_object() override {
      --depth;
      return true;
    }
    bool start_array(std::size_t) override { return fail("cache must be a flat JSON object"); }
    bool end_array() override { return true; }
    bool parse_error(std::size_t pos, const std::string&, const nlohmann::detail::exception& ex) override {
      return fail("malformed JSON at byte " + std::to_string(pos) + ": " + ex.what());
    }
  } handler;
  handler.source = source;
  if (utf8::trim(content).empty()) return {};
  bool ok = nlohmann::json::sax_parse(content, &handler);
  if (!ok || !handler.error.empty())
    throw Error(source + ": " + (handler.error.empty() ? std::string("invalid cache file") : handler.error));
  return std::move(handler.cache);
}

inline void save_cache(const WordIpaCache& cache, const std::string& path) { utf8::write_file(path, dump_cache(cache)); }

inline WordIpaCache load_cache(const std::string& path) { return parse_cache(utf8::read_file(path), path); }

// ---------------------------------------------------------------------------
// Configuration

enum class RewriteMode { remote_with_fallback, rule_only, off };

inline RewriteMode parse_rewrite_mode(std::string_view s) {
  if (s == "remote_with_fallback") return RewriteMode::remote_with_fallback;
  if (s == "rule_only") return RewriteMode::rule_only;
  if (s == "off") return RewriteMode::off;
  throw Error("unknown rewrite mode '" + std::string(s) + "' (expected remote_with_fallback, rule_only or off)");
}

struct PipelineConfig {
  std::string charset_path;
  std::string normalization_path;  // empty: skip normalization
  std::string lexicon_path;
  std::vector<std::string> backends{"rules"};
  std::string dictionary_path;
  std::string rules_path;
  RewriteMode rewrite_mode = RewriteMode::rule_only;
  std::string rewrite_endpoint;
  std::string rewrite_adapter = "native";  // native | chat
  std::string rewrite_model;
  std::optional<std::string> rewrite_system_prompt;
  std::optional<std::string> rewrite_user_prompt;
  std::string transcribe_endpoint;
  std::string transcribe_strip_prefix;
  std::string transcribe_strip_suffix;
  unsigned jobs = 1;

  void validate() const {
    if (backends.empty()) throw Error("config: backend chain is empty");
    for (const auto& b : backends)
      if (b != "dictionary" && b != "rules" && b != "remote") throw Error("config: unknown backend '" + b + "'");
    if (charset_path.empty()) throw Error("config: 'charset' is required");
    if (rewrite_mode != RewriteMode::off && lexicon_path.empty()) throw Error("config: 'lexicon' is required");
    if (jobs == 0) throw Error("config: jobs must be positive");
  }
};

namespace detail {

inline void flatten(const nlohmann::json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    const auto& v = it.value();
    if (v.is_object()) {
      flatten(v, key, out);
    } else if (v.is_array()) {
      std::vector<std::string> parts;
      for (const auto& e : v) {
        if (!e.is_string()) throw Error("config: array '" + key + "' must hold strings");
        parts.push_back(e.get<std::string>());
      }
      out.emplace_back(key, utf8::join(parts, ","));
    } else if (v.is_string()) {
      out.emplace_back(key, v.get<std::string>());
    } else {
      out.emplace_back(key, v.dump());
    }
  }
}

inline std::string unquote(std::string_view v) {
  v = utf8::trim(v);
  if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') || (v.front() == '\'' && v.back() == '\''))) {
    v = v.substr(1, v.size() - 2);
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i] == '\\' && i + 1 < v.size()) {
        char n = v[++i];
        out.push_back(n == 'n' ? '\n' : n == 't' ? '\t' : n);
      } else {
        out.push_back(v[i]);
      }
    }
    return out;
  }
  return std::string(v);
}

}  // namespace detail

/// Parses `key = value` lines (optional `[section]` headers prefix keys with
/// `section.`) or a single JSON document. Relative paths resolve against
/// `base_dir`.
inline PipelineConfig parse_config(std::string_view content, const std::string& source = "<config>",
                                   const std::filesystem::path& base_dir = {}) {
  std::vector<std::pair<std::string, std::string>> kv;
  auto trimmed = utf8::trim(content);
  if (!trimmed.empty() && trimmed.front() == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(content);
    } catch (const nlohmann::json::exception& e) {
      throw Error(source + ": malformed JSON: " + e.what());
    }
    if (!j.is_object()) throw Error(source + ": config must be a JSON object");
    detail::flatten(j, "", kv);
  } else {
    std::string section;
    const auto all = utf8::lines(content);
    for (std::size_t n = 0; n < all.size(); ++n) {
      std::string_view line = utf8::trim(all[n]);
      if (line.empty() || line.front() == '#') continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw ParseError(source, n + 1, "unterminated section header");
        section = std::string(utf8::trim(line.substr(1, line.size() - 2)));
        continue;
      }
      auto eq = line.find('=');
      if (eq == std::string_view::npos) throw ParseError(source, n + 1, "expected 'key = value'");
      std::string key(utf8::trim(line.substr(0, eq)));
      if (key.empty()) throw ParseError(source, n + 1, "empty key");
      if (!section.empty()) key = section + "." + key;
      kv.emplace_back(std::move(key), detail::unquote(line.substr(eq + 1)));
    }
  }

  auto resolve = [&](const std::string& p) -> std::string {
    if (p.empty()) return p;
    std::filesystem::path path(p);
    if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
    return path.string();
  };

  PipelineConfig cfg;
  std::unordered_set<std::string> seen;
  for (auto& [key, value] : kv) {
    if (!seen.insert(key).second) throw Error(source + ": duplicate key '" + key + "'");
    if (key == "charset") cfg.charset_path = resolve(value);
    else if (key == "normalization") cfg.normalization_path = resolve(value);
    else if (key == "lexicon") cfg.lexicon_path = resolve(value);
    else if (key == "dictionary") cfg.dictionary_path = resolve(value);
    else if (key == "rules") cfg.rules_path = resolve(value);
    else if (key == "backends") {
      cfg.backends.clear();
      for (auto& b : utf8::split_char(value, ','))
        if (auto t = utf8::trim(b); !t.empty()) cfg.backends.emplace_back(t);
    } else if (key == "rewrite.mode") cfg.rewrite_mode = parse_rewrite_mode(value);
    else if (key == "rewrite.endpoint") cfg.rewrite_endpoint = value;
    else if (key == "rewrite.adapter") {
      if (value != "native" && value != "chat") throw Error(source + ": rewrite.adapter must be native or chat");
      cfg.rewrite_adapter = value;
    } else if (key == "rewrite.model") cfg.rewrite_model = value;
    else if (key == "rewrite.system_prompt") cfg.rewrite_system_prompt = value;
    else if (key == "rewrite.user_prompt") cfg.rewrite_user_prompt = value;
    else if (key == "transcribe.endpoint") cfg.transcribe_endpoint = value;
    else if (key == "transcribe.strip_prefix") cfg.transcribe_strip_prefix = value;
    else if (key == "transcribe.strip_suffix") cfg.transcribe_strip_suffix = value;
    else if (key == "jobs") {
      try {
        long v = std::stol(value);
        if (v <= 0) throw std::out_of_range("jobs");
        cfg.jobs = static_cast<unsigned>(v);
      } catch (const std::exception&) {
        throw Error(source + ": jobs must be a positive integer");
      }
    } else {
      throw Error(source + ": unknown config key '" + key + "'");
    }
  }
  return cfg;
}

inline PipelineConfig load_config(const std::string& path) {
  return parse_config(utf8::read_file(path), path, std::filesystem::path(path).parent_path());
}

// ---------------------------------------------------------------------------
// Pipeline

/// No backend in the chain produced IPA for a subword.
class AllBackendsFailed : public Error {
 public:
  AllBackendsFailed(std::string word, std::string subword, const std::string& detail)
      : Error("no backend could transcribe subword '" + subword + "' of word '" + word + "': " + detail),
        word_(std::move(word)),
        subword_(std::move(subword)) {}
  const std::string& word() const noexcept { return word_; }
  const std::string& subword() const noexcept { return subword_; }

 private:
  std::string word_;
  std::string subword_;
};

struct TranscriptionOutput {
  std::string ipa_text;
  WordIpaCache cache;
  std::string rewritten;
  rewrite::RewriteResult rewrite;
  std::size_t subwords_generated = 0;
  std::size_t words_transcribed = 0;
};

class Pipeline {
 public:
  using BackendChain = std::vector<std::shared_ptr<const transcribe::TranscriptionBackend>>;

  Pipeline(stat::CharSet charset, BackendChain chain) : charset_(std::move(charset)), chain_(std::move(chain)) {
    if (chain_.empty()) throw Error("backend chain is empty");
  }

  static Pipeline from_config(const PipelineConfig& cfg) {
    cfg.validate();
    auto charset = stat::load_charset(cfg.charset_path);
    BackendChain chain;
    for (const auto& b : cfg.backends) {
      if (b == "dictionary") {
        if (cfg.dictionary_path.empty()) throw Error("config: backend 'dictionary' needs 'dictionary'");
        chain.push_back(std::make_shared<transcribe::DictionaryBackend>(
            transcribe::build_dictionary_backend(transcribe::load_word_pairs(cfg.dictionary_path), charset)));
      } else if (b == "rules") {
        if (cfg.rules_path.empty()) throw Error("config: backend 'rules' needs 'rules'");
        chain.push_back(std::make_shared<transcribe::GreedyRuleBackend>(transcribe::load_rule_table(cfg.rules_path)));
      } else {
        if (cfg.transcribe_endpoint.empty()) throw Error("config: backend 'remote' needs 'transcribe.endpoint'");
        chain.push_back(std::make_shared<remote::RemoteBackend>(cfg.transcribe_endpoint, remote::api_key_from_env(),
                                                                cfg.transcribe_strip_prefix, cfg.transcribe_strip_suffix));
      }
    }
    Pipeline p(std::move(charset), std::move(chain));
    if (!cfg.normalization_path.empty()) p.set_normalization(textnorm::load_table(cfg.normalization_path));
    if (cfg.rewrite_mode != RewriteMode::off) p.lexicon_ = rewrite::load_lexicon(cfg.lexicon_path);
    p.mode_ = cfg.rewrite_mode;
    if (cfg.rewrite_system_prompt || cfg.rewrite_user_prompt) {
      p.prompt_ = rewrite::PromptTemplate(cfg.rewrite_system_prompt.value_or(p.prompt_.system_text),
                                          cfg.rewrite_user_prompt.value_or(p.prompt_.user_text_template));
    }
    if (cfg.rewrite_mode == RewriteMode::remote_with_fallback && !cfg.rewrite_endpoint.empty()) {
      if (cfg.rewrite_adapter == "chat")
        p.client_ = std::make_shared<remote::ChatCompletionsClient>(cfg.rewrite_endpoint, remote::api_key_from_env(),
                                                                    cfg.rewrite_model);
      else
        p.client_ = std::make_shared<remote::HttpCompletionClient>(cfg.rewrite_endpoint, remote::api_key_from_env());
    }
    p.jobs_ = cfg.jobs;
    return p;
  }

  void set_normalization(textnorm::NormalizationTable table) { norm_ = std::move(table); }
  void set_lexicon(rewrite::NumeralLexicon lex) { lexicon_ = std::move(lex); }
  void set_rewrite_mode(RewriteMode mode) { mode_ = mode; }
  void set_completion_client(std::shared_ptr<rewrite::CompletionClient> client) { client_ = std::move(client); }
  void set_jobs(unsigned jobs) { jobs_ = std::max(1u, jobs); }
  const stat::CharSet& charset() const noexcept { return charset_; }

  std::string normalize(std::string_view text) const {
    return norm_ ? textnorm::normalize(text, *norm_) : std::string(text);
  }

  rewrite::RewriteResult rewrite_numerals(std::string_view text) const {
    switch (mode_) {
      case RewriteMode::off:
        return {std::string(text), rewrite::RewriteSource::unchanged, !rewrite::has_digit_glyph(text), {}};
      case RewriteMode::rule_only:
        return rewrite::rewrite_offline(text, require_lexicon());
      case RewriteMode::remote_with_fallback:
        if (!client_) {
          auto r = rewrite::rewrite_offline(text, require_lexicon());
          if (r.source != rewrite::RewriteSource::unchanged) {
            r.validated = false;
            r.warnings.push_back("no rewrite endpoint configured; used rule-based fallback");
          }
          return r;
        }
        return rewrite::rewrite_contextual(text, prompt_, *client_, require_lexicon());
    }
    throw InternalError("unreachable rewrite mode");
  }

  /// Runs every stage. Words already present in `cache` are reused and
  /// never reach a backend; new words are appended in first-occurrence order.
  TranscriptionOutput transcribe_text(std::string_view text, WordIpaCache cache = {}) const {
    TranscriptionOutput out;
    const std::string normalized = normalize(text);
    out.rewrite = rewrite_numerals(normalized);
    out.rewritten = out.rewrite.rewritten;

    const auto unique = collect_unique_words(out.rewritten);
    std::vector<std::string> pending;
    for (const auto& w : unique)
      if (!cache.contains(w)) pending.push_back(w);

    std::vector<std::string> results(pending.size());
    SubwordMemo memo;
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mu;
    auto worker = [&] {
      while (true) {
        std::size_t i = next.fetch_add(1);
        if (i >= pending.size()) return;
        try {
          results[i] = transcribe_unique_word(pending[i], memo);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!first_error) first_error = std::current_exception();
          next.store(pending.size());
          return;
        }
      }
    };
    const unsigned n_workers = std::min<std::size_t>(jobs_, std::max<std::size_t>(pending.size(), 1));
    if (n_workers <= 1) {
      worker();
    } else {
      std::vector<std::jthread> threads;
      for (unsigned t = 0; t < n_workers; ++t) threads.emplace_back(worker);
    }
    if (first_error) std::rethrow_exception(first_error);

    for (std::size_t i = 0; i < pending.size(); ++i) cache.insert(pending[i], std::move(results[i]));
    out.words_transcribed = pending.size();
    out.subwords_generated = memo.size();
    out.ipa_text = rebuild(utf8::split_ws(out.rewritten), cache);
    out.cache = std::move(cache);
    return out;
  }

 private:
  // One generation per distinct framed subword, even under concurrency: the
  // first caller owns the promise, later callers wait on its future.
  class SubwordMemo {
   public:
    template <typename Fn>
    std::string get(const std::string& subword, Fn&& compute) {
      std::promise<std::string> promise;
      std::shared_future<std::string> future;
      bool owner = false;
      {
        std::lock_guard lock(mu_);
        auto it = entries_.find(subword);
        if (it == entries_.end()) {
          future = promise.get_future().share();
          entries_.emplace(subword, future);
          owner = true;
        } else {
          future = it->second;
        }
      }
      if (owner) {
        try {
          promise.set_value(compute());
        } catch (...) {
          promise.set_exception(std::current_exception());
        }
      }
      return future.get();
    }

    std::size_t size() const {
      std::lock_guard lock(mu_);
      return entries_.size();
    }

   private:
    mutable std::mutex mu_;
    std::unordered_map<std::string, std::shared_future<std::string>> entries_;
  };

  const rewrite::NumeralLexicon& require_lexicon() const {
    if (!lexicon_) throw Error("numeral rewriting needs a lexicon");
    return *lexicon_;
  }

  std::string generate_with_chain(const std::string& subword) const {
    std::string failures;
    for (const auto& backend : chain_) {
      try {
        return transcribe::transcribe_subword(subword, *backend);
      } catch (const transcribe::BackendError& e) {
        if (!failures.empty()) failures += "; ";
        failures += backend->name() + ": " + e.what();
      }
    }
    throw transcribe::BackendError(subword, failures);
  }

  std::string transcribe_unique_word(const std::string& word, SubwordMemo& memo) const {
    const auto seg = stat::align(word, charset_);
    std::string ipa;
    try {
      ipa = transcribe::merge_segments(seg, [&](const std::string& sub) {
        return memo.get(sub, [&] { return generate_with_chain(sub); });
      });
    } catch (const transcribe::BackendError& e) {
      throw AllBackendsFailed(word, e.subword(), e.what());
    }
    // A word whose every segment is silent would vanish from the output and
    // shift the token alignment; keep its surface form instead.
    return ipa.empty() ? word : ipa;
  }

  stat::CharSet charset_;
  BackendChain chain_;
  std::optional<textnorm::NormalizationTable> norm_;
  std::optional<rewrite::NumeralLexicon> lexicon_;
  RewriteMode mode_ = RewriteMode::rule_only;
  rewrite::PromptTemplate prompt_;
  std::shared_ptr<rewrite::CompletionClient> client_;
  unsigned jobs_ = 1;
};

/// Library entry point matching the CLI `transcribe` subcommand.
inline std::pair<std::string, WordIpaCache> transcribe_text(std::string_view text, const PipelineConfig& config,
                                                            WordIpaCache cache = {}) {
  auto out = Pipeline::from_config(config).transcribe_text(text, std::move(cache));
  return {std::move(out.ipa_text), std::move(out.cache)};
}

}  // namespace ipapipe::pipeline
