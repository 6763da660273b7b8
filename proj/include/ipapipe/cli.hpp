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

// `ipa-pipe` command line. run() takes explicit streams so the whole surface
// is testable in-process.
//
// Exit codes: 0 success, 1 user error, 2 internal error.

#pragma once

#include <iostream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ipapipe/dataq.hpp"
#include "ipapipe/error.hpp"
#include "ipapipe/eval.hpp"
#include "ipapipe/pipeline.hpp"
#include "ipapipe/remote.hpp"
#include "ipapipe/rewrite.hpp"
#include "ipapipe/textnorm.hpp"

namespace ipapipe::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUser = 1;
inline constexpr int kExitInternal = 2;

namespace detail {

inline std::string read_input(const std::string& path, std::istream& in) {
  if (path == "-") return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  return utf8::read_file(path);
}

struct Options {
  // normalize
  std::string table;
  // rewrite
  std::string mode = "rule_only";
  std::string lexicon;
  std::string endpoint;
  std::string adapter = "native";
  std::string model;
  // transcribe
  std::string config;
  std::string cache;
  std::string rewrite_override;
  unsigned jobs = 0;
  // split
  std::size_t ep = 3;
  double max_test_fraction = 0.25;
  std::string out_train, out_test, curve;
  bool global = false;
  // eval
  std::string weights;
  std::vector<std::string> baselines;
  std::string csv;
  // cache
  std::vector<std::string> cache_paths;
  std::string output;
  // shared
  std::string input = "-";
};

inline int cmd_normalize(const Options& o, std::istream& in, std::ostream& out) {
  auto table = o.table.empty() ? textnorm::NormalizationTable() : textnorm::load_table(o.table);
  out << textnorm::normalize(read_input(o.input, in), table);
  return kExitOk;
}

inline int cmd_rewrite(const Options& o, std::istream& in, std::ostream& out, std::ostream& err) {
  const auto mode = pipeline::parse_rewrite_mode(o.mode);
  const std::string text = read_input(o.input, in);
  if (mode == pipeline::RewriteMode::off) {
    out << text;
    return kExitOk;
  }
  const auto lex = rewrite::load_lexicon(o.lexicon);
  rewrite::RewriteResult result;
  if (mode == pipeline::RewriteMode::rule_only) {
    result = rewrite::rewrite_offline(text, lex);
  } else {
    if (o.endpoint.empty()) throw Error("--endpoint is required for remote_with_fallback");
    std::unique_ptr<rewrite::CompletionClient> client;
    if (o.adapter == "chat")
      client = std::make_unique<remote::ChatCompletionsClient>(o.endpoint, remote::api_key_from_env(), o.model);
    else if (o.adapter == "native")
      client = std::make_unique<remote::HttpCompletionClient>(o.endpoint, remote::api_key_from_env());
    else
      throw Error("--adapter must be native or chat");
    result = rewrite::rewrite_contextual(text, rewrite::PromptTemplate{}, *client, lex);
  }
  for (const auto& w : result.warnings) err << "warning: " << w << "\n";
  out << result.rewritten;
  return kExitOk;
}

inline int cmd_transcribe(const Options& o, std::istream& in, std::ostream& out, std::ostream& err) {
  auto cfg = pipeline::load_config(o.config);
  if (!o.rewrite_override.empty()) cfg.rewrite_mode = pipeline::parse_rewrite_mode(o.rewrite_override);
  if (o.jobs) cfg.jobs = o.jobs;
  auto pipe = pipeline::Pipeline::from_config(cfg);
  pipeline::WordIpaCache cache;
  if (!o.cache.empty() && std::filesystem::exists(o.cache)) cache = pipeline::load_cache(o.cache);
  auto result = pipe.transcribe_text(read_input(o.input, in), std::move(cache));
  for (const auto& w : result.rewrite.warnings) err << "warning: " << w << "\n";
  err << "transcribed " << result.words_transcribed << " new words (" << result.subwords_generated
      << " subwords), cache size " << result.cache.size() << "\n";
  if (!o.cache.empty()) pipeline::save_cache(result.cache, o.cache);
  if (!result.ipa_text.empty()) out << result.ipa_text << "\n";
  return kExitOk;
}

inline int cmd_split(const Options& o, std::istream& in, std::ostream& out) {
  const auto corpus = dataq::parse_corpus(read_input(o.input, in), o.input);
  if (corpus.empty()) throw Error("corpus is empty");
  dataq::SplitConfig cfg{o.ep, o.max_test_fraction};
  std::vector<dataq::Sample> train, test;
  std::string curve;
  if (o.global) {
    auto res = dataq::split_dataset(corpus, cfg);
    curve = dataq::format_score_curve(res.score_curve);
    out << "all: train " << res.train.size() << ", test " << res.test.size() << ", stop " << to_string(res.stop)
        << "\n";
    train = std::move(res.train);
    test = std::move(res.test);
  } else {
    auto res = dataq::split_by_region(corpus, cfg);
    curve = res.per_region.size() == 1 ? dataq::format_score_curve(res.per_region.begin()->second.score_curve)
                                       : dataq::format_score_curve(res);
    for (const auto& [r, part] : res.per_region)
      out << dataq::to_string(r) << ": train " << part.train.size() << ", test " << part.test.size() << ", stop "
          << to_string(part.stop) << "\n";
    train = std::move(res.train);
    test = std::move(res.test);
  }
  out << "total: train " << train.size() << ", test " << test.size() << "\n";
  dataq::write_corpus(train, o.out_train);
  dataq::write_corpus(test, o.out_test);
  if (!o.curve.empty()) utf8::write_file(o.curve, curve);
  return kExitOk;
}

inline int cmd_eval(const Options& o, std::istream& in, std::ostream& out) {
  const auto pairs = eval::parse_pairs(read_input(o.input, in), o.input);
  std::map<dataq::Region, double> weights;
  const std::map<dataq::Region, double>* wp = nullptr;
  if (o.weights == "table2") {
    wp = &eval::reference_test_counts();
  } else if (!o.weights.empty()) {
    weights = eval::parse_weights(utf8::read_file(o.weights), o.weights);
    wp = &weights;
  }
  const auto report = eval::corpus_wer(pairs, wp);
  out << eval::format_report_table(report);
  for (const auto& b : o.baselines) {
    auto eq = b.find('=');
    if (eq == std::string::npos || eq == 0) throw Error("--baseline expects NAME=MEAN, got '" + b + "'");
    double mean;
    try {
      mean = std::stod(b.substr(eq + 1));
    } catch (const std::exception&) {
      throw Error("--baseline expects NAME=MEAN, got '" + b + "'");
    }
    out << "improvement over " << b.substr(0, eq) << ": "
        << eval::fmt(eval::improvement(mean, report.sample_weighted_mean)) << "%\n";
  }
  if (!o.csv.empty()) utf8::write_file(o.csv, eval::format_report_csv(report));
  return kExitOk;
}

inline pipeline::WordIpaCache merge_caches(const std::vector<std::string>& paths) {
  pipeline::WordIpaCache merged;
  for (const auto& p : paths) {
    const auto cache = pipeline::load_cache(p);
    for (const auto& [w, ipa] : cache.entries()) {
      if (merged.contains(w)) {
        if (merged.at(w) != ipa)
          throw Error("conflicting IPA for '" + w + "': '" + merged.at(w) + "' vs '" + ipa + "' in " + p);
        continue;
      }
      merged.insert(w, ipa);
    }
  }
  return merged;
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bengali text to IPA transcription pipeline", "ipa-pipe"};
  app.require_subcommand(1);
  detail::Options o;

  auto* normalize = app.add_subcommand("normalize", "Canonicalize Unicode text");
  normalize->add_option("--table", o.table, "Normalization table file")->check(CLI::ExistingFile);
  normalize->add_option("--input", o.input, "Input file, '-' for stdin");

  auto* rw = app.add_subcommand("rewrite", "Rewrite Bengali numerals into words");
  rw->add_option("--mode", o.mode, "remote_with_fallback | rule_only | off");
  rw->add_option("--lexicon", o.lexicon, "Numeral lexicon file")->required();
  rw->add_option("--input", o.input, "Input file, '-' for stdin");
  rw->add_option("--endpoint", o.endpoint, "Rewrite endpoint URL (remote mode)");
  rw->add_option("--adapter", o.adapter, "native | chat");
  rw->add_option("--model", o.model, "Model name for the chat adapter");

  auto* tr = app.add_subcommand("transcribe", "Transcribe text to IPA");
  tr->add_option("--config", o.config, "Pipeline config file")->required()->check(CLI::ExistingFile);
  tr->add_option("--input", o.input, "Input file, '-' for stdin");
  tr->add_option("--cache", o.cache, "Word-IPA cache file (read if present, then written)");
  tr->add_option("--rewrite", o.rewrite_override, "Override rewrite mode");
  tr->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);

  auto* sp = app.add_subcommand("split", "Novelty-driven train/test split");
  sp->add_option("--input", o.input, "Corpus file")->required();
  sp->add_option("--ep", o.ep, "Elbow point score")->required();
  sp->add_option("--max-test-fraction", o.max_test_fraction, "Cap on the test fraction")->check(CLI::Range(0.0, 1.0));
  sp->add_option("--out-train", o.out_train, "Training corpus output")->required();
  sp->add_option("--out-test", o.out_test, "Test corpus output")->required();
  sp->add_option("--curve", o.curve, "Score curve CSV output");
  sp->add_flag("--global", o.global, "Split the whole corpus instead of per region");

  auto* ev = app.add_subcommand("eval", "Word error rate report");
  ev->add_option("--input", o.input, "reference<TAB>hypothesis<TAB>region file")->required();
  ev->add_option("--weights", o.weights, "Region counts file or 'table2'");
  ev->add_option("--baseline", o.baselines, "NAME=MEAN baseline WER (repeatable)");
  ev->add_option("--csv", o.csv, "Per-region CSV output");

  auto* cache = app.add_subcommand("cache", "Inspect or merge Word-IPA caches");
  cache->require_subcommand(1);
  auto* show = cache->add_subcommand("show", "Print cache entries");
  show->add_option("paths", o.cache_paths, "Cache files")->required()->check(CLI::ExistingFile);
  auto* merge = cache->add_subcommand("merge", "Merge caches; conflicting entries are an error");
  merge->add_option("paths", o.cache_paths, "Cache files")->required()->check(CLI::ExistingFile);
  merge->add_option("--output", o.output, "Merged cache path (stdout if omitted)");

  std::vector<const char*> argv;
  argv.push_back("ipa-pipe");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    err << "ipa-pipe: " << e.what() << "\n";
    return kExitUser;
  }

  try {
    if (*normalize) return detail::cmd_normalize(o, in, out);
    if (*rw) return detail::cmd_rewrite(o, in, out, err);
    if (*tr) return detail::cmd_transcribe(o, in, out, err);
    if (*sp) return detail::cmd_split(o, in, out);
    if (*ev) return detail::cmd_eval(o, in, out);
    if (*show) {
      for (const auto& p : o.cache_paths) {
        const auto cache = pipeline::load_cache(p);
        for (const auto& [w, ipa] : cache.entries()) out << w << "\t" << ipa << "\n";
      }
      return kExitOk;
    }
    if (*merge) {
      auto merged = detail::merge_caches(o.cache_paths);
      if (o.output.empty()) out << pipeline::dump_cache(merged);
      else pipeline::save_cache(merged, o.output);
      return kExitOk;
    }
    throw InternalError("no subcommand dispatched");
  } catch (const Error& e) {
    err << "ipa-pipe: " << e.what() << "\n";
    return kExitUser;
  } catch (const std::exception& e) {
    err << "ipa-pipe: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace ipapipe::cli
