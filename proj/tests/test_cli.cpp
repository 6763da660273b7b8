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

#include <gtest/gtest.h>

#include <sstream>

#include "ipapipe/cli.hpp"
#include "test_util.hpp"

namespace ipapipe::cli {
namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run invoke(std::vector<std::string> args, const std::string& stdin_text = "") {
  std::istringstream in(stdin_text);
  std::ostringstream out, err;
  int code = run(args, in, out, err);
  return {code, out.str(), err.str()};
}

std::string fixture(const std::string& name) { return std::string(IPAPIPE_FIXTURE_DIR) + "/" + name; }
std::string conf() { return testing::data_path("default.conf"); }

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(invoke({"--help"}).code, 0);
  EXPECT_EQ(invoke({"transcribe", "--help"}).code, 0);
  EXPECT_EQ(invoke({}).code, 1);
  EXPECT_EQ(invoke({"transcribe", "--config", conf(), "--bogus"}).code, 1);
  EXPECT_EQ(invoke({"frobnicate"}).code, 1);
  EXPECT_EQ(invoke({"transcribe", "--config", "/nonexistent.conf"}).code, 1);
}

TEST(Cli, TranscribeEmptyInput) {
  auto r = invoke({"transcribe", "--config", conf()}, "");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "");
}

TEST(Cli, TranscribeMatchesLibrary) {
  const std::string text = utf8::read_file(fixture("sample_bn.txt"));
  auto r = invoke({"transcribe", "--config", conf(), "--input", fixture("sample_bn.txt")});
  ASSERT_EQ(r.code, 0) << r.err;
  auto [ipa, cache] = pipeline::transcribe_text(text, pipeline::load_config(conf()));
  EXPECT_EQ(r.out, ipa + "\n");
  EXPECT_NE(r.err.find("cache size"), std::string::npos);
}

TEST(Cli, TranscribeWritesAndReusesCache) {
  testing::TempDir dir;
  const std::string cache = dir.file("cache.json");
  auto first = invoke({"transcribe", "--config", conf(), "--cache", cache}, testing::cps(U"আমি ভাত খাই আমি"));
  ASSERT_EQ(first.code, 0) << first.err;
  EXPECT_EQ(pipeline::load_cache(cache).size(), 3u);
  auto second = invoke({"transcribe", "--config", conf(), "--cache", cache, "--jobs", "4"},
                       testing::cps(U"আমি ভাত খাই আমি"));
  EXPECT_EQ(second.out, first.out);
  EXPECT_NE(second.err.find("transcribed 0 new words"), std::string::npos) << second.err;
}

TEST(Cli, NormalizeAndRewrite) {
  auto n = invoke({"normalize", "--table", testing::data_path("default.norm")}, testing::cps(U"ড়"));
  EXPECT_EQ(n.code, 0);
  EXPECT_EQ(n.out, testing::cps(U"ড়"));
  const auto lex = rewrite::load_lexicon(testing::data_path("bn_numerals.lex"));
  auto r = invoke({"rewrite", "--lexicon", testing::data_path("bn_numerals.lex")}, testing::cps(U"৫৬"));
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, lex.unit(56));
  EXPECT_EQ(invoke({"rewrite", "--lexicon", testing::data_path("bn_numerals.lex"), "--mode", "bad"}, "x").code, 1);
  EXPECT_EQ(invoke({"rewrite", "--lexicon", testing::data_path("bn_numerals.lex"), "--mode", "remote_with_fallback"},
                   "x")
                .code,
            1);
}

TEST(Cli, SplitIsDeterministic) {
  testing::TempDir dir;
  std::string corpus = "text\tipa\tregion\n";
  const char* rows[] = {"s1\ta b\tRangpur", "s2\tb c\tRangpur", "s3\tc\tRangpur", "t1\tx y z\tNarail", "t2\tx\tNarail"};
  for (const char* r : rows) corpus += std::string(r) + "\n";
  const std::string in = dir.write("corpus.tsv", corpus);
  auto go = [&](const std::string& tag) {
    return invoke({"split", "--input", in, "--ep", "1", "--max-test-fraction", "1.0", "--out-train",
                   dir.file(tag + ".train"), "--out-test", dir.file(tag + ".test"), "--curve", dir.file(tag + ".csv")});
  };
  auto a = go("a"), b = go("b");
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(utf8::read_file(dir.file("a.test")), utf8::read_file(dir.file("b.test")));
  auto test = dataq::load_corpus(dir.file("a.test"));
  auto train = dataq::load_corpus(dir.file("a.train"));
  EXPECT_EQ(test.size() + train.size(), 5u);
  EXPECT_EQ(utf8::read_file(dir.file("a.csv")).rfind("region,iteration,score\n", 0), 0u);
  EXPECT_EQ(invoke({"split", "--input", dir.file("missing"), "--ep", "1", "--out-train", "x", "--out-test", "y"}).code,
            1);
}

TEST(Cli, EvalReferenceWeightsMatchLibrary) {
  testing::TempDir dir;
  std::string content = "reference\thypothesis\tregion\n";
  content += "a b c d\ta b c x\tChittagong\n";
  content += "a b\ta b\tStandard\n";
  content += "a b c\tx\tRangpur\n";
  const std::string in = dir.write("pairs.tsv", content);
  auto r = invoke({"eval", "--input", in, "--weights", "table2", "--baseline", "B=50", "--csv", dir.file("o.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  auto rep = eval::corpus_wer(eval::load_pairs(in), &eval::reference_test_counts());
  EXPECT_EQ(r.out.rfind(eval::format_report_table(rep), 0), 0u);
  EXPECT_NE(r.out.find("improvement over B: " + eval::fmt(eval::improvement(50, rep.sample_weighted_mean))),
            std::string::npos);
  EXPECT_EQ(utf8::read_file(dir.file("o.csv")), eval::format_report_csv(rep));
  EXPECT_EQ(invoke({"eval", "--input", in, "--baseline", "nope"}).code, 1);
  EXPECT_EQ(invoke({"eval", "--input", in, "--baseline", "B=0"}).code, 1);
}

TEST(Cli, CacheShowAndMerge) {
  testing::TempDir dir;
  const std::string a = dir.write("a.json", R"({"x":"ks","y":"wai"})");
  const std::string b = dir.write("b.json", R"({"y":"wai","z":"zed"})");
  const std::string c = dir.write("c.json", R"({"x":"other"})");
  auto show = invoke({"cache", "show", a});
  EXPECT_EQ(show.out, "x\tks\ny\twai\n");
  auto merged = invoke({"cache", "merge", a, b});
  ASSERT_EQ(merged.code, 0) << merged.err;
  auto m = pipeline::parse_cache(merged.out);
  EXPECT_EQ(m.size(), 3u);
  EXPECT_EQ(m.entries()[2].first, "z");
  EXPECT_EQ(invoke({"cache", "merge", a, c}).code, 1);
  EXPECT_EQ(invoke({"cache", "merge", a, b, "--output", dir.file("m.json")}).code, 0);
  EXPECT_EQ(pipeline::load_cache(dir.file("m.json")), m);
  EXPECT_EQ(invoke({"cache", "show", dir.write("bad.json", "[1]")}).code, 1);
}

}  // namespace
}  // namespace ipapipe::cli
