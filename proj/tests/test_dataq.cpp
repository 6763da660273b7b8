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

#include <random>
#include <set>

#include "ipapipe/dataq.hpp"
#include "test_util.hpp"

namespace ipapipe::dataq {
namespace {

Sample make(std::uint64_t id, std::string ipa, Region r = Region::Standard) {
  return Sample{"t" + std::to_string(id), std::move(ipa), r, id};
}

std::vector<std::uint64_t> ids(const std::vector<Sample>& v) {
  std::vector<std::uint64_t> out;
  for (const auto& s : v) out.push_back(s.id);
  return out;
}

// Three-sample corpus: {a,b}, {b,c}, {c}.
std::vector<Sample> crafted() { return {make(0, "a b"), make(1, "b c"), make(2, "c")}; }

// Reference split over id sets: rescore everything from scratch each round.
struct NaiveSplit {
  std::vector<std::uint64_t> test;
  std::vector<std::size_t> scores;
};

NaiveSplit naive_split(const std::vector<Sample>& corpus, std::size_t ep, std::size_t cap) {
  NaiveSplit out;
  std::set<std::uint64_t> remaining;
  for (const auto& s : corpus) remaining.insert(s.id);
  std::set<std::string> vocab;
  auto words = [&](std::uint64_t id) {
    std::istringstream in(corpus[id].ipa);
    std::set<std::string> w;
    for (std::string t; in >> t;) w.insert(t);
    return w;
  };
  while (!remaining.empty() && out.test.size() < cap) {
    std::uint64_t best_id = 0;
    long best = -1;
    for (auto id : remaining) {  // ascending, so strict > keeps the lowest id
      long score = 0;
      for (const auto& w : words(id)) score += vocab.count(w) ? 0 : 1;
      if (score > best) {
        best = score;
        best_id = id;
      }
    }
    if (static_cast<std::size_t>(best) < ep) break;
    for (const auto& w : words(best_id)) vocab.insert(w);
    out.test.push_back(best_id);
    out.scores.push_back(static_cast<std::size_t>(best));
    remaining.erase(best_id);
  }
  return out;
}

TEST(Corpus, TsvWithHeader) {
  auto c = parse_corpus("text\tipa\tregion\nx y\ta b\tchittagong\nz\tc\tStandard\n");
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].region, Region::Chittagong);
  EXPECT_EQ(c[0].ipa, "a b");
  EXPECT_EQ(c[1].id, 1u);
}

TEST(Corpus, JsonLines) {
  auto c = parse_corpus(R"({"text":"x","ipa":"a","region":"Rangpur"}
{"text":"y","ipa":"b","region":"tangail"})");
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[1].region, Region::Tangail);
}

TEST(Corpus, Errors) {
  auto line_of = [](const std::string& content) -> std::size_t {
    try {
      parse_corpus(content);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of("x\ta\tStandard\ny\t\tStandard\n"), 2u);
  EXPECT_EQ(line_of("x\ta\n"), 1u);
  EXPECT_EQ(line_of("x\ta\tAtlantis\n"), 1u);
  EXPECT_EQ(line_of("{\"text\":\"x\",\"ipa\":\"a\"}\n"), 1u);
  EXPECT_EQ(line_of("{\"text\":\"x\",\"ipa\":\"a\",\"region\":\"Standard\"}\n{bad\n"), 2u);
  EXPECT_EQ(line_of("{\"text\":\" \",\"ipa\":\"a\",\"region\":\"Standard\"}\n"), 1u);
}

TEST(Corpus, WriteRoundTrip) {
  std::vector<Sample> c = {make(0, "a b", Region::Narail), make(1, "c", Region::Kishoreganj)};
  testing::TempDir dir;
  write_corpus(c, dir.file("c.tsv"));
  EXPECT_EQ(load_corpus(dir.file("c.tsv")), c);
}

TEST(Novelty, Examples) {
  EXPECT_EQ(novelty_score(make(0, "p q p"), {}), 2u);
  EXPECT_EQ(novelty_score(make(0, "p q"), {"p"}), 1u);
  EXPECT_EQ(novelty_score(make(0, "p"), {"p"}), 0u);
}

TEST(Split, ElbowZeroMovesEverything) {
  auto r = split_dataset(crafted(), {0, 1.0});
  EXPECT_TRUE(r.train.empty());
  EXPECT_EQ(r.test.size(), 3u);
  EXPECT_EQ(r.stop, StopReason::train_exhausted);
}

TEST(Split, HugeElbowMovesNothing) {
  auto r = split_dataset(crafted(), {1000, 1.0});
  EXPECT_TRUE(r.test.empty());
  EXPECT_EQ(r.train, crafted());
  EXPECT_TRUE(r.score_curve.empty());
  EXPECT_EQ(r.stop, StopReason::below_elbow);
}

TEST(Split, CraftedElbowTwo) {
  // First pick scores 2 ({a,b}); afterwards {b,c} and {c} both score 1.
  auto r = split_dataset(crafted(), {2, 1.0});
  EXPECT_EQ(ids(r.test), (std::vector<std::uint64_t>{0}));
  EXPECT_EQ(ids(r.train), (std::vector<std::uint64_t>{1, 2}));
  EXPECT_EQ(r.score_curve, (std::vector<ScorePoint>{{1, 2}}));
}

TEST(Split, CraftedElbowOne) {
  auto r = split_dataset(crafted(), {1, 1.0});
  EXPECT_EQ(ids(r.test), (std::vector<std::uint64_t>{0, 1}));
  EXPECT_EQ(ids(r.train), (std::vector<std::uint64_t>{2}));
  EXPECT_EQ(r.score_curve, (std::vector<ScorePoint>{{1, 2}, {2, 1}}));
  EXPECT_EQ(r.stop, StopReason::below_elbow);
}

TEST(Split, TiesGoToLowestId) {
  std::vector<Sample> c = {make(0, "x"), make(1, "a b"), make(2, "c d")};
  auto r = split_dataset(c, {1, 1.0});
  EXPECT_EQ(ids(r.test), (std::vector<std::uint64_t>{1, 2, 0}));
}

TEST(Split, FractionCap) {
  EXPECT_EQ(test_cap(3, 0.25), 0u);
  EXPECT_EQ(test_cap(4, 0.25), 1u);
  EXPECT_EQ(test_cap(10, 0.3), 3u);
  std::vector<Sample> c;
  for (std::uint64_t i = 0; i < 8; ++i) c.push_back(make(i, "w" + std::to_string(i)));
  auto r = split_dataset(c, {1, 0.25});
  EXPECT_EQ(r.test.size(), 2u);
  EXPECT_EQ(r.stop, StopReason::test_cap);
  EXPECT_THROW(split_dataset(c, {1, 0.0}), Error);
  EXPECT_THROW(split_dataset(c, {1, 1.5}), Error);
  EXPECT_THROW(split_dataset({}, {}), Error);
}

TEST(Split, MatchesNaiveReferenceOnRandomCorpora) {
  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> n_samples(1, 40), n_words(1, 6), vocab(0, 14), ep(0, 4);
  std::uniform_real_distribution<double> frac(0.05, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Sample> c;
    for (int i = n_samples(rng); i > 0; --i) {
      std::vector<std::string> w;
      for (int k = n_words(rng); k > 0; --k) w.push_back("v" + std::to_string(vocab(rng)));
      c.push_back(make(c.size(), utf8::join(w, " ")));
    }
    SplitConfig cfg{static_cast<std::size_t>(ep(rng)), frac(rng)};
    auto r = split_dataset(c, cfg);
    auto ref = naive_split(c, cfg.elbow_point, test_cap(c.size(), cfg.max_test_fraction));
    ASSERT_EQ(ids(r.test), ref.test) << "trial " << trial;
    ASSERT_EQ(r.score_curve.size(), ref.scores.size());
    for (std::size_t k = 0; k < ref.scores.size(); ++k) {
      ASSERT_EQ(r.score_curve[k].iteration, k + 1);
      ASSERT_EQ(r.score_curve[k].score, ref.scores[k]);
    }
    // Partition, train order, non-increasing scores, natural stop.
    std::set<std::uint64_t> all;
    for (const auto& s : r.train) all.insert(s.id);
    for (const auto& s : r.test) all.insert(s.id);
    ASSERT_EQ(all.size(), c.size());
    ASSERT_EQ(r.train.size() + r.test.size(), c.size());
    ASSERT_TRUE(std::is_sorted(r.train.begin(), r.train.end(), [](auto& a, auto& b) { return a.id < b.id; }));
    for (std::size_t k = 1; k < r.score_curve.size(); ++k)
      ASSERT_LE(r.score_curve[k].score, r.score_curve[k - 1].score);
    for (const auto& p : r.score_curve) ASSERT_GE(p.score, cfg.elbow_point);
    if (r.stop == StopReason::below_elbow) {
      WordSet v;
      for (const auto& s : r.test)
        for (auto& w : ipa_word_set(s)) v.insert(w);
      for (const auto& s : r.train) ASSERT_LT(novelty_score(s, v), cfg.elbow_point);
    }
  }
}

TEST(Split, ByRegionSplitsIndependently) {
  std::vector<Sample> c = {make(0, "a b", Region::Rangpur), make(1, "a b", Region::Chittagong),
                           make(2, "b c", Region::Rangpur), make(3, "z", Region::Chittagong)};
  auto r = split_by_region(c, {2, 1.0});
  ASSERT_EQ(r.per_region.size(), 2u);
  EXPECT_EQ(ids(r.per_region.at(Region::Rangpur).test), (std::vector<std::uint64_t>{0}));
  EXPECT_EQ(ids(r.per_region.at(Region::Chittagong).test), (std::vector<std::uint64_t>{1}));
  EXPECT_EQ(ids(r.test), (std::vector<std::uint64_t>{1, 0}));  // region order
  EXPECT_EQ(r.train.size() + r.test.size(), c.size());
}

TEST(ScoreCurve, CsvRoundTrip) {
  auto r = split_dataset(crafted(), {1, 1.0});
  testing::TempDir dir;
  export_score_curve(r, dir.file("curve.csv"));
  const std::string text = utf8::read_file(dir.file("curve.csv"));
  EXPECT_EQ(text, "iteration,score\n1,2\n2,1\n");
  EXPECT_EQ(parse_score_curve(text), r.score_curve);
  EXPECT_THROW(parse_score_curve("x\n"), Error);
  EXPECT_THROW(parse_score_curve("iteration,score\n1\n"), ParseError);
}

TEST(ScoreCurve, RegionalFormat) {
  std::vector<Sample> c = {make(0, "a b", Region::Rangpur), make(1, "a b", Region::Chittagong)};
  auto r = split_by_region(c, {1, 1.0});
  EXPECT_EQ(format_score_curve(r), "region,iteration,score\nChittagong,1,2\nRangpur,1,2\n");
}

TEST(Region, ParseNames) {
  for (Region r : kAllRegions) EXPECT_EQ(parse_region(to_string(r)), r);
  EXPECT_EQ(parse_region(" NARSINGDI "), Region::Narsingdi);
  EXPECT_THROW(parse_region("Dhaka"), Error);
}

}  // namespace
}  // namespace ipapipe::dataq
