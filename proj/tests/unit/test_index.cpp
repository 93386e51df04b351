#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "mitiforge/error.hpp"
#include "mitiforge/mitigation_db.hpp"
#include "test_support.hpp"

using namespace mitiforge;
using namespace mitiforge::retrieval;

namespace {

EmbeddingVector random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(dim);
  for (auto& x : v) x = n(rng);
  return EmbeddingVector::normalize(std::move(v));
}

MitigationEntry entry(const std::string& id, EmbeddingVector v) {
  ingest::WorkaroundSection s{"https://x.org/" + id, "Workaround", "disable the feature", {0, 19}};
  return {id, "description of " + id, {s}, std::move(v)};
}

// distance from (1,0) to (c, sqrt(1-c^2)) is 1 - c
EmbeddingVector at_distance(double d) {
  const double c = 1.0 - d;
  return EmbeddingVector::from_unit({c, std::sqrt(std::max(0.0, 1.0 - c * c))});
}

double brute_distance(const EmbeddingVector& a, const EmbeddingVector& b) {
  double dot = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) dot += a.values()[i] * b.values()[i];
  return std::min(2.0, std::max(0.0, 1.0 - dot));
}

}  // namespace

TEST(Index, NearestMatchesBruteForceOnRandomVectors) {
  std::mt19937_64 rng(20240611);
  std::vector<MitigationEntry> entries;
  for (int i = 0; i < 1000; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "CVE-2020-%05d", i);
    entries.push_back(entry(id, random_unit(rng, 512)));
  }
  auto index = build_index(entries);
  for (int q = 0; q < 50; ++q) {
    auto query = random_unit(rng, 512);
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < entries.size(); ++i) {
      double d = brute_distance(entries[i].embedding, query);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    auto hit = index.nearest(query);
    ASSERT_TRUE(hit);
    EXPECT_EQ(hit->first, best);
    EXPECT_NEAR(hit->second, best_d, 1e-12);
  }
}

TEST(Index, ThresholdBoundaryIsInclusive) {
  auto index = build_index({entry("CVE-2021-0001", EmbeddingVector::from_unit({1.0, 0.0}))});
  RetrievalConfig cfg;  // k = 0.5
  const std::vector<std::pair<double, StrategyDecision>> cases = {
      {0.0, StrategyDecision::Resembling},       {0.5 - 1e-6, StrategyDecision::Resembling},
      {0.5, StrategyDecision::Resembling},       {0.5 + 1e-6, StrategyDecision::TypeBased},
      {1.0, StrategyDecision::TypeBased},        {2.0, StrategyDecision::TypeBased},
  };
  for (const auto& [d, want] : cases) {
    auto r = query_nearest(index, at_distance(d), cfg);
    ASSERT_TRUE(r.best);
    EXPECT_NEAR(r.best->distance, d, 1e-9);
    EXPECT_EQ(r.decision, want) << "d=" << d;
  }
}

TEST(Index, EmptyIndexIsTypeBased) {
  MitigationIndex empty;
  auto r = query_nearest(empty, at_distance(0.0), RetrievalConfig{});
  EXPECT_FALSE(r.best);
  EXPECT_EQ(r.decision, StrategyDecision::TypeBased);
}

TEST(Index, TiesGoToSmallestCveId) {
  auto v = EmbeddingVector::from_unit({1.0, 0.0});
  auto index = build_index({entry("CVE-2022-9999", v), entry("CVE-2022-0001", v)});
  EXPECT_EQ(index.nearest(v)->first, 1u);
}

TEST(Index, ThresholdOutsideRangeIsInvalidConfig) {
  auto index = build_index({entry("CVE-2021-0001", at_distance(0.0))});
  for (double k : {-0.1, 2.1, std::nan("")}) {
    RetrievalConfig cfg{k};
    try {
      query_nearest(index, at_distance(0.0), cfg);
      FAIL() << k;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
    }
  }
}

TEST(IndexProperties, SweepIsMonotoneAndMatchesBruteCount) {
  std::mt19937_64 rng(7);
  std::vector<MitigationEntry> entries;
  for (int i = 0; i < 40; ++i) entries.push_back(entry("CVE-2019-" + std::to_string(1000 + i), random_unit(rng, 8)));
  auto index = build_index(entries);
  std::vector<EmbeddingVector> queries;
  for (int i = 0; i < 200; ++i) queries.push_back(random_unit(rng, 8));
  std::vector<double> ks;
  for (int i = 0; i <= 20; ++i) ks.push_back(i * 0.1);
  auto rows = sweep_threshold(index, queries, ks);
  ASSERT_EQ(rows.size(), ks.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0) EXPECT_GE(rows[i].resembling_count, rows[i - 1].resembling_count);
    std::size_t brute = 0;
    for (const auto& q : queries) {
      double best = 3.0;
      for (const auto& e : entries) best = std::min(best, brute_distance(e.embedding, q));
      if (best <= ks[i]) ++brute;
    }
    EXPECT_EQ(rows[i].resembling_count, brute) << "k=" << ks[i];
  }
  EXPECT_EQ(rows.back().resembling_count, queries.size());
  std::vector<double> descending = {1.0, 0.5};
  EXPECT_THROW(sweep_threshold(index, queries, descending), Error);
}

TEST(Index, JsonlRoundTripIsExact) {
  std::mt19937_64 rng(3);
  std::vector<MitigationEntry> entries;
  for (int i = 0; i < 5; ++i) entries.push_back(entry("CVE-2018-" + std::to_string(2000 + i), random_unit(rng, 512)));
  auto index = build_index(entries);
  testing_support::ScratchDir dir;
  index.save(dir / "idx.jsonl");
  auto back = MitigationIndex::load(dir / "idx.jsonl");
  EXPECT_EQ(back.entries(), index.entries());
  EXPECT_EQ(back.dim(), 512u);
  EXPECT_EQ(MitigationIndex::from_jsonl(MitigationIndex().to_jsonl()).size(), 0u);
}

TEST(Index, MalformedFilesRejected) {
  auto good = build_index({entry("CVE-2021-0001", at_distance(0.0))}).to_jsonl();
  std::string wrong_count = good;
  wrong_count.replace(wrong_count.find("\"count\":1"), 9, "\"count\":2");
  for (const std::string& bad : {std::string(""), std::string("{\"format\":\"other\"}\n"),
                                 wrong_count, good + "{not json}\n"}) {
    try {
      MitigationIndex::from_jsonl(bad);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::MalformedIndex);
    }
  }
}

TEST(Index, MixedDimensionsRejected) {
  try {
    build_index({entry("CVE-2021-0001", at_distance(0.0)),
                 entry("CVE-2021-0002", EmbeddingVector::normalize({1, 2, 3}))});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
  auto index = build_index({entry("CVE-2021-0001", at_distance(0.0))});
  EXPECT_THROW(index.nearest(EmbeddingVector::normalize({1, 2, 3})), Error);
}
