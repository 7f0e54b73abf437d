#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "piscan/audit.hpp"
#include "piscan/detection_io.hpp"
#include "piscan/error.hpp"
#include "test_paths.hpp"

namespace piscan::audit {
namespace {

std::vector<Detection> detections(PiType type, const std::map<std::string, int>& per_stratum) {
  std::vector<Detection> out;
  for (const auto& [stratum, n] : per_stratum) {
    for (int i = 0; i < n; ++i) {
      Detection d;
      d.doc_id = stratum + "-" + std::to_string(i);
      d.pi_type = type;
      d.span = {0, 5};
      d.matched_text = "x";
      d.stratum = stratum;
      out.push_back(d);
    }
  }
  return out;
}

std::map<std::string, int> per_stratum(const std::vector<Detection>& ds) {
  std::map<std::string, int> m;
  for (const auto& d : ds) ++m[d.stratum];
  return m;
}

const std::vector<std::string> kStrata = {"academic", "dialogue", "internet", "prose", "misc"};

TEST(Sampling, EvenSplitWithAmpleData) {
  std::map<std::string, int> ample;
  for (const auto& s : kStrata) ample[s] = 400;
  auto ds = detections(PiType::Email, ample);
  auto more = detections(PiType::IpAddress, ample);
  ds.insert(ds.end(), more.begin(), more.end());
  auto r = stratified_sample(ds, 250, kStrata, 42);
  EXPECT_EQ(r.sample.size(), 500u);
  EXPECT_TRUE(r.shortfalls.empty());
  std::map<std::pair<PiType, std::string>, int> counts;
  for (const auto& d : r.sample) ++counts[{d.pi_type, d.stratum}];
  for (const auto& s : kStrata) {
    EXPECT_EQ((counts[{PiType::Email, s}]), 50);
    EXPECT_EQ((counts[{PiType::IpAddress, s}]), 50);
  }
}

TEST(Sampling, EmptyStratumRedistributes) {
  auto ds = detections(PiType::PhoneNumber, {{"academic", 2}, {"dialogue", 3}, {"internet", 2}, {"prose", 2}});
  auto r = stratified_sample(ds, 5, kStrata, 9);
  EXPECT_EQ(r.sample.size(), 5u);
  EXPECT_EQ(per_stratum(r.sample).count("misc"), 0u);
  ASSERT_EQ(r.shortfalls.size(), 1u);
  EXPECT_EQ(r.shortfalls[0].stratum, "misc");
  EXPECT_EQ(r.shortfalls[0].quota, 1u);
  EXPECT_EQ(r.shortfalls[0].available, 0u);
  for (const auto& [s, n] : per_stratum(r.sample)) EXPECT_GE(n, 1) << s;
}

TEST(Sampling, TooFewReturnsAll) {
  auto ds = detections(PiType::Email, {{"prose", 3}, {"misc", 4}});
  auto r = stratified_sample(ds, 250, kStrata, 1);
  EXPECT_EQ(r.sample.size(), 7u);
  EXPECT_FALSE(r.warnings.empty());
}

TEST(Sampling, DeterministicAndSeedSensitive) {
  std::map<std::string, int> m;
  for (const auto& s : kStrata) m[s] = 100;
  auto ds = detections(PiType::Email, m);
  const auto dir = testing::scratch_dir("sampling");
  std::ostringstream os;
  write_detections(os, ds);
  testing::write_file(dir / "d.jsonl", os.str());
  stratified_sample(dir / "d.jsonl", dir / "s1.jsonl", 25, kStrata, 7);
  stratified_sample(dir / "d.jsonl", dir / "s2.jsonl", 25, kStrata, 7);
  stratified_sample(dir / "d.jsonl", dir / "s3.jsonl", 25, kStrata, 8);
  EXPECT_EQ(testing::read_file(dir / "s1.jsonl"), testing::read_file(dir / "s2.jsonl"));
  EXPECT_NE(testing::read_file(dir / "s1.jsonl"), testing::read_file(dir / "s3.jsonl"));
  EXPECT_NE(testing::read_file(dir / "s1.jsonl").find("\"detection_id\""), std::string::npos);
}

TEST(Sampling, NoDuplicates) {
  std::map<std::string, int> m;
  for (const auto& s : kStrata) m[s] = 12;
  auto r = stratified_sample(detections(PiType::Email, m), 55, kStrata, 3);
  std::set<std::string> ids;
  for (const auto& d : r.sample) ids.insert(d.doc_id);
  EXPECT_EQ(ids.size(), r.sample.size());
  EXPECT_EQ(r.sample.size(), 55u);
}

TEST(Sampling, Arguments) {
  EXPECT_THROW(stratified_sample({}, 5, {}, 1), ArgumentError);
}

AnnotationRecord rec(std::string id, PiType t, std::string stratum, bool tp, std::string system = "rnr") {
  return AnnotationRecord{std::move(id), t, std::move(stratum), tp ? Label::TruePositive : Label::FalsePositive,
                          tp ? SpanQuality::Perfect : SpanQuality::NotApplicable, "ann1", std::move(system)};
}

TEST(Precision, Examples) {
  std::vector<AnnotationRecord> rs;
  for (int i = 0; i < 10; ++i) rs.push_back(rec("d:" + std::to_string(i), PiType::PhoneNumber, "misc", i < 3));
  for (int i = 0; i < 4; ++i) rs.push_back(rec("e:" + std::to_string(i), PiType::Email, "prose", true));
  auto rep = compute_precision(rs);
  EXPECT_DOUBLE_EQ(*rep.pooled_precision("rnr", PiType::PhoneNumber), 0.3);
  EXPECT_DOUBLE_EQ(*rep.pooled_precision("rnr", PiType::Email), 1.0);
  EXPECT_FALSE(rep.pooled_precision("rnr", PiType::IpAddress).has_value());
  EXPECT_EQ((rep.cells.at({"rnr", PiType::PhoneNumber, "misc"}).n), 10u);
}

TEST(Precision, PoolsAcrossStrataAndWarnsOnMissing) {
  std::vector<AnnotationRecord> rs = {rec("a:0-1", PiType::Email, "prose", true),
                                      rec("a:1-2", PiType::Email, "misc", false),
                                      rec("a:2-3", PiType::Email, "misc", true),
                                      rec("a:3-4", PiType::Email, "misc", true, "baseline")};
  auto rep = compute_precision(rs, kStrata);
  EXPECT_NEAR(*rep.pooled_precision("rnr", PiType::Email), 2.0 / 3.0, 1e-12);
  EXPECT_EQ(rep.systems(), (std::vector<std::string>{"baseline", "rnr"}));
  EXPECT_FALSE(rep.warnings.empty());
  auto back = PrecisionReport::from_json(rep.to_json());
  EXPECT_EQ(back.pooled_precision("rnr", PiType::Email), rep.pooled_precision("rnr", PiType::Email));
}

TEST(Annotation, RoundTripAndInvariant) {
  auto r = rec("doc:1-5", PiType::IpAddress, "internet", true);
  auto back = annotation_from_json(annotation_to_json(r));
  EXPECT_EQ(back.detection_id, r.detection_id);
  EXPECT_EQ(back.label, r.label);
  EXPECT_EQ(back.span_quality, r.span_quality);
  EXPECT_THROW(annotation_from_json(R"({"detection_id":"a","pi_type":"email","stratum":"misc",)"
                                    R"("label":"false_positive","span_quality":"perfect","annotator":"x"})"),
               FormatError);
  EXPECT_THROW(annotation_from_json(R"({"detection_id":"a","pi_type":"email","stratum":"misc",)"
                                    R"("label":"true_positive","span_quality":"n/a","annotator":"x"})"),
               FormatError);
}

// Exact permutation p-value: fraction of all re-splits at least as extreme.
double exact_p(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b, Alternative alt) {
  std::vector<std::uint8_t> pool(a);
  pool.insert(pool.end(), b.begin(), b.end());
  const std::size_t n = pool.size(), na = a.size();
  auto mean = [](auto first, auto last, double count) { return std::accumulate(first, last, 0.0) / count; };
  const double obs = mean(a.begin(), a.end(), na) - mean(b.begin(), b.end(), b.size());
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + static_cast<long>(na), true);
  std::size_t total = 0, hit = 0;
  do {
    double sa = 0, sb = 0;
    for (std::size_t i = 0; i < n; ++i) (pick[i] ? sa : sb) += pool[i];
    const double d = sa / na - sb / (n - na);
    const double eps = 1e-12;
    bool extreme = alt == Alternative::Greater ? d >= obs - eps
                   : alt == Alternative::Less  ? d <= obs + eps
                                               : std::fabs(d) >= std::fabs(obs) - eps;
    hit += extreme;
    ++total;
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return static_cast<double>(hit) / static_cast<double>(total);
}

TEST(Permutation, AllOnesVsAllZeros) {
  std::vector<std::uint8_t> a = {1, 1, 1}, b = {0, 0, 0};
  const double exact = exact_p(a, b, Alternative::Greater);
  EXPECT_DOUBLE_EQ(exact, 1.0 / 20.0);
  auto r = permutation_test(a, b, 10000, 2024);
  EXPECT_DOUBLE_EQ(r.observed_difference, 1.0);
  EXPECT_NEAR(r.p_value, exact, 4 * std::sqrt(exact * (1 - exact) / 10000) + 1e-4);
}

TEST(Permutation, MatchesExactEnumeration) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 12; ++trial) {
    std::vector<std::uint8_t> a(3 + rng() % 5), b(3 + rng() % 5);
    for (auto& x : a) x = rng() % 3 != 0;
    for (auto& x : b) x = rng() % 2;
    for (auto alt : {Alternative::Greater, Alternative::Less, Alternative::TwoSided}) {
      const double exact = exact_p(a, b, alt);
      auto r = permutation_test(a, b, 10000, 100 + trial, alt);
      EXPECT_NEAR(r.p_value, exact, 4 * std::sqrt(exact * (1 - exact) / 10000) + 2e-4) << trial;
    }
  }
}

TEST(Permutation, IdenticalSamples) {
  std::vector<std::uint8_t> a = {1, 0, 1, 1, 0, 0, 1, 0}, b = a;
  EXPECT_GE(permutation_test(a, b, 5000, 1).p_value, 0.5);
  EXPECT_GE(permutation_test(a, b, 5000, 1, Alternative::TwoSided).p_value, 0.5);
}

TEST(Permutation, DeterministicAndValidated) {
  std::vector<std::uint8_t> a = {1, 1, 0, 1}, b = {0, 1, 0, 0, 0};
  EXPECT_EQ(permutation_test(a, b, 2000, 5).p_value, permutation_test(a, b, 2000, 5).p_value);
  std::vector<std::uint8_t> empty;
  EXPECT_THROW(permutation_test(empty, b, 100, 1), ArgumentError);
  EXPECT_THROW(permutation_test(a, empty, 100, 1), ArgumentError);
  std::vector<std::uint8_t> bad = {2};
  EXPECT_THROW(permutation_test(bad, b, 100, 1), ArgumentError);
}

TEST(ExpectedCounts, Rounding) {
  EXPECT_EQ(expected_count(172326, 0.168211), 28987u);
  EXPECT_EQ(expected_count(16389977, 0.770165), 12622987u);
  EXPECT_EQ(expected_count(16389977, 12623478.0 / 16389977.0), 12623478u);
  EXPECT_EQ(expected_count(999, 0.0), 0u);
  EXPECT_EQ(expected_count(999, 1.0), 999u);
  EXPECT_THROW(expected_count(1, 1.5), ArgumentError);
}

TEST(ExpectedCounts, FromStatsAndReport) {
  CorpusStats stats;
  stats.add_detection(PiType::PhoneNumber, "misc", 172000);
  stats.add_detection(PiType::PhoneNumber, "prose", 326);
  stats.add_detection(PiType::Email, "misc", 10);
  PrecisionReport rep;
  rep.pooled[{"rnr", PiType::PhoneNumber}] = PrecisionCell{1000000, 168211};
  auto out = expected_counts(stats, rep);
  ASSERT_EQ(out.rows.size(), 1u);
  EXPECT_EQ(out.rows[0].pi_type, PiType::PhoneNumber);
  EXPECT_EQ(out.rows[0].expected, 28987u);
  EXPECT_FALSE(out.warnings.empty());
}

}  // namespace
}  // namespace piscan::audit
