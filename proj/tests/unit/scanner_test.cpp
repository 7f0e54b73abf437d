#include <gtest/gtest.h>

#include <map>

#include "piscan/detection_io.hpp"
#include "piscan/error.hpp"
#include "piscan/scanner.hpp"
#include "synthetic_corpus.hpp"
#include "test_paths.hpp"

namespace piscan {
namespace {

using testing::SyntheticOptions;

ScanResult run(const std::filesystem::path& corpus, const std::filesystem::path& out, std::size_t parallelism,
               std::size_t batch_bytes = 1 << 20) {
  ScanJob job;
  job.inputs = {corpus};
  job.output = out;
  job.parallelism = parallelism;
  job.batch_bytes = batch_bytes;
  return scan_corpus(job);
}

TEST(Scanner, PlantedCounts) {
  const auto dir = testing::scratch_dir("scan_planted");
  SyntheticOptions opts;
  opts.documents = 1000;
  opts.planted = 200;
  opts.seed = 11;
  auto corpus = testing::make_synthetic_corpus(opts);
  testing::write_corpus(corpus, dir / "c.jsonl");
  std::map<PiType, std::uint64_t> planted;
  for (const auto& p : corpus.planted) ++planted[p.pi_type];

  auto r = run(dir / "c.jsonl", dir / "d.jsonl", 2);
  for (PiType t : kAllPiTypes) EXPECT_EQ(r.stats.total_detections(t), planted[t]) << to_string(t);
  EXPECT_EQ(r.stats.total_documents(), 1000u);
  EXPECT_EQ(r.ingest_errors, 0u);
  EXPECT_TRUE(std::filesystem::exists(r.stats_path));
  EXPECT_FALSE(std::filesystem::exists(dir / "d.jsonl.partial"));

  auto ds = read_detections(dir / "d.jsonl");
  EXPECT_EQ(ds.size(), corpus.planted.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(ds[i].doc_id, corpus.planted[i].doc_id);
    EXPECT_EQ(ds[i].span, corpus.planted[i].span);
    EXPECT_EQ(ds[i].matched_text, corpus.planted[i].text);
  }

  auto stats = CorpusStats::from_json(testing::read_file(r.stats_path));
  EXPECT_EQ(stats.detections, r.stats.detections);
  EXPECT_EQ(stats.documents, r.stats.documents);
}

TEST(Scanner, OutputIndependentOfParallelism) {
  const auto dir = testing::scratch_dir("scan_determinism");
  SyntheticOptions opts;
  opts.documents = 1500;
  opts.planted = 300;
  opts.seed = 3;
  testing::write_corpus(testing::make_synthetic_corpus(opts), dir / "c.jsonl");
  run(dir / "c.jsonl", dir / "p1.jsonl", 1, 4096);
  run(dir / "c.jsonl", dir / "p2.jsonl", 2, 4096);
  run(dir / "c.jsonl", dir / "p8.jsonl", 8, 4096);
  const auto one = testing::read_file(dir / "p1.jsonl");
  EXPECT_FALSE(one.empty());
  EXPECT_EQ(testing::read_file(dir / "p2.jsonl"), one);
  EXPECT_EQ(testing::read_file(dir / "p8.jsonl"), one);
}

TEST(Scanner, EmptyCorpus) {
  const auto dir = testing::scratch_dir("scan_empty");
  testing::write_file(dir / "c.jsonl", "");
  auto r = run(dir / "c.jsonl", dir / "d.jsonl", 4);
  EXPECT_EQ(testing::read_file(dir / "d.jsonl"), "");
  EXPECT_EQ(r.stats.total_detections(), 0u);
  EXPECT_EQ(r.stats.total_documents(), 0u);
}

TEST(Scanner, IngestErrorsGoToLedger) {
  const auto dir = testing::scratch_dir("scan_errors");
  testing::write_file(dir / "c.jsonl",
                      "{\"id\": \"a\", \"text\": \"host 10.1.2.3 up\"}\n{oops\n{\"id\": \"b\", \"text\": \"x\"}\n");
  auto r = run(dir / "c.jsonl", dir / "d.jsonl", 1);
  EXPECT_EQ(r.ingest_errors, 1u);
  EXPECT_NE(testing::read_file(r.errors_path).find("\"line\":2"), std::string::npos);
  EXPECT_EQ(r.stats.total_detections(PiType::IpAddress), 1u);

  ScanJob strict;
  strict.inputs = {dir / "c.jsonl"};
  strict.output = dir / "s.jsonl";
  strict.strict = true;
  EXPECT_THROW(scan_corpus(strict), FormatError);
}

TEST(Scanner, UnwritableOutputFailsUpFront) {
  const auto dir = testing::scratch_dir("scan_unwritable");
  testing::write_file(dir / "c.jsonl", "{\"id\": \"a\", \"text\": \"x\"}\n");
  EXPECT_THROW(run(dir / "c.jsonl", dir / "missing" / "d.jsonl", 1), IoError);
  EXPECT_THROW(run(dir / "nope.jsonl", dir / "d.jsonl", 1), Error);
}

TEST(Scanner, RejectsZeroParallelism) {
  const auto dir = testing::scratch_dir("scan_zero");
  testing::write_file(dir / "c.jsonl", "");
  EXPECT_THROW(run(dir / "c.jsonl", dir / "d.jsonl", 0), ArgumentError);
}

TEST(AggregateCounts, CountsAndAdditivity) {
  const auto dir = testing::scratch_dir("aggregate");
  auto line = [](const char* id, const char* type, const char* stratum) {
    return std::string("{\"doc_id\":\"") + id + "\",\"pi_type\":\"" + type + "\",\"start\":0,\"end\":3,\"text\":\"abc\",\"stratum\":\"" +
           stratum + "\"}\n";
  };
  const auto a = line("1", "email", "prose") + line("2", "email", "misc") + line("3", "ip_address", "misc");
  const auto b = line("4", "phone_number", "academic") + line("5", "email", "misc");
  testing::write_file(dir / "a.jsonl", a);
  testing::write_file(dir / "b.jsonl", b);
  testing::write_file(dir / "ab.jsonl", a + b);

  auto sa = aggregate_counts(dir / "a.jsonl");
  EXPECT_EQ(sa.total_detections(PiType::Email), 2u);
  EXPECT_EQ(sa.total_detections(PiType::IpAddress), 1u);
  EXPECT_EQ(sa.total_detections(PiType::PhoneNumber), 0u);
  EXPECT_EQ(sa.total_detections(PiType::PhoneNumberPlusOne), 0u);

  auto sum = sa;
  sum += aggregate_counts(dir / "b.jsonl");
  EXPECT_EQ(aggregate_counts(dir / "ab.jsonl").detections, sum.detections);
  EXPECT_EQ(aggregate_counts({dir / "a.jsonl", dir / "b.jsonl"}).detections, sum.detections);

  testing::write_file(dir / "bad.jsonl", a + "junk\n");
  EXPECT_THROW(aggregate_counts(dir / "bad.jsonl"), FormatError);
}

}  // namespace
}  // namespace piscan
