#include <gtest/gtest.h>

#include <json.hpp>
#include <sstream>

#include "cli.hpp"
#include "piscan/audit.hpp"
#include "piscan/detection_io.hpp"
#include "piscan/generation.hpp"
#include "synthetic_corpus.hpp"
#include "test_paths.hpp"

namespace piscan {
namespace {

using nlohmann::json;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run piscan(std::vector<std::string> args) {
  args.insert(args.begin(), "piscan");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

TEST(Cli, VersionAndHelp) {
  auto v = piscan({"--version"});
  EXPECT_EQ(v.code, 0);
  EXPECT_NE(v.out.find("piscan "), std::string::npos);
  EXPECT_EQ(piscan({"--help"}).code, 0);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(piscan({}).code, 2);
  EXPECT_EQ(piscan({"frobnicate"}).code, 2);
  EXPECT_EQ(piscan({"scan", "--output", "x.jsonl"}).code, 2);
  EXPECT_EQ(piscan({"report", "--rows", "r.jsonl", "--format", "pdf"}).code, 2);
  const auto dir = testing::scratch_dir("cli_usage");
  testing::write_file(dir / "c.jsonl", "");
  auto r = piscan({"scan", "--input", (dir / "c.jsonl").string(), "--output", "/tmp/elsewhere.jsonl", "--out-dir",
                   dir.string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("outside"), std::string::npos) << r.err;
}

TEST(Cli, OperationalErrors) {
  const auto dir = testing::scratch_dir("cli_operational");
  auto r = piscan({"counts", "--detections", (dir / "missing.jsonl").string(), "--out-dir", dir.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("piscan: error:"), std::string::npos) << r.err;
}

TEST(Cli, AuditPipeline) {
  const auto dir = testing::scratch_dir("cli_audit");
  testing::SyntheticOptions opts;
  opts.documents = 400;
  opts.planted = 200;
  opts.seed = 21;
  auto corpus = testing::make_synthetic_corpus(opts);
  testing::write_corpus(corpus, dir / "corpus.jsonl");

  const std::string od = dir.string();
  ASSERT_EQ(piscan({"scan", "--input", (dir / "corp*.jsonl").string(), "--output", "det.jsonl", "--parallelism", "2",
                    "--out-dir", od})
                .code,
            0);
  const auto detections = read_detections(dir / "det.jsonl");
  EXPECT_EQ(detections.size(), corpus.planted.size());

  auto counts = piscan({"counts", "--detections", (dir / "det.jsonl").string(), "--out-dir", od});
  ASSERT_EQ(counts.code, 0) << counts.err;
  EXPECT_EQ(CorpusStats::from_json(counts.out).total_detections(), corpus.planted.size());

  ASSERT_EQ(piscan({"sample", "--detections", (dir / "det.jsonl").string(), "--output", "sample.jsonl", "--k", "10",
                    "--seed", "3", "--out-dir", od})
                .code,
            0);
  std::string ann;
  int i = 0;
  for (const auto& d : read_detections(dir / "sample.jsonl")) {
    audit::AnnotationRecord r{detection_id(d), d.pi_type, d.stratum, audit::Label::TruePositive,
                              audit::SpanQuality::Perfect, "ann", "rnr"};
    if (i++ % 4 == 3) {
      r.label = audit::Label::FalsePositive;
      r.span_quality = audit::SpanQuality::NotApplicable;
    }
    ann += audit::annotation_to_json(r) + "\n";
    r.system = "baseline";
    r.label = audit::Label::FalsePositive;
    r.span_quality = audit::SpanQuality::NotApplicable;
    ann += audit::annotation_to_json(r) + "\n";
  }
  testing::write_file(dir / "ann.jsonl", ann);

  ASSERT_EQ(piscan({"precision", "--annotations", (dir / "ann.jsonl").string(), "--output", "precision.json",
                    "--out-dir", od})
                .code,
            0);
  auto expected = piscan({"expected-counts", "--stats", (dir / "det.jsonl.stats.json").string(), "--precision",
                          (dir / "precision.json").string(), "--system", "rnr", "--out-dir", od});
  ASSERT_EQ(expected.code, 0) << expected.err;
  EXPECT_NE(expected.out.find("\"expected\""), std::string::npos) << expected.out;

  auto sig = piscan({"sigtest", "--annotations", (dir / "ann.jsonl").string(), "--system-a", "rnr", "--system-b",
                     "baseline", "--pi-type", "email", "--resamples", "2000", "--out-dir", od});
  ASSERT_EQ(sig.code, 0) << sig.err;
  auto sj = json::parse(sig.out);
  EXPECT_LT(sj.at("p_value").get<double>(), 0.05);
  EXPECT_EQ(sj.at("resamples"), 2000);
}

TEST(Cli, HarnessReplayAndReport) {
  const auto dir = testing::scratch_dir("cli_harness");
  const auto fx = testing::data_dir() / "harness";
  const std::string od = dir.string();
  auto run = piscan({"harness", "replay", "--config", (fx / "harness.conf").string(), "--instances",
                     (fx / "instances.jsonl").string(), "--out", "exp", "--out-dir", od});
  ASSERT_EQ(run.code, 0) << run.err;
  EXPECT_EQ(testing::read_file(dir / "exp" / "report.md"), testing::read_file(fx / "golden_report.md"));
  for (auto name : {"rows.jsonl", "results.jsonl", "generations.jsonl", "failures.jsonl"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / "exp" / name)) << name;
  }

  auto md = piscan({"report", "--rows", (dir / "exp" / "rows.jsonl").string(), "--out-dir", od});
  ASSERT_EQ(md.code, 0);
  EXPECT_EQ(md.out, testing::read_file(fx / "golden_report.md"));
  auto csv = piscan({"report", "--rows", (dir / "exp" / "rows.jsonl").string(), "--format", "csv", "--output",
                     "rows.csv", "--out-dir", od});
  ASSERT_EQ(csv.code, 0);
  EXPECT_EQ(testing::read_file(dir / "rows.csv").rfind("model,checkpoint,prefix_len,pi_type,metric,value\n", 0), 0u);

  // Replay records double as parrot candidates.
  auto parrot = piscan({"parrot", "--truth", (fx / "instances.jsonl").string(), "--candidates",
                        (fx / "replay.jsonl").string(), "--out-dir", od});
  ASSERT_EQ(parrot.code, 0) << parrot.err;
  std::istringstream lines(parrot.out);
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    auto j = json::parse(line);
    EXPECT_GE(j.at("score").get<double>(), 0.0);
    EXPECT_LE(j.at("score").get<double>(), 1.0);
    ++n;
  }
  EXPECT_EQ(n, 96);
}

TEST(Cli, GlobalOptionsAfterSubcommand) {
  const auto dir = testing::scratch_dir("cli_global");
  testing::write_file(dir / "c.jsonl", "{\"id\": \"a\", \"text\": \"host 10.2.3.4 up\"}\n");
  auto r = piscan({"scan", "--input", (dir / "c.jsonl").string(), "--output", "d.jsonl", "--out-dir", dir.string(),
                   "--log-level", "error"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_detections(dir / "d.jsonl").size(), 1u);
}

}  // namespace
}  // namespace piscan
