#include <gtest/gtest.h>

#include "piscan/harness.hpp"
#include "piscan/report.hpp"

namespace piscan {
namespace {

ExperimentRow row(std::string model, std::string ckpt, std::size_t p, PiType t, double score, double verbatim) {
  ExperimentRow r;
  r.model = std::move(model);
  r.checkpoint = std::move(ckpt);
  r.prefix_len = p;
  r.pi_type = t;
  r.n = 4;
  r.mean_score = score;
  r.verbatim_rate = verbatim;
  r.constituent_n = 4;
  r.constituent_rates = t == PiType::IpAddress ? std::vector<double>{1, 0.5, 0.25, 0} : std::vector<double>{0.75, 0.25};
  return r;
}

TEST(Report, FormatNames) {
  EXPECT_EQ(parse_report_format("md"), ReportFormat::Markdown);
  EXPECT_EQ(parse_report_format("markdown"), ReportFormat::Markdown);
  EXPECT_EQ(parse_report_format("csv"), ReportFormat::Csv);
  EXPECT_FALSE(parse_report_format("html").has_value());
}

TEST(Report, MissingCellsAndFormatting) {
  std::vector<ExperimentRow> rows = {row("m", "final", 80, PiType::Email, 0.123456, 0.25)};
  const auto md = render_report(rows);
  EXPECT_NE(md.find("| m | 25.00% | — | — | — |"), std::string::npos) << md;
  EXPECT_NE(md.find("| m | 0.1235 | — | — | — |"), std::string::npos) << md;
  EXPECT_NE(md.find("Status: reliable"), std::string::npos);
  EXPECT_NE(md.find("## Constituent parroting: Email"), std::string::npos);
  EXPECT_EQ(md.find("## Constituent parroting: IP address"), std::string::npos);
}

TEST(Report, HeadlineUsesLargestPrefixAndLastCheckpoint) {
  std::vector<ExperimentRow> rows = {row("m", "step1", 80, PiType::Email, 0.1, 0.0),
                                     row("m", "step2", 80, PiType::Email, 0.9, 0.5),
                                     row("m", "step2", 10, PiType::Email, 0.3, 0.0)};
  const auto md = render_report(rows);
  const auto headline = md.substr(0, md.find("## Checkpoint ablation"));
  EXPECT_NE(headline.find("| m | 50.00% |"), std::string::npos) << md;
  EXPECT_NE(headline.find("| m | 0.9000 |"), std::string::npos) << md;
  EXPECT_NE(md.find("| m | step1 | 0.1000 |"), std::string::npos) << md;
  EXPECT_NE(md.find("| m | 10 | 0.3000 |"), std::string::npos) << md;
}

TEST(Report, Unreliable) {
  auto r = row("m", "final", 80, PiType::Email, 0.5, 0.5);
  r.n = 8;
  r.failed = 2;
  ReportOptions opts;
  EXPECT_NE(render_report({r}, opts).find("Status: UNRELIABLE"), std::string::npos);
  opts.failure_threshold = 0.5;
  EXPECT_NE(render_report({r}, opts).find("Status: reliable"), std::string::npos);
}

TEST(Report, Csv) {
  std::vector<ExperimentRow> rows = {row("m", "final", 80, PiType::IpAddress, 0.5, 0.25)};
  ReportOptions opts;
  opts.format = ReportFormat::Csv;
  const auto csv = render_report(rows, opts);
  EXPECT_EQ(csv.rfind("model,checkpoint,prefix_len,pi_type,metric,value\n", 0), 0u);
  EXPECT_NE(csv.find("m,final,80,ip_address,mean_parrot_score,0.500000"), std::string::npos) << csv;
  EXPECT_NE(csv.find("m,final,80,ip_address,verbatim_pct,25.00"), std::string::npos) << csv;
  EXPECT_NE(csv.find("m,final,80,ip_address,grp3_pct,25.00"), std::string::npos) << csv;
  EXPECT_NE(csv.find("m,final,80,ip_address,n,4"), std::string::npos) << csv;
}

}  // namespace
}  // namespace piscan
