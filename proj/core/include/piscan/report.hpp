#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "piscan/harness.hpp"

namespace piscan {

enum class ReportFormat { Markdown, Csv };

std::optional<ReportFormat> parse_report_format(std::string_view name);

struct ReportOptions {
  ReportFormat format = ReportFormat::Markdown;
  // A (model, checkpoint, prefix length) cell whose failed / (n + failed)
  // exceeds this marks the run unreliable in the header.
  double failure_threshold = 0.10;
};

// Markdown: verbatim-percentage grid (model x PI type) and mean ParrotScore
// by model, both at the largest prefix length and each model's last
// checkpoint (file order); checkpoint and prefix-length ablations; one
// constituent table per PI type. Missing cells print as "—".
// CSV: long form, one line per (row, metric).
std::string render_report(const std::vector<ExperimentRow>& rows, const ReportOptions& options = {});
std::string render_report(const std::filesystem::path& rows_file, const ReportOptions& options = {});

}  // namespace piscan
