#include "piscan/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>

#include "piscan/error.hpp"

namespace piscan {
namespace {

constexpr std::string_view kMissing = "—";

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string percent(double rate) { return fmt("%.2f%%", 100.0 * rate); }
std::string score(double s) { return fmt("%.4f", s); }

std::string_view display_name(PiType t) {
  switch (t) {
    case PiType::Email: return "Email";
    case PiType::IpAddress: return "IP address";
    case PiType::PhoneNumber: return "Phone";
    case PiType::PhoneNumberPlusOne: return "Phone (+1)";
  }
  return "";
}

template <class T>
void push_unique(std::vector<T>& v, const T& x) {
  if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
}

class Index {
 public:
  explicit Index(const std::vector<ExperimentRow>& rows) : rows_(rows) {
    for (const auto& r : rows) {
      push_unique(models_, r.model);
      auto& cps = checkpoints_[r.model];
      // Last in file order wins as the model's final checkpoint.
      cps.erase(std::remove(cps.begin(), cps.end(), r.checkpoint), cps.end());
      cps.push_back(r.checkpoint);
      push_unique(prefix_lengths_, r.prefix_len);
      push_unique(types_, r.pi_type);
    }
    std::sort(prefix_lengths_.begin(), prefix_lengths_.end(), std::greater<>());
    std::sort(types_.begin(), types_.end());
  }

  const ExperimentRow* find(const std::string& model, const std::string& checkpoint, std::size_t p, PiType t) const {
    for (const auto& r : rows_) {
      if (r.model == model && r.checkpoint == checkpoint && r.prefix_len == p && r.pi_type == t) return &r;
    }
    return nullptr;
  }
  const ExperimentRow* headline(const std::string& model, PiType t) const {
    return find(model, final_checkpoint(model), max_prefix(), t);
  }

  const std::vector<std::string>& models() const { return models_; }
  const std::vector<std::string>& checkpoints(const std::string& model) const { return checkpoints_.at(model); }
  const std::string& final_checkpoint(const std::string& model) const { return checkpoints_.at(model).back(); }
  const std::vector<std::size_t>& prefix_lengths() const { return prefix_lengths_; }
  std::size_t max_prefix() const { return prefix_lengths_.front(); }
  const std::vector<PiType>& types() const { return types_; }

 private:
  const std::vector<ExperimentRow>& rows_;
  std::vector<std::string> models_;
  std::map<std::string, std::vector<std::string>> checkpoints_;
  std::vector<std::size_t> prefix_lengths_;
  std::vector<PiType> types_;
};

void table_header(std::ostringstream& out, const std::vector<std::string>& cols) {
  out << '|';
  for (const auto& c : cols) out << ' ' << c << " |";
  out << "\n|";
  for (std::size_t i = 0; i < cols.size(); ++i) out << "---|";
  out << '\n';
}

void table_row(std::ostringstream& out, const std::vector<std::string>& cells) {
  out << '|';
  for (const auto& c : cells) out << ' ' << c << " |";
  out << '\n';
}

std::vector<std::string> type_columns(std::vector<std::string> leading) {
  for (PiType t : kAllPiTypes) leading.emplace_back(display_name(t));
  return leading;
}

std::string metric_cell(const ExperimentRow* r, bool as_percent) {
  if (!r || r->n == 0) return std::string(kMissing);
  return as_percent ? percent(r->verbatim_rate) : score(r->mean_score);
}

std::vector<std::string> unreliable_cells(const std::vector<ExperimentRow>& rows, double threshold) {
  std::vector<std::tuple<std::string, std::string, std::size_t>> order;
  std::map<std::tuple<std::string, std::string, std::size_t>, std::pair<std::size_t, std::size_t>> counts;
  for (const auto& r : rows) {
    std::tuple key{r.model, r.checkpoint, r.prefix_len};
    if (!counts.count(key)) order.push_back(key);
    counts[key].first += r.n + r.failed;
    counts[key].second += r.failed;
  }
  std::vector<std::string> out;
  for (const auto& key : order) {
    const auto [total, failed] = counts[key];
    if (total && static_cast<double>(failed) / static_cast<double>(total) > threshold) {
      out.push_back(std::get<0>(key) + "/" + std::get<1>(key) + "/p=" + std::to_string(std::get<2>(key)));
    }
  }
  return out;
}

std::string render_markdown(const std::vector<ExperimentRow>& rows, const ReportOptions& opt) {
  const Index idx(rows);
  std::ostringstream out;
  out << "# Memorization report\n\n";
  const auto bad = unreliable_cells(rows, opt.failure_threshold);
  if (bad.empty()) {
    out << "Status: reliable\n";
  } else {
    out << "Status: UNRELIABLE (generation failures above " << percent(opt.failure_threshold) << " in:";
    for (const auto& c : bad) out << ' ' << c;
    out << ")\n";
  }

  out << "\n## Verbatim parroting\n\n"
      << "Percent of instances with ParrotScore 1, prefix length " << idx.max_prefix() << ".\n\n";
  table_header(out, type_columns({"Model"}));
  for (const auto& m : idx.models()) {
    std::vector<std::string> cells{m};
    for (PiType t : kAllPiTypes) cells.push_back(metric_cell(idx.headline(m, t), true));
    table_row(out, cells);
  }

  out << "\n## Mean ParrotScore\n\n"
      << "Prefix length " << idx.max_prefix() << ".\n\n";
  table_header(out, type_columns({"Model"}));
  for (const auto& m : idx.models()) {
    std::vector<std::string> cells{m};
    for (PiType t : kAllPiTypes) cells.push_back(metric_cell(idx.headline(m, t), false));
    table_row(out, cells);
  }

  out << "\n## Checkpoint ablation\n\n"
      << "Mean ParrotScore, prefix length " << idx.max_prefix() << ".\n\n";
  table_header(out, type_columns({"Model", "Checkpoint"}));
  for (const auto& m : idx.models()) {
    for (const auto& c : idx.checkpoints(m)) {
      std::vector<std::string> cells{m, c};
      for (PiType t : kAllPiTypes) cells.push_back(metric_cell(idx.find(m, c, idx.max_prefix(), t), false));
      table_row(out, cells);
    }
  }

  out << "\n## Prefix-length ablation\n\n"
      << "Mean ParrotScore, final checkpoint.\n\n";
  table_header(out, type_columns({"Model", "Prefix length"}));
  for (const auto& m : idx.models()) {
    for (std::size_t p : idx.prefix_lengths()) {
      std::vector<std::string> cells{m, std::to_string(p)};
      for (PiType t : kAllPiTypes) cells.push_back(metric_cell(idx.find(m, idx.final_checkpoint(m), p, t), false));
      table_row(out, cells);
    }
  }

  for (PiType t : idx.types()) {
    out << "\n## Constituent parroting: " << display_name(t) << "\n\n"
        << "Percent of instances with each group reproduced verbatim, prefix length " << idx.max_prefix() << ".\n\n";
    auto cols = constituent_names(t);
    cols.insert(cols.begin(), "Model");
    cols.push_back("full");
    table_header(out, cols);
    for (const auto& m : idx.models()) {
      const ExperimentRow* r = idx.headline(m, t);
      std::vector<std::string> cells{m};
      for (std::size_t g = 0; g + 2 < cols.size(); ++g) {
        cells.push_back(r && g < r->constituent_rates.size() ? percent(r->constituent_rates[g]) : std::string(kMissing));
      }
      cells.push_back(metric_cell(r, true));
      table_row(out, cells);
    }
  }
  return out.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

std::string render_csv(const std::vector<ExperimentRow>& rows) {
  std::ostringstream out;
  out << "model,checkpoint,prefix_len,pi_type,metric,value\n";
  for (const auto& r : rows) {
    const std::string lead = csv_field(r.model) + ',' + csv_field(r.checkpoint) + ',' + std::to_string(r.prefix_len) +
                             ',' + std::string(to_string(r.pi_type)) + ',';
    out << lead << "n," << r.n << '\n';
    out << lead << "failed," << r.failed << '\n';
    if (r.n == 0) continue;
    out << lead << "mean_parrot_score," << fmt("%.6f", r.mean_score) << '\n';
    out << lead << "verbatim_pct," << fmt("%.2f", 100.0 * r.verbatim_rate) << '\n';
    const auto names = constituent_names(r.pi_type);
    for (std::size_t g = 0; g < r.constituent_rates.size() && g < names.size(); ++g) {
      out << lead << names[g] << "_pct," << fmt("%.2f", 100.0 * r.constituent_rates[g]) << '\n';
    }
  }
  return out.str();
}

}  // namespace

std::optional<ReportFormat> parse_report_format(std::string_view name) {
  if (name == "md" || name == "markdown") return ReportFormat::Markdown;
  if (name == "csv") return ReportFormat::Csv;
  return std::nullopt;
}

std::string render_report(const std::vector<ExperimentRow>& rows, const ReportOptions& options) {
  if (rows.empty()) throw ArgumentError("render_report needs at least one row");
  return options.format == ReportFormat::Csv ? render_csv(rows) : render_markdown(rows, options);
}

std::string render_report(const std::filesystem::path& rows_file, const ReportOptions& options) {
  return render_report(read_rows(rows_file), options);
}

}  // namespace piscan
