#include "piscan/detector_config.hpp"

#include <fstream>
#include <sstream>

#include "piscan/embedded_data.hpp"
#include "piscan/error.hpp"

namespace piscan {

namespace {

bool is_area_code_shape(std::string_view code) {
  return code.size() == 3 && code[0] >= '2' && code[0] <= '9' && code[1] >= '0' && code[1] <= '9' &&
         code[2] >= '0' && code[2] <= '9';
}

std::size_t code_index(std::string_view code) {
  return static_cast<std::size_t>((code[0] - '0') * 100 + (code[1] - '0') * 10 + (code[2] - '0'));
}

}  // namespace

AreaCodeAllowlist AreaCodeAllowlist::parse(std::string_view text, std::string_view origin) {
  AreaCodeAllowlist list;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) continue;
    line = line.substr(first, line.find_last_not_of(" \t\r") - first + 1);
    if (line.front() == '#') {
      constexpr std::string_view kTag = "snapshot:";
      auto tag = line.find(kTag);
      if (tag != std::string_view::npos) {
        auto date = line.substr(tag + kTag.size());
        auto d0 = date.find_first_not_of(' ');
        list.snapshot_ = d0 == std::string_view::npos ? "" : std::string(date.substr(d0));
      }
      continue;
    }
    if (!is_area_code_shape(line)) {
      throw FormatError(std::string(origin) + ":" + std::to_string(line_no) +
                        ": not a NANP area code: '" + std::string(line) + "'");
    }
    list.insert(line);
  }
  return list;
}

AreaCodeAllowlist AreaCodeAllowlist::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read area-code allowlist " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

const AreaCodeAllowlist& AreaCodeAllowlist::builtin() {
  static const AreaCodeAllowlist list = parse(embedded::nanp_area_codes(), "nanp_area_codes.txt");
  return list;
}

void AreaCodeAllowlist::insert(std::string_view code) {
  if (!is_area_code_shape(code)) throw ArgumentError("not a NANP area code: " + std::string(code));
  codes_.set(code_index(code));
}

bool AreaCodeAllowlist::contains(std::string_view code) const {
  return is_area_code_shape(code) && codes_.test(code_index(code));
}

std::vector<std::string> default_context_words() {
  return {"isbn",  "doi",     "#",       "grant",    "award",   "nsf",    "patent", "usf",
          "edition", "congress", "appeal", "claim",   "exhibit", "serial", "pin",    "receipt",
          "case",  "tracking", "ticket", "route",    " wo ",    "volume"};
}

std::vector<std::string> default_placeholder_numbers() {
  // 2147483647 is INT32_MAX.
  return {"1234567890", "2345678910", "2147483647", "73737373", "3141592653"};
}

void DetectorConfig::validate() const {
  if (micro_window_chars < 1) throw ArgumentError("micro_window_chars must be >= 1");
  if (!(alpha_min_ratio >= 0.0 && alpha_min_ratio <= 1.0)) {
    throw ArgumentError("alpha_min_ratio must lie in [0, 1]");
  }
  for (const auto& w : context_words) {
    if (w.empty()) throw ArgumentError("context_words contains an empty word");
  }
  for (const auto& p : placeholder_numbers) {
    if (p.empty() || p.find_first_not_of("0123456789") != std::string::npos) {
      throw ArgumentError("placeholder number must be a nonempty digit string: '" + p + "'");
    }
  }
}

DetectorConfig DetectorConfig::from_config(const KeyValueConfig& kv) {
  DetectorConfig cfg;
  if (auto v = kv.get_list("context_words")) cfg.context_words = *v;
  if (auto v = kv.get_int("micro_window_chars")) {
    if (*v < 1) throw ArgumentError("micro_window_chars must be >= 1");
    cfg.micro_window_chars = static_cast<std::size_t>(*v);
  }
  if (auto v = kv.get_int("alpha_window_chars")) {
    if (*v < 0) throw ArgumentError("alpha_window_chars must be >= 0");
    cfg.alpha_window_chars = static_cast<std::size_t>(*v);
  }
  if (auto v = kv.get_double("alpha_min_ratio")) cfg.alpha_min_ratio = *v;
  if (auto v = kv.get_list("placeholder_numbers")) cfg.placeholder_numbers = *v;
  if (auto v = kv.get("area_code_allowlist")) {
    std::filesystem::path p(*v);
    if (p.is_relative() && !kv.base_dir().empty()) p = kv.base_dir() / p;
    cfg.area_code_allowlist = AreaCodeAllowlist::load(p.string());
  }
  if (auto v = kv.get_bool("case_insensitive_email")) cfg.case_insensitive_email = *v;
  if (auto v = kv.get_int("report_context_chars")) {
    if (*v < 0) throw ArgumentError("report_context_chars must be >= 0");
    cfg.report_context_chars = static_cast<std::size_t>(*v);
  }
  cfg.validate();
  return cfg;
}

}  // namespace piscan
