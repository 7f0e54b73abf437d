#include "piscan/corpus.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <zlib.h>

#include "piscan/embedded_data.hpp"
#include "piscan/error.hpp"

namespace piscan {

namespace {

constexpr std::size_t kReadChunk = 1 << 20;

gzFile as_gz(void* h) { return static_cast<gzFile>(h); }

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

}  // namespace

LineReader::LineReader(const std::filesystem::path& path) : path_(path), buffer_(kReadChunk) {
  {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot open " + path.string());
    unsigned char magic[2] = {0, 0};
    probe.read(reinterpret_cast<char*>(magic), 2);
    compressed_ = probe.gcount() == 2 && magic[0] == 0x1f && magic[1] == 0x8b;
  }
  handle_ = gzopen(path.c_str(), "rb");
  if (!handle_) throw IoError("cannot open " + path.string());
  gzbuffer(as_gz(handle_), 1 << 18);
}

LineReader::~LineReader() {
  if (handle_) gzclose(as_gz(handle_));
}

bool LineReader::fill() {
  if (eof_) return false;
  // Keep the unconsumed tail at the front of the buffer.
  if (pos_ > 0) {
    std::memmove(buffer_.data(), buffer_.data() + pos_, len_ - pos_);
    len_ -= pos_;
    pos_ = 0;
  }
  if (len_ == buffer_.size()) buffer_.resize(buffer_.size() * 2);
  const int n = gzread(as_gz(handle_), buffer_.data() + len_, static_cast<unsigned>(buffer_.size() - len_));
  if (n < 0) {
    int errnum = 0;
    const char* msg = gzerror(as_gz(handle_), &errnum);
    throw IoError("read error in " + path_.string() + ": " + (msg ? msg : "unknown"));
  }
  if (n == 0) {
    eof_ = true;
    return false;
  }
  len_ += static_cast<std::size_t>(n);
  return true;
}

bool LineReader::next(std::string& line) {
  std::size_t scan_from = pos_;
  for (;;) {
    const void* nl = std::memchr(buffer_.data() + scan_from, '\n', len_ - scan_from);
    if (nl) {
      const auto end = static_cast<std::size_t>(static_cast<const char*>(nl) - buffer_.data());
      std::size_t stop = end;
      if (stop > pos_ && buffer_[stop - 1] == '\r') --stop;
      line.assign(buffer_.data() + pos_, stop - pos_);
      pos_ = end + 1;
      ++line_number_;
      return true;
    }
    const std::size_t consumed = len_ - pos_;
    if (!fill()) {
      if (len_ > pos_) {
        std::size_t stop = len_;
        if (buffer_[stop - 1] == '\r') --stop;
        line.assign(buffer_.data() + pos_, stop - pos_);
        pos_ = len_;
        ++line_number_;
        return true;
      }
      return false;
    }
    scan_from = pos_ + consumed;
  }
}

std::vector<std::string> default_strata() { return {"academic", "dialogue", "internet", "prose", "misc"}; }

std::map<std::string, std::string, std::less<>> StratumConfig::parse_subset_map(std::string_view text) {
  std::map<std::string, std::string, std::less<>> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.rfind('=');
    if (eq == std::string_view::npos) {
      throw FormatError("subset map line " + std::to_string(line_no) + ": expected '<subset> = <stratum>'");
    }
    out[std::string(trim(line.substr(0, eq)))] = std::string(trim(line.substr(eq + 1)));
  }
  return out;
}

StratumConfig StratumConfig::builtin() {
  StratumConfig cfg;
  cfg.subset_to_stratum = parse_subset_map(embedded::pile_subset_categories());
  return cfg;
}

StratumConfig StratumConfig::from_config(const KeyValueConfig& kv) {
  StratumConfig cfg = builtin();
  if (auto v = kv.get_list("strata")) cfg.strata = *v;
  if (auto v = kv.get("stratum_field")) cfg.stratum_field = *v;
  if (auto v = kv.get("subset_field")) cfg.subset_field = *v;
  if (auto v = kv.get("default_stratum")) cfg.default_stratum = *v;
  if (auto v = kv.get("subset_map")) {
    std::filesystem::path p(*v);
    if (p.is_relative() && !kv.base_dir().empty()) p = kv.base_dir() / p;
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read subset map " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    cfg.subset_to_stratum = parse_subset_map(ss.str());
  }
  cfg.validate();
  return cfg;
}

bool StratumConfig::is_stratum(std::string_view s) const {
  return std::find(strata.begin(), strata.end(), s) != strata.end();
}

void StratumConfig::validate() const {
  if (strata.empty()) throw ArgumentError("at least one stratum must be configured");
  if (!is_stratum(default_stratum)) {
    throw ArgumentError("default stratum '" + default_stratum + "' is not in the configured strata");
  }
  for (const auto& [subset, stratum] : subset_to_stratum) {
    if (!is_stratum(stratum)) {
      throw ArgumentError("subset '" + subset + "' maps to unknown stratum '" + stratum + "'");
    }
  }
}

CorpusReader::CorpusReader(const std::filesystem::path& path, StratumConfig strata, bool strict,
                           ErrorSink sink)
    : reader_(path), path_(path.string()), strata_(std::move(strata)), strict_(strict), sink_(std::move(sink)) {
  strata_.validate();
}

void CorpusReader::report(std::string message) {
  IngestError err{path_, reader_.line_number(), std::move(message)};
  if (strict_) {
    throw FormatError(err.path + ":" + std::to_string(err.line) + ": " + err.message);
  }
  if (sink_) {
    sink_(err);
  } else {
    errors_.push_back(std::move(err));
  }
}

std::optional<Document> CorpusReader::next() {
  while (reader_.next(line_)) {
    if (trim(line_).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line_, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      report("malformed JSON record");
      continue;
    }
    Document doc;
    auto id = j.find("id");
    if (id == j.end() || !(id->is_string() || id->is_number_integer())) {
      report("record has no string 'id' field");
      continue;
    }
    doc.doc_id = id->is_string() ? id->get<std::string>() : std::to_string(id->get<long long>());
    if (doc.doc_id.empty()) {
      report("record has an empty 'id'");
      continue;
    }
    auto text = j.find("text");
    if (text == j.end() || !text->is_string()) {
      report("record " + doc.doc_id + " has no string 'text' field");
      continue;
    }
    doc.text = std::move(text->get_ref<std::string&>());
    if (auto s = j.find(strata_.subset_field); s != j.end() && s->is_string()) doc.subset = s->get<std::string>();

    doc.stratum = strata_.default_stratum;
    if (auto c = j.find(strata_.stratum_field); c != j.end() && c->is_string()) {
      const auto& value = c->get_ref<const std::string&>();
      if (strata_.is_stratum(value)) {
        doc.stratum = value;
      } else {
        report("record " + doc.doc_id + " has unknown stratum '" + value + "'; using '" +
               strata_.default_stratum + "'");
      }
    } else if (!doc.subset.empty()) {
      if (auto m = strata_.subset_to_stratum.find(doc.subset); m != strata_.subset_to_stratum.end()) {
        doc.stratum = m->second;
      }
    }
    return doc;
  }
  return std::nullopt;
}

CorpusReader open_corpus(const std::filesystem::path& path, CorpusFormat /*format*/, StratumConfig strata,
                         bool strict) {
  return CorpusReader(path, std::move(strata), strict);
}

}  // namespace piscan
