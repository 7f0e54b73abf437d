#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "piscan/kv_config.hpp"
#include "piscan/types.hpp"

namespace piscan {

// Reads a text file line by line; gzip input is detected from its magic bytes
// and decompressed on the fly. Memory use is one read buffer plus the
// current line.
class LineReader {
 public:
  explicit LineReader(const std::filesystem::path& path);
  ~LineReader();
  LineReader(const LineReader&) = delete;
  LineReader& operator=(const LineReader&) = delete;

  // Next line without its terminator ("\n" or "\r\n"). False at EOF.
  bool next(std::string& line);
  std::size_t line_number() const { return line_number_; }
  bool compressed() const { return compressed_; }

 private:
  bool fill();

  void* handle_ = nullptr;  // gzFile
  std::filesystem::path path_;
  std::vector<char> buffer_;
  std::size_t pos_ = 0;
  std::size_t len_ = 0;
  bool eof_ = false;
  bool compressed_ = false;
  std::size_t line_number_ = 0;
};

std::vector<std::string> default_strata();

// How a corpus record's stratum is chosen: the record's stratum field if
// present, otherwise the subset mapped through `subset_to_stratum`, otherwise
// `default_stratum`.
struct StratumConfig {
  std::vector<std::string> strata = default_strata();
  std::string stratum_field = "category";
  std::string subset_field = "subset";
  std::map<std::string, std::string, std::less<>> subset_to_stratum;
  std::string default_stratum = "misc";

  // Loaded from data/pile_subset_categories.txt (compiled in).
  static StratumConfig builtin();
  // Keys: strata (list), stratum_field, subset_field, default_stratum,
  // subset_map (path to a "<subset> = <stratum>" file).
  static StratumConfig from_config(const KeyValueConfig& kv);
  static std::map<std::string, std::string, std::less<>> parse_subset_map(std::string_view text);

  bool is_stratum(std::string_view s) const;
  void validate() const;
};

struct IngestError {
  std::string path;
  std::size_t line = 0;
  std::string message;
};

enum class CorpusFormat { Jsonl, JsonlGzip };

// Lazily yields Documents from a corpus JSONL file:
//   {"id": str, "text": str, "subset": str?, "category": str?}
// In lenient mode a malformed record is reported to the error sink and
// skipped; in strict mode it throws FormatError.
class CorpusReader {
 public:
  using ErrorSink = std::function<void(const IngestError&)>;

  CorpusReader(const std::filesystem::path& path, StratumConfig strata = StratumConfig::builtin(),
               bool strict = false, ErrorSink sink = {});

  std::optional<Document> next();

  // Errors seen so far when no sink was given.
  const std::vector<IngestError>& errors() const { return errors_; }
  std::size_t line_number() const { return reader_.line_number(); }

 private:
  void report(std::string message);

  LineReader reader_;
  std::string path_;
  StratumConfig strata_;
  bool strict_;
  ErrorSink sink_;
  std::vector<IngestError> errors_;
  std::string line_;
};

// `format` is advisory: compression is detected from the file contents.
CorpusReader open_corpus(const std::filesystem::path& path, CorpusFormat format,
                         StratumConfig strata = StratumConfig::builtin(), bool strict = false);

}  // namespace piscan
