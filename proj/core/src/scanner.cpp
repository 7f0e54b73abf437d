#include "piscan/scanner.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <exception>
#include <fstream>
#include <mutex>
#include <optional>
#include <thread>

#include <json.hpp>

#include "piscan/detection_io.hpp"
#include "piscan/detectors.hpp"
#include "piscan/error.hpp"

namespace piscan {

std::uint64_t CorpusStats::total_detections(PiType type) const {
  std::uint64_t n = 0;
  for (const auto& [key, count] : detections) {
    if (key.first == type) n += count;
  }
  return n;
}

std::uint64_t CorpusStats::total_detections() const {
  std::uint64_t n = 0;
  for (const auto& [key, count] : detections) n += count;
  return n;
}

std::uint64_t CorpusStats::total_documents() const {
  std::uint64_t n = 0;
  for (const auto& [s, count] : documents) n += count;
  return n;
}

std::uint64_t CorpusStats::total_bytes() const {
  std::uint64_t n = 0;
  for (const auto& [s, count] : bytes) n += count;
  return n;
}

void CorpusStats::add_detection(PiType type, const std::string& stratum, std::uint64_t n) {
  if (n > 0) detections[{type, stratum}] += n;
}

CorpusStats& CorpusStats::operator+=(const CorpusStats& other) {
  for (const auto& [key, count] : other.detections) detections[key] += count;
  for (const auto& [s, count] : other.documents) documents[s] += count;
  for (const auto& [s, count] : other.bytes) bytes[s] += count;
  return *this;
}

std::string CorpusStats::to_json() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json det = nlohmann::ordered_json::object();
  for (PiType t : kAllPiTypes) {
    nlohmann::ordered_json per = nlohmann::ordered_json::object();
    for (const auto& [key, count] : detections) {
      if (key.first == t) per[key.second] = count;
    }
    det[std::string(to_string(t))] = std::move(per);
  }
  j["detections"] = std::move(det);
  nlohmann::ordered_json totals = nlohmann::ordered_json::object();
  for (PiType t : kAllPiTypes) totals[std::string(to_string(t))] = total_detections(t);
  j["total_detections"] = std::move(totals);
  j["documents"] = documents;
  j["bytes"] = bytes;
  j["wall_seconds"] = wall_seconds;
  j["throughput_bytes_per_sec"] = throughput_bytes_per_sec;
  return j.dump(2);
}

CorpusStats CorpusStats::from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    CorpusStats s;
    for (const auto& [type_name, per] : j.at("detections").items()) {
      auto type = parse_pi_type(type_name);
      if (!type) throw FormatError("unknown pi_type '" + type_name + "' in stats");
      for (const auto& [stratum, count] : per.items()) s.add_detection(*type, stratum, count.get<std::uint64_t>());
    }
    if (j.contains("documents")) s.documents = j["documents"].get<std::map<std::string, std::uint64_t>>();
    if (j.contains("bytes")) s.bytes = j["bytes"].get<std::map<std::string, std::uint64_t>>();
    s.wall_seconds = j.value("wall_seconds", 0.0);
    s.throughput_bytes_per_sec = j.value("throughput_bytes_per_sec", 0.0);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed stats file: ") + e.what());
  }
}

namespace {

struct Batch {
  std::uint64_t seq = 0;
  std::vector<Document> docs;
};

struct BatchResult {
  std::string lines;
  CorpusStats stats;
};

BatchResult process_batch(const DetectorSuite& suite, const Batch& batch) {
  BatchResult out;
  for (const Document& doc : batch.docs) {
    out.stats.documents[doc.stratum] += 1;
    out.stats.bytes[doc.stratum] += doc.text.size();
    for (const Detection& d : suite.scan_text(doc)) {
      out.lines += detection_to_json(d);
      out.lines += '\n';
      out.stats.add_detection(d.pi_type, d.stratum);
    }
  }
  return out;
}

std::string ingest_error_json(const IngestError& e) {
  nlohmann::ordered_json j;
  j["path"] = e.path;
  j["line"] = e.line;
  j["message"] = e.message;
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

// Shared state of one scan. Batches are numbered in input order; the writer
// consumes results strictly by sequence number.
class Pipeline {
 public:
  Pipeline(std::size_t workers) : max_in_flight_(2 * workers + 2) {}

  // Reader side. Blocks while too many batches are in flight.
  bool push(Batch batch) {
    std::unique_lock lock(mu_);
    space_cv_.wait(lock, [&] { return failed_ || in_flight_ < max_in_flight_; });
    if (failed_) return false;
    ++in_flight_;
    ++pushed_;
    work_.push_back(std::move(batch));
    work_cv_.notify_one();
    return true;
  }

  void close_input() {
    std::lock_guard lock(mu_);
    input_closed_ = true;
    work_cv_.notify_all();
    result_cv_.notify_all();
  }

  std::optional<Batch> pop_work() {
    std::unique_lock lock(mu_);
    work_cv_.wait(lock, [&] { return failed_ || input_closed_ || !work_.empty(); });
    if (failed_ || work_.empty()) return std::nullopt;
    Batch b = std::move(work_.front());
    work_.pop_front();
    return b;
  }

  void put_result(std::uint64_t seq, BatchResult result) {
    std::lock_guard lock(mu_);
    results_.emplace(seq, std::move(result));
    result_cv_.notify_all();
  }

  // Writer side: the result for `seq`, or nullopt when the pipeline is done
  // (input closed and everything pushed has been written) or failed.
  std::optional<BatchResult> take_result(std::uint64_t seq) {
    std::unique_lock lock(mu_);
    result_cv_.wait(lock, [&] {
      return failed_ || results_.count(seq) > 0 || (input_closed_ && seq >= pushed_);
    });
    if (failed_) return std::nullopt;
    auto it = results_.find(seq);
    if (it == results_.end()) return std::nullopt;
    BatchResult r = std::move(it->second);
    results_.erase(it);
    --in_flight_;
    space_cv_.notify_one();
    return r;
  }

  void fail(std::exception_ptr e) {
    std::lock_guard lock(mu_);
    if (!error_) error_ = e;
    failed_ = true;
    work_cv_.notify_all();
    result_cv_.notify_all();
    space_cv_.notify_all();
  }

  std::exception_ptr error() {
    std::lock_guard lock(mu_);
    return error_;
  }

 private:
  std::mutex mu_;
  std::condition_variable work_cv_, result_cv_, space_cv_;
  std::deque<Batch> work_;
  std::map<std::uint64_t, BatchResult> results_;
  std::size_t max_in_flight_;
  std::size_t in_flight_ = 0;
  std::uint64_t pushed_ = 0;
  bool input_closed_ = false;
  bool failed_ = false;
  std::exception_ptr error_;
};

}  // namespace

ScanResult scan_corpus(const ScanJob& job) {
  if (job.parallelism < 1) throw ArgumentError("parallelism must be >= 1");
  for (const auto& in : job.inputs) {
    std::ifstream probe(in, std::ios::binary);
    if (!probe) throw IoError("input not readable: " + in.string());
  }

  ScanResult result;
  result.detections_path = job.output;
  result.errors_path = job.output.string() + ".errors.jsonl";
  result.stats_path = job.output.string() + ".stats.json";
  const std::filesystem::path partial = job.output.string() + ".partial";

  // Fail before reading any input if the output cannot be written.
  std::ofstream out(partial, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write output " + partial.string());
  std::ofstream errors_out(result.errors_path, std::ios::binary | std::ios::trunc);
  if (!errors_out) throw IoError("cannot write error ledger " + result.errors_path.string());

  const DetectorSuite suite(job.detector);
  const auto t0 = std::chrono::steady_clock::now();

  Pipeline pipeline(job.parallelism);
  std::uint64_t batches_pushed = 0;

  std::vector<std::jthread> workers;
  workers.reserve(job.parallelism);
  for (std::size_t w = 0; w < job.parallelism; ++w) {
    workers.emplace_back([&pipeline, &suite] {
      try {
        while (auto batch = pipeline.pop_work()) {
          pipeline.put_result(batch->seq, process_batch(suite, *batch));
        }
      } catch (...) {
        pipeline.fail(std::current_exception());
      }
    });
  }

  CorpusStats& stats = result.stats;
  std::jthread writer([&] {
    try {
      for (std::uint64_t seq = 0;; ++seq) {
        auto r = pipeline.take_result(seq);
        if (!r) break;
        out.write(r->lines.data(), static_cast<std::streamsize>(r->lines.size()));
        if (!out) throw IoError("write failed on " + partial.string());
        stats += r->stats;
      }
    } catch (...) {
      pipeline.fail(std::current_exception());
    }
  });

  try {
    auto sink = [&](const IngestError& e) {
      ++result.ingest_errors;
      errors_out << ingest_error_json(e) << '\n';
    };
    Batch batch;
    std::size_t batch_size = 0;
    auto flush = [&] {
      if (batch.docs.empty()) return true;
      batch.seq = batches_pushed++;
      const bool ok = pipeline.push(std::move(batch));
      batch = Batch{};
      batch_size = 0;
      return ok;
    };
    bool ok = true;
    for (const auto& path : job.inputs) {
      CorpusReader reader(path, job.strata, job.strict, sink);
      while (ok) {
        auto doc = reader.next();
        if (!doc) break;
        batch_size += doc->text.size() + 64;
        batch.docs.push_back(std::move(*doc));
        if (batch_size >= job.batch_bytes) ok = flush();
      }
      if (!ok) break;
    }
    if (ok) flush();
  } catch (...) {
    pipeline.fail(std::current_exception());
  }
  pipeline.close_input();
  workers.clear();
  writer.join();

  if (auto err = pipeline.error()) {
    out.close();
    std::rethrow_exception(err);
  }

  out.flush();
  errors_out.flush();
  if (!out || !errors_out) throw IoError("write failed on " + partial.string());
  out.close();

  const auto t1 = std::chrono::steady_clock::now();
  stats.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
  stats.throughput_bytes_per_sec =
      stats.wall_seconds > 0 ? static_cast<double>(stats.total_bytes()) / stats.wall_seconds : 0.0;

  std::error_code ec;
  std::filesystem::rename(partial, job.output, ec);
  if (ec) throw IoError("cannot move " + partial.string() + " to " + job.output.string() + ": " + ec.message());

  std::ofstream stats_out(result.stats_path, std::ios::binary | std::ios::trunc);
  stats_out << stats.to_json() << '\n';
  if (!stats_out) throw IoError("cannot write " + result.stats_path.string());
  return result;
}

CorpusStats aggregate_counts(const std::vector<std::filesystem::path>& detection_files) {
  CorpusStats stats;
  for (const auto& path : detection_files) {
    for_each_detection(path, [&stats](const Detection& d) { stats.add_detection(d.pi_type, d.stratum); });
  }
  return stats;
}

CorpusStats aggregate_counts(const std::filesystem::path& detection_file) {
  return aggregate_counts(std::vector<std::filesystem::path>{detection_file});
}

}  // namespace piscan
