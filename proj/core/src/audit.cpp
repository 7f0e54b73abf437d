#include "piscan/audit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "piscan/corpus.hpp"
#include "piscan/detection_io.hpp"
#include "piscan/error.hpp"
#include "piscan/rng.hpp"

namespace piscan::audit {

namespace {

std::string_view label_name(Label l) { return l == Label::TruePositive ? "true_positive" : "false_positive"; }

std::string_view quality_name(SpanQuality q) {
  switch (q) {
    case SpanQuality::Perfect: return "perfect";
    case SpanQuality::Partial: return "partial";
    case SpanQuality::NotApplicable: return "n/a";
  }
  return "n/a";
}

}  // namespace

std::string annotation_to_json(const AnnotationRecord& r) {
  nlohmann::ordered_json j;
  j["detection_id"] = r.detection_id;
  j["pi_type"] = std::string(to_string(r.pi_type));
  j["stratum"] = r.stratum;
  j["label"] = std::string(label_name(r.label));
  j["span_quality"] = std::string(quality_name(r.span_quality));
  j["annotator"] = r.annotator;
  j["system"] = r.system;
  return j.dump();
}

AnnotationRecord annotation_from_json(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed annotation record: ") + e.what());
  }
  try {
    AnnotationRecord r;
    r.detection_id = j.at("detection_id").get<std::string>();
    const auto type = j.at("pi_type").get<std::string>();
    auto parsed = parse_pi_type(type);
    if (!parsed) throw FormatError("unknown pi_type '" + type + "'");
    r.pi_type = *parsed;
    r.stratum = j.at("stratum").get<std::string>();
    const auto label = j.at("label").get<std::string>();
    if (label == "true_positive") {
      r.label = Label::TruePositive;
    } else if (label == "false_positive") {
      r.label = Label::FalsePositive;
    } else {
      throw FormatError("unknown label '" + label + "'");
    }
    const auto quality = j.at("span_quality").get<std::string>();
    if (quality == "perfect") {
      r.span_quality = SpanQuality::Perfect;
    } else if (quality == "partial") {
      r.span_quality = SpanQuality::Partial;
    } else if (quality == "n/a") {
      r.span_quality = SpanQuality::NotApplicable;
    } else {
      throw FormatError("unknown span_quality '" + quality + "'");
    }
    if ((r.span_quality == SpanQuality::NotApplicable) != (r.label == Label::FalsePositive)) {
      throw FormatError("span_quality must be n/a exactly for false positives (" + r.detection_id + ")");
    }
    r.annotator = j.value("annotator", std::string());
    r.system = j.value("system", std::string("rnr"));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed annotation record: ") + e.what());
  }
}

std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& path) {
  std::vector<AnnotationRecord> out;
  LineReader reader(path);
  std::string line;
  while (reader.next(line)) {
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      out.push_back(annotation_from_json(line));
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ":" + std::to_string(reader.line_number()) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

SampleResult stratified_sample(const std::vector<Detection>& detections, std::size_t k_per_type,
                               const std::vector<std::string>& strata, std::uint64_t seed) {
  if (strata.empty()) throw ArgumentError("stratified_sample needs at least one stratum");
  if (k_per_type < strata.size()) {
    throw ArgumentError("k_per_type (" + std::to_string(k_per_type) + ") must be >= the number of strata (" +
                        std::to_string(strata.size()) + ")");
  }
  SampleResult result;
  const std::size_t S = strata.size();

  // Indices into `detections`, grouped by type and stratum, in input order.
  std::map<PiType, std::vector<std::vector<std::size_t>>> groups;
  std::size_t unknown_stratum = 0;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const auto it = std::find(strata.begin(), strata.end(), detections[i].stratum);
    if (it == strata.end()) {
      ++unknown_stratum;
      continue;
    }
    auto& g = groups[detections[i].pi_type];
    if (g.empty()) g.resize(S);
    g[static_cast<std::size_t>(it - strata.begin())].push_back(i);
  }
  if (unknown_stratum > 0) {
    result.warnings.push_back(std::to_string(unknown_stratum) +
                              " detections carry a stratum outside the configured set and were not sampled");
  }

  for (PiType type : kAllPiTypes) {
    auto found = groups.find(type);
    if (found == groups.end()) {
      result.warnings.push_back(std::string(to_string(type)) + ": no detections to sample");
      continue;
    }
    const auto& pools = found->second;
    std::vector<std::size_t> quota(S), take(S), avail(S);
    for (std::size_t s = 0; s < S; ++s) {
      quota[s] = k_per_type / S + (s < k_per_type % S ? 1 : 0);
      avail[s] = pools[s].size();
      take[s] = std::min(quota[s], avail[s]);
      if (avail[s] < quota[s]) result.shortfalls.push_back(Shortfall{type, strata[s], quota[s], avail[s]});
    }
    std::size_t deficit = k_per_type - std::accumulate(take.begin(), take.end(), std::size_t{0});
    while (deficit > 0) {
      std::vector<std::size_t> open;
      for (std::size_t s = 0; s < S; ++s) {
        if (take[s] < avail[s]) open.push_back(s);
      }
      if (open.empty()) break;
      const std::size_t share = deficit / open.size();
      const std::size_t extra = deficit % open.size();
      for (std::size_t j = 0; j < open.size(); ++j) {
        const std::size_t s = open[j];
        const std::size_t add = std::min(share + (j < extra ? 1 : 0), avail[s] - take[s]);
        take[s] += add;
        deficit -= add;
      }
    }
    if (deficit > 0) {
      result.warnings.push_back(std::string(to_string(type)) + ": only " +
                                std::to_string(k_per_type - deficit) + " detections available, wanted " +
                                std::to_string(k_per_type));
    }

    for (std::size_t s = 0; s < S; ++s) {
      std::vector<std::size_t> pool = pools[s];
      SeededRng rng(derive_seed(seed, std::string(to_string(type)) + "/" + strata[s]));
      for (std::size_t i = 0; i < take[s]; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
        std::swap(pool[i], pool[j]);
      }
      pool.resize(take[s]);
      std::sort(pool.begin(), pool.end());
      for (std::size_t idx : pool) result.sample.push_back(detections[idx]);
    }
  }
  return result;
}

SampleResult stratified_sample(const std::filesystem::path& detections_file,
                               const std::filesystem::path& sample_file, std::size_t k_per_type,
                               const std::vector<std::string>& strata, std::uint64_t seed) {
  const auto detections = read_detections(detections_file);
  SampleResult result = stratified_sample(detections, k_per_type, strata, seed);
  std::ofstream out(sample_file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write sample file " + sample_file.string());
  for (const auto& d : result.sample) {
    // Prepend detection_id to the pinned detection record.
    const std::string body = detection_to_json(d);
    out << "{\"detection_id\":" << nlohmann::json(detection_id(d)).dump() << "," << body.substr(1) << '\n';
  }
  if (!out) throw IoError("write failed on " + sample_file.string());
  return result;
}

// ---------------------------------------------------------------------------

std::optional<double> PrecisionReport::pooled_precision(const std::string& system, PiType type) const {
  auto it = pooled.find({system, type});
  if (it == pooled.end() || it->second.n == 0) return std::nullopt;
  return it->second.precision();
}

std::vector<std::string> PrecisionReport::systems() const {
  std::vector<std::string> out;
  for (const auto& [key, cell] : pooled) {
    if (out.empty() || out.back() != key.first) out.push_back(key.first);
  }
  return out;
}

std::string PrecisionReport::to_json() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json cells_json = nlohmann::ordered_json::array();
  for (const auto& [key, cell] : cells) {
    nlohmann::ordered_json c;
    c["system"] = std::get<0>(key);
    c["pi_type"] = std::string(to_string(std::get<1>(key)));
    c["stratum"] = std::get<2>(key);
    c["n"] = cell.n;
    c["true_positives"] = cell.true_positives;
    c["precision"] = cell.precision();
    cells_json.push_back(std::move(c));
  }
  nlohmann::ordered_json pooled_json = nlohmann::ordered_json::array();
  for (const auto& [key, cell] : pooled) {
    nlohmann::ordered_json c;
    c["system"] = key.first;
    c["pi_type"] = std::string(to_string(key.second));
    c["n"] = cell.n;
    c["true_positives"] = cell.true_positives;
    c["precision"] = cell.precision();
    pooled_json.push_back(std::move(c));
  }
  j["cells"] = std::move(cells_json);
  j["pooled"] = std::move(pooled_json);
  j["warnings"] = warnings;
  return j.dump(2);
}

PrecisionReport PrecisionReport::from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    PrecisionReport r;
    auto type_of = [](const nlohmann::json& c) {
      const auto name = c.at("pi_type").get<std::string>();
      auto t = parse_pi_type(name);
      if (!t) throw FormatError("unknown pi_type '" + name + "'");
      return *t;
    };
    for (const auto& c : j.at("cells")) {
      r.cells[{c.at("system").get<std::string>(), type_of(c), c.at("stratum").get<std::string>()}] =
          PrecisionCell{c.at("n").get<std::size_t>(), c.at("true_positives").get<std::size_t>()};
    }
    for (const auto& c : j.at("pooled")) {
      r.pooled[{c.at("system").get<std::string>(), type_of(c)}] =
          PrecisionCell{c.at("n").get<std::size_t>(), c.at("true_positives").get<std::size_t>()};
    }
    if (j.contains("warnings")) r.warnings = j["warnings"].get<std::vector<std::string>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed precision report: ") + e.what());
  }
}

PrecisionReport compute_precision(const std::vector<AnnotationRecord>& records,
                                  const std::vector<std::string>& expected_strata) {
  PrecisionReport report;
  for (const auto& r : records) {
    if ((r.span_quality == SpanQuality::NotApplicable) != (r.label == Label::FalsePositive)) {
      throw ArgumentError("span_quality must be n/a exactly for false positives (" + r.detection_id + ")");
    }
    const std::size_t tp = r.label == Label::TruePositive ? 1 : 0;
    auto& cell = report.cells[{r.system, r.pi_type, r.stratum}];
    cell.n += 1;
    cell.true_positives += tp;
    auto& pooled = report.pooled[{r.system, r.pi_type}];
    pooled.n += 1;
    pooled.true_positives += tp;
  }
  if (!expected_strata.empty()) {
    for (const auto& [key, cell] : report.pooled) {
      for (const auto& stratum : expected_strata) {
        if (!report.cells.count({key.first, key.second, stratum})) {
          report.warnings.push_back("no annotations for " + key.first + "/" + std::string(to_string(key.second)) +
                                    "/" + stratum + "; cell omitted");
        }
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------

PermutationResult permutation_test(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b,
                                   std::size_t resamples, std::uint64_t seed, Alternative alternative) {
  if (a.empty() || b.empty()) throw ArgumentError("permutation_test needs two nonempty samples");
  if (resamples < 1) throw ArgumentError("permutation_test needs at least one resample");
  auto check = [](std::span<const std::uint8_t> s) {
    for (auto v : s) {
      if (v > 1) throw ArgumentError("permutation_test labels must be 0 or 1");
    }
  };
  check(a);
  check(b);

  const auto na = static_cast<std::int64_t>(a.size());
  const auto nb = static_cast<std::int64_t>(b.size());
  const std::int64_t sa = std::accumulate(a.begin(), a.end(), std::int64_t{0});
  const std::int64_t sb = std::accumulate(b.begin(), b.end(), std::int64_t{0});
  const std::int64_t total = sa + sb;
  // mean(a) - mean(b), scaled by na*nb so comparisons stay exact.
  auto scaled_diff = [&](std::int64_t sum_a) { return sum_a * nb - (total - sum_a) * na; };
  const std::int64_t observed = scaled_diff(sa);

  std::vector<std::uint8_t> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size();

  SeededRng rng(seed);
  std::size_t extreme = 0;
  for (std::size_t r = 0; r < resamples; ++r) {
    std::int64_t sum_a = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
      std::swap(pooled[i], pooled[j]);
      sum_a += pooled[i];
    }
    const std::int64_t d = scaled_diff(sum_a);
    bool hit = false;
    switch (alternative) {
      case Alternative::Greater: hit = d >= observed; break;
      case Alternative::Less: hit = d <= observed; break;
      case Alternative::TwoSided: hit = std::llabs(d) >= std::llabs(observed); break;
    }
    extreme += hit ? 1 : 0;
  }

  PermutationResult out;
  out.resamples = resamples;
  out.extreme = extreme;
  out.p_value = static_cast<double>(1 + extreme) / static_cast<double>(1 + resamples);
  out.observed_difference = static_cast<double>(sa) / static_cast<double>(na) -
                            static_cast<double>(sb) / static_cast<double>(nb);
  return out;
}

// ---------------------------------------------------------------------------

std::uint64_t expected_count(std::uint64_t total_detections, double precision) {
  if (!(precision >= 0.0 && precision <= 1.0)) throw ArgumentError("precision must lie in [0, 1]");
  return static_cast<std::uint64_t>(std::llround(static_cast<double>(total_detections) * precision));
}

std::string ExpectedCounts::to_json() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json rows_json = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json row;
    row["pi_type"] = std::string(to_string(r.pi_type));
    row["total_detections"] = r.total_detections;
    row["precision"] = r.precision;
    row["expected"] = r.expected;
    rows_json.push_back(std::move(row));
  }
  j["rows"] = std::move(rows_json);
  j["warnings"] = warnings;
  return j.dump(2);
}

ExpectedCounts expected_counts(const CorpusStats& stats, const PrecisionReport& report, const std::string& system) {
  ExpectedCounts out;
  std::string chosen = system;
  if (chosen.empty()) {
    const auto systems = report.systems();
    if (systems.size() == 1) {
      chosen = systems.front();
    } else {
      chosen = "rnr";
    }
  }
  for (PiType type : kAllPiTypes) {
    const std::uint64_t total = stats.total_detections(type);
    const bool present = std::any_of(stats.detections.begin(), stats.detections.end(),
                                     [type](const auto& kv) { return kv.first.first == type; });
    if (!present) continue;
    auto precision = report.pooled_precision(chosen, type);
    if (!precision) {
      out.warnings.push_back("no pooled precision for " + chosen + "/" + std::string(to_string(type)) +
                             "; omitted");
      continue;
    }
    out.rows.push_back(ExpectedCount{type, total, *precision, expected_count(total, *precision)});
  }
  return out;
}

}  // namespace piscan::audit
