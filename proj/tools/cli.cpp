#include "cli.hpp"

#include <glob.h>
#include <spdlog/logger.h>
#include <spdlog/sinks/ostream_sink.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <map>
#include <ostream>

#include "piscan/audit.hpp"
#include "piscan/corpus.hpp"
#include "piscan/detection_io.hpp"
#include "piscan/error.hpp"
#include "piscan/harness.hpp"
#include "piscan/kv_config.hpp"
#include "piscan/parrot.hpp"
#include "piscan/report.hpp"
#include "piscan/scanner.hpp"
#include "piscan/version.hpp"

namespace piscan::cli {
namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string config_path;
  std::string log_level = "info";
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

struct Context {
  KeyValueConfig config;
  std::uint64_t seed = 0;
  fs::path out_dir;
  std::shared_ptr<spdlog::logger> log;
  std::ostream* out = nullptr;

  // Resolves an output path against the output directory and refuses
  // anything that lands outside it.
  fs::path output(const std::string& p) const {
    fs::path path(p);
    if (path.is_relative()) path = out_dir / path;
    const fs::path resolved = fs::weakly_canonical(path);
    const fs::path root = fs::weakly_canonical(out_dir);
    auto [r, _] = std::mismatch(root.begin(), root.end(), resolved.begin(), resolved.end());
    if (r != root.end()) {
      throw UsageError("output " + resolved.string() + " is outside the output directory " + root.string());
    }
    return resolved;
  }

  // Writes `text` to the named output file, or to stdout when `p` is empty.
  void emit(const std::string& p, const std::string& text) const {
    if (p.empty()) {
      *out << text;
      return;
    }
    const fs::path path = output(p);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + path.string());
    f << text;
    if (!f.flush()) throw IoError("write failed: " + path.string());
  }
};

std::vector<fs::path> expand_inputs(const std::vector<std::string>& patterns) {
  std::vector<fs::path> out;
  for (const auto& pattern : patterns) {
    glob_t g{};
    const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
    if (rc == 0) {
      for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    }
    globfree(&g);
    if (rc == GLOB_NOMATCH) throw IoError("no input matches " + pattern);
    if (rc != 0) throw IoError("cannot expand " + pattern);
  }
  return out;
}

std::string json_line(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

std::vector<std::string> configured_strata(const Context& ctx, const std::vector<std::string>& flag) {
  if (!flag.empty()) return flag;
  return StratumConfig::from_config(ctx.config).strata;
}

// ---------------------------------------------------------------------------

struct ScanArgs {
  std::vector<std::string> inputs;
  std::string output;
  std::optional<std::size_t> parallelism;
  bool strict = false;
};

int run_scan(const Context& ctx, const ScanArgs& a) {
  ScanJob job;
  job.inputs = expand_inputs(a.inputs);
  job.output = ctx.output(a.output);
  job.detector = DetectorConfig::from_config(ctx.config);
  job.strata = StratumConfig::from_config(ctx.config);
  job.parallelism = a.parallelism.value_or(static_cast<std::size_t>(ctx.config.get_int("parallelism").value_or(1)));
  job.strict = a.strict || ctx.config.get_bool("strict").value_or(false);
  if (job.parallelism == 0) throw UsageError("--parallelism must be at least 1");

  const auto result = scan_corpus(job);
  ctx.log->info("scanned {} documents, {} bytes in {:.2f}s ({:.1f} MB/s); {} detections", result.stats.total_documents(),
                result.stats.total_bytes(), result.stats.wall_seconds,
                result.stats.throughput_bytes_per_sec / 1e6, result.stats.total_detections());
  if (result.ingest_errors) {
    ctx.log->warn("{} malformed records skipped, see {}", result.ingest_errors, result.errors_path.string());
  }
  return 0;
}

struct CountsArgs {
  std::vector<std::string> detections;
  std::string output;
};

int run_counts(const Context& ctx, const CountsArgs& a) {
  std::vector<fs::path> files(a.detections.begin(), a.detections.end());
  ctx.emit(a.output, aggregate_counts(files).to_json() + "\n");
  return 0;
}

struct SampleArgs {
  std::string detections;
  std::string output;
  std::size_t k = 250;
  std::vector<std::string> strata;
};

int run_sample(const Context& ctx, const SampleArgs& a) {
  const auto strata = configured_strata(ctx, a.strata);
  const auto result = audit::stratified_sample(a.detections, ctx.output(a.output), a.k, strata, ctx.seed);
  for (const auto& s : result.shortfalls) {
    ctx.log->warn("{}: stratum {} had {} detections for a quota of {}", to_string(s.pi_type), s.stratum, s.available,
                  s.quota);
  }
  for (const auto& w : result.warnings) ctx.log->warn("{}", w);
  ctx.log->info("sampled {} detections", result.sample.size());
  return 0;
}

struct PrecisionArgs {
  std::string annotations;
  std::string output;
  std::vector<std::string> strata;
};

int run_precision(const Context& ctx, const PrecisionArgs& a) {
  const auto records = audit::read_annotations(a.annotations);
  const auto report = audit::compute_precision(records, a.strata);
  for (const auto& w : report.warnings) ctx.log->warn("{}", w);
  ctx.emit(a.output, report.to_json() + "\n");
  return 0;
}

struct SigtestArgs {
  std::string annotations;
  std::string system_a;
  std::string system_b;
  std::string pi_type;
  std::size_t resamples = 10000;
  std::string alternative = "greater";
  std::string output;
};

int run_sigtest(const Context& ctx, const SigtestArgs& a) {
  const auto type = parse_pi_type(a.pi_type);
  if (!type) throw UsageError("unknown --pi-type " + a.pi_type);
  const std::map<std::string, audit::Alternative> alternatives{
      {"greater", audit::Alternative::Greater}, {"less", audit::Alternative::Less},
      {"two-sided", audit::Alternative::TwoSided}};

  std::vector<std::uint8_t> la, lb;
  for (const auto& r : audit::read_annotations(a.annotations)) {
    if (r.pi_type != *type) continue;
    const std::uint8_t label = r.label == audit::Label::TruePositive ? 1 : 0;
    if (r.system == a.system_a) la.push_back(label);
    if (r.system == a.system_b) lb.push_back(label);
  }
  const auto res = audit::permutation_test(la, lb, a.resamples, ctx.seed, alternatives.at(a.alternative));
  auto mean = [](const std::vector<std::uint8_t>& v) {
    double s = 0;
    for (auto x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  nlohmann::ordered_json j;
  j["pi_type"] = a.pi_type;
  j["system_a"] = a.system_a;
  j["system_b"] = a.system_b;
  j["n_a"] = la.size();
  j["n_b"] = lb.size();
  j["mean_a"] = mean(la);
  j["mean_b"] = mean(lb);
  j["difference"] = res.observed_difference;
  j["alternative"] = a.alternative;
  j["resamples"] = res.resamples;
  j["seed"] = ctx.seed;
  j["p_value"] = res.p_value;
  ctx.emit(a.output, json_line(j));
  return 0;
}

struct ExpectedArgs {
  std::string stats;
  std::string precision;
  std::string system;
  std::string output;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot read " + p.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

int run_expected(const Context& ctx, const ExpectedArgs& a) {
  const auto stats = CorpusStats::from_json(slurp(a.stats));
  const auto report = audit::PrecisionReport::from_json(slurp(a.precision));
  const auto counts = audit::expected_counts(stats, report, a.system);
  for (const auto& w : counts.warnings) ctx.log->warn("{}", w);
  ctx.emit(a.output, counts.to_json() + "\n");
  return 0;
}

struct ParrotArgs {
  std::string truth;
  std::string candidates;
  std::string output;
};

int run_parrot(const Context& ctx, const ParrotArgs& a) {
  std::map<std::string, PiInstance> truth;
  for (auto& inst : read_instances(a.truth)) truth.emplace(inst.instance_id, std::move(inst));

  std::string text;
  LineReader reader(a.candidates);
  std::string line;
  while (reader.next(line)) {
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("instance_id")) {
      throw FormatError(a.candidates + ":" + std::to_string(reader.line_number()) + ": malformed candidate record");
    }
    GenerationRecord gen;
    gen.instance_id = j["instance_id"].get<std::string>();
    if (j.contains("generation_text")) {
      gen = generation_record_from_json(line);
    } else if (j.contains("candidate")) {
      gen.generation_text = j["candidate"].get<std::string>();
    } else {
      throw FormatError(a.candidates + ":" + std::to_string(reader.line_number()) +
                        ": record has neither candidate nor generation_text");
    }
    const auto it = truth.find(gen.instance_id);
    if (it == truth.end()) throw FormatError("candidate for unknown instance " + gen.instance_id);
    text += parrot_result_to_json(evaluate_instance(it->second, gen));
    text += '\n';
  }
  ctx.emit(a.output, text);
  return 0;
}

struct HarnessArgs {
  std::string instances;
  std::string out;
};

int run_harness(const Context& ctx, const HarnessArgs& a, HarnessMode mode) {
  const auto config = HarnessConfig::from_config(ctx.config);
  if (config.models.empty()) throw UsageError("the config defines no model.<name>.* entries");
  const fs::path out_dir = ctx.output(a.out);
  const auto instances = read_instances(a.instances);
  const auto tokenizer = make_tokenizer(config.tokenizer, config.tokenizer_endpoint, config.timeout);
  auto log = ctx.log;
  const auto generators = make_generators(config, mode, [log](std::string_view msg) { log->warn("{}", msg); });

  const auto output = run_experiment(instances, config, generators, *tokenizer);
  write_experiment(output, out_dir);
  ReportOptions opts;
  opts.failure_threshold = config.failure_threshold;
  if (!output.rows.empty()) ctx.emit((out_dir / "report.md").string(), render_report(output.rows, opts));

  for (const auto& w : output.warnings) ctx.log->warn("{}", w);
  ctx.log->info("evaluated {} cells, {} failed", output.results.size(), output.failures.size());
  if (!output.unreliable_cells.empty()) {
    ctx.log->warn("run is unreliable: {} cell(s) exceed the failure threshold", output.unreliable_cells.size());
  }
  return 0;
}

struct ReportArgs {
  std::string rows;
  std::string format = "md";
  std::string output;
  double failure_threshold = 0.10;
};

int run_report(const Context& ctx, const ReportArgs& a) {
  const auto format = parse_report_format(a.format);
  if (!format) throw UsageError("--format must be md or csv");
  ReportOptions opts{*format, a.failure_threshold};
  ctx.emit(a.output, render_report(fs::path(a.rows), opts));
  return 0;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Personal-information detection, auditing and memorization measurement", "piscan"};
  app.set_version_flag("--version",
                       std::string("piscan ") + std::string(kToolVersion) + " (detector " +
                           std::string(kDetectorVersion) + ")");
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config_path, "Key-value config file (default: $PISCAN_CONFIG)");
  app.add_option("--log-level", g.log_level, "error, warn, info or debug")
      ->check(CLI::IsMember({"error", "warn", "info", "debug"}));
  app.add_option("--seed", g.seed, "Seed for sampling and resampling");
  app.add_option("--out-dir", g.out_dir, "Directory every output must resolve into (default: cwd)");

  ScanArgs scan;
  auto* scan_cmd = app.add_subcommand("scan", "Run the detectors over a corpus");
  scan_cmd->add_option("--input", scan.inputs, "Corpus JSONL(.gz) files or globs")->required();
  scan_cmd->add_option("--output", scan.output, "Detections JSONL")->required();
  scan_cmd->add_option("--parallelism", scan.parallelism, "Detector workers");
  scan_cmd->add_flag("--strict", scan.strict, "Abort on the first malformed record");

  CountsArgs counts;
  auto* counts_cmd = app.add_subcommand("counts", "Count detections per type and stratum");
  counts_cmd->add_option("--detections", counts.detections, "Detections files")->required();
  counts_cmd->add_option("--output", counts.output, "Stats JSON (default: stdout)");

  SampleArgs sample;
  auto* sample_cmd = app.add_subcommand("sample", "Stratified sample of detections for annotation");
  sample_cmd->add_option("--detections", sample.detections)->required();
  sample_cmd->add_option("--output", sample.output)->required();
  sample_cmd->add_option("--k", sample.k, "Detections per PI type")->capture_default_str();
  sample_cmd->add_option("--strata", sample.strata, "Strata in allocation order")->delimiter(',');

  PrecisionArgs precision;
  auto* precision_cmd = app.add_subcommand("precision", "Precision per system, type and stratum");
  precision_cmd->add_option("--annotations", precision.annotations)->required();
  precision_cmd->add_option("--output", precision.output);
  precision_cmd->add_option("--strata", precision.strata, "Strata every cell should cover")->delimiter(',');

  SigtestArgs sig;
  auto* sig_cmd = app.add_subcommand("sigtest", "Permutation test of precision between two systems");
  sig_cmd->add_option("--annotations", sig.annotations)->required();
  sig_cmd->add_option("--system-a", sig.system_a)->required();
  sig_cmd->add_option("--system-b", sig.system_b)->required();
  sig_cmd->add_option("--pi-type", sig.pi_type)->required();
  sig_cmd->add_option("--resamples", sig.resamples)->capture_default_str()->check(CLI::PositiveNumber);
  sig_cmd->add_option("--alternative", sig.alternative)
      ->capture_default_str()
      ->check(CLI::IsMember({"greater", "less", "two-sided"}));
  sig_cmd->add_option("--output", sig.output);

  ExpectedArgs expected;
  auto* expected_cmd = app.add_subcommand("expected-counts", "Detections x pooled precision per PI type");
  expected_cmd->add_option("--stats", expected.stats)->required();
  expected_cmd->add_option("--precision", expected.precision)->required();
  expected_cmd->add_option("--system", expected.system);
  expected_cmd->add_option("--output", expected.output);

  ParrotArgs parrot;
  auto* parrot_cmd = app.add_subcommand("parrot", "Score candidates against gold instances");
  parrot_cmd->add_option("--truth", parrot.truth, "Instances JSONL")->required();
  parrot_cmd->add_option("--candidates", parrot.candidates, "JSONL with instance_id and candidate")->required();
  parrot_cmd->add_option("--output", parrot.output);

  HarnessArgs harness;
  auto* harness_cmd = app.add_subcommand("harness", "Memorization experiment");
  harness_cmd->require_subcommand(1);
  auto* run_cmd = harness_cmd->add_subcommand("run", "Generate through the configured endpoints");
  auto* replay_cmd = harness_cmd->add_subcommand("replay", "Score generations from replay files");
  for (auto* cmd : {run_cmd, replay_cmd}) {
    cmd->add_option("--instances", harness.instances)->required();
    cmd->add_option("--out", harness.out, "Output directory")->required();
  }

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "Render experiment rows");
  report_cmd->add_option("--rows", report.rows)->required();
  report_cmd->add_option("--format", report.format)->capture_default_str()->check(CLI::IsMember({"md", "markdown", "csv"}));
  report_cmd->add_option("--output", report.output);
  report_cmd->add_option("--failure-threshold", report.failure_threshold)->capture_default_str()->check(CLI::Range(0.0, 1.0));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
  Context ctx;
  ctx.log = std::make_shared<spdlog::logger>("piscan", sink);
  ctx.log->set_pattern("piscan: %l: %v");
  ctx.out = &out;

  try {
    std::string config_path = g.config_path;
    if (config_path.empty()) {
      if (const char* env = std::getenv("PISCAN_CONFIG"); env && *env) config_path = env;
    }
    if (!config_path.empty()) ctx.config = KeyValueConfig::load(config_path);

    const std::string level = app.count("--log-level") ? g.log_level : ctx.config.get_or("log_level", g.log_level);
    ctx.log->set_level(spdlog::level::from_str(level));
    if (g.seed) {
      ctx.seed = *g.seed;
    } else if (auto s = ctx.config.get_int("seed")) {
      ctx.seed = static_cast<std::uint64_t>(*s);
    }
    std::string out_dir = g.out_dir.empty() ? ctx.config.get_or("out_dir", "") : g.out_dir;
    ctx.out_dir = out_dir.empty() ? fs::current_path() : fs::absolute(out_dir);

    if (*scan_cmd) return run_scan(ctx, scan);
    if (*counts_cmd) return run_counts(ctx, counts);
    if (*sample_cmd) return run_sample(ctx, sample);
    if (*precision_cmd) return run_precision(ctx, precision);
    if (*sig_cmd) return run_sigtest(ctx, sig);
    if (*expected_cmd) return run_expected(ctx, expected);
    if (*parrot_cmd) return run_parrot(ctx, parrot);
    if (*run_cmd) return run_harness(ctx, harness, HarnessMode::Http);
    if (*replay_cmd) return run_harness(ctx, harness, HarnessMode::Replay);
    if (*report_cmd) return run_report(ctx, report);
  } catch (const UsageError& e) {
    ctx.log->error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    ctx.log->error("{}", e.what());
    return 1;
  }
  return 2;
}

}  // namespace piscan::cli
