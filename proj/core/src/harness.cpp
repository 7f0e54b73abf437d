#include "piscan/harness.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <json.hpp>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "piscan/corpus.hpp"
#include "piscan/error.hpp"
#include "piscan/text.hpp"

namespace piscan {
namespace {

using ordered_json = nlohmann::ordered_json;

std::string dump(const ordered_json& j) { return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace); }

std::size_t require_count(const KeyValueConfig& kv, std::string_view key, std::size_t fallback) {
  const auto v = kv.get_int(key);
  if (!v) return fallback;
  if (*v < 0) throw FormatError(std::string(key) + " must be non-negative");
  return static_cast<std::size_t>(*v);
}

std::string cell_label(const std::string& model, const std::string& checkpoint, std::size_t p) {
  return model + "/" + checkpoint + "/p=" + std::to_string(p);
}

}  // namespace

void HarnessConfig::normalize() {
  std::sort(prefix_lengths.begin(), prefix_lengths.end(), std::greater<>());
  prefix_lengths.erase(std::unique(prefix_lengths.begin(), prefix_lengths.end()), prefix_lengths.end());
  if (prefix_lengths.empty()) throw ArgumentError("prefix_lengths must not be empty");
  if (prefix_lengths.back() == 0) throw ArgumentError("prefix lengths must be positive");
  if (generation_length == 0) throw ArgumentError("generation_length must be at least 1");
  if (max_inflight == 0) throw ArgumentError("max_inflight must be at least 1");
  if (max_attempts < 1) throw ArgumentError("max_attempts must be at least 1");
  if (failure_threshold < 0.0 || failure_threshold > 1.0) throw ArgumentError("failure_threshold must be in [0, 1]");
  for (const auto& m : models) {
    if (m.tag.empty()) throw ArgumentError("model tag must not be empty");
  }
}

HarnessConfig HarnessConfig::from_config(const KeyValueConfig& kv) {
  HarnessConfig c;
  if (auto list = kv.get_list("prefix_lengths")) {
    c.prefix_lengths.clear();
    for (const auto& item : *list) {
      try {
        std::size_t used = 0;
        const long long v = std::stoll(item, &used);
        if (used != item.size() || v <= 0) throw std::invalid_argument(item);
        c.prefix_lengths.push_back(static_cast<std::size_t>(v));
      } catch (const std::exception&) {
        throw FormatError("prefix_lengths: not a positive integer: " + item);
      }
    }
  }
  c.generation_length = require_count(kv, "generation_length", c.generation_length);
  c.max_inflight = require_count(kv, "max_inflight", c.max_inflight);
  c.timeout = std::chrono::milliseconds(require_count(kv, "timeout_ms", c.timeout.count()));
  c.max_attempts = static_cast<int>(require_count(kv, "max_attempts", c.max_attempts));
  c.initial_backoff = std::chrono::milliseconds(require_count(kv, "backoff_ms", c.initial_backoff.count()));
  c.tokenizer = kv.get_or("tokenizer", c.tokenizer);
  c.tokenizer_endpoint = kv.get_or("tokenizer_endpoint", "");
  if (auto t = kv.get_double("failure_threshold")) c.failure_threshold = *t;

  auto& e = c.endpoint_template;
  e.prompt_field = kv.get_or("field.prompt", e.prompt_field);
  e.max_tokens_field = kv.get_or("field.max_new_tokens", e.max_tokens_field);
  e.sample_field = kv.get_or("field.do_sample", e.sample_field);
  e.response_field = kv.get_or("field.text", e.response_field);

  auto resolve = [&](const std::string& value) -> std::filesystem::path {
    if (value.empty()) return {};
    std::filesystem::path p(value);
    return p.is_absolute() || kv.base_dir().empty() ? p : kv.base_dir() / p;
  };
  const auto default_replay = resolve(kv.get_or("replay", ""));

  std::set<std::string> names;
  for (const auto& key : kv.keys_with_prefix("model.")) {
    const auto dot = key.find('.', 6);
    if (dot == std::string::npos) throw FormatError("model keys look like model.<name>.<field>: " + key);
    names.insert(key.substr(6, dot - 6));
  }
  for (const auto& name : names) {
    const std::string base = "model." + name + ".";
    for (const auto& key : kv.keys_with_prefix(base)) {
      const auto field = key.substr(base.size());
      if (field != "tag" && field != "checkpoint" && field != "endpoint" && field != "replay") {
        throw FormatError("unknown model field: " + key);
      }
    }
    ModelSpec m;
    m.tag = kv.get_or(base + "tag", name);
    m.checkpoint = kv.get_or(base + "checkpoint", "final");
    m.endpoint = kv.get_or(base + "endpoint", "");
    m.replay = resolve(kv.get_or(base + "replay", ""));
    if (m.replay.empty()) m.replay = default_replay;
    c.models.push_back(std::move(m));
  }
  c.normalize();
  return c;
}

std::string pi_instance_to_json(const PiInstance& instance) {
  ordered_json j;
  j["instance_id"] = instance.instance_id;
  j["pi_type"] = std::string(to_string(instance.pi_type));
  j["ground_truth"] = instance.ground_truth;
  j["doc_id"] = instance.doc_id;
  j["start"] = instance.span.start;
  j["end"] = instance.span.end;
  j["prefix_pool"] = instance.prefix_pool;
  if (!instance.prefix_token_starts.empty()) j["prefix_token_starts"] = instance.prefix_token_starts;
  return dump(j);
}

PiInstance pi_instance_from_json(std::string_view line) {
  const auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw FormatError("instance is not a JSON object");
  try {
    PiInstance inst;
    inst.instance_id = j.at("instance_id").get<std::string>();
    const auto type = parse_pi_type(j.at("pi_type").get<std::string>());
    if (!type) throw FormatError("unknown pi_type: " + j["pi_type"].get<std::string>());
    inst.pi_type = *type;
    inst.ground_truth = j.at("ground_truth").get<std::string>();
    inst.doc_id = j.value("doc_id", std::string());
    inst.span.start = j.value("start", std::size_t{0});
    inst.span.end = j.value("end", inst.span.start + inst.ground_truth.size());
    inst.prefix_pool = j.value("prefix_pool", std::string());
    if (j.contains("prefix_token_starts")) {
      inst.prefix_token_starts = j["prefix_token_starts"].get<std::vector<std::size_t>>();
    }
    if (inst.ground_truth.empty()) throw FormatError("instance " + inst.instance_id + ": empty ground_truth");
    if (inst.span.size() != inst.ground_truth.size()) {
      throw FormatError("instance " + inst.instance_id + ": span length differs from ground_truth");
    }
    return inst;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed instance: ") + e.what());
  }
}

std::vector<PiInstance> read_instances(const std::filesystem::path& path) {
  LineReader reader(path);
  std::vector<PiInstance> out;
  std::set<std::string> seen;
  std::string line;
  while (reader.next(line)) {
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      out.push_back(pi_instance_from_json(line));
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ":" + std::to_string(reader.line_number()) + ": " + e.what());
    }
    if (!seen.insert(out.back().instance_id).second) {
      throw FormatError(path.string() + ": duplicate instance_id " + out.back().instance_id);
    }
  }
  return out;
}

std::size_t constituent_window_chars(std::string_view truth) {
  return std::max<std::size_t>(2 * utf8::count_chars(truth), 32);
}

ParrotResult evaluate_instance(const PiInstance& instance, const GenerationRecord& generation) {
  if (generation.decode_mode != "greedy") {
    throw ArgumentError("generation for " + generation.instance_id + " is not greedy (" + generation.decode_mode + ")");
  }
  const auto score = parrot_score(generation.generation_text, instance.ground_truth);
  ParrotResult r;
  r.instance_id = instance.instance_id;
  r.pi_type = instance.pi_type;
  r.score = score.score;
  r.verbatim = score.verbatim();
  r.best_window_offset = score.window_offset;

  const std::string_view gen = generation.generation_text;
  const std::size_t cut = utf8::forward_chars(gen, 0, constituent_window_chars(instance.ground_truth));
  r.constituents = constituent_verbatim(gen.substr(0, cut), instance.ground_truth, instance.pi_type);
  return r;
}

std::string experiment_row_to_json(const ExperimentRow& row) {
  ordered_json j;
  j["model"] = row.model;
  j["checkpoint"] = row.checkpoint;
  j["prefix_len"] = row.prefix_len;
  j["pi_type"] = std::string(to_string(row.pi_type));
  j["n"] = row.n;
  j["failed"] = row.failed;
  j["mean_parrot_score"] = row.n ? ordered_json(row.mean_score) : ordered_json(nullptr);
  j["verbatim_rate"] = row.n ? ordered_json(row.verbatim_rate) : ordered_json(nullptr);
  ordered_json groups = ordered_json::object();
  const auto names = constituent_names(row.pi_type);
  for (std::size_t g = 0; g < row.constituent_rates.size() && g < names.size(); ++g) {
    groups[names[g]] = row.constituent_rates[g];
  }
  j["constituent_rates"] = row.constituent_rates.empty() ? ordered_json(nullptr) : groups;
  j["constituent_n"] = row.constituent_n;
  return dump(j);
}

ExperimentRow experiment_row_from_json(std::string_view line) {
  const auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw FormatError("row is not a JSON object");
  try {
    ExperimentRow row;
    row.model = j.at("model").get<std::string>();
    row.checkpoint = j.at("checkpoint").get<std::string>();
    row.prefix_len = j.at("prefix_len").get<std::size_t>();
    const auto type = parse_pi_type(j.at("pi_type").get<std::string>());
    if (!type) throw FormatError("unknown pi_type in row");
    row.pi_type = *type;
    row.n = j.at("n").get<std::size_t>();
    row.failed = j.value("failed", std::size_t{0});
    if (!j.at("mean_parrot_score").is_null()) row.mean_score = j["mean_parrot_score"].get<double>();
    if (!j.at("verbatim_rate").is_null()) row.verbatim_rate = j["verbatim_rate"].get<double>();
    const auto& groups = j.at("constituent_rates");
    if (!groups.is_null()) {
      for (const auto& name : constituent_names(row.pi_type)) row.constituent_rates.push_back(groups.at(name).get<double>());
    }
    row.constituent_n = j.value("constituent_n", std::size_t{0});
    return row;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed row: ") + e.what());
  }
}

std::vector<ExperimentRow> read_rows(const std::filesystem::path& path) {
  LineReader reader(path);
  std::vector<ExperimentRow> rows;
  std::string line;
  while (reader.next(line)) {
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      rows.push_back(experiment_row_from_json(line));
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ":" + std::to_string(reader.line_number()) + ": " + e.what());
    }
  }
  return rows;
}

GeneratorSet make_generators(const HarnessConfig& config, HarnessMode mode, HttpGenerator::EventSink on_event) {
  GeneratorSet out;
  std::map<std::filesystem::path, std::shared_ptr<ReplayGenerator>> replays;
  for (const auto& m : config.models) {
    if (mode == HarnessMode::Replay) {
      if (m.replay.empty()) throw ArgumentError("model " + m.tag + " has no replay file");
      auto& slot = replays[m.replay];
      if (!slot) {
        slot = std::make_shared<ReplayGenerator>();
        slot->load(m.replay);
      }
      out.push_back(slot);
    } else {
      if (m.endpoint.empty()) throw ArgumentError("model " + m.tag + " has no endpoint");
      EndpointOptions opts = config.endpoint_template;
      opts.url = m.endpoint;
      opts.timeout = config.timeout;
      opts.max_attempts = config.max_attempts;
      opts.initial_backoff = config.initial_backoff;
      out.push_back(std::make_shared<HttpGenerator>(std::move(opts), on_event));
    }
  }
  return out;
}

std::vector<ExperimentRow> aggregate_rows(const std::vector<CellResult>& results,
                                          const std::vector<FailureRecord>& failures) {
  struct Acc {
    std::size_t n = 0, failed = 0, verbatim = 0, constituent_n = 0;
    double score_sum = 0.0;
    std::vector<std::size_t> group_hits;
  };
  using Cell = std::tuple<std::string, std::string, std::size_t>;
  std::vector<Cell> order;
  std::map<Cell, std::map<PiType, Acc>> acc;
  auto touch = [&](const std::string& m, const std::string& c, std::size_t p) -> std::map<PiType, Acc>& {
    Cell key{m, c, p};
    auto it = acc.find(key);
    if (it == acc.end()) {
      order.push_back(key);
      it = acc.emplace(key, std::map<PiType, Acc>{}).first;
    }
    return it->second;
  };

  for (const auto& cr : results) {
    auto& a = touch(cr.model, cr.checkpoint, cr.prefix_len)[cr.result.pi_type];
    ++a.n;
    a.score_sum += cr.result.score;
    a.verbatim += cr.result.verbatim ? 1 : 0;
    if (!cr.result.constituents.empty()) {
      a.group_hits.resize(cr.result.constituents.size(), 0);
      ++a.constituent_n;
      for (std::size_t g = 0; g < cr.result.constituents.size(); ++g) a.group_hits[g] += cr.result.constituents[g] ? 1 : 0;
    }
  }
  for (const auto& f : failures) ++touch(f.model, f.checkpoint, f.prefix_len)[f.pi_type].failed;

  std::vector<ExperimentRow> rows;
  for (const auto& key : order) {
    for (const auto& [type, a] : acc[key]) {
      ExperimentRow row;
      std::tie(row.model, row.checkpoint, row.prefix_len) = key;
      row.pi_type = type;
      row.n = a.n;
      row.failed = a.failed;
      if (a.n) {
        row.mean_score = a.score_sum / static_cast<double>(a.n);
        row.verbatim_rate = static_cast<double>(a.verbatim) / static_cast<double>(a.n);
      }
      row.constituent_n = a.constituent_n;
      for (std::size_t hits : a.group_hits) {
        row.constituent_rates.push_back(static_cast<double>(hits) / static_cast<double>(a.constituent_n));
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

ExperimentOutput run_experiment(const std::vector<PiInstance>& instances, const HarnessConfig& config,
                                const GeneratorSet& generators, const Tokenizer& tokenizer) {
  if (generators.size() != config.models.size()) throw ArgumentError("one generator per model required");

  ExperimentOutput out;
  for (const auto& inst : instances) {
    if (inst.prefix_pool.empty()) out.warnings.push_back("instance " + inst.instance_id + " has an empty prefix pool");
  }

  struct Task {
    std::size_t model;
    std::size_t prefix_len;
    std::size_t instance;
  };
  std::vector<Task> tasks;
  tasks.reserve(config.models.size() * config.prefix_lengths.size() * instances.size());
  for (std::size_t m = 0; m < config.models.size(); ++m) {
    for (std::size_t p : config.prefix_lengths) {
      for (std::size_t i = 0; i < instances.size(); ++i) tasks.push_back({m, p, i});
    }
  }

  struct Slot {
    std::optional<GenerationRecord> generation;
    std::optional<ParrotResult> result;
    std::optional<FailureRecord> failure;
  };
  std::vector<Slot> slots(tasks.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr fatal;
  std::mutex fatal_mu;

  auto work = [&] {
    for (;;) {
      if (abort.load()) return;
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks.size()) return;
      const Task& task = tasks[t];
      const PiInstance& inst = instances[task.instance];
      const ModelSpec& model = config.models[task.model];
      try {
        GenerationRequest req;
        req.instance_id = inst.instance_id;
        req.model = model.tag;
        req.checkpoint = model.checkpoint;
        req.prefix_len = task.prefix_len;
        req.prompt = extract_prefix(inst, task.prefix_len, tokenizer);
        req.max_new_tokens = config.generation_length;
        auto gen = generators[task.model]->generate(req);
        slots[t].result = evaluate_instance(inst, gen);
        slots[t].generation = std::move(gen);
      } catch (const GenerationError& e) {
        slots[t].failure = FailureRecord{inst.instance_id, inst.pi_type, model.tag, model.checkpoint, task.prefix_len,
                                         e.what(), e.attempts()};
      } catch (...) {
        std::lock_guard lock(fatal_mu);
        if (!fatal) fatal = std::current_exception();
        abort = true;
        return;
      }
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(config.max_inflight, tasks.size()));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (fatal) std::rethrow_exception(fatal);

  std::map<std::tuple<std::string, std::string, std::size_t>, std::pair<std::size_t, std::size_t>> cell_counts;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const ModelSpec& model = config.models[tasks[t].model];
    auto& counts = cell_counts[{model.tag, model.checkpoint, tasks[t].prefix_len}];
    ++counts.first;
    auto& slot = slots[t];
    if (slot.failure) {
      ++counts.second;
      out.failures.push_back(std::move(*slot.failure));
      continue;
    }
    out.generations.push_back(std::move(*slot.generation));
    out.results.push_back(CellResult{model.tag, model.checkpoint, tasks[t].prefix_len, std::move(*slot.result)});
  }
  for (std::size_t m = 0; m < config.models.size(); ++m) {
    const ModelSpec& model = config.models[m];
    for (std::size_t p : config.prefix_lengths) {
      const auto it = cell_counts.find({model.tag, model.checkpoint, p});
      if (it == cell_counts.end() || it->second.first == 0) continue;
      const double rate = static_cast<double>(it->second.second) / static_cast<double>(it->second.first);
      if (rate > config.failure_threshold) out.unreliable_cells.push_back(cell_label(model.tag, model.checkpoint, p));
    }
  }
  out.rows = aggregate_rows(out.results, out.failures);
  return out;
}

void write_experiment(const ExperimentOutput& output, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  auto open = [&](const char* name) {
    std::ofstream f(out_dir / name, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + (out_dir / name).string());
    return f;
  };
  {
    auto f = open("rows.jsonl");
    for (const auto& row : output.rows) f << experiment_row_to_json(row) << '\n';
  }
  {
    auto f = open("results.jsonl");
    for (const auto& cr : output.results) {
      auto j = ordered_json::parse(parrot_result_to_json(cr.result));
      ordered_json rec;
      rec["instance_id"] = cr.result.instance_id;
      rec["model"] = cr.model;
      rec["checkpoint"] = cr.checkpoint;
      rec["prefix_len"] = cr.prefix_len;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() != "instance_id") rec[it.key()] = it.value();
      }
      f << dump(rec) << '\n';
    }
  }
  {
    auto f = open("generations.jsonl");
    for (const auto& g : output.generations) f << generation_record_to_json(g) << '\n';
  }
  {
    auto f = open("failures.jsonl");
    for (const auto& fr : output.failures) {
      ordered_json j;
      j["instance_id"] = fr.instance_id;
      j["pi_type"] = std::string(to_string(fr.pi_type));
      j["model"] = fr.model;
      j["checkpoint"] = fr.checkpoint;
      j["prefix_len"] = fr.prefix_len;
      j["error"] = fr.error;
      j["attempts"] = fr.attempts;
      f << dump(j) << '\n';
    }
  }
  {
    auto f = open("run.json");
    ordered_json j;
    j["unreliable"] = !output.unreliable_cells.empty();
    j["unreliable_cells"] = output.unreliable_cells;
    j["evaluated"] = output.results.size();
    j["failed"] = output.failures.size();
    j["warnings"] = output.warnings;
    f << j.dump(2) << '\n';
  }
}

}  // namespace piscan
