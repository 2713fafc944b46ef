// concord: concept-ordering toolkit command line.
//
// Exit codes: 0 success, 2 usage error, 3 data/validation error, 4 transport error.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "concord/concord.hpp"

namespace {

using namespace concord;
using nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitTransport = 4;

int exit_code_for(Errc c) {
  switch (c) {
    case Errc::usage: return kExitUsage;
    case Errc::transport:
    case Errc::empty_generation: return kExitTransport;
    default: return kExitData;
  }
}

// JSON config files: top-level keys are global flags, nested objects are
// subcommand sections, e.g. {"order": {"strategy": "random", "seed": 3}}.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConfigError(std::string("invalid JSON config: ") + e.what());
    }
    std::vector<CLI::ConfigItem> items;
    walk(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

  static void walk(const nlohmann::json& obj, const std::vector<std::string>& parents,
                   std::vector<CLI::ConfigItem>& items) {
    if (!obj.is_object()) throw CLI::ConfigError("JSON config must be an object");
    for (const auto& [key, v] : obj.items()) {
      if (v.is_object()) {
        auto p = parents;
        p.push_back(key);
        CLI::ConfigItem open;
        open.parents = p;
        open.name = "++";
        items.push_back(open);
        walk(v, p, items);
        CLI::ConfigItem close;
        close.parents = p;
        close.name = "--";
        items.push_back(close);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (v.is_array()) {
        for (const auto& x : v) item.inputs.push_back(scalar(x));
      } else if (v.is_boolean()) {
        item.inputs.push_back(v.get<bool>() ? "true" : "false");
      } else {
        item.inputs.push_back(scalar(v));
      }
      items.push_back(item);
    }
  }
};

void require_file(const std::string& path, const char* what) {
  if (!std::filesystem::is_regular_file(path)) throw Error(Errc::io, std::string(what) + " '" + path + "' does not exist");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write '" + path + "'");
  return out;
}

// Writes to `path`, or to stdout when `to_stdout`.
template <typename Fn>
void emit(const std::string& path, bool to_stdout, Fn&& fn) {
  if (to_stdout) {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  auto out = open_out(path);
  fn(out);
  if (!out) throw Error(Errc::io, "write failed for '" + path + "'");
}

std::string unescape(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      const char n = s[++i];
      out.push_back(n == 'n' ? '\n' : n == 't' ? '\t' : n == 'r' ? '\r' : n);
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr err;
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < jobs; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(err_mu);
            if (!err) err = std::current_exception();
          }
        }
      });
    }
  }
  if (err) std::rethrow_exception(err);
}

LexicalMatcher make_matcher(const std::string& dict_path) {
  if (dict_path.empty()) return {};
  require_file(dict_path, "lemma dictionary");
  return LexicalMatcher::from_file(dict_path);
}

std::vector<Instance> read_instances(const std::string& path, bool lenient) {
  require_file(path, "instances file");
  auto loaded = load_instances(path, lenient);
  for (const auto& p : loaded.problems) std::cerr << "warning: " << path << ":" << p.line << ": " << p.message << "\n";
  return std::move(loaded.instances);
}

// ---------------------------------------------------------------- build-graph

struct BuildGraphArgs {
  std::string dump, out, summary_out;
  std::vector<std::string> allow, deny;
  bool to_stdout = false;
};

int cmd_build_graph(const BuildGraphArgs& a) {
  require_file(a.dump, "dump");
  RelationFilter filter;
  for (const auto& r : a.allow) filter.allow.insert(relation_name(r));
  for (const auto& r : a.deny) filter.deny.insert(relation_name(r));
  const auto g = load_graph_file(a.dump, filter);
  g.save_snapshot(a.out);
  const std::string summary = g.summary().to_json().dump(2);
  std::cerr << summary << "\n";
  if (!a.summary_out.empty()) emit(a.summary_out, false, [&](std::ostream& o) { o << summary << "\n"; });
  if (a.to_stdout) std::cout << g.summary().to_json().dump() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------- build-transitions

struct BuildTransitionsArgs {
  std::string graph, vocab, vocab_instances, out, counts_out;
  std::size_t max_path = 5, walks_per_start = 100, jobs = 1;
  std::uint64_t seed = 0;
  double default_prob = 0.5, laplace = 0.0;
  bool count_all = false, stamp_time = false, to_stdout = false;
};

std::vector<ConceptId> read_vocab(const BuildTransitionsArgs& a, std::size_t& rejected) {
  std::vector<ConceptId> vocab;
  std::set<ConceptId> seen;
  auto add = [&](const std::string& raw) {
    auto c = normalize_concept(raw);
    if (!c) {
      ++rejected;
      return;
    }
    if (seen.insert(*c).second) vocab.push_back(*c);
  };
  if (!a.vocab.empty()) {
    std::ifstream in(a.vocab);
    IstreamLines lines(in);
    std::string line;
    while (lines.next(line)) {
      const auto b = line.find_first_not_of(" \t");
      if (b == std::string::npos || line[b] == '#') continue;
      add(line.substr(b, line.find_last_not_of(" \t") - b + 1));
    }
  }
  if (!a.vocab_instances.empty()) {
    // Concepts of the given instances, in first-seen order.
    for (const auto& inst : read_instances(a.vocab_instances, true)) {
      for (const auto& c : inst.concepts) add(c.str());
    }
  }
  return vocab;
}

int cmd_build_transitions(const BuildTransitionsArgs& a) {
  require_file(a.graph, "graph");
  if (a.vocab.empty() == a.vocab_instances.empty()) {
    throw Error(Errc::usage, "exactly one of --vocab or --vocab-instances is required");
  }
  if (!a.vocab.empty()) require_file(a.vocab, "vocabulary");
  if (!a.vocab_instances.empty()) require_file(a.vocab_instances, "instances file");

  const auto graph = open_graph(a.graph);
  std::size_t rejected = 0;
  const auto vocab = read_vocab(a, rejected);
  if (vocab.empty()) throw Error(Errc::empty_seed, "vocabulary is empty");

  WalkConfig cfg;
  cfg.max_path_concepts = a.max_path;
  cfg.walks_per_start = a.walks_per_start;
  cfg.seed = a.seed;
  if (!a.count_all) cfg.vocabulary = std::set<ConceptId>(vocab.begin(), vocab.end());

  SampleStats stats;
  const auto t0 = std::chrono::steady_clock::now();
  const auto counts = sample_walks(graph, vocab, cfg, a.jobs, &stats);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cerr << "sampled " << stats.walks << " walks from " << stats.starts_used << " starts (" << stats.starts_missing
            << " not in graph) in " << secs << " s; " << counts.size() << " ordered pairs\n";

  const auto table = estimate(counts, {a.default_prob, a.laplace});

  ordered_json meta;
  meta["format"] = "concord-transitions";
  meta["version"] = 1;
  auto walk = cfg.to_json();
  const auto stats_json = stats.to_json();
  for (const auto& [k, v] : stats_json.items()) walk[k] = v;
  walk["vocabulary_rejected"] = rejected;
  meta["walk"] = walk;
  meta["graph"] = graph.summary().to_json();
  meta["vocabulary_source"] = a.vocab.empty() ? a.vocab_instances : a.vocab;
  if (a.stamp_time) {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    meta["created_at"] = buf;
  }
  emit(a.out, a.to_stdout, [&](std::ostream& o) { table.write(o, meta); });
  if (!a.counts_out.empty()) emit(a.counts_out, false, [&](std::ostream& o) { counts.write_tsv(o); });
  return kExitOk;
}

// ---------------------------------------------------------------------- order

struct OrderArgs {
  std::string instances, strategy, table, format = "space", out, sidecar, lemma_dict;
  std::uint64_t seed = 0;
  std::size_t jobs = 1, reference_index = 0;
  bool lenient = false, to_stdout = false;
};

int cmd_order(const OrderArgs& a) {
  const auto strategy = parse_strategy(a.strategy);
  if (!strategy) throw Error(Errc::usage, "unknown strategy '" + a.strategy + "'");
  const auto fmt = parse_format(a.format);
  if (!fmt) throw Error(Errc::usage, "unknown format '" + a.format + "'");
  if (*strategy == Strategy::Probabilistic && a.table.empty()) {
    throw Error(Errc::usage, "--strategy probabilistic requires --table");
  }
  if (a.out.empty() && !a.to_stdout) throw Error(Errc::usage, "--out or --stdout is required");
  require_file(a.instances, "instances file");
  if (!a.table.empty()) require_file(a.table, "transition table");

  const auto instances = read_instances(a.instances, a.lenient);
  std::optional<TransitionTable> table;
  nlohmann::json table_meta;
  if (!a.table.empty()) {
    std::ifstream in(a.table);
    table = TransitionTable::read(in, &table_meta);
  }
  const auto matcher = make_matcher(a.lemma_dict);
  if (*strategy == Strategy::Example) {
    std::cerr << "note: example ordering reads the reference sentences; it is an oracle/upper bound, "
                 "not usable at test time\n";
  }

  std::vector<Ordering> orderings(instances.size());
  parallel_for(instances.size(), a.jobs, [&](std::size_t i) {
    const auto& inst = instances[i];
    switch (*strategy) {
      case Strategy::Original: orderings[i] = order_original(inst.concepts); break;
      case Strategy::Random: orderings[i] = order_random(inst.concepts, mix_seed(a.seed, i)); break;
      case Strategy::Probabilistic: orderings[i] = order_probabilistic(*table, inst.concepts); break;
      case Strategy::Example: {
        const std::size_t r = std::min(a.reference_index, inst.references.size() - 1);
        orderings[i] = order_example(inst.references[r], inst.concepts, matcher);
        break;
      }
    }
  });

  std::size_t flagged = 0;
  std::ostringstream lines, side;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& o = orderings[i];
    const std::string formatted = format_input(instances[i].concepts, o, *fmt);
    lines << formatted << '\n';
    ordered_json j;
    j["id"] = instances[i].id;
    j["strategy"] = strategy_name(o.strategy);
    j["concepts"] = ordered_json::array();
    for (const auto& c : o.concepts) j["concepts"].push_back(c.str());
    j["formatted"] = formatted;
    j["format"] = format_name(*fmt);
    if (o.score) {
      j["score"] = std::isfinite(*o.score) ? ordered_json(*o.score) : ordered_json("-inf");
    }
    if (*strategy == Strategy::Example) j["uses_reference"] = true;
    j["flags"] = o.flags;
    flagged += !o.flags.empty();
    side << j.dump() << '\n';
  }
  emit(a.out, a.to_stdout, [&](std::ostream& o) { o << lines.str(); });
  const std::string sidecar = !a.sidecar.empty() ? a.sidecar : (a.out.empty() ? std::string() : a.out + ".jsonl");
  if (!sidecar.empty()) emit(sidecar, false, [&](std::ostream& o) { o << side.str(); });
  std::cerr << "ordered " << instances.size() << " instances (" << strategy_name(*strategy) << "); " << flagged
            << " flagged\n";
  return kExitOk;
}

// ------------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string instances, generations, orderings, out, label, lemma_dict;
  std::size_t jobs = 1;
  bool lenient = false, to_stdout = false;
};

std::vector<nlohmann::json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  IstreamLines lines(in);
  std::vector<nlohmann::json> out;
  std::string line;
  std::size_t lineno = 0;
  while (lines.next(line)) {
    ++lineno;
    if (is_blank(line)) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw Error(Errc::validation, path + ":" + std::to_string(lineno) + ": not a JSON object");
    }
    out.push_back(std::move(j));
  }
  return out;
}

bool looks_like_jsonl(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    return line[b] == '{';
  }
  return false;
}

int cmd_evaluate(const EvaluateArgs& a) {
  if (a.generations.empty() == a.orderings.empty()) {
    throw Error(Errc::usage, "exactly one of --generations or --orderings is required");
  }
  if (a.out.empty() && !a.to_stdout) throw Error(Errc::usage, "--out or --stdout is required");
  require_file(a.instances, "instances file");
  const std::string input = a.generations.empty() ? a.orderings : a.generations;
  require_file(input, a.generations.empty() ? "orderings file" : "generations file");

  const auto instances = read_instances(a.instances, a.lenient);
  const auto matcher = make_matcher(a.lemma_dict);
  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < instances.size(); ++i) by_id.emplace(instances[i].id, i);

  // Each job is (instance index, candidate); candidate is a sentence or an ordering.
  struct Job {
    std::size_t instance;
    std::string sentence;
    std::vector<ConceptId> ordering;
    std::string strategy;
    bool missing = false;
  };
  std::vector<Job> jobs;
  auto instance_for = [&](const nlohmann::json& j, std::size_t row) {
    if (j.contains("id")) {
      const auto it = by_id.find(j["id"].get<std::string>());
      if (it == by_id.end()) throw Error(Errc::validation, input + ": unknown instance id '" + j["id"].get<std::string>() + "'");
      return it->second;
    }
    if (row >= instances.size()) throw Error(Errc::validation, input + ": more rows than instances");
    return row;
  };

  if (!a.generations.empty()) {
    if (looks_like_jsonl(a.generations)) {
      std::vector<bool> seen(instances.size(), false);
      const auto rows = read_jsonl(a.generations);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (!rows[r].contains("text") || !rows[r]["text"].is_string()) {
          throw Error(Errc::validation, a.generations + ": row " + std::to_string(r + 1) + " has no 'text'");
        }
        const std::size_t i = instance_for(rows[r], r);
        seen[i] = true;
        jobs.push_back({i, rows[r]["text"].get<std::string>(), {}, rows[r].value("strategy", a.label), false});
      }
      for (std::size_t i = 0; i < instances.size(); ++i) {
        if (!seen[i]) jobs.push_back({i, {}, {}, a.label, true});
      }
    } else {
      std::ifstream in(a.generations);
      IstreamLines lines(in);
      std::string line;
      std::vector<std::string> texts;
      while (lines.next(line)) texts.push_back(line);
      if (texts.size() != instances.size()) {
        throw Error(Errc::validation, a.generations + " has " + std::to_string(texts.size()) + " lines for " +
                                          std::to_string(instances.size()) + " instances");
      }
      for (std::size_t i = 0; i < texts.size(); ++i) jobs.push_back({i, texts[i], {}, a.label, false});
    }
  } else {
    const auto rows = read_jsonl(a.orderings);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (!rows[r].contains("concepts") || !rows[r]["concepts"].is_array()) {
        throw Error(Errc::validation, a.orderings + ": row " + std::to_string(r + 1) + " has no 'concepts'");
      }
      Job job{instance_for(rows[r], r), {}, {}, rows[r].value("strategy", a.label), false};
      for (const auto& c : rows[r]["concepts"]) job.ordering.emplace_back(c.get<std::string>());
      jobs.push_back(std::move(job));
    }
  }

  std::vector<EvalRecord> records(jobs.size());
  parallel_for(jobs.size(), a.jobs, [&](std::size_t k) {
    const auto& job = jobs[k];
    const auto& inst = instances[job.instance];
    if (job.missing) {
      records[k] = extract_and_score(inst.id, "", inst.concepts, inst.references, matcher);
      records[k].flags.insert(records[k].flags.begin(), "missing-generation");
    } else if (a.orderings.empty()) {
      records[k] = extract_and_score(inst.id, job.sentence, inst.concepts, inst.references, matcher);
    } else {
      records[k] = score_ordering(inst.id, job.ordering, inst.concepts, inst.references, matcher);
    }
    records[k].strategy = job.strategy;
  });

  const auto report = aggregate(records);
  if (a.to_stdout) std::cout << report.to_json().dump(2) << "\n";
  if (!a.out.empty()) {
    emit(a.out + ".report.json", false, [&](std::ostream& o) { o << report.to_json().dump(2) << "\n"; });
    emit(a.out + ".report.txt", false, [&](std::ostream& o) { o << report.to_text(); });
    emit(a.out + ".records.jsonl", false, [&](std::ostream& o) {
      for (const auto& r : records) o << r.to_json().dump() << "\n";
    });
  }
  std::cerr << report.to_text();
  return kExitOk;
}

// ------------------------------------------------------------------- generate

struct GenerateArgs {
  std::string instances, orderings, out, format = "space", record, replay, style = "completion", stop = "\\n";
  GeneratorSpec spec;
  bool lenient = false;
};

int cmd_generate(GenerateArgs a) {
  require_file(a.instances, "instances file");
  if (!a.orderings.empty()) require_file(a.orderings, "orderings file");
  if (!a.replay.empty()) require_file(a.replay, "transcript");
  if (a.spec.endpoint.empty() && a.replay.empty()) throw Error(Errc::usage, "--endpoint (URL or 'stub') or --replay is required");
  const auto fmt = parse_format(a.format);
  if (!fmt) throw Error(Errc::usage, "unknown format '" + a.format + "'");
  if (a.style == "alignment") {
    a.spec.style = PromptStyle::Alignment;
  } else if (a.style != "completion") {
    throw Error(Errc::usage, "unknown prompt style '" + a.style + "'");
  }
  a.spec.stop_sequence = unescape(a.stop);
  a.spec.validate();

  const auto instances = read_instances(a.instances, a.lenient);
  std::vector<BatchItem> items;
  if (!a.orderings.empty()) {
    std::map<std::string, const Instance*> by_id;
    for (const auto& inst : instances) by_id.emplace(inst.id, &inst);
    for (const auto& row : read_jsonl(a.orderings)) {
      const auto id = row.value("id", "");
      const auto it = by_id.find(id);
      if (it == by_id.end()) throw Error(Errc::validation, a.orderings + ": unknown instance id '" + id + "'");
      std::string formatted = row.value("formatted", "");
      if (formatted.empty()) {
        Ordering o;
        for (const auto& c : row.at("concepts")) o.concepts.emplace_back(c.get<std::string>());
        formatted = format_input(it->second->concepts, o, *fmt);
      }
      items.push_back({id, build_prompt(a.spec, formatted)});
    }
  } else {
    for (const auto& inst : instances) {
      items.push_back({inst.id, build_prompt(a.spec, format_input(inst.concepts, order_original(inst.concepts), *fmt))});
    }
  }

  std::unique_ptr<Backend> base;
  if (!a.replay.empty()) {
    base = std::make_unique<ReplayBackend>(a.replay);
  } else {
    base = make_backend(a.spec);
  }
  std::unique_ptr<TranscriptRecorder> recorder;
  Backend* backend = base.get();
  if (!a.record.empty()) {
    recorder = std::make_unique<TranscriptRecorder>(*base, a.record);
    backend = recorder.get();
  }
  Generator gen(a.spec, *backend, nullptr, [](const CallLogEntry& e) {
    std::cerr << "call attempt=" << e.attempt << " latency_ms=" << e.latency_ms << (e.ok ? " ok" : " error: " + e.error)
              << "\n";
  });
  const auto results = generate_batch(gen, items);

  std::size_t failed = 0;
  bool transport_failure = false;
  emit(a.out, false, [&](std::ostream& o) {
    for (std::size_t i = 0; i < results.size(); ++i) {
      if (!results[i].text) {
        ++failed;
        transport_failure = transport_failure || results[i].error->code() == Errc::transport ||
                            results[i].error->code() == Errc::empty_generation;
        std::cerr << "error: " << results[i].id << ": " << results[i].error->what() << "\n";
        continue;
      }
      ordered_json j;
      j["id"] = results[i].id;
      j["prompt"] = items[i].prompt;
      j["text"] = *results[i].text;
      o << j.dump() << "\n";
    }
  });
  std::cerr << "generated " << results.size() - failed << "/" << results.size() << "\n";
  if (failed) return transport_failure ? kExitTransport : kExitData;
  return kExitOk;
}

// ------------------------------------------------------------ import-commongen

struct ImportArgs {
  std::string src, split, out;
  bool to_stdout = false;
};

int cmd_import(const ImportArgs& a) {
  const auto split = parse_split(a.split);
  if (!split) throw Error(Errc::usage, "split must be train, dev or test");
  require_file(a.src, "source");
  const auto result = import_commongen(a.src, *split);
  emit(a.out, a.to_stdout, [&](std::ostream& o) { write_instances(o, result.instances); });
  std::cerr << result.stats.to_json().dump(2) << "\n";
  if (result.stats.published_sets != result.stats.instances) {
    std::cerr << "note: " << result.stats.instances << " concept sets imported; the published " << a.split
              << " split has " << result.stats.published_sets << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"concord: concept ordering for keyword-to-sentence generation"};
  app.require_subcommand(1, 1);
  app.set_config("--config", "", "TOML or JSON file mirroring the command-line flags");
  for (int i = 1; i + 1 < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && std::string(argv[i + 1]).ends_with(".json")) {
      app.config_formatter(std::make_shared<JsonConfig>());
    }
  }

  BuildGraphArgs bg;
  auto* s_bg = app.add_subcommand("build-graph", "Parse an assertion dump into a graph snapshot");
  s_bg->add_option("--dump", bg.dump, "Tab-separated assertion dump (optionally gzip-compressed)")->required();
  s_bg->add_option("--out", bg.out, "Snapshot output path")->required();
  s_bg->add_option("--allow-relation", bg.allow, "Keep only these relations (repeatable)");
  s_bg->add_option("--deny-relation", bg.deny, "Drop these relations (repeatable)");
  s_bg->add_option("--summary", bg.summary_out, "Write the load summary JSON here");
  s_bg->add_flag("--stdout", bg.to_stdout, "Print the load summary JSON on stdout");

  BuildTransitionsArgs bt;
  auto* s_bt = app.add_subcommand("build-transitions", "Sample walks and estimate pairwise transition probabilities");
  s_bt->add_option("--graph", bt.graph, "Graph snapshot or raw dump")->required();
  s_bt->add_option("--vocab", bt.vocab, "Start/vocabulary concepts, one per line");
  s_bt->add_option("--vocab-instances", bt.vocab_instances, "Use the concepts of these instances as the vocabulary");
  s_bt->add_option("--out", bt.out, "Transition table output path");
  s_bt->add_option("--counts-out", bt.counts_out, "Also write raw precedence counts (TSV)");
  s_bt->add_option("--max-path", bt.max_path, "Maximum concepts per walk")->capture_default_str()->check(CLI::Range(2, 1 << 20));
  s_bt->add_option("--walks-per-start", bt.walks_per_start, "Walks sampled per start concept")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  s_bt->add_option("--seed", bt.seed, "Random seed")->capture_default_str();
  s_bt->add_option("-j,--jobs", bt.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  s_bt->add_option("--default-prob", bt.default_prob, "Probability for unseen pairs")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  s_bt->add_option("--laplace", bt.laplace, "Add-alpha smoothing per direction")->capture_default_str()->check(CLI::NonNegativeNumber);
  s_bt->add_flag("--count-all", bt.count_all, "Count pairs involving concepts outside the vocabulary too");
  s_bt->add_flag("--stamp-time", bt.stamp_time, "Record wall-clock creation time in the metadata header");
  s_bt->add_flag("--stdout", bt.to_stdout, "Write the table to stdout");

  OrderArgs od;
  auto* s_od = app.add_subcommand("order", "Order the concept set of every instance");
  s_od->add_option("--instances", od.instances, "Canonical instances JSONL")->required();
  s_od->add_option("--strategy", od.strategy, "original | random | probabilistic | example")->required();
  s_od->add_option("--table", od.table, "Transition table (probabilistic)");
  s_od->add_option("--seed", od.seed, "Random seed (random)")->capture_default_str();
  s_od->add_option("--format", od.format, "space | comma | token")->capture_default_str();
  s_od->add_option("--out", od.out, "Formatted lines, one per instance");
  s_od->add_option("--sidecar", od.sidecar, "JSONL with strategy, score and flags (default: <out>.jsonl)");
  s_od->add_option("--reference-index", od.reference_index, "Reference sentence used by the example strategy")->capture_default_str();
  s_od->add_option("--lemma-dict", od.lemma_dict, "inflected<TAB>lemma overrides");
  s_od->add_option("-j,--jobs", od.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  s_od->add_flag("--lenient", od.lenient, "Skip invalid instance lines instead of aborting");
  s_od->add_flag("--stdout", od.to_stdout, "Write formatted lines to stdout");

  EvaluateArgs ev;
  auto* s_ev = app.add_subcommand("evaluate", "Score generations or orderings against the references");
  s_ev->add_option("--instances", ev.instances, "Canonical instances JSONL")->required();
  s_ev->add_option("--generations", ev.generations, "Generated sentences: JSONL {id, text} or one line per instance");
  s_ev->add_option("--orderings", ev.orderings, "Orderings JSONL (as written by 'order')");
  s_ev->add_option("--out", ev.out, "Output prefix for .report.json, .report.txt, .records.jsonl");
  s_ev->add_option("--label", ev.label, "Strategy label for rows that carry none");
  s_ev->add_option("--lemma-dict", ev.lemma_dict, "inflected<TAB>lemma overrides");
  s_ev->add_option("-j,--jobs", ev.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  s_ev->add_flag("--lenient", ev.lenient, "Skip invalid instance lines instead of aborting");
  s_ev->add_flag("--stdout", ev.to_stdout, "Print the report JSON on stdout");

  GenerateArgs gn;
  auto* s_gn = app.add_subcommand("generate", "Turn orderings into sentences through a generation service");
  s_gn->add_option("--instances", gn.instances, "Canonical instances JSONL")->required();
  s_gn->add_option("--orderings", gn.orderings, "Orderings JSONL; default is the original order");
  s_gn->add_option("--out", gn.out, "Generations JSONL {id, prompt, text}")->required();
  s_gn->add_option("--format", gn.format, "Format used when an ordering row has no 'formatted' field")->capture_default_str();
  s_gn->add_option("--endpoint", gn.spec.endpoint, "http(s) URL of the JSON completion service, or 'stub'");
  s_gn->add_option("--model", gn.spec.model, "Model name sent with every request");
  s_gn->add_option("--prompt-style", gn.style, "completion | alignment")->capture_default_str();
  s_gn->add_option("--prefix", gn.spec.prompt_prefix, "Prompt prefix")->capture_default_str();
  s_gn->add_option("--separator", gn.spec.separator, "Separator appended to the prompt")->capture_default_str();
  s_gn->add_option("--stop", gn.stop, "Stop sequence (escapes \\n \\t allowed)")->capture_default_str();
  s_gn->add_option("--timeout", gn.spec.timeout_seconds, "Per-request timeout in seconds")->capture_default_str();
  s_gn->add_option("--retries", gn.spec.max_retries, "Retries on transient failures")->capture_default_str();
  s_gn->add_option("--max-tokens", gn.spec.max_tokens, "max_tokens sent with every request")->capture_default_str();
  s_gn->add_option("--rpm", gn.spec.requests_per_minute, "Requests per minute (0: unlimited)")->capture_default_str();
  s_gn->add_option("--concurrency", gn.spec.concurrency, "Requests in flight")->capture_default_str();
  s_gn->add_option("--record", gn.record, "Append request/response transcript here");
  s_gn->add_option("--replay", gn.replay, "Serve completions from a transcript instead of the network");
  s_gn->add_flag("--lenient", gn.lenient, "Skip invalid instance lines instead of aborting");

  ImportArgs im;
  auto* s_im = app.add_subcommand("import-commongen", "Convert a CommonGen release file to canonical JSONL");
  s_im->add_option("--src", im.src, "Release file (.jsonl or .src_alpha.txt)")->required();
  s_im->add_option("--split", im.split, "train | dev | test")->required();
  s_im->add_option("--out", im.out, "Canonical JSONL output");
  s_im->add_flag("--stdout", im.to_stdout, "Write JSONL to stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*s_bg) return cmd_build_graph(bg);
    if (*s_bt) {
      if (bt.out.empty() && !bt.to_stdout) throw Error(Errc::usage, "--out or --stdout is required");
      return cmd_build_transitions(bt);
    }
    if (*s_od) return cmd_order(od);
    if (*s_ev) return cmd_evaluate(ev);
    if (*s_gn) return cmd_generate(gn);
    if (*s_im) {
      if (im.out.empty() && !im.to_stdout) throw Error(Errc::usage, "--out or --stdout is required");
      return cmd_import(im);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
