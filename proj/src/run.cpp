// Copyright 2026 The catchdec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "catchdec/run.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <thread>

#include "catchdec/errors.hpp"
#include "catchdec/grounded_toy.hpp"
#include "catchdec/remote_backend.hpp"
#include "catchdec/scripted_backend.hpp"
#include "catchdec/text.hpp"
#include "catchdec/trace_io.hpp"

#ifndef CATCHDEC_DATA_DIR
#define CATCHDEC_DATA_DIR "data"
#endif

namespace catchdec {
namespace {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

struct Sample {
  std::string id;
  std::unique_ptr<Backend> owned;
  SessionRequest request;
  std::optional<TokenId> stop;
};

struct Outcome {
  DecodeResult result;
  std::string error;  // session could not be opened
};

std::string scenario_format(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open input");
  std::string line;
  while (std::getline(in, line)) {
    if (text::is_ignorable(line)) continue;
    const auto f = text::split_ws(line);
    if (f.size() == 2 && f[0] == "format") return std::string(f[1]);
    break;
  }
  throw ParseError(path.string(), 0, "not a scenario file (missing `format` line)");
}

std::optional<TokenId> token_index(const std::vector<std::string>& vocab, const std::string& tok) {
  const auto it = std::find(vocab.begin(), vocab.end(), tok);
  if (it == vocab.end()) return std::nullopt;
  return static_cast<TokenId>(it - vocab.begin());
}

std::string detokenize(const std::vector<TokenId>& tokens, const std::vector<std::string>& vocab) {
  std::string out;
  for (TokenId t : tokens) {
    if (!out.empty()) out += ' ';
    out += vocab[static_cast<std::size_t>(t)];
  }
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path.string(), 0, "cannot write output");
  out << content;
}

std::string sampling_name(const RunManifest& m) { return m.temperature > 0 ? "categorical" : "greedy"; }

}  // namespace

LoadedScenario load_scenario(const fs::path& path, const std::string& id, double top_m_fraction) {
  LoadedScenario out;
  const std::string format = scenario_format(path);
  if (format == "scripted") {
    auto backend = load_scripted(path);
    out.request = backend->default_request(id);
    out.stop_token = backend->scenario().stop_token;
    out.backend = std::move(backend);
  } else if (format == "grounded_toy") {
    auto backend = make_grounded_toy(load_grounded_toy(path));
    out.request = backend->default_request(id, top_m_fraction);
    out.stop_token = backend->scenario().stop_token;
    out.backend = std::move(backend);
  } else {
    throw ParseError(path.string(), 0, "unknown scenario format '" + format + "'");
  }
  return out;
}

SessionFile load_session_file(const fs::path& path, double top_m_fraction) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open session file");
  SessionFile out;
  SessionRequest& req = out.request;
  try {
    const auto j = nlohmann::json::parse(in);
    req.session_id = j.at("session_id").get<std::string>();
    req.vocab = j.at("vocab").get<std::vector<std::string>>();
    for (const auto& tok : j.value("prompt", std::vector<std::string>{})) {
      const auto t = token_index(req.vocab, tok);
      if (!t) throw ParseError(path.string(), 0, "prompt token '" + tok + "' not in vocab");
      req.prompt_tokens.push_back(*t);
    }
    if (j.contains("stop")) {
      out.stop_token = token_index(req.vocab, j["stop"].get<std::string>());
      if (!out.stop_token) throw ParseError(path.string(), 0, "stop token not in vocab");
    }
    if (j.contains("segmentation")) {
      fs::path seg = j["segmentation"].get<std::string>();
      if (seg.is_relative()) seg = path.parent_path() / seg;
      req.segmentation = seg;
      if (j.contains("top_m")) {
        req.top_m = j["top_m"].get<std::size_t>();
      } else {
        req.top_m = select_top_m(load_segmentation(seg).object_count(), top_m_fraction);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string(), 0, e.what());
  }
  return out;
}

DecodeConfig RunManifest::effective_config() const {
  DecodeConfig cfg = config;
  if (temperature > 0) {
    cfg.sampling = Categorical{temperature, seed};
  } else {
    cfg.sampling = Greedy{};
  }
  return cfg;
}

ordered_json RunManifest::to_json() const {
  ordered_json j;
  j["backend"] = backend;
  j["alpha"] = config.alpha;
  j["beta"] = config.beta;
  j["top_m_fraction"] = config.top_m_fraction;
  j["max_tokens"] = config.max_tokens;
  j["mode"] = config.mode == DecodeMode::baseline ? "baseline" : "catch";
  j["sampling"] = sampling_name(*this);
  j["temperature"] = temperature;
  j["seed"] = seed;
  j["timeout_ms"] = timeout_ms;
  std::vector<std::string> in;
  for (const auto& p : inputs) in.push_back(p.string());
  j["inputs"] = in;
  j["output_dir"] = output_dir.string();
  return j;
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  try {
    m.backend = j.value("backend", m.backend);
    m.config.alpha = j.value("alpha", m.config.alpha);
    m.config.beta = j.value("beta", m.config.beta);
    m.config.top_m_fraction = j.value("top_m_fraction", m.config.top_m_fraction);
    m.config.max_tokens = j.value("max_tokens", m.config.max_tokens);
    const std::string mode = j.value("mode", std::string("catch"));
    if (mode == "baseline") {
      m.config.mode = DecodeMode::baseline;
    } else if (mode != "catch") {
      throw DomainError("manifest: unknown mode '" + mode + "'");
    }
    m.temperature = j.value("temperature", 0.0);
    const std::string sampling = j.value("sampling", m.temperature > 0 ? "categorical" : "greedy");
    if (sampling == "greedy") {
      m.temperature = 0;
    } else if (sampling != "categorical" || !(m.temperature > 0)) {
      throw DomainError("manifest: sampling must be greedy, or categorical with temperature > 0");
    }
    m.seed = j.value("seed", std::uint64_t{0});
    m.timeout_ms = j.value("timeout_ms", m.timeout_ms);
    for (const auto& p : j.at("inputs").get<std::vector<std::string>>()) m.inputs.emplace_back(p);
    m.output_dir = j.at("output_dir").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("manifest: ") + e.what());
  }
  return m;
}

RunManifest RunManifest::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open manifest " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw DomainError("manifest " + path.string() + ": " + e.what());
  }
}

int run_decode(const RunManifest& manifest, std::ostream& log) {
  const DecodeConfig cfg = manifest.effective_config();
  std::vector<Sample> samples;
  try {
    cfg.validate();
    if (manifest.inputs.empty()) throw DomainError("no inputs");
    if (manifest.output_dir.empty()) throw DomainError("no output directory");
    const bool builtin = manifest.backend == "builtin";
    std::set<std::string> ids;
    for (const auto& path : manifest.inputs) {
      if (!fs::exists(path)) throw DomainError("input not found: " + path.string());
      Sample s;
      if (builtin) {
        s.id = path.stem().string();
        LoadedScenario sc = load_scenario(path, s.id, cfg.top_m_fraction);
        s.owned = std::move(sc.backend);
        s.request = std::move(sc.request);
        s.stop = sc.stop_token;
      } else {
        SessionFile sf = load_session_file(path, cfg.top_m_fraction);
        s.id = sf.request.session_id;
        s.request = std::move(sf.request);
        s.stop = sf.stop_token;
      }
      if (!ids.insert(s.id).second) throw DomainError("duplicate sample id '" + s.id + "'");
      samples.push_back(std::move(s));
    }
    fs::create_directories(manifest.output_dir);
    write_file(manifest.output_dir / "manifest.json", manifest.to_json().dump(2) + "\n");
  } catch (const std::exception& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  std::unique_ptr<RemoteBackend> remote;
  if (manifest.backend != "builtin") {
    try {
      remote = RemoteBackend::connect(manifest.backend, std::chrono::milliseconds(manifest.timeout_ms));
    } catch (const BackendError& e) {
      log << "backend error: " << e.what() << '\n';
      return kExitBackend;
    }
  }

  std::vector<Outcome> outcomes(samples.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < samples.size(); i = next++) {
      Sample& s = samples[i];
      Backend& backend = s.owned ? *s.owned : *remote;
      DecodeConfig sample_cfg = cfg;
      sample_cfg.stop_token = s.stop;
      try {
        auto session = backend.open_session(s.request);
        outcomes[i].result = decode(*session, sample_cfg);
      } catch (const std::exception& e) {
        outcomes[i].error = e.what();
      }
    }
  };
  const std::size_t n_workers =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::max<std::size_t>(samples.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  int status = kExitOk;
  std::string summary = "id\ttokens\tstopped\ttruncated\ttext\n";
  try {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const Sample& s = samples[i];
      const Outcome& o = outcomes[i];
      const auto& r = o.result;
      const fs::path base = manifest.output_dir / s.id;

      std::string tokens;
      for (std::size_t k = 0; k < r.tokens.size(); ++k) tokens += (k ? " " : "") + std::to_string(r.tokens[k]);
      const std::string text = detokenize(r.tokens, s.request.vocab);
      std::string trace;
      for (const auto& t : r.traces) trace += to_json_line(t) + "\n";

      ordered_json st;
      st["id"] = s.id;
      st["tokens"] = r.tokens.size();
      st["stopped"] = r.stopped;
      st["truncated"] = r.truncated || !o.error.empty();
      if (r.truncated) st["truncation_reason"] = r.truncation_reason;
      if (!o.error.empty()) st["error"] = o.error;

      write_file(base.string() + ".tokens", tokens + "\n");
      write_file(base.string() + ".txt", text + "\n");
      write_file(base.string() + ".trace.jsonl", trace);
      write_file(base.string() + ".status.json", st.dump(2) + "\n");
      summary += s.id + "\t" + std::to_string(r.tokens.size()) + "\t" + (r.stopped ? "1" : "0") + "\t" +
                 (st["truncated"].get<bool>() ? "1" : "0") + "\t" + text + "\n";

      if (!o.error.empty()) {
        log << s.id << ": backend error: " << o.error << '\n';
        status = kExitBackend;
      } else if (r.truncated) {
        log << s.id << ": truncated after " << r.tokens.size() << " tokens: " << r.truncation_reason << '\n';
        status = kExitBackend;
      }
    }
    write_file(manifest.output_dir / "summary.tsv", summary);
  } catch (const std::exception& e) {
    log << "output error: " << e.what() << '\n';
    return kExitFailure;
  }
  return status;
}

fs::path default_lexicon_path() {
  if (const char* env = std::getenv("CATCHDEC_DATA_DIR")) return fs::path(env) / "coco80_lexicon.tsv";
  return fs::path(CATCHDEC_DATA_DIR) / "coco80_lexicon.tsv";
}

ordered_json chair_report(const ChairScores& s) {
  ordered_json j;
  j["metric"] = "chair";
  if (s.instance) {
    j["chair_instance"] = *s.instance;
  } else {
    j["chair_instance"] = nullptr;
  }
  j["chair_sentence"] = s.sentence;
  j["captions"] = s.captions;
  j["mentioned_objects"] = s.mentioned;
  j["hallucinated_objects"] = s.hallucinated;
  j["captions_with_hallucination"] = s.captions_with_hallucination;
  return j;
}

namespace {

ordered_json pope_json(const PopeScores& s) {
  ordered_json j;
  j["accuracy"] = s.accuracy;
  j["precision"] = s.precision;
  j["recall"] = s.recall;
  j["f1"] = s.f1;
  j["yes_ratio"] = s.yes_ratio;
  j["tp"] = s.tp;
  j["fp"] = s.fp;
  j["tn"] = s.tn;
  j["fn"] = s.fn;
  j["total"] = s.total;
  j["parse_failures"] = s.parse_failures;
  return j;
}

}  // namespace

ordered_json pope_report(const std::vector<BinaryQARecord>& records) {
  ordered_json j;
  j["metric"] = "pope";
  j["overall"] = pope_json(pope_scores(records));
  std::map<std::string, std::vector<BinaryQARecord>> by_subset;
  for (const auto& r : records) by_subset[r.subset].push_back(r);
  ordered_json subsets = ordered_json::object();
  for (const auto& [name, recs] : by_subset) subsets[name] = pope_json(pope_scores(recs));
  j["subsets"] = subsets;
  return j;
}

ordered_json mme_report(const MmeScores& s) {
  ordered_json j;
  j["metric"] = "mme";
  j["scale"] = s.scale == MmeScale::percent ? "percent" : "unit";
  ordered_json subsets = ordered_json::object();
  for (const auto& name : kMmeSubsets) {
    const auto it = s.subset_accuracy.find(name);
    if (it == s.subset_accuracy.end()) continue;
    subsets[name] = {{"accuracy", it->second}, {"records", s.subset_count.at(name)}};
  }
  j["subsets"] = subsets;
  j["empty_subsets"] = s.empty_subsets;
  j["total"] = s.total;
  j["parse_failures"] = s.parse_failures;
  return j;
}

int run_eval(const EvalOptions& opts, std::ostream& out, std::ostream& log) {
  ordered_json report;
  try {
    switch (opts.kind) {
      case EvalKind::chair: {
        const Lexicon lexicon = Lexicon::load(opts.lexicon.empty() ? default_lexicon_path() : opts.lexicon);
        const auto captions = read_captions(opts.captions);
        const auto annotations = read_annotations(opts.annotations, lexicon);
        const auto records = build_caption_records(captions, annotations, lexicon);
        const ChairScores s = chair_scores(records);
        report = chair_report(s);
        out << "CHAIR over " << s.captions << " captions\n";
        out << "  instance-level (hallucinated objects / mentioned objects): "
            << (s.instance ? text::format_real(*s.instance) : std::string("undefined (no objects mentioned)"))
            << "  [" << s.hallucinated << "/" << s.mentioned << "]\n";
        out << "  sentence-level (captions with hallucination / captions): " << text::format_real(s.sentence)
            << "  [" << s.captions_with_hallucination << "/" << s.captions << "]\n";
        break;
      }
      case EvalKind::pope: {
        const auto records = read_qa(opts.answers);
        report = pope_report(records);
        const auto& o = report["overall"];
        out << "POPE over " << o["total"] << " questions\n";
        out << "  accuracy " << o["accuracy"] << "  precision " << o["precision"] << "  recall " << o["recall"]
            << "  f1 " << o["f1"] << "  yes_ratio " << o["yes_ratio"] << '\n';
        out << "  parse failures (counted as \"no\"): " << o["parse_failures"] << '\n';
        for (const auto& [name, sub] : report["subsets"].items()) {
          out << "  [" << name << "] accuracy " << sub["accuracy"] << "  f1 " << sub["f1"] << '\n';
        }
        break;
      }
      case EvalKind::mme: {
        const auto records = read_qa(opts.answers);
        const MmeScores s = mme_scores(records, opts.mme_scale);
        report = mme_report(s);
        out << "MME (" << (s.scale == MmeScale::percent ? "percent" : "unit") << " scale)\n";
        for (const auto& [name, acc] : s.subset_accuracy) {
          out << "  " << name << ": " << text::format_real(acc) << "  (" << s.subset_count.at(name) << " records)\n";
        }
        for (const auto& name : s.empty_subsets) out << "  " << name << ": no records (excluded from total)\n";
        out << "  total: " << text::format_real(s.total) << '\n';
        out << "  parse failures (counted as \"no\"): " << s.parse_failures << '\n';
        break;
      }
    }
  } catch (const std::exception& e) {
    log << "eval error: " << e.what() << '\n';
    return kExitConfig;
  }
  if (opts.json_out) {
    try {
      write_file(*opts.json_out, report.dump(2) + "\n");
    } catch (const std::exception& e) {
      log << "output error: " << e.what() << '\n';
      return kExitFailure;
    }
  }
  return kExitOk;
}

int run_diagnose(const DiagnoseOptions& opts, std::ostream& out, std::ostream& log) {
  constexpr std::pair<SeriesKind, const char*> kSeries[] = {
      {SeriesKind::original_vs_non, "original_vs_non"},
      {SeriesKind::decoupled_vs_non, "decoupled_vs_non"},
  };
  try {
    if (opts.traces.empty()) throw DomainError("no trace files given");
    if (opts.output_dir.empty()) throw DomainError("no output directory");
    if (!(opts.epsilon > 0) || opts.window_k < 1 || opts.bins < 2) {
      throw DomainError("need epsilon > 0, window-k >= 1, bins >= 2");
    }
    fs::create_directories(opts.output_dir);

    std::map<SeriesKind, std::vector<OnsetReport>> reports;
    std::string onsets = "trace,series,length,onset_step,onset_fraction,epsilon,window_k,window_exceeds_length\n";
    std::set<std::string> stems;
    for (const auto& path : opts.traces) {
      const auto traces = load_traces(path);
      std::string stem = path.filename().string();
      for (const char* ext : {".trace.jsonl", ".jsonl"}) {
        const std::string e(ext);
        if (stem.size() > e.size() && stem.compare(stem.size() - e.size(), e.size(), e) == 0) {
          stem.resize(stem.size() - e.size());
          break;
        }
      }
      if (!stems.insert(stem).second) throw DomainError("duplicate trace name '" + stem + "'");
      if (traces.empty()) throw DomainError("empty trace file " + path.string());
      out << stem << " (" << traces.size() << " steps)\n";
      for (const auto& [kind, name] : kSeries) {
        const JsdSeries series = jsd_series(traces, kind);
        std::ofstream csv(opts.output_dir / (stem + "." + name + ".csv"), std::ios::binary);
        write_series_csv(csv, series);
        const OnsetReport r = detect_onset(series, opts.epsilon, opts.window_k);
        reports[kind].push_back(r);
        onsets += stem + "," + name + "," + std::to_string(r.length) + "," +
                  (r.onset_step ? std::to_string(*r.onset_step) : "") + "," +
                  (r.onset_fraction ? text::format_real(*r.onset_fraction) : "") + "," +
                  text::format_real(r.epsilon) + "," + std::to_string(r.window_k) + "," +
                  (r.window_exceeds_length ? "1" : "0") + "\n";
        out << "  " << name << ": onset "
            << (r.onset_step ? "at step " + std::to_string(*r.onset_step) : std::string("none")) << '\n';
      }
    }
    write_file(opts.output_dir / "onsets.csv", onsets);
    for (const auto& [kind, name] : kSeries) {
      const OnsetHistogram h = onset_histogram(reports[kind], opts.bins);
      std::ofstream csv(opts.output_dir / (std::string("histogram_") + name + ".csv"), std::ios::binary);
      write_histogram_csv(csv, h);
    }
    out << "epsilon " << text::format_real(opts.epsilon) << " nats, window " << opts.window_k << ", "
        << opts.bins << " bins\n";
  } catch (const std::exception& e) {
    log << "diagnose error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}

}  // namespace catchdec
