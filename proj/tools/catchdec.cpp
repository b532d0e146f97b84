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

// catchdec: decode, evaluate, diagnose, serve and check backends.

#include <CLI11.hpp>
#include <csignal>
#include <iostream>
#include <string>
#include <vector>

#include "catchdec/conformance.hpp"
#include "catchdec/errors.hpp"
#include "catchdec/protocol.hpp"
#include "catchdec/remote_backend.hpp"
#include "catchdec/run.hpp"

namespace {

using namespace catchdec;

struct DecodeArgs {
  std::string manifest;
  std::string backend = "builtin";
  std::vector<std::string> inputs;
  std::string out;
  double alpha = 1.2;
  double beta = 3.0;
  double top_m_fraction = 0.05;
  std::size_t max_tokens = 64;
  double temperature = 0;
  std::uint64_t seed = 0;
  std::size_t timeout_ms = 30000;
  bool baseline = false;
};

int decode_command(const DecodeArgs& a, const CLI::App& cmd) {
  RunManifest m;
  if (!a.manifest.empty()) {
    try {
      m = RunManifest::load(a.manifest);
    } catch (const std::exception& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kExitConfig;
    }
  }
  // Explicit flags override the manifest.
  const auto given = [&](const char* name) { return cmd.count(name) > 0 || a.manifest.empty(); };
  if (given("--backend")) m.backend = a.backend;
  if (!a.inputs.empty()) m.inputs.assign(a.inputs.begin(), a.inputs.end());
  if (!a.out.empty()) m.output_dir = a.out;
  if (given("--alpha")) m.config.alpha = a.alpha;
  if (given("--beta")) m.config.beta = a.beta;
  if (given("--top-m-fraction")) m.config.top_m_fraction = a.top_m_fraction;
  if (given("--max-tokens")) m.config.max_tokens = a.max_tokens;
  if (given("--temperature")) m.temperature = a.temperature;
  if (given("--seed")) m.seed = a.seed;
  if (given("--timeout-ms")) m.timeout_ms = a.timeout_ms;
  if (a.baseline) m.config.mode = DecodeMode::baseline;
  if (m.temperature < 0) {
    std::cerr << "config error: temperature must be >= 0 (0 selects greedy)\n";
    return kExitConfig;
  }
  return run_decode(m, std::cerr);
}

int serve_command(const std::string& scenario, const std::string& listen) {
  LoadedScenario sc;
  try {
    sc = load_scenario(scenario, "serve");
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  ProtocolServer server(*sc.backend);
  if (listen.empty()) {
    FrameChannel channel(0, 1);
    try {
      server.serve(channel);
    } catch (const std::exception& e) {
      std::cerr << "backend error: " << e.what() << '\n';
      return kExitBackend;
    }
    return kExitOk;
  }
  if (listen.rfind("unix:", 0) != 0) {
    std::cerr << "config error: --listen expects unix:PATH\n";
    return kExitConfig;
  }
  try {
    UnixListener listener(server, listen.substr(5));
    std::cerr << "listening on " << listen << '\n';
    listener.serve_forever();
  } catch (const std::exception& e) {
    std::cerr << "backend error: " << e.what() << '\n';
    return kExitBackend;
  }
  return kExitOk;
}

int conformance_command(const std::string& connect, const std::string& scenario, const std::string& session,
                        std::size_t steps, std::size_t timeout_ms) {
  LoadedScenario local;
  SessionRequest request;
  try {
    if (!session.empty()) {
      request = load_session_file(session).request;
    } else if (!scenario.empty()) {
      local = load_scenario(scenario, "conformance");
      request = local.request;
    } else {
      throw DomainError("need --scenario or --session");
    }
    if (connect.empty() && !local.backend) throw DomainError("--session requires --connect");
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  std::unique_ptr<RemoteBackend> remote;
  Backend* backend = local.backend.get();
  if (!connect.empty()) {
    try {
      remote = RemoteBackend::connect(connect, std::chrono::milliseconds(timeout_ms));
    } catch (const std::exception& e) {
      std::cout << "[FAIL] handshake: " << e.what() << '\n';
      return kExitBackend;
    }
    backend = remote.get();
  }
  const ConformanceReport report = run_conformance(*backend, request, steps);
  for (const auto& c : report.checks) {
    std::cout << (c.passed ? "[PASS] " : "[FAIL] ") << c.name;
    if (!c.detail.empty()) std::cout << ": " << c.detail;
    std::cout << '\n';
  }
  return report.passed() ? kExitOk : kExitBackend;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"catchdec: contrastive decoding over decoupled image channels"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "catchdec 0.1.0");

  DecodeArgs dec;
  auto* decode = app.add_subcommand("decode", "decode scenario or session files");
  decode->add_option("--manifest", dec.manifest, "run manifest (JSON); flags override it")->check(CLI::ExistingFile);
  decode->add_option("inputs", dec.inputs, "scenario files (builtin) or session files (remote)");
  decode->add_option("--backend", dec.backend, "builtin, exec:CMD or unix:PATH")->capture_default_str();
  decode->add_option("--out", dec.out, "output directory");
  decode->add_option("--alpha", dec.alpha, "subtract-branch amplifier")->capture_default_str();
  decode->add_option("--beta", dec.beta, "enhance-branch amplifier")->capture_default_str();
  decode->add_option("--top-m-fraction", dec.top_m_fraction, "fraction of objects in the dual view")
      ->capture_default_str();
  decode->add_option("--max-tokens", dec.max_tokens, "token budget per sample")->capture_default_str();
  decode->add_option("--temperature", dec.temperature, "0 selects greedy")->capture_default_str();
  decode->add_option("--seed", dec.seed, "sampler seed")->capture_default_str();
  decode->add_option("--timeout-ms", dec.timeout_ms, "remote backend response timeout")->capture_default_str();
  decode->add_flag("--baseline", dec.baseline, "sample from the original channel (traces still recorded)");

  EvalOptions ev;
  std::string json_out;
  auto* eval = app.add_subcommand("eval", "score decoded outputs");
  eval->require_subcommand(1);
  auto* chair = eval->add_subcommand("chair", "caption object hallucination");
  chair->add_option("--captions", ev.captions, "TSV: image_id<TAB>caption")->required()->check(CLI::ExistingFile);
  chair->add_option("--annotations", ev.annotations, "TSV: image_id<TAB>object, object")
      ->required()
      ->check(CLI::ExistingFile);
  chair->add_option("--lexicon", ev.lexicon, "object lexicon (default: bundled 80-class list)");
  chair->add_option("--json", json_out, "write scores as JSON");
  auto* pope = eval->add_subcommand("pope", "yes/no object probing");
  pope->add_option("--answers", ev.answers, "TSV: id<TAB>subset<TAB>label<TAB>response")
      ->required()
      ->check(CLI::ExistingFile);
  pope->add_option("--json", json_out, "write scores as JSON");
  auto* mme = eval->add_subcommand("mme", "perception subsets");
  bool percent = false;
  mme->add_option("--answers", ev.answers, "TSV: id<TAB>subset<TAB>label<TAB>response")
      ->required()
      ->check(CLI::ExistingFile);
  mme->add_flag("--percent", percent, "report accuracies x100");
  mme->add_option("--json", json_out, "write scores as JSON");

  DiagnoseOptions diag;
  std::vector<std::string> traces;
  std::string diag_out;
  auto* diagnose = app.add_subcommand("diagnose", "JSD series and hallucination onset from traces");
  diagnose->add_option("traces", traces, "trace files (.trace.jsonl)")->required()->check(CLI::ExistingFile);
  diagnose->add_option("--out", diag_out, "output directory")->required();
  diagnose->add_option("--epsilon", diag.epsilon, "onset threshold (nats)")->capture_default_str();
  diagnose->add_option("--window-k", diag.window_k, "consecutive steps below epsilon")->capture_default_str();
  diagnose->add_option("--bins", diag.bins, "histogram bins")->capture_default_str();

  std::string serve_scenario, listen;
  auto* serve = app.add_subcommand("serve", "serve a scenario backend over the wire protocol");
  serve->add_option("scenario", serve_scenario, "scripted or grounded_toy file")->required()->check(CLI::ExistingFile);
  serve->add_option("--listen", listen, "unix:PATH (default: stdin/stdout)");

  std::string connect, conf_scenario, conf_session;
  std::size_t conf_steps = 3, conf_timeout = 30000;
  auto* conformance = app.add_subcommand("conformance", "run the backend conformance checks");
  conformance->add_option("--connect", connect, "exec:CMD or unix:PATH (default: in-process)");
  conformance->add_option("--scenario", conf_scenario, "scenario file giving the session request")
      ->check(CLI::ExistingFile);
  conformance->add_option("--session", conf_session, "session JSON giving the session request")
      ->check(CLI::ExistingFile);
  conformance->add_option("--steps", conf_steps, "steps per session")->capture_default_str();
  conformance->add_option("--timeout-ms", conf_timeout, "response timeout")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (*decode) return decode_command(dec, *decode);
  if (*eval) {
    if (*chair) ev.kind = EvalKind::chair;
    if (*pope) ev.kind = EvalKind::pope;
    if (*mme) ev.kind = EvalKind::mme;
    ev.mme_scale = percent ? MmeScale::percent : MmeScale::unit;
    if (!json_out.empty()) ev.json_out = json_out;
    return run_eval(ev, std::cout, std::cerr);
  }
  if (*diagnose) {
    diag.traces.assign(traces.begin(), traces.end());
    diag.output_dir = diag_out;
    return run_diagnose(diag, std::cout, std::cerr);
  }
  if (*serve) return serve_command(serve_scenario, listen);
  if (*conformance) return conformance_command(connect, conf_scenario, conf_session, conf_steps, conf_timeout);
  return kExitFailure;
}
