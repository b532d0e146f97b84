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

// End-to-end runs of the catchdec binary.

#include <doctest.h>

#include <map>
#include <nlohmann/json.hpp>

#include "catchdec/trace_io.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using testing::data_path;
using testing::read_file;
using testing::run_command;

namespace {

std::string quote(const fs::path& p) { return "'" + p.string() + "'"; }

std::string cli() { return quote(CATCHDEC_CLI); }

testing::CommandResult run_cli(const std::string& args) { return run_command(cli() + " " + args); }

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == ' ')) s.pop_back();
  return s;
}

void check_traces_match(const fs::path& got, const fs::path& want) {
  const auto a = catchdec::load_traces(got);
  const auto b = catchdec::load_traces(want);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CAPTURE(i);
    CHECK(a[i].step == b[i].step);
    CHECK(a[i].token == b[i].token);
    CHECK(a[i].chosen_channel == b[i].chosen_channel);
    CHECK(a[i].branch == b[i].branch);
    CHECK(a[i].d_dual_non == doctest::Approx(b[i].d_dual_non).epsilon(1e-12));
    CHECK(a[i].d_res_non == doctest::Approx(b[i].d_res_non).epsilon(1e-12));
    CHECK(a[i].d_dec_non == doctest::Approx(b[i].d_dec_non).epsilon(1e-12));
    CHECK(a[i].d_orig_non == doctest::Approx(b[i].d_orig_non).epsilon(1e-12));
  }
}

std::map<std::string, std::string> outputs(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().filename() != "manifest.json") out[e.path().filename().string()] = read_file(e.path());
  }
  return out;
}

}  // namespace

TEST_CASE("decode s1 with the builtin backend matches the golden run") {
  testing::TempDir tmp;
  const auto r = run_cli("decode " + quote(data_path("s1.scripted")) + " --out " + quote(tmp / "out"));
  INFO(r.output);
  REQUIRE(r.status == 0);
  CHECK(trim(read_file(tmp / "out/s1.tokens")) == trim(read_file(data_path("s1.golden.tokens"))));
  CHECK(trim(read_file(tmp / "out/s1.txt")) == "a a sits sits mat </s>");
  check_traces_match(tmp / "out/s1.trace.jsonl", data_path("s1.golden.trace.jsonl"));

  const auto status = nlohmann::json::parse(read_file(tmp / "out/s1.status.json"));
  CHECK(status["stopped"] == true);
  CHECK(status["truncated"] == false);
  CHECK(read_file(tmp / "out/summary.tsv").find("s1\t6\t1\t0\t") != std::string::npos);

  const auto manifest = nlohmann::json::parse(read_file(tmp / "out/manifest.json"));
  CHECK(manifest["backend"] == "builtin");
  CHECK(manifest["alpha"] == 1.2);
}

TEST_CASE("decode the sandwich scenario") {
  testing::TempDir tmp;
  const auto r = run_cli("decode " + quote(data_path("sandwich.toy")) + " --out " + quote(tmp / "out"));
  INFO(r.output);
  REQUIRE(r.status == 0);
  CHECK(trim(read_file(tmp / "out/sandwich.tokens")) == trim(read_file(data_path("sandwich.golden.tokens"))));
  CHECK(trim(read_file(tmp / "out/sandwich.txt")) == "sandwich .");
  check_traces_match(tmp / "out/sandwich.trace.jsonl", data_path("sandwich.golden.trace.jsonl"));

  // Baseline follows the original channel and names the phone.
  const auto b = run_cli("decode --baseline " + quote(data_path("sandwich.toy")) + " --out " +
                          quote(tmp / "base"));
  REQUIRE(b.status == 0);
  CHECK(read_file(tmp / "base/sandwich.txt").rfind("phone", 0) == 0);
}

TEST_CASE("decode through a served backend gives the builtin result") {
  testing::TempDir tmp;
  for (const std::string stem : {"s1", "sandwich"}) {
    CAPTURE(stem);
    const std::string scenario = stem == "s1" ? "s1.scripted" : "sandwich.toy";
    const std::string backend = "exec:" + cli() + " serve " + quote(data_path(scenario));
    const auto r = run_cli("decode --backend \"" + backend + "\" " + quote(data_path(stem + ".session.json")) +
                            " --out " + quote(tmp / ("remote-" + stem)));
    INFO(r.output);
    REQUIRE(r.status == 0);
    CHECK(trim(read_file(tmp / ("remote-" + stem) / (stem + ".tokens"))) ==
          trim(read_file(data_path(stem + ".golden.tokens"))));
    check_traces_match(tmp / ("remote-" + stem) / (stem + ".trace.jsonl"), data_path(stem + ".golden.trace.jsonl"));
  }
}

TEST_CASE("same manifest twice gives byte-identical outputs") {
  testing::TempDir tmp;
  const nlohmann::json manifest = {
      {"backend", "builtin"},
      {"inputs", {data_path("s1.scripted").string(), data_path("sandwich.toy").string()}},
      {"output_dir", (tmp / "out").string()},
      {"temperature", 0.7},
      {"seed", 99},
  };
  testing::write_text(tmp / "manifest.json", manifest.dump());
  const auto a = run_cli("decode --manifest " + quote(tmp / "manifest.json"));
  INFO(a.output);
  REQUIRE(a.status == 0);
  const auto first = outputs(tmp / "out");
  const std::string first_manifest = read_file(tmp / "out/manifest.json");
  fs::remove_all(tmp / "out");
  const auto b = run_cli("decode --manifest " + quote(tmp / "manifest.json"));
  REQUIRE(b.status == 0);
  CHECK(outputs(tmp / "out") == first);
  CHECK(read_file(tmp / "out/manifest.json") == first_manifest);
  CHECK(first.size() == 9);

  // Flags override the manifest.
  const auto c = run_cli("decode --manifest " + quote(tmp / "manifest.json") + " --temperature 0 --out " +
                          quote(tmp / "greedy"));
  REQUIRE(c.status == 0);
  CHECK(trim(read_file(tmp / "greedy/s1.tokens")) == trim(read_file(data_path("s1.golden.tokens"))));
}

TEST_CASE("decode configuration errors exit 2") {
  testing::TempDir tmp;
  const auto missing = tmp / "no-such-scenario.scripted";
  auto r = run_cli("decode " + quote(missing) + " --out " + quote(tmp / "out"));
  CHECK(r.status == 2);
  CHECK(r.output.find(missing.string()) != std::string::npos);

  r = run_cli("decode " + quote(data_path("s1.scripted")) + " --out " + quote(tmp / "neg") + " --temperature -1");
  CHECK(r.status == 2);

  r = run_cli("decode " + quote(data_path("s1.scripted")) + " " + quote(data_path("s1.scripted")) + " --out " +
               quote(tmp / "dup"));
  CHECK(r.status == 2);
  CHECK(r.output.find("duplicate") != std::string::npos);

  r = run_cli("decode --no-such-flag");
  CHECK(r.status == 2);

  r = run_cli("decode " + quote(data_path("s1.scripted")) + " --out " + quote(tmp / "bad") + " --alpha 0");
  CHECK(r.status == 2);
}

TEST_CASE("backend failures exit 3") {
  testing::TempDir tmp;
  // Handshake never happens.
  auto r = run_cli("decode --backend exec:true " + quote(data_path("s1.session.json")) + " --out " +
                    quote(tmp / "a"));
  CHECK(r.status == 3);

  r = run_cli("decode --backend unix:" + (tmp / "nobody-listens.sock").string() + " " +
               quote(data_path("s1.session.json")) + " --out " + quote(tmp / "b"));
  CHECK(r.status == 3);

  // A scripted scenario with no stop token runs out of steps before the budget.
  testing::write_text(tmp / "short.scripted",
                      "format scripted\nvocab x y\nsteps 1\n0 original 1 0\n0 dual 1 0\n0 residual 0 1\n"
                      "0 non_visual 0 0\n");
  r = run_cli("decode " + quote(tmp / "short.scripted") + " --out " + quote(tmp / "c"));
  INFO(r.output);
  CHECK(r.status == 3);
  CHECK(r.output.find("truncated after 1 tokens") != std::string::npos);
  const auto status = nlohmann::json::parse(read_file(tmp / "c/short.status.json"));
  CHECK(status["truncated"] == true);
  CHECK(trim(read_file(tmp / "c/short.tokens")) == "0");
}

TEST_CASE("eval chair") {
  testing::TempDir tmp;
  const auto r = run_cli("eval chair --captions " + quote(data_path("chair_captions.tsv")) + " --annotations " +
                          quote(data_path("chair_annotations.tsv")) + " --json " + quote(tmp / "chair.json"));
  INFO(r.output);
  REQUIRE(r.status == 0);
  CHECK(r.output.find("[2/6]") != std::string::npos);
  CHECK(r.output.find("[2/3]") != std::string::npos);
  const auto j = nlohmann::json::parse(read_file(tmp / "chair.json"));
  CHECK(j["chair_instance"].get<double>() == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(j["chair_sentence"].get<double>() == doctest::Approx(2.0 / 3).epsilon(1e-12));
}

TEST_CASE("eval pope and mme") {
  testing::TempDir tmp;
  auto r = run_cli("eval pope --answers " + quote(data_path("pope_answers.tsv")) + " --json " +
                    quote(tmp / "pope.json"));
  INFO(r.output);
  REQUIRE(r.status == 0);
  auto j = nlohmann::json::parse(read_file(tmp / "pope.json"));
  for (const char* k : {"accuracy", "precision", "recall", "f1"}) {
    CHECK(j["overall"][k].get<double>() == doctest::Approx(2.0 / 3).epsilon(1e-12));
  }
  CHECK(j["overall"]["parse_failures"] == 1);

  r = run_cli("eval mme --answers " + quote(data_path("mme_answers.tsv")) + " --json " + quote(tmp / "mme.json"));
  REQUIRE(r.status == 0);
  CHECK(r.output.find("total: 3") != std::string::npos);
  j = nlohmann::json::parse(read_file(tmp / "mme.json"));
  CHECK(j["total"].get<double>() == doctest::Approx(3.0));
  CHECK(j["subsets"]["existence"]["accuracy"].get<double>() == doctest::Approx(0.9));

  r = run_cli("eval mme --percent --answers " + quote(data_path("mme_answers.tsv")) + " --json " +
               quote(tmp / "mme100.json"));
  REQUIRE(r.status == 0);
  CHECK(nlohmann::json::parse(read_file(tmp / "mme100.json"))["total"].get<double>() == doctest::Approx(300.0));
}

TEST_CASE("eval reports malformed input with its line number") {
  testing::TempDir tmp;
  testing::write_text(tmp / "bad.tsv", "q1\tadversarial\tyes\tYes.\nq2\tadversarial\n");
  const auto r = run_cli("eval pope --answers " + quote(tmp / "bad.tsv"));
  CHECK(r.status == 2);
  CHECK(r.output.find(tmp.path().string()) != std::string::npos);
  CHECK(r.output.find("line 2") != std::string::npos);
}

TEST_CASE("diagnose the onset fixture") {
  testing::TempDir tmp;
  const auto r = run_cli("diagnose " + quote(data_path("onset-39-101.trace.jsonl")) + " --out " + quote(tmp / "d"));
  INFO(r.output);
  REQUIRE(r.status == 0);
  const std::string onsets = read_file(tmp / "d/onsets.csv");
  INFO(onsets);
  CHECK(onsets.rfind("trace,series,length,onset_step,onset_fraction,epsilon,window_k,window_exceeds_length\n", 0) ==
        0);
  CHECK(onsets.find("onset-39-101,original_vs_non,140,39,") != std::string::npos);
  CHECK(onsets.find("onset-39-101,decoupled_vs_non,140,101,") != std::string::npos);
  CHECK(fs::exists(tmp / "d/onset-39-101.original_vs_non.csv"));
  CHECK(fs::exists(tmp / "d/histogram_decoupled_vs_non.csv"));

  const auto k1 = run_cli("diagnose --window-k 1 " + quote(data_path("onset-39-101.trace.jsonl")) + " --out " +
                           quote(tmp / "k1"));
  REQUIRE(k1.status == 0);
  CHECK(read_file(tmp / "k1/onsets.csv").find("onset-39-101,original_vs_non,140,12,") != std::string::npos);
}

TEST_CASE("serve passes conformance") {
  auto r = run_cli("conformance --connect \"exec:" + cli() + " serve " + quote(data_path("s1.scripted")) +
                    "\" --scenario " + quote(data_path("s1.scripted")));
  INFO(r.output);
  CHECK(r.status == 0);
  CHECK(r.output.find("[FAIL]") == std::string::npos);
  CHECK(r.output.find("[PASS]") != std::string::npos);

  // In-process check of the toy backend.
  r = run_cli("conformance --scenario " + quote(data_path("sandwich.toy")));
  CHECK(r.status == 0);
}

TEST_CASE("serve over a unix socket") {
  testing::TempDir tmp;
  const auto sock = tmp / "s.sock";
  const std::string server = cli() + " serve " + quote(data_path("s1.scripted")) + " --listen unix:" + sock.string();
  // Background server, killed once the check finishes.
  const auto r = run_command("(" + server + " & pid=$!; for i in $(seq 50); do [ -S " + quote(sock) +
                             " ] && break; sleep 0.05; done; " + cli() + " conformance --connect unix:" +
                             sock.string() + " --scenario " + quote(data_path("s1.scripted")) +
                             "; rc=$?; kill $pid; exit $rc)");
  INFO(r.output);
  CHECK(r.status == 0);
}
