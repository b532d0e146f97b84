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

// Batch commands behind the `catchdec` tool: decode, eval, diagnose.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "catchdec/backend.hpp"
#include "catchdec/diagnostics.hpp"
#include "catchdec/engine.hpp"
#include "catchdec/metrics.hpp"

namespace catchdec {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitBackend = 3 };

/// A built-in backend plus the request and stop token its file describes.
struct LoadedScenario {
  std::unique_ptr<InProcessBackend> backend;
  SessionRequest request;
  std::optional<TokenId> stop_token;
};

/// Reads a scenario file, dispatching on its `format scripted` or
/// `format grounded_toy` line. The session id is `id`.
LoadedScenario load_scenario(const std::filesystem::path& path, const std::string& id,
                             double top_m_fraction = 0.05);

struct SessionFile {
  SessionRequest request;
  std::optional<TokenId> stop_token;
};

/// Session JSON for remote decoding:
///   {"session_id", "vocab": [..], "prompt": [tokens], "segmentation": path,
///    "top_m"?, "stop"?}
/// A relative segmentation path is resolved against the file's directory.
/// Without top_m the segmentation is read to apply top_m_fraction.
SessionFile load_session_file(const std::filesystem::path& path, double top_m_fraction = 0.05);

/// Everything needed to reproduce a decode run. Written to
/// `<output_dir>/manifest.json` by run_decode.
///
/// backend is "builtin" (each input is a scripted or grounded_toy scenario
/// file) or a RemoteBackend address (each input is a session JSON file).
struct RunManifest {
  std::string backend = "builtin";
  DecodeConfig config;
  double temperature = 0;  // 0 selects greedy sampling
  std::uint64_t seed = 0;
  std::vector<std::filesystem::path> inputs;
  std::filesystem::path output_dir;
  std::size_t timeout_ms = 30000;

  /// config.sampling follows temperature and seed.
  DecodeConfig effective_config() const;

  nlohmann::ordered_json to_json() const;
  /// Throws DomainError on missing or ill-typed fields.
  static RunManifest from_json(const nlohmann::json& j);
  static RunManifest load(const std::filesystem::path& path);
};

/// Decodes every input, writing per sample `<id>.tokens`, `<id>.txt`,
/// `<id>.trace.jsonl` and `<id>.status.json`, plus `summary.tsv` and the
/// manifest. Returns kExitConfig for unusable configuration or inputs,
/// kExitBackend when any sample hit a backend failure (partial outputs are
/// still written).
int run_decode(const RunManifest& manifest, std::ostream& log);

enum class EvalKind { chair, pope, mme };

struct EvalOptions {
  EvalKind kind = EvalKind::chair;
  std::filesystem::path captions;     // chair
  std::filesystem::path annotations;  // chair
  std::filesystem::path lexicon;      // chair; empty selects the bundled default
  std::filesystem::path answers;      // pope, mme
  MmeScale mme_scale = MmeScale::unit;
  std::optional<std::filesystem::path> json_out;
};

/// Prints a text report to `out` and, when requested, writes the scores as
/// JSON. Parse failures yield kExitConfig.
int run_eval(const EvalOptions& opts, std::ostream& out, std::ostream& log);

nlohmann::ordered_json chair_report(const ChairScores& s);
nlohmann::ordered_json pope_report(const std::vector<BinaryQARecord>& records);
nlohmann::ordered_json mme_report(const MmeScores& s);

struct DiagnoseOptions {
  std::vector<std::filesystem::path> traces;
  double epsilon = kDefaultOnsetEpsilon;
  std::size_t window_k = kDefaultOnsetWindow;
  std::size_t bins = 10;
  std::filesystem::path output_dir;
};

/// Writes `<trace>.<series>.csv` per trace and series, `onsets.csv`, and
/// `histogram_<series>.csv`; prints a summary.
int run_diagnose(const DiagnoseOptions& opts, std::ostream& out, std::ostream& log);

/// Default lexicon shipped with the sources (80 object classes).
std::filesystem::path default_lexicon_path();

}  // namespace catchdec
