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

// Test-only helpers: fixture paths, scratch directories, seeded generators
// and brute-force oracles that share no code with the library.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "catchdec/channels.hpp"
#include "catchdec/scripted_backend.hpp"
#include "catchdec/segmentation.hpp"

namespace testing {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(CATCHDEC_TEST_DATA_DIR) / name;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "catchdec-XXXXXX").string();
    path_ = ::mkdtemp(tmpl.data());
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// JSD straight from its definition, in long double with an explicit midpoint
// and the 0 log 0 = 0 convention.
inline double brute_force_jsd(const std::vector<double>& p, const std::vector<double>& q) {
  long double sum_p = 0, sum_q = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const long double m = (static_cast<long double>(p[i]) + q[i]) / 2;
    if (p[i] > 0) sum_p += p[i] * std::log(static_cast<long double>(p[i]) / m);
    if (q[i] > 0) sum_q += q[i] * std::log(static_cast<long double>(q[i]) / m);
  }
  return static_cast<double>(sum_p / 2 + sum_q / 2);
}

// Random distribution of size n; roughly a quarter of entries are exact zeros
// when `zeros` is set (at least one entry stays positive).
inline std::vector<double> random_distribution(std::mt19937_64& rng, std::size_t n, bool zeros) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(n);
  for (auto& x : w) x = std::pow(u(rng), 3.0);
  if (zeros) {
    for (auto& x : w) {
      if (u(rng) < 0.25) x = 0;
    }
  }
  if (std::all_of(w.begin(), w.end(), [](double x) { return x == 0; })) w[rng() % n] = 1;
  const double s = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& x : w) x /= s;
  return w;
}

inline catchdec::ProbDist to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Random partition of a random grid into 1..max_objects objects plus a
// background; every label gets at least one pixel.
inline catchdec::SegmentationSet random_segmentation(std::mt19937_64& rng, int max_objects = 12) {
  const int width = 2 + static_cast<int>(rng() % 15);
  const int height = 2 + static_cast<int>(rng() % 15);
  const int cells = width * height;
  const int n_objects = 1 + static_cast<int>(rng() % std::min(max_objects, cells - 1));
  const int labels = n_objects + 1;

  std::vector<int> order(static_cast<std::size_t>(cells));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> label(static_cast<std::size_t>(cells));
  for (int i = 0; i < cells; ++i) {
    label[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] =
        i < labels ? i : static_cast<int>(rng() % static_cast<unsigned>(labels));
  }

  std::vector<catchdec::SegmentMask> masks(static_cast<std::size_t>(labels));
  for (int l = 0; l < labels; ++l) {
    auto& m = masks[static_cast<std::size_t>(l)];
    m.id = l == n_objects ? "bg" : "obj" + std::to_string(l);
    m.kind = l == n_objects ? catchdec::MaskKind::background : catchdec::MaskKind::object;
  }
  for (int c = 0; c < cells; ++c) {
    masks[static_cast<std::size_t>(label[static_cast<std::size_t>(c)])].pixels.push_back({c / width, c % width});
  }
  return catchdec::SegmentationSet(width, height, std::move(masks));
}

// Random scripted scenario: logits uniform in [-scale, scale].
inline catchdec::ScriptedScenario random_scripted(std::mt19937_64& rng, std::size_t vocab, std::size_t steps,
                                                  double scale = 4.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  catchdec::ScriptedScenario sc;
  for (std::size_t i = 0; i < vocab; ++i) sc.vocab.push_back("t" + std::to_string(i));
  sc.stop_token = static_cast<catchdec::TokenId>(vocab - 1);
  for (std::size_t s = 0; s < steps; ++s) {
    catchdec::ChannelLogits ch;
    for (auto c : catchdec::kAllChannels) {
      catchdec::LogitVector v(static_cast<Eigen::Index>(vocab));
      for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = u(rng);
      ch[c] = v;
    }
    sc.steps.push_back(std::move(ch));
  }
  return sc;
}

// Runs a shell command, returning its exit status and captured stdout+stderr.
struct CommandResult {
  int status = -1;
  std::string output;
};

inline CommandResult run_command(const std::string& cmd) {
  CommandResult r;
  FILE* pipe = ::popen((cmd + " 2>&1").c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, n);
  const int raw = ::pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

}  // namespace testing
