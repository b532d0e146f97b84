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

// Cumulative-hallucination analysis over decode traces: per-step divergence
// from the text-only distribution, the step where it collapses, and where in
// the sequence collapses tend to happen.

#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "catchdec/engine.hpp"

namespace catchdec {

enum class SeriesKind { original_vs_non, decoupled_vs_non };

/// Per-step JSD in nats, in step order.
using JsdSeries = Eigen::VectorXd;

JsdSeries jsd_series(std::span<const StepTrace> traces, SeriesKind which);

inline constexpr double kDefaultOnsetEpsilon = 0.01;
inline constexpr std::size_t kDefaultOnsetWindow = 3;

struct OnsetReport {
  std::optional<std::size_t> onset_step;  // 1-based
  std::optional<double> onset_fraction;   // onset_step / length
  double epsilon = kDefaultOnsetEpsilon;
  std::size_t window_k = kDefaultOnsetWindow;
  std::size_t length = 0;
  bool window_exceeds_length = false;
};

/// First 1-based step t with series[t .. t+k-1] all below epsilon.
OnsetReport detect_onset(const JsdSeries& series, double epsilon = kDefaultOnsetEpsilon,
                         std::size_t k = kDefaultOnsetWindow);

struct OnsetHistogram {
  std::vector<std::size_t> counts;  // bin i covers [i/bins, (i+1)/bins); 1.0 lands in the last bin
  std::size_t no_onset = 0;

  std::size_t total() const;
};

OnsetHistogram onset_histogram(std::span<const OnsetReport> reports, std::size_t bins);

/// `step,jsd` rows, steps 1-based.
void write_series_csv(std::ostream& out, const JsdSeries& series);
/// `bin_low,bin_high,count` rows, then a `no_onset,,count` row.
void write_histogram_csv(std::ostream& out, const OnsetHistogram& hist);

}  // namespace catchdec
