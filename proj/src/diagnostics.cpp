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

#include "catchdec/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "catchdec/errors.hpp"
#include "catchdec/text.hpp"

namespace catchdec {

JsdSeries jsd_series(std::span<const StepTrace> traces, SeriesKind which) {
  if (traces.empty()) throw DomainError("jsd_series: empty trace list");
  JsdSeries out(static_cast<Eigen::Index>(traces.size()));
  for (std::size_t i = 0; i < traces.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) =
        which == SeriesKind::original_vs_non ? traces[i].d_orig_non : traces[i].d_dec_non;
  }
  return out;
}

OnsetReport detect_onset(const JsdSeries& series, double epsilon, std::size_t k) {
  if (!(epsilon > 0)) throw DomainError("detect_onset: epsilon must be > 0");
  if (k < 1) throw DomainError("detect_onset: window must be >= 1");
  OnsetReport r;
  r.epsilon = epsilon;
  r.window_k = k;
  r.length = static_cast<std::size_t>(series.size());
  if (k > r.length) {
    r.window_exceeds_length = true;
    return r;
  }
  std::size_t run = 0;
  for (std::size_t i = 0; i < r.length; ++i) {
    run = series(static_cast<Eigen::Index>(i)) < epsilon ? run + 1 : 0;
    if (run == k) {
      r.onset_step = i + 2 - k;
      r.onset_fraction = static_cast<double>(*r.onset_step) / static_cast<double>(r.length);
      break;
    }
  }
  return r;
}

std::size_t OnsetHistogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), no_onset);
}

OnsetHistogram onset_histogram(std::span<const OnsetReport> reports, std::size_t bins) {
  if (bins < 2) throw DomainError("onset_histogram: need at least 2 bins");
  if (reports.empty()) throw DomainError("onset_histogram: no reports");
  OnsetHistogram h;
  h.counts.assign(bins, 0);
  for (const auto& r : reports) {
    if (!r.onset_fraction) {
      ++h.no_onset;
      continue;
    }
    const double scaled = std::floor(*r.onset_fraction * static_cast<double>(bins));
    const auto bin = std::min(bins - 1, static_cast<std::size_t>(std::max(0.0, scaled)));
    ++h.counts[bin];
  }
  return h;
}

void write_series_csv(std::ostream& out, const JsdSeries& series) {
  out << "step,jsd\n";
  for (Eigen::Index i = 0; i < series.size(); ++i) {
    out << (i + 1) << ',' << text::format_real(series(i)) << '\n';
  }
}

void write_histogram_csv(std::ostream& out, const OnsetHistogram& hist) {
  const auto bins = static_cast<double>(hist.counts.size());
  out << "bin_low,bin_high,count\n";
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    out << text::format_real(static_cast<double>(i) / bins) << ','
        << text::format_real(static_cast<double>(i + 1) / bins) << ',' << hist.counts[i] << '\n';
  }
  out << "no_onset,," << hist.no_onset << '\n';
}

}  // namespace catchdec
