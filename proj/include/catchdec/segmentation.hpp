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

// Complementary decoupling of a segmented image into a dual exposure (the
// largest objects) and a residual exposure (everything else). Masks are the
// only currency: no pixel values are stored.

#pragma once

#include <Eigen/Core>

#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace catchdec {

struct Pixel {
  int row = 0;
  int col = 0;
  auto operator<=>(const Pixel&) const = default;
};

enum class MaskKind { object, background };

struct SegmentMask {
  std::string id;
  MaskKind kind = MaskKind::object;
  std::vector<Pixel> pixels;

  std::size_t area() const { return pixels.size(); }
};

/// Boolean raster indexed (row, col); rows = image height.
using PixelMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// A validated partition of a width x height grid into object masks plus
/// exactly one background mask. Construction throws DomainError naming the
/// first offending pixel or mask.
class SegmentationSet {
 public:
  SegmentationSet(int width, int height, std::vector<SegmentMask> masks);

  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<SegmentMask>& masks() const { return masks_; }
  const SegmentMask& background() const { return masks_[background_]; }
  std::size_t object_count() const { return masks_.size() - 1; }
  const SegmentMask* find(const std::string& id) const;

  PixelMask raster(const SegmentMask& mask) const;

 private:
  int width_;
  int height_;
  std::vector<SegmentMask> masks_;
  std::size_t background_ = 0;
};

struct DecoupledPair {
  PixelMask dual;
  PixelMask residual;
  std::size_t m = 0;
  std::vector<std::string> dual_objects;      // rank order
  std::vector<std::string> residual_objects;  // rank order, background excluded
};

/// Object masks by area descending, ties by ascending id. Background excluded.
/// Throws DomainError when there are no objects.
std::vector<const SegmentMask*> rank_segments(const SegmentationSet& seg);

/// max(1, round_half_up(fraction * n_objects)), capped at n_objects.
std::size_t select_top_m(std::size_t n_objects, double fraction);

/// Dual exposes the top-m ranked objects; residual is the complement.
DecoupledPair decouple(const SegmentationSet& seg, std::size_t m);

/// Text format: a `width height` header, then one `id kind count r,c ...` line
/// per mask. Blank lines and lines starting with '#' are ignored.
SegmentationSet parse_segmentation(std::istream& in, const std::string& source = "<segmentation>");
SegmentationSet load_segmentation(const std::filesystem::path& path);
void write_segmentation(std::ostream& out, const SegmentationSet& seg);

}  // namespace catchdec
