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

#include "catchdec/segmentation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "catchdec/errors.hpp"

namespace catchdec {
namespace {

std::string describe(const Pixel& p) {
  return "(" + std::to_string(p.row) + "," + std::to_string(p.col) + ")";
}

}  // namespace

SegmentationSet::SegmentationSet(int width, int height, std::vector<SegmentMask> masks)
    : width_(width), height_(height), masks_(std::move(masks)) {
  if (width_ <= 0 || height_ <= 0) throw DomainError("segmentation: image dimensions must be positive");

  std::size_t backgrounds = 0;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < masks_.size(); ++i) {
    const auto& m = masks_[i];
    if (m.id.empty()) throw DomainError("segmentation: mask with empty id");
    if (!ids.insert(m.id).second) throw DomainError("segmentation: duplicate mask id '" + m.id + "'");
    if (m.pixels.empty()) throw DomainError("segmentation: mask '" + m.id + "' is empty");
    if (m.kind == MaskKind::background) {
      ++backgrounds;
      background_ = i;
    }
  }
  if (backgrounds != 1) {
    throw DomainError("segmentation: expected exactly one background mask, found " +
                      std::to_string(backgrounds));
  }

  // owner(r, c) = index of the covering mask, -1 when uncovered.
  Eigen::ArrayXXi owner = Eigen::ArrayXXi::Constant(height_, width_, -1);
  for (std::size_t i = 0; i < masks_.size(); ++i) {
    for (const auto& p : masks_[i].pixels) {
      if (p.row < 0 || p.row >= height_ || p.col < 0 || p.col >= width_) {
        throw DomainError("segmentation: mask '" + masks_[i].id + "' pixel " + describe(p) +
                          " outside " + std::to_string(width_) + "x" + std::to_string(height_) +
                          " image");
      }
      int& slot = owner(p.row, p.col);
      if (slot >= 0) {
        throw DomainError("segmentation: pixel " + describe(p) + " covered by both '" +
                          masks_[static_cast<std::size_t>(slot)].id + "' and '" + masks_[i].id + "'");
      }
      slot = static_cast<int>(i);
    }
  }
  for (int r = 0; r < height_; ++r) {
    for (int c = 0; c < width_; ++c) {
      if (owner(r, c) < 0) {
        throw DomainError("segmentation: uncovered pixel " + describe(Pixel{r, c}));
      }
    }
  }
}

const SegmentMask* SegmentationSet::find(const std::string& id) const {
  for (const auto& m : masks_) {
    if (m.id == id) return &m;
  }
  return nullptr;
}

PixelMask SegmentationSet::raster(const SegmentMask& mask) const {
  PixelMask out = PixelMask::Constant(height_, width_, false);
  for (const auto& p : mask.pixels) out(p.row, p.col) = true;
  return out;
}

std::vector<const SegmentMask*> rank_segments(const SegmentationSet& seg) {
  std::vector<const SegmentMask*> objects;
  for (const auto& m : seg.masks()) {
    if (m.kind == MaskKind::object) objects.push_back(&m);
  }
  if (objects.empty()) throw DomainError("rank_segments: no object masks; decoupling is undefined");
  std::sort(objects.begin(), objects.end(), [](const SegmentMask* a, const SegmentMask* b) {
    if (a->area() != b->area()) return a->area() > b->area();
    return a->id < b->id;
  });
  return objects;
}

std::size_t select_top_m(std::size_t n_objects, double fraction) {
  if (n_objects == 0) throw DomainError("select_top_m: need at least one object");
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw DomainError("select_top_m: fraction must lie in (0, 1]");
  }
  const double scaled = fraction * static_cast<double>(n_objects);
  const auto rounded = static_cast<std::size_t>(std::floor(scaled + 0.5));
  return std::clamp<std::size_t>(rounded, 1, n_objects);
}

DecoupledPair decouple(const SegmentationSet& seg, std::size_t m) {
  const auto ranked = rank_segments(seg);
  if (m < 1 || m > ranked.size()) {
    throw DomainError("decouple: m=" + std::to_string(m) + " outside [1, " +
                      std::to_string(ranked.size()) + "]");
  }
  DecoupledPair pair;
  pair.m = m;
  pair.dual = PixelMask::Constant(seg.height(), seg.width(), false);
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (i < m) {
      pair.dual = pair.dual || seg.raster(*ranked[i]);
      pair.dual_objects.push_back(ranked[i]->id);
    } else {
      pair.residual_objects.push_back(ranked[i]->id);
    }
  }
  pair.residual = !pair.dual;
  return pair;
}

SegmentationSet parse_segmentation(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  int width = 0;
  int height = 0;
  std::vector<SegmentMask> masks;

  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    if (!have_header) {
      if (!(fields >> width >> height)) throw ParseError(source, lineno, "expected `width height` header");
      have_header = true;
      continue;
    }
    SegmentMask mask;
    std::string kind;
    std::size_t count = 0;
    if (!(fields >> mask.id >> kind >> count)) {
      throw ParseError(source, lineno, "expected `id kind count r,c ...`");
    }
    if (kind == "object") {
      mask.kind = MaskKind::object;
    } else if (kind == "background") {
      mask.kind = MaskKind::background;
    } else {
      throw ParseError(source, lineno, "unknown mask kind '" + kind + "'");
    }
    std::string coord;
    while (fields >> coord) {
      const auto comma = coord.find(',');
      Pixel p;
      const char* begin = coord.data();
      const char* end = coord.data() + coord.size();
      if (comma == std::string::npos ||
          std::from_chars(begin, begin + comma, p.row).ec != std::errc() ||
          std::from_chars(begin + comma + 1, end, p.col).ec != std::errc()) {
        throw ParseError(source, lineno, "bad coordinate '" + coord + "'");
      }
      mask.pixels.push_back(p);
    }
    if (mask.pixels.size() != count) {
      throw ParseError(source, lineno,
                       "mask '" + mask.id + "' declares " + std::to_string(count) + " pixels, lists " +
                           std::to_string(mask.pixels.size()));
    }
    masks.push_back(std::move(mask));
  }
  if (!have_header) throw ParseError(source, lineno, "missing `width height` header");
  try {
    return SegmentationSet(width, height, std::move(masks));
  } catch (const DomainError& e) {
    throw ParseError(source, 0, e.what());
  }
}

SegmentationSet load_segmentation(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open segmentation file");
  return parse_segmentation(in, path.string());
}

void write_segmentation(std::ostream& out, const SegmentationSet& seg) {
  out << seg.width() << ' ' << seg.height() << '\n';
  for (const auto& m : seg.masks()) {
    out << m.id << ' ' << (m.kind == MaskKind::background ? "background" : "object") << ' '
        << m.pixels.size();
    for (const auto& p : m.pixels) out << ' ' << p.row << ',' << p.col;
    out << '\n';
  }
}

}  // namespace catchdec
