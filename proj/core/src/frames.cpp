// Copyright 2026 The wbc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "wbc/frames.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <tuple>

#include "wbc/errors.hpp"

namespace wbc {
namespace {

constexpr char kMagic[4] = {'P', 'M', 'A', 'P'};

void PutU32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t GetU32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw SchemaError("pointmap: truncated header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

Pointmap TransformPoints(const Pointmap& pm, const Pose& t, FrameTag frame) {
  Pointmap out = pm;
  for (std::size_t i = 0; i < out.points.size(); ++i) out.points[i] = t.Apply(pm.points[i]);
  out.frame = frame;
  return out;
}

}  // namespace

std::string_view ToString(FrameTag tag) {
  switch (tag) {
    case FrameTag::kWorld:
      return "world";
    case FrameTag::kCamera:
      return "camera";
    case FrameTag::kLeftGripper:
      return "left_gripper";
    case FrameTag::kRightGripper:
      return "right_gripper";
  }
  return "unknown";
}

FrameTag FrameTagFromString(std::string_view name) {
  for (FrameTag t : {FrameTag::kWorld, FrameTag::kCamera, FrameTag::kLeftGripper,
                     FrameTag::kRightGripper}) {
    if (ToString(t) == name) return t;
  }
  throw std::invalid_argument("unknown frame tag '" + std::string(name) + "'");
}

Pointmap Pointmap::Filled(int width, int height, const Vec3& point, FrameTag frame) {
  Pointmap pm;
  pm.width = width;
  pm.height = height;
  const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  pm.points.assign(n, point);
  pm.valid.assign(n, 1);
  pm.frame = frame;
  return pm;
}

std::size_t Pointmap::CountValid() const {
  std::size_t n = 0;
  for (std::uint8_t v : valid) n += v != 0;
  return n;
}

void Pointmap::Check() const {
  if (width < 0 || height < 0) throw DimensionError("pointmap: negative dimensions");
  const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (points.size() != n || valid.size() != n) {
    throw DimensionError("pointmap: grids do not match " + std::to_string(width) + "x" +
                         std::to_string(height));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (valid[i] && !points[i].allFinite()) {
      throw ValidationError("pointmap: valid point " + std::to_string(i) + " is not finite");
    }
  }
}

Vec3 ToGripperFrame(const Vec3& point, const Pose& item_frame_in_world,
                    const Pose& gripper_in_world) {
  return Inverse(gripper_in_world).Apply(item_frame_in_world.Apply(point));
}

Pose ToGripperFrame(const Pose& pose, const Pose& item_frame_in_world,
                    const Pose& gripper_in_world) {
  return Inverse(gripper_in_world) * item_frame_in_world * pose;
}

Pointmap ToGripperFrame(const Pointmap& pm, const Pose& item_frame_in_world,
                        const Pose& gripper_in_world, FrameTag gripper) {
  return TransformPoints(pm, Inverse(gripper_in_world) * item_frame_in_world, gripper);
}

Vec3 FromGripperFrame(const Vec3& point, const Pose& gripper_in_world) {
  return gripper_in_world.Apply(point);
}

Pose FromGripperFrame(const Pose& pose, const Pose& gripper_in_world) {
  return gripper_in_world * pose;
}

Pointmap FromGripperFrame(const Pointmap& pm, const Pose& gripper_in_world) {
  return TransformPoints(pm, gripper_in_world, FrameTag::kWorld);
}

Pointmap MaskArmPoints(const Pointmap& pm, const Pose& camera_in_world,
                       const Pose& left_gripper_in_world, const Pose& right_gripper_in_world) {
  const Pose to_left = Inverse(left_gripper_in_world) * camera_in_world;
  const Pose to_right = Inverse(right_gripper_in_world) * camera_in_world;
  Pointmap out = pm;
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    if (!out.valid[i]) continue;
    const Vec3& p = pm.points[i];
    if (to_left.Apply(p).z() < 0.0 || to_right.Apply(p).z() < 0.0) out.valid[i] = 0;
  }
  return out;
}

Pointmap DownsamplePointmap(const Pointmap& pm, int patch) {
  if (patch <= 0 || pm.width % patch != 0 || pm.height % patch != 0) {
    throw DimensionError("downsample: patch " + std::to_string(patch) + " does not divide " +
                         std::to_string(pm.width) + "x" + std::to_string(pm.height));
  }
  Pointmap out;
  out.width = pm.width / patch;
  out.height = pm.height / patch;
  out.frame = pm.frame;
  out.points.reserve(static_cast<std::size_t>(out.width) * static_cast<std::size_t>(out.height));
  out.valid.reserve(out.points.capacity());
  for (int r = 0; r < out.height; ++r) {
    for (int c = 0; c < out.width; ++c) {
      const std::size_t src = pm.Index(PatchCenterIndex(r, patch), PatchCenterIndex(c, patch));
      out.points.push_back(pm.points[src]);
      out.valid.push_back(pm.valid[src]);
    }
  }
  return out;
}

std::pair<int, int> NearestValidToCenter(const Pointmap& pm) {
  const int cr = pm.height / 2;
  const int cc = pm.width / 2;
  // Scan square rings outward; a ring at Chebyshev radius k holds no pixel
  // closer than k, so stop once k² exceeds the best squared distance.
  std::tuple<long long, int, int> best{std::numeric_limits<long long>::max(), 0, 0};
  bool found = false;
  const int max_ring = std::max({cr, pm.height - 1 - cr, cc, pm.width - 1 - cc});
  for (int k = 0; k <= max_ring; ++k) {
    if (found && static_cast<long long>(k) * k > std::get<0>(best)) break;
    for (int r = cr - k; r <= cr + k; ++r) {
      if (r < 0 || r >= pm.height) continue;
      const bool edge_row = r == cr - k || r == cr + k;
      for (int c = cc - k; c <= cc + k; c += (edge_row || k == 0) ? 1 : 2 * k) {
        if (c < 0 || c >= pm.width || !pm.IsValid(r, c)) continue;
        const long long dr = r - cr;
        const long long dc = c - cc;
        const std::tuple<long long, int, int> key{dr * dr + dc * dc, r, c};
        if (!found || key < best) {
          best = key;
          found = true;
        }
      }
    }
  }
  if (!found) throw EmptyPointmapError("pointmap has no valid points");
  return {std::get<1>(best), std::get<2>(best)};
}

Vec3 ExtractLookAtPoint(const Pointmap& pm, const Pose& camera_in_world) {
  const auto [r, c] = NearestValidToCenter(pm);
  return camera_in_world.Apply(pm.At(r, c));
}

void WritePointmap(std::ostream& out, const Pointmap& pm) {
  pm.Check();
  out.write(kMagic, 4);
  PutU32(out, static_cast<std::uint32_t>(pm.width));
  PutU32(out, static_cast<std::uint32_t>(pm.height));
  for (const Vec3& p : pm.points) {
    for (int k = 0; k < 3; ++k) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(p[k]));
      PutU32(out, bits);
    }
  }
  std::vector<unsigned char> mask((pm.valid.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < pm.valid.size(); ++i) {
    if (pm.valid[i]) mask[i / 8] |= static_cast<unsigned char>(1u << (i % 8));
  }
  out.write(reinterpret_cast<const char*>(mask.data()), static_cast<std::streamsize>(mask.size()));
  if (!out) throw std::runtime_error("pointmap: write failed");
}

void WritePointmap(const std::filesystem::path& path, const Pointmap& pm) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  WritePointmap(out, pm);
}

Pointmap ReadPointmap(std::istream& in, FrameTag frame) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw SchemaError("pointmap: bad magic");
  }
  Pointmap pm;
  const std::uint32_t w = GetU32(in);
  const std::uint32_t h = GetU32(in);
  if (w > (1u << 16) || h > (1u << 16)) throw SchemaError("pointmap: implausible dimensions");
  pm.width = static_cast<int>(w);
  pm.height = static_cast<int>(h);
  pm.frame = frame;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  pm.points.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < 3; ++k) {
      pm.points[i][k] = static_cast<double>(std::bit_cast<float>(GetU32(in)));
    }
  }
  std::vector<unsigned char> mask((n + 7) / 8);
  if (!in.read(reinterpret_cast<char*>(mask.data()), static_cast<std::streamsize>(mask.size()))) {
    throw SchemaError("pointmap: truncated validity mask");
  }
  pm.valid.resize(n);
  for (std::size_t i = 0; i < n; ++i) pm.valid[i] = (mask[i / 8] >> (i % 8)) & 1u;
  try {
    pm.Check();
  } catch (const ValidationError& e) {
    throw SchemaError(e.what());
  }
  return pm;
}

Pointmap ReadPointmap(const std::filesystem::path& path, FrameTag frame) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return ReadPointmap(in, frame);
}

}  // namespace wbc
