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

#include <limits>
#include <random>
#include <sstream>
#include <tuple>

#include <gtest/gtest.h>

#include "pointmap_fixtures.hpp"
#include "test_util.hpp"
#include "wbc/errors.hpp"

namespace wbc {
namespace {

using testing::RandomPose;

std::pair<int, int> BruteNearest(const Pointmap& pm) {
  const int cr = pm.height / 2;
  const int cc = pm.width / 2;
  std::tuple<long long, int, int> best{std::numeric_limits<long long>::max(), -1, -1};
  for (int r = 0; r < pm.height; ++r) {
    for (int c = 0; c < pm.width; ++c) {
      if (!pm.IsValid(r, c)) continue;
      const long long d = 1LL * (r - cr) * (r - cr) + 1LL * (c - cc) * (c - cc);
      best = std::min(best, std::tuple<long long, int, int>{d, r, c});
    }
  }
  return {std::get<1>(best), std::get<2>(best)};
}

TEST(FrameTag, StringRoundTrip) {
  for (FrameTag t : {FrameTag::kWorld, FrameTag::kCamera, FrameTag::kLeftGripper,
                     FrameTag::kRightGripper}) {
    EXPECT_EQ(FrameTagFromString(ToString(t)), t);
  }
  EXPECT_THROW(FrameTagFromString("elbow"), std::invalid_argument);
}

TEST(GripperFrame, PointAndPoseRoundTrip) {
  std::mt19937_64 rng(401);
  for (int trial = 0; trial < 200; ++trial) {
    const Pose cam = RandomPose(rng);
    const Pose grip = RandomPose(rng);
    const Vec3 p = testing::RandomVec3(rng);
    const Vec3 local = ToGripperFrame(p, cam, grip);
    EXPECT_LE((FromGripperFrame(local, grip) - cam.Apply(p)).norm(), 1e-12);
    const Pose q = RandomPose(rng);
    const Pose back = FromGripperFrame(ToGripperFrame(q, cam, grip), grip);
    const Pose expect = cam * q;
    EXPECT_LE((back.translation - expect.translation).norm(), 1e-12);
    EXPECT_LE(testing::MaxAbs(back.rotation.matrix() - expect.rotation.matrix()), 1e-12);
  }
}

TEST(GripperFrame, GripperOriginMapsToZero) {
  std::mt19937_64 rng(402);
  const Pose grip = RandomPose(rng);
  EXPECT_LE(ToGripperFrame(grip.translation, Pose::Identity(), grip).norm(), 1e-12);
}

TEST(GripperFrame, PointmapTagsAndRoundTrip) {
  std::mt19937_64 rng(403);
  const Pointmap pm = testing::SyntheticPointmap(16, 12, rng, 0.2);
  const Pose cam = RandomPose(rng);
  const Pose grip = RandomPose(rng);
  const Pointmap local = ToGripperFrame(pm, cam, grip);
  EXPECT_EQ(local.frame, FrameTag::kLeftGripper);
  EXPECT_EQ(local.valid, pm.valid);
  const Pointmap world = FromGripperFrame(local, grip);
  EXPECT_EQ(world.frame, FrameTag::kWorld);
  for (std::size_t i = 0; i < pm.points.size(); ++i) {
    EXPECT_LE((world.points[i] - cam.Apply(pm.points[i])).norm(), 1e-12);
  }
  EXPECT_EQ(ToGripperFrame(pm, cam, grip, FrameTag::kRightGripper).frame, FrameTag::kRightGripper);
}

TEST(MaskArmPoints, NoValidPointBehindEitherGripper) {
  std::mt19937_64 rng(404);
  for (int trial = 0; trial < 20; ++trial) {
    const Pointmap pm = testing::SyntheticPointmap(64, 48, rng, 0.1);
    const Pose cam = RandomPose(rng);
    const Pose left = Pose{testing::RandomRotation(rng), cam.Apply(Vec3(-0.2, 0.1, 1.0))};
    const Pose right = Pose{testing::RandomRotation(rng), cam.Apply(Vec3(0.2, 0.1, 1.0))};
    const Pointmap masked = MaskArmPoints(pm, cam, left, right);
    EXPECT_EQ(masked.frame, pm.frame);
    std::size_t kept = 0;
    for (std::size_t i = 0; i < pm.points.size(); ++i) {
      const Vec3 w = cam.Apply(pm.points[i]);
      const bool in_front = Inverse(left).Apply(w).z() >= 0.0 && Inverse(right).Apply(w).z() >= 0.0;
      // Exactly the valid points in front of both grippers survive.
      EXPECT_EQ(masked.valid[i] != 0, pm.valid[i] != 0 && in_front) << i;
      if (masked.valid[i]) {
        ++kept;
        EXPECT_GE(Inverse(left).Apply(w).z(), 0.0);
        EXPECT_GE(Inverse(right).Apply(w).z(), 0.0);
      }
      EXPECT_EQ(masked.points[i], pm.points[i]);
    }
    EXPECT_LE(kept, pm.CountValid());
  }
}

TEST(Downsample, GridSize) {
  const Pointmap pm = Pointmap::Filled(512, 512, Vec3(0, 0, 1));
  const Pointmap d = DownsamplePointmap(pm, 16);
  EXPECT_EQ(d.width, 32);
  EXPECT_EQ(d.height, 32);
  EXPECT_EQ(d.points.size(), 1024u);
}

TEST(Downsample, PicksPatchCenters) {
  const Pointmap pm = testing::IndexPointmap(64, 32);
  const Pointmap d = DownsamplePointmap(pm, 8);
  ASSERT_EQ(d.width, 8);
  ASSERT_EQ(d.height, 4);
  for (int r = 0; r < d.height; ++r) {
    for (int c = 0; c < d.width; ++c) {
      EXPECT_EQ(d.At(r, c), Vec3(8 * r + 4, 8 * c + 4, 1.0));
    }
  }
}

TEST(Downsample, RejectsNonDividingPatch) {
  const Pointmap pm = Pointmap::Filled(30, 20, Vec3(0, 0, 1));
  EXPECT_THROW(DownsamplePointmap(pm, 7), DimensionError);
  EXPECT_THROW(DownsamplePointmap(pm, 0), DimensionError);
}

TEST(NearestValidToCenter, MatchesBruteForce) {
  std::mt19937_64 rng(405);
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<int> dim(1, 40);
    const double frac = trial % 3 == 0 ? 0.99 : 0.6;
    const Pointmap pm = testing::SyntheticPointmap(dim(rng), dim(rng), rng, frac);
    if (pm.CountValid() == 0) {
      EXPECT_THROW(NearestValidToCenter(pm), EmptyPointmapError);
      continue;
    }
    EXPECT_EQ(NearestValidToCenter(pm), BruteNearest(pm)) << trial;
  }
}

TEST(ExtractLookAtPoint, CenterSampleInWorld) {
  std::mt19937_64 rng(406);
  const Pointmap pm = testing::SyntheticPointmap(64, 64, rng);
  const Pose cam = RandomPose(rng, 2.0);
  const Vec3 got = ExtractLookAtPoint(pm, cam);
  EXPECT_LE((got - cam.Apply(pm.At(32, 32))).norm(), 1e-9);
}

TEST(ExtractLookAtPoint, EmptyThrows) {
  Pointmap pm = Pointmap::Filled(4, 4, Vec3(0, 0, 1));
  std::fill(pm.valid.begin(), pm.valid.end(), 0);
  EXPECT_THROW(ExtractLookAtPoint(pm, Pose::Identity()), EmptyPointmapError);
}

TEST(PointmapFile, RoundTripIsFloatExact) {
  std::mt19937_64 rng(407);
  const Pointmap pm = testing::SyntheticPointmap(13, 7, rng, 0.3);
  std::stringstream buf;
  WritePointmap(buf, pm);
  const Pointmap back = ReadPointmap(buf, FrameTag::kWorld);
  EXPECT_EQ(back.width, 13);
  EXPECT_EQ(back.height, 7);
  EXPECT_EQ(back.frame, FrameTag::kWorld);
  EXPECT_EQ(back.valid, pm.valid);
  for (std::size_t i = 0; i < pm.points.size(); ++i) {
    EXPECT_EQ(back.points[i], pm.points[i].cast<float>().cast<double>());
  }
}

TEST(PointmapFile, RejectsBadInput) {
  std::stringstream bad_magic("PMAX\0\0\0\0");
  EXPECT_THROW(ReadPointmap(bad_magic), SchemaError);
  std::stringstream buf;
  WritePointmap(buf, Pointmap::Filled(8, 8, Vec3(1, 2, 3)));
  std::string bytes = buf.str();
  bytes.resize(bytes.size() - 2);
  std::stringstream truncated(bytes);
  EXPECT_THROW(ReadPointmap(truncated), SchemaError);
}

TEST(Pointmap, CheckCatchesInconsistentGrids) {
  Pointmap pm = Pointmap::Filled(4, 4, Vec3(0, 0, 1));
  pm.valid.pop_back();
  EXPECT_THROW(pm.Check(), DimensionError);
  Pointmap nan = Pointmap::Filled(2, 2, Vec3(0, 0, 1));
  nan.points[1].x() = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(nan.Check(), ValidationError);
  nan.valid[1] = 0;
  EXPECT_NO_THROW(nan.Check());
}

}  // namespace
}  // namespace wbc
