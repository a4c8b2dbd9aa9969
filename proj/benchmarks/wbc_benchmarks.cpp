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
#include <benchmark/benchmark.h>

#include <string>

#include "wbc/frames.hpp"
#include "wbc/ik_profile.hpp"
#include "wbc/qp.hpp"
#include "wbc/robot_model.hpp"
#include "wbc/wbik.hpp"

namespace wbc {
namespace {

const RobotModel& Model() {
  static const RobotModel model =
      RobotModel::FromFile(std::string(WBC_DATA_DIR) + "/models/reference_rby1.json");
  return model;
}

const IkProfile& Laundry() {
  static const IkProfile profile =
      IkProfile::FromFile(std::string(WBC_DATA_DIR) + "/profiles/laundry.json");
  return profile;
}

GeneralizedState Nominal() { return GeneralizedState{Model().nominal_posture()}; }

TrackingTargets ShiftedTargets() {
  const GeneralizedState q = Nominal();
  TrackingTargets t{ForwardKinematics(Model(), q, "left_gripper"),
                    ForwardKinematics(Model(), q, "right_gripper"), std::nullopt};
  t.left_ee.translation += Vec3(0.05, 0.02, 0.03);
  t.right_ee.translation += Vec3(0.04, -0.02, -0.02);
  return t;
}

void BM_ForwardKinematics(benchmark::State& state) {
  const GeneralizedState q = Nominal();
  for (auto _ : state) {
    benchmark::DoNotOptimize(ForwardKinematics(Model(), q, "left_gripper"));
  }
}
BENCHMARK(BM_ForwardKinematics);

void BM_FrameJacobian(benchmark::State& state) {
  const GeneralizedState q = Nominal();
  for (auto _ : state) {
    benchmark::DoNotOptimize(FrameJacobian(Model(), q, "left_gripper"));
  }
}
BENCHMARK(BM_FrameJacobian);

void BM_QpSolveFullProblem(benchmark::State& state) {
  const IkProblem p = AssembleQp(Model(), Nominal(), ShiftedTargets(), Laundry(), 0.01);
  for (auto _ : state) {
    benchmark::DoNotOptimize(SolveQp(p.qp));
  }
}
BENCHMARK(BM_QpSolveFullProblem)->Unit(benchmark::kMicrosecond);

void BM_IkStepCold(benchmark::State& state) {
  const GeneralizedState q = Nominal();
  const TrackingTargets t = ShiftedTargets();
  for (auto _ : state) {
    benchmark::DoNotOptimize(StepIk(Model(), q, t, Laundry(), 0.01));
  }
}
BENCHMARK(BM_IkStepCold)->Unit(benchmark::kMicrosecond);

void BM_IkStepWarm(benchmark::State& state) {
  WholeBodyIk ik(Model(), Laundry());
  const GeneralizedState q = Nominal();
  const TrackingTargets t = ShiftedTargets();
  for (auto _ : state) {
    benchmark::DoNotOptimize(ik.Step(q, t, 0.01));
  }
}
BENCHMARK(BM_IkStepWarm)->Unit(benchmark::kMicrosecond);

void BM_DownsamplePointmap(benchmark::State& state) {
  const Pointmap pm = Pointmap::Filled(512, 512, Vec3(0.1, -0.2, 1.5));
  for (auto _ : state) {
    benchmark::DoNotOptimize(DownsamplePointmap(pm, 16));
  }
}
BENCHMARK(BM_DownsamplePointmap)->Unit(benchmark::kMicrosecond);

}  // namespace
}  // namespace wbc

BENCHMARK_MAIN();
