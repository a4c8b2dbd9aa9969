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

// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pointmap_fixtures.hpp"
#include "qp_oracle.hpp"
#include "test_util.hpp"
#include "wbc/collision.hpp"
#include "wbc/exec_bridge.hpp"
#include "wbc/frames.hpp"
#include "wbc/gaze.hpp"
#include "wbc/ik_profile.hpp"
#include "wbc/qp.hpp"
#include "wbc/robot_model.hpp"
#include "wbc/sim.hpp"
#include "wbc/wbik.hpp"

namespace wbc {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;

  // Records a failed check; keeps the first few messages.
  void Check(bool ok, const std::string& what) {
    if (ok) return;
    if (pass || detail.size() < 400) detail += (detail.empty() ? "" : "; ") + what;
    pass = false;
  }
};

std::string Fmt(const char* fmt, double a, double b = 0.0) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), fmt, a, b);
  return buf;
}

double Seconds(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Scenario LoadScenario(const std::string& name) {
  return Scenario::FromFile(testing::DataPath("scenarios/" + name + ".json"));
}

// 1. Look-at construction.
Outcome LookAtSuite() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  double worst_orth = 0.0, worst_det = 0.0, worst_fwd = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Vec3 c = testing::RandomVec3(rng, -3.0, 3.0);
    const Rotation cur = testing::RandomRotation(rng);
    Vec3 l;
    do {
      l = testing::RandomVec3(rng, -3.0, 3.0);
    } while ((l - c).norm() <= 1e-3);
    const Vec3 d = (l - c).normalized();
    const Mat3 m = LookAtRotation(c, cur, l).matrix();
    worst_orth = std::max(worst_orth, testing::MaxAbs(m.transpose() * m - Mat3::Identity()));
    worst_det = std::max(worst_det, std::abs(m.determinant() - 1.0));
    worst_fwd = std::max(worst_fwd, std::abs(m.col(2).dot(d) - 1.0));
  }
  o.Check(worst_orth <= 1e-9, Fmt("orthonormality %.3g", worst_orth));
  o.Check(worst_det <= 1e-9, Fmt("det %.3g", worst_det));
  o.Check(worst_fwd <= 1e-9, Fmt("forward %.3g", worst_fwd));

  // Target at the head position.
  bool threw = false;
  try {
    LookAtRotation(Vec3(0, 0, 1.5), Rotation::Identity(), Vec3(0, 0, 1.5));
  } catch (const DegenerateTargetError&) {
    threw = true;
  }
  o.Check(threw, "target at head did not raise");
  // Forward parallel to x_cur: the world-up vector replaces x_cur.
  const Mat3 fb = LookAtRotation(Vec3::Zero(), Rotation::Identity(), Vec3(1, 0, 0)).matrix();
  Mat3 expect;
  expect << Vec3(0, 0, 1), Vec3(0, -1, 0), Vec3(1, 0, 0);
  o.Check(testing::MaxAbs(fb - expect) <= 1e-12, "up fallback mismatch");
  const double elapsed = Seconds(t0);
  o.Check(elapsed < 5.0, Fmt("runtime %.2f s", elapsed));
  o.detail = Fmt("10000 cases, worst orth %.2g, worst forward %.2g", worst_orth, worst_fwd) +
             Fmt(", %.2f s", elapsed) + (o.detail.empty() ? "" : " | " + o.detail);
  return o;
}

// 2. QP oracle equivalence and full-problem KKT.
Outcome QpSuite() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1002);
  double worst_gap = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const QpProblem p = testing::RandomTinyQp(rng);
    const auto oracle = testing::EnumerateQp(p);
    const QpSolution s = SolveQp(p);
    if (!oracle || s.status != QpStatus::kOptimal) {
      o.Check(false, "tiny QP " + std::to_string(i) + " not solved");
      continue;
    }
    worst_gap = std::max(worst_gap, std::abs(p.Objective(s.x) - p.Objective(*oracle)));
  }
  o.Check(worst_gap <= 1e-8, Fmt("objective gap %.3g", worst_gap));

  // Every optimal solve over a full episode of the 25-DoF problem.
  const EpisodeResult r = RunEpisode(LoadScenario("figure_eight_laundry"));
  double worst_kkt = 0.0;
  int solves = 0;
  for (const TickRecord& t : r.ticks) {
    if (t.diagnostics.status != QpStatus::kOptimal) continue;
    ++solves;
    worst_kkt = std::max(worst_kkt, t.diagnostics.kkt_residual);
  }
  o.Check(solves > 0, "no optimal solves");
  o.Check(worst_kkt <= 1e-7, Fmt("KKT residual %.3g", worst_kkt));
  const double elapsed = Seconds(t0);
  o.Check(elapsed < 60.0, Fmt("runtime %.2f s", elapsed));
  o.detail = Fmt("1000 tiny QPs, worst gap %.2g; %.0f full solves", worst_gap, solves) +
             Fmt(", worst KKT %.2g, %.2f s", worst_kkt, elapsed) +
             (o.detail.empty() ? "" : " | " + o.detail);
  return o;
}

// 3. Constraint fidelity along the figure-eight episode.
Outcome ConstraintSuite() {
  Outcome o;
  const auto t0 = Clock::now();
  const Scenario s = LoadScenario("figure_eight_laundry");
  const RobotModel model = RobotModel::FromFile(s.model_path);
  const IkProfile profile = IkProfile::FromFile(s.profile_path);
  const EpisodeResult r = RunEpisode(model, profile, s);
  const double dt = 1.0 / s.control_rate;
  o.Check(r.ticks.size() == 1000, "expected 1000 ticks, got " + std::to_string(r.ticks.size()));
  const auto pairs = model.CollisionPairs();
  const auto joint = [&](const char* name) {
    return model.joints()[*model.JointIndex(name)].q_index;
  };
  const int t1 = joint("torso_1"), t2 = joint("torso_2"), t3 = joint("torso_3");
  int violations = 0;
  double min_dist = 1e9, max_upright = 0.0, max_com = 0.0;
  for (const TickRecord& t : r.ticks) {
    const auto fail = [&](const std::string& what) {
      ++violations;
      o.Check(false, "tick " + std::to_string(t.tick) + ": " + what);
    };
    for (const JointSpec& j : model.joints()) {
      if (j.type == JointType::kPlanarBase) {
        const double lin = 0.9 * 1.0 * dt + 1e-10;
        const double ang = 0.9 * 1.0 * dt + 1e-10;
        if (std::abs(t.dq[j.q_index]) > lin || std::abs(t.dq[j.q_index + 1]) > lin) {
          fail("base linear velocity");
        }
        if (std::abs(t.dq[j.q_index + 2]) > ang) fail("base angular velocity");
        continue;
      }
      if (std::abs(t.dq[j.q_index]) > 0.9 * j.velocity_limit * dt + 1e-10) {
        fail(j.name + " velocity");
      }
      if (j.position_limits && (t.q[j.q_index] < j.position_limits->first - 1e-9 ||
                                t.q[j.q_index] > j.position_limits->second + 1e-9)) {
        fail(j.name + " position");
      }
    }
    const double upright = std::abs(t.dq[t1] + t.dq[t2] + t.dq[t3]);
    max_upright = std::max(max_upright, upright);
    if (upright > 1e-9) fail("upright sum");
    const Eigen::Vector2d com = t.diagnostics.com_offset;
    max_com = std::max(max_com, com.cwiseAbs().maxCoeff());
    if (std::abs(com.x()) > 0.08 + 1e-6 || std::abs(com.y()) > 0.08 + 1e-6) fail("CoM offset");
    for (const DistanceResult& d : CollisionDistances(model, GeneralizedState{t.q}, pairs)) {
      min_dist = std::min(min_dist, d.distance);
      if (d.distance < 0.01 - 1e-6) fail("collision distance");
    }
  }
  const double elapsed = Seconds(t0);
  o.Check(elapsed < 30.0, Fmt("runtime %.2f s", elapsed));
  std::ostringstream d;
  d << r.ticks.size() << " ticks, " << violations << " violations, max |upright| "
    << max_upright << ", max CoM " << max_com << " m, min distance " << min_dist << " m, "
    << Fmt("%.2f s", elapsed);
  o.detail = d.str() + (o.detail.empty() ? "" : " | " + o.detail);
  return o;
}

// 4. Static target convergence.
Outcome ConvergenceSuite() {
  Outcome o;
  const Scenario s = LoadScenario("static_target");
  const RobotModel model = RobotModel::FromFile(s.model_path);
  const EpisodeResult r = RunEpisode(s);
  // Error against the commanded policy step, not the interpolated emission.
  double settled_at = -1.0;
  double final_pos = 0.0, final_rot = 0.0;
  for (const TickRecord& t : r.ticks) {
    const GeneralizedState q{t.q};
    const Pose l = ForwardKinematics(model, q, "left_gripper");
    const Pose rr = ForwardKinematics(model, q, "right_gripper");
    const Pose& gl = t.emission.source ? t.emission.source->left : t.emission.target.left;
    const Pose& gr = t.emission.source ? t.emission.source->right : t.emission.target.right;
    const double pos = std::max((l.translation - gl.translation).norm(),
                                (rr.translation - gr.translation).norm());
    const double rot = std::max(AngleBetween(l.rotation, gl.rotation),
                                AngleBetween(rr.rotation, gr.rotation));
    const bool ok = pos <= 1e-3 && rot <= 0.01;
    if (ok && settled_at < 0.0) settled_at = t.t;
    if (!ok) settled_at = -1.0;
    final_pos = pos;
    final_rot = rot;
  }
  o.Check(settled_at >= 0.0, "never settled");
  o.Check(settled_at >= 0.0 && settled_at <= 2.0, Fmt("settled at %.2f s", settled_at));
  o.detail = Fmt("settled at t=%.2f s, final error %.2g m", settled_at, final_pos) +
             Fmt(", %.2g rad", final_rot) + (o.detail.empty() ? "" : " | " + o.detail);
  return o;
}

// 5. Interpolation continuity.
Outcome ContinuitySuite() {
  Outcome o;
  const Scenario s = LoadScenario("figure_eight_laundry");
  const EpisodeResult r = RunEpisode(s);
  const double dt = 1.0 / s.control_rate;
  int boundaries = 0;
  double worst_boundary = 0.0, worst_excess = 0.0;
  for (std::size_t i = 1; i < r.ticks.size(); ++i) {
    const Emission& a = r.ticks[i - 1].emission;
    const Emission& b = r.ticks[i].emission;
    const Vec3 step_l = b.target.left.translation - a.target.left.translation;
    const Vec3 step_r = b.target.right.translation - a.target.right.translation;
    if (b.holding) {
      o.Check(step_l.norm() == 0.0 && step_r.norm() == 0.0, "holding emission moved");
      continue;
    }
    const bool switched = !a.source || a.source->chunk_id != b.source->chunk_id ||
                          a.source->step_index != b.source->step_index;
    if (switched) {
      ++boundaries;
      const double gap = std::max((b.from.left.translation - a.target.left.translation).norm(),
                                  (b.from.right.translation - a.target.right.translation).norm());
      worst_boundary = std::max(worst_boundary, gap);
    }
    const double vl = (b.source->left.translation - b.from.left.translation).norm() * dt / 0.1;
    const double vr = (b.source->right.translation - b.from.right.translation).norm() * dt / 0.1;
    worst_excess = std::max({worst_excess, step_l.norm() - vl, step_r.norm() - vr});
  }
  o.Check(boundaries > 0, "no chunk boundaries");
  o.Check(worst_boundary <= 1e-12, Fmt("boundary gap %.3g", worst_boundary));
  o.Check(worst_excess <= 1e-12, Fmt("step exceeds command velocity by %.3g", worst_excess));
  o.detail = Fmt("%.0f boundaries, worst boundary gap %.2g", boundaries, worst_boundary) +
             Fmt(", worst step excess %.2g", worst_excess) +
             (o.detail.empty() ? "" : " | " + o.detail);
  return o;
}

// 6. Bridge timing.
Outcome BridgeSuite() {
  Outcome o;
  const Scenario s = LoadScenario("bridge_timing");
  o.Check(s.inference_time == 0.15 && s.execution_latency == 0.05, "scenario latencies");
  const EpisodeResult r = RunEpisode(s);
  int audited = 0, early = 0;
  for (const TickRecord& t : r.ticks) {
    if (!t.emission.source) continue;
    ++audited;
    if (t.emission.source->t < t.emission.source->earliest_feasible - kTimeEpsilon) ++early;
  }
  o.Check(early == 0, std::to_string(early) + " emissions from infeasible steps");
  o.Check(r.metrics.discarded_steps > 0, "nothing discarded");

  // Worked example.
  ActionChunk c;
  c.anchor_time = 10.0;
  for (int k = 1; k <= 16; ++k) {
    DecodedAction d;
    d.left = Pose::Translation(Vec3(0.5, 0.3, 1.0));
    d.right = Pose::Translation(Vec3(0.5, -0.3, 1.0));
    c.steps.push_back(ActionStep{10.0 + 0.05 * k, EncodeAction(d)});
  }
  ScheduledBuffer buf;
  const ScheduleReport rep = buf.Schedule(c, 10.15, 0.15, 0.05);
  std::vector<double> kept;
  for (const TimedPoseCommand& cmd : buf.pending()) kept.push_back(cmd.t);
  o.Check(rep.discarded == 3, "discarded " + std::to_string(rep.discarded) + ", expected 3");
  o.Check(!kept.empty() && std::abs(kept.front() - 10.20) < 1e-12, "first kept step is not 10.20");
  o.Check(!kept.empty() && kept.size() == 13, "expected 13 kept steps");
  std::ostringstream d;
  d << audited << " emissions audited, " << r.metrics.discarded_steps
    << " steps discarded in episode; worked example dropped " << rep.discarded
    << ", first kept " << (kept.empty() ? -1.0 : kept.front());
  o.detail = d.str() + (o.detail.empty() ? "" : " | " + o.detail);
  return o;
}

// 7. Geometry.
Outcome GeometrySuite() {
  Outcome o;
  std::mt19937_64 rng(1007);
  int checked = 0, behind = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Pointmap pm = testing::SyntheticPointmap(128, 96, rng, 0.05);
    const Pose cam = testing::RandomPose(rng);
    const Pose left{testing::RandomRotation(rng), cam.Apply(Vec3(-0.2, 0.1, 0.8))};
    const Pose right{testing::RandomRotation(rng), cam.Apply(Vec3(0.2, 0.1, 0.8))};
    const Pointmap masked = MaskArmPoints(pm, cam, left, right);
    for (const Pose* g : {&left, &right}) {
      const Pointmap local = ToGripperFrame(masked, cam, *g);
      for (std::size_t i = 0; i < local.points.size(); ++i) {
        if (!local.valid[i]) continue;
        ++checked;
        if (local.points[i].z() < 0.0) ++behind;
      }
    }
  }
  o.Check(behind == 0, std::to_string(behind) + " valid points behind a gripper");

  const Pointmap big = Pointmap::Filled(512, 512, Vec3(0, 0, 1));
  const Pointmap grid = DownsamplePointmap(big, 16);
  o.Check(grid.width == 32 && grid.height == 32, "downsampled grid is not 32x32");

  const Pointmap pm = testing::SyntheticPointmap(64, 48, rng);
  const Pose cam = testing::RandomPose(rng, 2.0);
  const double err = (ExtractLookAtPoint(pm, cam) - cam.Apply(pm.At(24, 32))).norm();
  o.Check(err <= 1e-9, Fmt("look-at extraction error %.3g", err));
  std::ostringstream d;
  d << checked << " masked points checked, grid " << grid.width << "x" << grid.height
    << ", look-at error " << err;
  o.detail = d.str() + (o.detail.empty() ? "" : " | " + o.detail);
  return o;
}

// 8. Profile fidelity.
Outcome ProfileSuite() {
  Outcome o;
  struct Column {
    const char* name;
    double values[9];
  };
  // Rows: w_p, w_o, w_nom_torso, w_nom_arm, w_curr, w_base_pos, w_base_ori,
  // w_com, b_x = b_y.
  const Column table[] = {
      {"laundry", {10000, 10000, 50, 50, 50, 50, 50, 100000, 0.08}},
      {"delivery", {10000, 10000, 1000, 1000, 1000, 50, 50, 100000, 0.08}},
      {"tablescape", {10000, 10000, 200, 10, 10, 5000, 5000, 100000, 0.08}},
  };
  int cells = 0;
  for (const Column& c : table) {
    const fs::path path = testing::DataPath(std::string("profiles/") + c.name + ".json");
    const IkProfile p = IkProfile::FromFile(path);
    const double got[9] = {p.w_p,      p.w_o,        p.w_nom_torso, p.w_nom_arm, p.w_curr,
                           p.w_base_pos, p.w_base_ori, p.w_com,       p.b_x};
    for (int k = 0; k < 9; ++k) {
      ++cells;
      o.Check(got[k] == c.values[k], std::string(c.name) + " row " + std::to_string(k));
    }
    o.Check(p.b_y == c.values[8], std::string(c.name) + " b_y");
    o.Check(p.lambda == 1e-6, std::string(c.name) + " lambda");
    o.Check(p.d_safe == 0.01 && p.d_inf == 0.02, std::string(c.name) + " d_safe/d_inf");
    o.Check(p.velocity_safety == 0.9, std::string(c.name) + " safety factor");
    o.Check(p.base_linear_velocity_limit == 1.0 && p.base_angular_velocity_limit == 1.0,
            std::string(c.name) + " base limits");
    const std::string once = p.ToJson();
    const IkProfile back = IkProfile::FromJson(once);
    o.Check(back == p && back.ToJson() == once, std::string(c.name) + " round trip");
  }
  o.detail = std::to_string(cells) + " table cells plus lambda, d_safe, d_inf, 0.9 checked" +
             (o.detail.empty() ? "" : " | " + o.detail);
  return o;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// 9. Determinism of full simulator runs.
Outcome DeterminismSuite() {
  Outcome o;
  std::vector<fs::path> scenarios;
  for (const auto& e : fs::directory_iterator(testing::DataPath("scenarios"))) {
    if (e.path().extension() == ".json") scenarios.push_back(e.path());
  }
  std::sort(scenarios.begin(), scenarios.end());
#ifdef WBC_CLI_PATH
  const std::string how = "cli";
  const fs::path tmp = fs::temp_directory_path() / ("wbc_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(tmp);
  const auto run = [&](const fs::path& scenario, const std::string& tag) {
    const fs::path out = tmp / (scenario.stem().string() + "_" + tag);
    const std::string cmd = std::string("'") + WBC_CLI_PATH + "' sim --scenario '" +
                            scenario.string() + "' --out '" + out.string() + "' >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    o.Check(code == 0, scenario.stem().string() + " exit " + std::to_string(code));
    return Slurp(out / "trajectory.csv");
  };
#else
  const std::string how = "library";
  const auto run = [&](const fs::path& scenario, const std::string&) {
    std::ostringstream out;
    const Scenario s = Scenario::FromFile(scenario);
    const RobotModel m = RobotModel::FromFile(s.model_path);
    WriteTrajectoryCsv(out, RunEpisode(s), m.nv());
    return out.str();
  };
#endif
  for (const fs::path& p : scenarios) {
    const std::string a = run(p, "a");
    const std::string b = run(p, "b");
    o.Check(!a.empty(), p.stem().string() + " produced no CSV");
    o.Check(a == b, p.stem().string() + " CSVs differ");
  }
#ifdef WBC_CLI_PATH
  fs::remove_all(tmp);
#endif
  o.detail = std::to_string(scenarios.size()) + " scenarios run twice via " + how +
             (o.detail.empty() ? "" : " | " + o.detail);
  return o;
}

}  // namespace
}  // namespace wbc

int main() {
  using wbc::Outcome;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"1 look-at construction", wbc::LookAtSuite},
      {"2 QP oracle and KKT", wbc::QpSuite},
      {"3 constraint fidelity", wbc::ConstraintSuite},
      {"4 tracking convergence", wbc::ConvergenceSuite},
      {"5 interpolation continuity", wbc::ContinuitySuite},
      {"6 bridge timing", wbc::BridgeSuite},
      {"7 geometry", wbc::GeometrySuite},
      {"8 profile fidelity", wbc::ProfileSuite},
      {"9 determinism", wbc::DeterminismSuite},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::printf("%s  %-28s %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
