#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "coopdet/sim.hpp"

using namespace coopdet;

namespace {

Scenario simple_scene() {
  Scenario sc;
  AgentSpec ego;
  ego.agent_id = 0;
  ego.start = Pose(0, 0, 1.9, 0);
  ego.lidar = default_lidar_model();
  ego.lidar.azimuth_step = 1.0 * kPi / 180.0;  // coarse for speed
  ego.lidar.ring_inclinations.resize(16);
  for (int i = 0; i < 16; ++i) {
    ego.lidar.ring_inclinations[i] = (-25.0 + 30.0 * i / 15.0) * kPi / 180.0;
  }
  sc.agents.push_back(ego);

  VehicleSpec v;
  v.box.cx = 10.0;
  v.box.cy = 0.0;
  v.box.cz = 0.8;
  v.box.l = 4.0;
  v.box.w = 2.0;
  v.box.h = 1.6;
  sc.vehicles.push_back(v);
  return sc;
}

}  // namespace

TEST_CASE("gaussian rng is deterministic with sane moments") {
  GaussianRng a(12345), b(12345), c(999);
  bool diverged = false;
  for (int i = 0; i < 100; ++i) {
    const double va = a.normal();
    CHECK(va == b.normal());
    if (va != c.normal()) diverged = true;
  }
  CHECK(diverged);

  GaussianRng r(7);
  double sum = 0.0, sq = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double v = r.normal();
    sum += v;
    sq += v * v;
  }
  CHECK(std::abs(sum / n) < 0.02);
  CHECK(std::abs(sq / n - 1.0) < 0.02);

  GaussianRng u(11);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("default lidar model spans the documented rings") {
  const LidarModel m = default_lidar_model();
  CHECK(m.valid());
  CHECK(m.ring_inclinations.size() == 64);
  CHECK(m.ring_inclinations.front() == doctest::Approx(-25.0 * kPi / 180.0));
  CHECK(m.ring_inclinations.back() == doctest::Approx(5.0 * kPi / 180.0));
  CHECK(m.height_h == 1.9);
  CHECK(m.sweep_time == 0.1);
}

TEST_CASE("agent and vehicle kinematics are linear in time") {
  AgentSpec a;
  a.start = Pose(1, 2, 1.9, 0.1);
  a.vx = 5.0;
  a.vy = -1.0;
  a.yaw_rate = 0.2;
  const Pose p = agent_pose_at(a, 2.0);
  CHECK(p.x == doctest::Approx(11.0));
  CHECK(p.y == doctest::Approx(0.0));
  CHECK(p.z == 1.9);
  CHECK(p.yaw == doctest::Approx(0.5));

  VehicleSpec v;
  v.box.cx = 0.0;
  v.box.l = 4; v.box.w = 2; v.box.h = 1.5;
  v.vx = 10.0;
  const BBox b = vehicle_box_at(v, 0.5);
  CHECK(b.cx == doctest::Approx(5.0));
  CHECK(b.t == 0.5);
}

TEST_CASE("ground truth snapshot") {
  const Scenario sc = simple_scene();
  const auto gt = ground_truth_at(sc, 0.5);
  REQUIRE(gt.size() == 1);
  CHECK(gt[0].score == 1.0);
  CHECK(gt[0].t == 0.5);
  CHECK_THROWS_AS(ground_truth_at(sc, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(ground_truth_at(sc, 100.0), std::invalid_argument);
}

TEST_CASE("lidar scan hits the vehicle face and the ground") {
  const Scenario sc = simple_scene();
  const TimedPointCloud pc = lidar_scan(sc, 0, 0.0);
  REQUIRE(!pc.empty());

  bool face_hit = false;
  bool ground_hit = false;
  for (const TimedPoint& p : pc.points) {
    CHECK(p.t >= 0.0);
    CHECK(p.t < sc.agents[0].lidar.sweep_time);
    CHECK(p.x >= sc.range.x_min);
    CHECK(p.x <= sc.range.x_max);
    CHECK_FALSE(p.free_space);
    // front face of the box at x = 8 (sensor frame equals world frame here)
    if (std::abs(p.x - 8.0) < 1e-6 && std::abs(p.y) < 1.0) face_hit = true;
    if (std::abs(p.z + 1.9) < 1e-6) ground_hit = true;
    // nothing may land inside the box interior
    CHECK_FALSE((p.x > 8.0 + 1e-6 && p.x < 12.0 - 1e-6 && std::abs(p.y) < 1.0 - 1e-6 &&
                 p.z > -1.9 + 1e-6 && p.z < -0.3 - 1e-6));
  }
  CHECK(face_hit);
  CHECK(ground_hit);
}

TEST_CASE("lidar scan occlusion shadows a second box") {
  Scenario sc = simple_scene();
  VehicleSpec behind = sc.vehicles[0];
  behind.box.cx = 20.0;  // directly behind the first along +x
  sc.vehicles.push_back(behind);
  // make the near box taller than the sensor so nothing peeks over it
  sc.vehicles[0].box.h = 2.5;
  sc.vehicles[0].box.cz = 1.25;
  const TimedPointCloud pc = lidar_scan(sc, 0, 0.0);
  for (const TimedPoint& p : pc.points) {
    // the far box's front face at x = 18 is fully shadowed near y = 0
    CHECK_FALSE((std::abs(p.x - 18.0) < 1e-6 && std::abs(p.y) < 0.4));
  }
}

TEST_CASE("rolling shutter stamps rays by azimuth") {
  Scenario sc = simple_scene();
  sc.vehicles.clear();  // pure ground scan
  const TimedPointCloud pc = lidar_scan(sc, 0, 2.0);
  REQUIRE(!pc.empty());
  for (const TimedPoint& p : pc.points) {
    double az = std::atan2(p.y, p.x);
    if (az < 0.0) az += 2.0 * kPi;
    CHECK(p.t == doctest::Approx(2.0 + az / (2.0 * kPi) * 0.1).epsilon(1e-9));
  }
}

TEST_CASE("pose noise is zero at epsilon zero and scales with epsilon") {
  const Pose p(3, 4, 1.9, 0.5);
  GaussianRng rng(21);
  ErrorModel off{0.0};
  const Pose same = inject_pose_noise(p, off, rng);
  CHECK(same.x == p.x);
  CHECK(same.yaw == p.yaw);

  // the same seed yields the same deviates, so noise scales linearly
  GaussianRng r1(22), r2(22);
  const Pose n1 = inject_pose_noise(p, ErrorModel{0.5}, r1);
  const Pose n2 = inject_pose_noise(p, ErrorModel{1.0}, r2);
  CHECK(n2.x - p.x == doctest::Approx(2.0 * (n1.x - p.x)));
  CHECK(wrap_angle(n2.yaw - p.yaw) ==
        doctest::Approx(2.0 * wrap_angle(n1.yaw - p.yaw)));
}

TEST_CASE("delivery queue orders by time then sequence") {
  DeliveryQueue dq;
  Cpm a, b, c;
  a.agent_id = 1;
  b.agent_id = 2;
  c.agent_id = 3;
  dq.push(a, 0.0, 0.3);  // due 0.3
  dq.push(b, 0.0, 0.1);  // due 0.1
  dq.push(c, 0.1, 0.2);  // due 0.3, after a
  CHECK(dq.pending() == 3);

  const auto early = dq.pop_due(0.05);
  CHECK(early.empty());

  const auto due = dq.pop_due(0.3);
  REQUIRE(due.size() == 3);
  CHECK(due[0].agent_id == 2);
  CHECK(due[1].agent_id == 1);
  CHECK(due[2].agent_id == 3);
  CHECK(dq.pending() == 0);

  CHECK_THROWS_AS(dq.push(a, 0.0, -0.1), std::invalid_argument);
}

TEST_CASE("roi queries pick the densest cells") {
  TimedPointCloud pc;
  // three points in one cell, one in another
  pc.points = {{0.1, 0.1, 0, 0.0}, {0.2, 0.1, 0, 0.02}, {0.3, 0.2, 0, 0.04},
               {5.0, 5.0, 0, 0.06}};
  const SparseGrid bev = voxelize(pc, 0.4, 2);
  const auto qs = select_roi_queries(bev, 1, 16);
  REQUIRE(qs.size() == 1);
  CHECK(qs[0].x == doctest::Approx(0.2));  // cell (0,0) center
  CHECK(qs[0].score == 1.0);
  CHECK(qs[0].t == doctest::Approx(0.02));  // midpoint of [0, 0.04]
  REQUIRE(qs[0].feature.size() == 16);
  CHECK(qs[0].feature[0] == 3.0f);  // point count channel
  for (int k = 7; k < 16; ++k) CHECK(qs[0].feature[k] == 0.0f);

  const auto both = select_roi_queries(bev, 10, 16);
  CHECK(both.size() == 2);
  CHECK(both[1].score == doctest::Approx(1.0 / 3.0));

  CHECK_THROWS_AS(select_roi_queries(bev, 1, 8), std::invalid_argument);
}

TEST_CASE("min area rect recovers an oriented rectangle") {
  const double yaw = 0.4;
  const double c = std::cos(yaw), s = std::sin(yaw);
  std::vector<std::pair<double, double>> pts;
  for (double u = -2.0; u <= 2.0; u += 0.25) {
    for (double v : {-1.0, 1.0}) {
      pts.emplace_back(3.0 + c * u - s * v, -1.0 + s * u + c * v);
    }
  }
  const MinAreaRect r = min_area_rect(pts);
  CHECK(r.cx == doctest::Approx(3.0));
  CHECK(r.cy == doctest::Approx(-1.0));
  CHECK(r.l == doctest::Approx(4.0));
  CHECK(r.w == doctest::Approx(2.0));
  CHECK(r.l >= r.w);
  // orientation matches up to a half turn
  const double dyaw = std::abs(wrap_angle(r.yaw - yaw));
  CHECK((dyaw < 1e-6 || std::abs(dyaw - kPi) < 1e-6));

  const MinAreaRect dot = min_area_rect({{1.0, 2.0}});
  CHECK(dot.cx == 1.0);
  CHECK(dot.l == 0.0);
  CHECK_THROWS_AS(min_area_rect({}), std::invalid_argument);
}

TEST_CASE("detector stand-in finds a synthetic cluster") {
  TimedPointCloud pc;
  // dense shell of an axis-aligned box centered at (10, 0)
  for (double x = 8.05; x <= 11.95; x += 0.1) {
    for (double y : {-0.95, 0.95}) pc.points.push_back({x, y, -0.5, 0.0});
  }
  for (double y = -0.95; y <= 0.95; y += 0.1) {
    for (double x : {8.05, 11.95}) pc.points.push_back({x, y, -0.5, 0.0});
  }
  // ground points must be ignored
  for (double x = 0.0; x < 30.0; x += 0.5) pc.points.push_back({x, 5.0, -1.9, 0.0});

  const auto boxes = detect_boxes(pc, 1.9);
  REQUIRE(boxes.size() == 1);
  // length completed to the 4.2 m prior, pushing the center away from the
  // sensor by half the added extent
  CHECK(boxes[0].cx == doctest::Approx(10.15).epsilon(0.02));
  CHECK(boxes[0].cy == doctest::Approx(0.0).scale(1.0).epsilon(0.05));
  CHECK(boxes[0].l == doctest::Approx(4.2).epsilon(0.05));
  CHECK(boxes[0].w == doctest::Approx(1.9).epsilon(0.05));
  CHECK(boxes[0].score > 0.0);
  CHECK(boxes[0].score < 1.0);

  // too few points: nothing detected
  TimedPointCloud sparse;
  sparse.points = {{0, 0, -0.5, 0}, {0.1, 0, -0.5, 0}};
  CHECK(detect_boxes(sparse, 1.9).empty());
}

TEST_CASE("scenario parser round trip") {
  const std::string cfg = R"(# demo
seed 42
duration 2.0
frame_period 0.1
epsilon 0.6
latency_ms 100 300
cpm_threshold 0.25
range -100 100 -30 30
lidar 1.9 32 0.5 0.1
agent 0 0 0 0 5 0 0
agent 1 20 4 180 -5 0 0
vehicle 10 2 0.8 4 2 1.6 90 0 3 0
)";
  const Scenario sc = parse_scenario(cfg);
  CHECK(sc.seed == 42);
  CHECK(sc.duration == 2.0);
  CHECK(sc.error_model.epsilon == 0.6);
  CHECK(sc.latency_min == doctest::Approx(0.1));
  CHECK(sc.latency_max == doctest::Approx(0.3));
  CHECK(sc.cpm_threshold == 0.25);
  CHECK(sc.range.x_min == -100);
  CHECK(sc.range.y_max == 30);
  REQUIRE(sc.agents.size() == 2);
  CHECK(sc.agents[0].lidar.ring_inclinations.size() == 32);
  CHECK(sc.agents[1].start.x == 20);
  CHECK(sc.agents[1].start.yaw == doctest::Approx(-kPi));  // 180 deg wraps
  CHECK(sc.agents[1].vx == -5);
  REQUIRE(sc.vehicles.size() == 1);
  CHECK(sc.vehicles[0].box.yaw == doctest::Approx(kPi / 2.0));
  CHECK(sc.vehicles[0].vy == 3.0);
}

TEST_CASE("scenario parser names the offending line") {
  try {
    parse_scenario("seed 1\nbogus 2 3\n");
    FAIL("expected parse failure");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_scenario("seed 1\n"), std::invalid_argument);  // no agents
  CHECK_THROWS_AS(parse_scenario("agent 0 0 0 0 0 0 0\nlatency_ms 300 100\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_scenario("agent 0 0 0 0 0 0 0\nvehicle 0 0 0 0 2 1.6 0 0 0 0\n"),
                  std::invalid_argument);  // zero length
}

TEST_CASE("scan dump round trip") {
  TimedPointCloud pc;
  pc.points = {{1.5, -2.5, 0.25, 0.125}, {0, 0, 0, 0}};
  const auto bytes = dump_scan(pc);
  CHECK(bytes.size() == 32);
  const TimedPointCloud back = read_scan(bytes);
  REQUIRE(back.size() == 2);
  CHECK(back.points[0].x == 1.5);
  CHECK(back.points[0].t == 0.125);
  CHECK_THROWS_AS(read_scan(std::vector<uint8_t>(7)), std::invalid_argument);
}
