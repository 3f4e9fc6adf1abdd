#include <doctest.h>

#include <random>

#include "coopdet/geometry.hpp"
#include "oracles.hpp"

using namespace coopdet;

namespace {

Pose random_pose(std::mt19937& rng) {
  std::uniform_real_distribution<double> pos(-50.0, 50.0);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  return Pose(pos(rng), pos(rng), pos(rng) * 0.1, ang(rng));
}

void check_pose_close(const Pose& a, const Pose& b, double tol) {
  CHECK(std::abs(a.x - b.x) < tol);
  CHECK(std::abs(a.y - b.y) < tol);
  CHECK(std::abs(a.z - b.z) < tol);
  CHECK(std::abs(wrap_angle(a.yaw - b.yaw)) < tol);
}

}  // namespace

TEST_CASE("wrap_angle half-open interval") {
  CHECK(wrap_angle(kPi) == doctest::Approx(-kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(-kPi));
  CHECK(wrap_angle(0.0) == 0.0);
  CHECK(wrap_angle(3.0 * kPi) == doctest::Approx(-kPi));
  CHECK(wrap_angle(kPi - 1e-9) == doctest::Approx(kPi - 1e-9));
}

TEST_CASE("compose identity and inverse") {
  std::mt19937 rng(7);
  const Pose p = random_pose(rng);
  check_pose_close(compose_pose(Pose::identity(), p), p, 1e-12);
  check_pose_close(compose_pose(p, Pose::identity()), p, 1e-12);
  check_pose_close(compose_pose(p, invert_pose(p)), Pose::identity(), 1e-12);
  check_pose_close(compose_pose(invert_pose(p), p), Pose::identity(), 1e-12);
}

TEST_CASE("compose hand-evaluated rotation case") {
  const Pose r = compose_pose(Pose(1, 0, 0, kPi / 2), Pose(1, 0, 0, 0));
  CHECK(r.x == doctest::Approx(1.0));
  CHECK(r.y == doctest::Approx(1.0));
  CHECK(r.z == doctest::Approx(0.0));
  CHECK(r.yaw == doctest::Approx(kPi / 2));
}

TEST_CASE("invert pure translation") {
  const Pose r = invert_pose(Pose(1, 2, 0, 0));
  CHECK(r.x == doctest::Approx(-1.0));
  CHECK(r.y == doctest::Approx(-2.0));
  CHECK(r.yaw == doctest::Approx(0.0));
  check_pose_close(invert_pose(Pose::identity()), Pose::identity(), 1e-15);
}

TEST_CASE("invert matches matrix-inverse oracle") {
  std::mt19937 rng(11);
  for (int i = 0; i < 200; ++i) {
    const Pose p = random_pose(rng);
    const Pose inv = invert_pose(p);
    const auto m = oracle::mat_inverse_rigid(oracle::pose_matrix(p.x, p.y, p.yaw));
    CHECK(std::abs(inv.x - m[0][2]) < 1e-9);
    CHECK(std::abs(inv.y - m[1][2]) < 1e-9);
    CHECK(std::abs(std::cos(inv.yaw) - m[0][0]) < 1e-9);
    CHECK(std::abs(std::sin(inv.yaw) - m[1][0]) < 1e-9);
  }
  // fixed case, frozen from the oracle
  const Pose inv = invert_pose(Pose(1, 0, 0, kPi / 2));
  CHECK(inv.x == doctest::Approx(0.0));
  CHECK(inv.y == doctest::Approx(1.0));
  CHECK(inv.yaw == doctest::Approx(-kPi / 2));
}

TEST_CASE("compose matches matrix-product oracle and is associative") {
  std::mt19937 rng(13);
  for (int i = 0; i < 200; ++i) {
    const Pose a = random_pose(rng);
    const Pose b = random_pose(rng);
    const Pose c = random_pose(rng);

    const Pose ab = compose_pose(a, b);
    const auto m = oracle::mat_mul(oracle::pose_matrix(a.x, a.y, a.yaw),
                                   oracle::pose_matrix(b.x, b.y, b.yaw));
    CHECK(std::abs(ab.x - m[0][2]) < 1e-9);
    CHECK(std::abs(ab.y - m[1][2]) < 1e-9);

    check_pose_close(compose_pose(compose_pose(a, b), c),
                     compose_pose(a, compose_pose(b, c)), 1e-9);
  }
}

TEST_CASE("transform_points basics") {
  TimedPointCloud pc;
  pc.points = {{0, 0, 0, 0.5}, {1, 0, 0, 0.6}};
  pc.frame = "a";

  const TimedPointCloud same = transform_points(pc, Pose::identity(), "a");
  CHECK(same.points[0].x == 0.0);
  CHECK(same.points[1].x == 1.0);

  const TimedPointCloud shifted = transform_points(pc, Pose(1, 0, 0, 0), "b");
  CHECK(shifted.points[0].x == doctest::Approx(1.0));
  CHECK(shifted.frame == "b");
  CHECK(shifted.points[0].t == 0.5);

  const TimedPointCloud rotated = transform_points(pc, Pose(0, 0, 0, kPi / 2), "c");
  CHECK(rotated.points[1].x == doctest::Approx(0.0));
  CHECK(rotated.points[1].y == doctest::Approx(1.0));
}

TEST_CASE("transform_points preserves pairwise distances") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  TimedPointCloud pc;
  for (int i = 0; i < 30; ++i) pc.points.push_back({u(rng), u(rng), u(rng), 0.0});
  const Pose T = random_pose(rng);
  const TimedPointCloud out = transform_points(pc, T, "x");
  for (std::size_t i = 0; i < pc.points.size(); ++i) {
    for (std::size_t j = i + 1; j < pc.points.size(); ++j) {
      auto dist = [](const TimedPoint& a, const TimedPoint& b) {
        return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) +
                         (a.z - b.z) * (a.z - b.z));
      };
      CHECK(std::abs(dist(pc.points[i], pc.points[j]) -
                     dist(out.points[i], out.points[j])) < 1e-9);
    }
  }
}

TEST_CASE("bev_iou trivial and derived cases") {
  BBox a;
  a.cx = 0; a.cy = 0; a.l = 4; a.w = 2; a.h = 1.5;
  CHECK(bev_iou(a, a) == doctest::Approx(1.0));

  BBox far = a;
  far.cx = 100;
  CHECK(bev_iou(a, far) == 0.0);

  BBox shifted = a;
  shifted.cx = 2.0;  // +2 m along length: intersection 2x2, union 16-4
  CHECK(bev_iou(a, shifted) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));

  BBox degenerate = a;
  degenerate.w = 0.0;
  CHECK(bev_iou(a, degenerate) == 0.0);
}

TEST_CASE("bev_iou symmetric, bounded, rigid invariant") {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::uniform_real_distribution<double> dim(0.5, 6.0);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  for (int i = 0; i < 100; ++i) {
    BBox a, b;
    a.cx = u(rng); a.cy = u(rng); a.l = dim(rng); a.w = dim(rng); a.h = 1; a.yaw = ang(rng);
    b.cx = u(rng); b.cy = u(rng); b.l = dim(rng); b.w = dim(rng); b.h = 1; b.yaw = ang(rng);

    const double iou = bev_iou(a, b);
    CHECK(iou >= 0.0);
    CHECK(iou <= 1.0);
    CHECK(std::abs(iou - bev_iou(b, a)) < 1e-12);

    const Pose T(u(rng), u(rng), 0.0, ang(rng));
    CHECK(std::abs(bev_iou(transform_box(a, T), transform_box(b, T)) - iou) < 1e-9);
  }
}

TEST_CASE("iou_3d cases") {
  BBox a;
  a.cx = 0; a.cy = 0; a.cz = 0; a.l = 4; a.w = 2; a.h = 2;
  CHECK(iou_3d(a, a) == doctest::Approx(1.0));

  BBox half = a;
  half.cz = 1.0;  // same footprint, half vertical overlap
  CHECK(iou_3d(a, half) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));

  BBox disjoint = a;
  disjoint.cz = 10.0;
  CHECK(iou_3d(a, disjoint) == 0.0);

  BBox flat = a;
  flat.h = 0.0;
  CHECK(iou_3d(a, flat) == 0.0);
}

TEST_CASE("point_in_bev edge inclusive") {
  BBox b;
  b.cx = 0; b.cy = 0; b.l = 4; b.w = 2; b.h = 1;
  CHECK(point_in_bev(b, 0, 0));
  CHECK(point_in_bev(b, 2.0, 0.0));   // on the short edge
  CHECK(point_in_bev(b, 2.0, 1.0));   // corner
  CHECK_FALSE(point_in_bev(b, 2.01, 0.0));
}
