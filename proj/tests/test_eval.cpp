#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "coopdet/eval.hpp"
#include "oracles.hpp"

using namespace coopdet;

namespace {

BBox box_at(double cx, double cy, double score = 1.0, double yaw = 0.0) {
  BBox b;
  b.cx = cx;
  b.cy = cy;
  b.l = 4.0;
  b.w = 2.0;
  b.h = 1.5;
  b.score = score;
  b.yaw = yaw;
  return b;
}

// random frames where detection d either overlaps a private GT box or nothing
std::vector<Frame> random_frames(std::mt19937& rng, int n_frames) {
  std::uniform_real_distribution<double> s(0.05, 1.0);
  std::uniform_int_distribution<int> count(1, 6);
  std::bernoulli_distribution hit(0.6);
  std::vector<Frame> frames(n_frames);
  double lane = 0.0;
  for (Frame& f : frames) {
    const int n_gt = count(rng);
    for (int g = 0; g < n_gt; ++g) {
      f.gts.push_back(box_at(lane, 0.0));
      if (hit(rng)) f.dets.push_back(box_at(lane + 0.2, 0.0, s(rng)));
      lane += 20.0;  // keep boxes disjoint so tp/fp status is unambiguous
    }
    const int n_fp = count(rng) - 1;
    for (int g = 0; g < n_fp; ++g) {
      f.dets.push_back(box_at(lane, 0.0, s(rng)));
      lane += 20.0;
    }
  }
  return frames;
}

std::vector<oracle::ScoredDet> trace_of(const std::vector<Frame>& frames,
                                        double iou_thr) {
  std::vector<oracle::ScoredDet> out;
  for (std::size_t fi = 0; fi < frames.size(); ++fi) {
    const MatchOutcome m = match_detections(frames[fi].dets, frames[fi].gts, iou_thr);
    for (std::size_t d = 0; d < frames[fi].dets.size(); ++d) {
      out.push_back({frames[fi].dets[d].score, static_cast<bool>(m.tp[d]),
                     static_cast<int>(fi)});
    }
  }
  return out;
}

}  // namespace

TEST_CASE("greedy matching prefers high scores and high IoU") {
  const std::vector<BBox> gts = {box_at(0, 0), box_at(10, 0)};
  // two detections compete for the first GT; the higher scorer wins
  const std::vector<BBox> dets = {box_at(0.5, 0, 0.4), box_at(0.2, 0, 0.9),
                                  box_at(10, 0, 0.8)};
  const MatchOutcome m = match_detections(dets, gts, 0.3);
  CHECK(m.tp == std::vector<bool>{false, true, true});
  CHECK(m.matched_gt == std::vector<int>{-1, 0, 1});
  CHECK(m.det_order == std::vector<std::size_t>{1, 2, 0});
  CHECK_THROWS_AS(match_detections(dets, gts, 0.0), std::invalid_argument);
}

TEST_CASE("matching picks the highest-IoU ground truth") {
  const std::vector<BBox> gts = {box_at(0, 0), box_at(1.0, 0)};
  const std::vector<BBox> dets = {box_at(0.9, 0, 1.0)};
  const MatchOutcome m = match_detections(dets, gts, 0.1);
  CHECK(m.matched_gt[0] == 1);
}

TEST_CASE("perfect detections give AP 1") {
  std::vector<Frame> frames(3);
  for (int f = 0; f < 3; ++f) {
    frames[f].gts = {box_at(0, 0), box_at(10, 0)};
    frames[f].dets = {box_at(0, 0, 0.9), box_at(10, 0, 0.8)};
  }
  CHECK(average_precision(frames, 0.5, ScoreSorting::kGlobal) == doctest::Approx(1.0));
  CHECK(average_precision(frames, 0.5, ScoreSorting::kLocal) == doctest::Approx(1.0));
}

TEST_CASE("hand-evaluated AP with one false positive in between") {
  // trace sorted by score: tp(0.9), fp(0.8), tp(0.7); 3 GT boxes total
  Frame f;
  f.gts = {box_at(0, 0), box_at(20, 0), box_at(40, 0)};
  f.dets = {box_at(0, 0, 0.9), box_at(60, 0, 0.8), box_at(20, 0, 0.7)};
  // AP = (1/3)*1 + (1/3)*(2/3) = 5/9
  CHECK(average_precision({f}, 0.5, ScoreSorting::kGlobal) ==
        doctest::Approx(5.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("AP matches the brute-force oracle on random frame sets") {
  std::mt19937 rng(107);
  for (int trial = 0; trial < 50; ++trial) {
    const std::vector<Frame> frames = random_frames(rng, 1 + trial % 5);
    std::size_t total_gt = 0;
    for (const Frame& f : frames) total_gt += f.gts.size();
    const auto trace = trace_of(frames, 0.5);

    for (ScoreSorting sorting : {ScoreSorting::kGlobal, ScoreSorting::kLocal}) {
      const double expected =
          oracle::ap_from_trace(trace, total_gt, sorting == ScoreSorting::kLocal);
      CHECK(average_precision(frames, 0.5, sorting) ==
            doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("global and local sorting coincide on a single frame") {
  std::mt19937 rng(109);
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<Frame> frames = random_frames(rng, 1);
    CHECK(average_precision(frames, 0.5, ScoreSorting::kGlobal) ==
          doctest::Approx(average_precision(frames, 0.5, ScoreSorting::kLocal))
              .epsilon(1e-12));
  }
}

TEST_CASE("AP input validation") {
  CHECK_THROWS_AS(average_precision({}, 0.5, ScoreSorting::kGlobal),
                  std::invalid_argument);
  Frame empty_gt;
  empty_gt.dets = {box_at(0, 0)};
  CHECK_THROWS_AS(average_precision({empty_gt}, 0.5, ScoreSorting::kGlobal),
                  std::invalid_argument);
}

TEST_CASE("pose error from the relative transform") {
  const auto [t0, r0] = pose_error(Pose(1, 2, 0, 0.5), Pose(1, 2, 0, 0.5));
  CHECK(t0 == doctest::Approx(0.0));
  CHECK(r0 == doctest::Approx(0.0));

  // pure translation offset: relative translation is expressed in the
  // estimate's frame but its norm is preserved
  const auto [t1, r1] = pose_error(Pose(0, 0, 0, 0.3), Pose(3, 4, 0, 0.3));
  CHECK(t1 == doctest::Approx(5.0));
  CHECK(r1 == doctest::Approx(0.0));

  const auto [t2, r2] = pose_error(Pose(0, 0, 0, 0), Pose(0, 0, 0, kPi / 6.0));
  CHECK(t2 == doctest::Approx(0.0));
  CHECK(r2 == doctest::Approx(30.0));
}

TEST_CASE("csv header and row formatting") {
  CHECK(metrics_csv_header() ==
        "experiment_id,sweep_value,iou_thr,sorting,ap,median_translation_err_m,"
        "median_rotation_err_deg");
  MetricRow row;
  row.experiment_id = "eps_sweep";
  row.sweep_value = 0.4;
  row.iou_thr = 0.5;
  row.sorting = ScoreSorting::kLocal;
  row.ap = 0.75;
  row.median_translation_err = 0.125;
  row.median_rotation_err_deg = 1.5;
  CHECK(to_csv_row(row) == "eps_sweep,0.4,0.5,local,0.75,0.125,1.5");
}
