#include "coopdet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace coopdet {

namespace {

double box_iou(const BBox& a, const BBox& b, IouMetric metric) {
  return metric == IouMetric::kBev ? bev_iou(a, b) : iou_3d(a, b);
}

std::vector<std::size_t> score_order(const std::vector<BBox>& dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].score > dets[b].score;
  });
  return order;
}

}  // namespace

MatchOutcome match_detections(const std::vector<BBox>& dets,
                              const std::vector<BBox>& gts, double iou_thr,
                              IouMetric metric) {
  if (iou_thr <= 0.0 || iou_thr > 1.0)
    throw std::invalid_argument("match_detections: iou_thr must be in (0, 1]");

  MatchOutcome out;
  out.det_order = score_order(dets);
  out.tp.assign(dets.size(), false);
  out.matched_gt.assign(dets.size(), -1);

  std::vector<bool> gt_taken(gts.size(), false);
  for (std::size_t d : out.det_order) {
    double best_iou = iou_thr;
    int best_gt = -1;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gt_taken[g]) continue;
      const double iou = box_iou(dets[d], gts[g], metric);
      if (iou >= best_iou && (best_gt < 0 || iou > best_iou)) {
        best_iou = iou;
        best_gt = static_cast<int>(g);
      }
    }
    if (best_gt >= 0) {
      gt_taken[best_gt] = true;
      out.tp[d] = true;
      out.matched_gt[d] = best_gt;
    }
  }
  return out;
}

double average_precision(const std::vector<Frame>& frames, double iou_thr,
                         ScoreSorting sorting, IouMetric metric) {
  if (frames.empty()) throw std::invalid_argument("average_precision: no frames");

  std::size_t total_gt = 0;
  for (const Frame& f : frames) total_gt += f.gts.size();
  if (total_gt == 0)
    throw std::invalid_argument("average_precision: zero ground-truth boxes");

  // flatten detections into (score, tp) with per-frame matching
  struct Det {
    double score;
    bool tp;
    std::size_t frame;
  };
  std::vector<Det> all;
  for (std::size_t fi = 0; fi < frames.size(); ++fi) {
    const Frame& f = frames[fi];
    const MatchOutcome m = match_detections(f.dets, f.gts, iou_thr, metric);
    for (std::size_t d = 0; d < f.dets.size(); ++d) {
      all.push_back({f.dets[d].score, m.tp[d], fi});
    }
  }

  std::stable_sort(all.begin(), all.end(), [&](const Det& a, const Det& b) {
    if (sorting == ScoreSorting::kLocal && a.frame != b.frame) return a.frame < b.frame;
    return a.score > b.score;
  });

  // all-point PR integration
  double ap = 0.0;
  double prev_recall = 0.0;
  std::size_t tp = 0, fp = 0;
  for (const Det& d : all) {
    if (d.tp) {
      ++tp;
    } else {
      ++fp;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(total_gt);
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

std::pair<double, double> pose_error(const Pose& T_est, const Pose& T_gt) {
  const Pose rel = compose_pose(invert_pose(T_est), T_gt);
  return {std::hypot(rel.x, rel.y), std::abs(rel.yaw) * 180.0 / kPi};
}

std::string metrics_csv_header() {
  return "experiment_id,sweep_value,iou_thr,sorting,ap,median_translation_err_m,"
         "median_rotation_err_deg";
}

std::string to_csv_row(const MetricRow& row) {
  std::ostringstream os;
  os.precision(9);
  os << row.experiment_id << ',' << row.sweep_value << ',' << row.iou_thr << ','
     << (row.sorting == ScoreSorting::kGlobal ? "global" : "local") << ',' << row.ap
     << ',' << row.median_translation_err << ',' << row.median_rotation_err_deg;
  return os.str();
}

}  // namespace coopdet
