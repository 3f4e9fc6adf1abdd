#pragma once

#include <string>
#include <vector>

#include "coopdet/geometry.hpp"

namespace coopdet {

enum class IouMetric { kBev, k3d };
enum class ScoreSorting { kGlobal, kLocal };

struct MatchOutcome {
  std::vector<bool> tp;              // per detection, in score-descending order trace
  std::vector<int> matched_gt;       // per detection: matched GT index or -1
  std::vector<std::size_t> det_order;  // detection indices in the order processed
};

/// Greedy matching: detections by descending score, each takes the highest-IoU
/// unmatched ground-truth box with IoU >= threshold.
MatchOutcome match_detections(const std::vector<BBox>& dets,
                              const std::vector<BBox>& gts, double iou_thr,
                              IouMetric metric = IouMetric::kBev);

struct Frame {
  std::vector<BBox> dets;
  std::vector<BBox> gts;
};

/// Average precision with all-point PR integration. Global sorting pools all
/// detections; local sorting orders within each frame and concatenates
/// frame-wise. Throws when the ground-truth count is zero.
double average_precision(const std::vector<Frame>& frames, double iou_thr,
                         ScoreSorting sorting, IouMetric metric = IouMetric::kBev);

/// Translation (meters) and absolute yaw difference (degrees) of the relative
/// pose inverse(T_est) * T_gt.
std::pair<double, double> pose_error(const Pose& T_est, const Pose& T_gt);

struct MetricRow {
  std::string experiment_id;
  double sweep_value = 0.0;  // epsilon or latency, per experiment
  double iou_thr = 0.0;
  ScoreSorting sorting = ScoreSorting::kGlobal;
  double ap = 0.0;
  double median_translation_err = 0.0;
  double median_rotation_err_deg = 0.0;
};

std::string metrics_csv_header();
std::string to_csv_row(const MetricRow& row);

}  // namespace coopdet
