#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "obbkit/annotations.hpp"
#include "obbkit/geometry.hpp"

namespace obbkit {

enum class DetFlag {
  tp,
  fp,
  ignored,  // best match was a difficult groundtruth; no TP/FP effect
};

// Greedy matching outcome for one category. Detections are ranked by
// descending score (ties keep input order); each non-difficult
// groundtruth is matched at most once.
struct MatchResult {
  std::vector<std::size_t> ranking;  // indices into the input detections
  std::vector<DetFlag> flags;        // aligned with ranking
  std::vector<bool> gt_matched;      // aligned with the input groundtruths
  double iou_threshold = 0.5;
};

// Cumulative precision/recall over the ranked detections, aligned and
// with non-decreasing recall.
struct PrCurve {
  std::vector<double> recall;
  std::vector<double> precision;
};

struct CategoryEval {
  double ap = 0.0;
  double recall = 0.0;  // final (maximum) recall at the threshold
  long long tp = 0;
  long long fp = 0;
  long long fn = 0;
  // True negatives are undefined for detection; the count is always 0.
};

struct EvalReport {
  double iou_threshold = 0.5;
  std::vector<std::pair<std::string, CategoryEval>> per_category;
  double mAP = 0.0;
  double AR = 0.0;
};

using IouFn = std::function<double(const ObbParams&, const Quad&)>;

// IoU between a detection box and a groundtruth quad via exact clipping.
double detection_iou(const ObbParams& det, const Quad& gt);

// Greedy score-ordered matching: each detection takes the unmatched
// same-image groundtruth of highest IoU when that IoU >= threshold,
// otherwise counts as a false positive. Matches whose best groundtruth
// is difficult are discarded with no TP/FP effect. All records must
// share one category. `iou` defaults to the exact clipping IoU.
MatchResult match_detections(const std::vector<DetectionRecord>& dets,
                             const std::vector<GroundTruthRecord>& gts,
                             double iou_threshold,
                             const IouFn& iou = detection_iou);

// num_gt is the number of non-difficult groundtruths. With num_gt == 0
// all recall values are 0 (and AP is 0).
PrCurve pr_curve(const MatchResult& m, std::size_t num_gt);

// All-point interpolated AP: area under the precision envelope made
// non-increasing from the right, integrated over recall.
double average_precision(const PrCurve& c);

// Per-category AP/recall/confusion over manifest.categories. Categories
// with zero groundtruth and zero detections are excluded; the rest
// average into mAP and AR. Unknown categories in the records raise
// ValidationError.
EvalReport evaluate(const std::vector<DetectionRecord>& dets,
                    const std::vector<GroundTruthRecord>& gts,
                    const DatasetManifest& manifest, double iou_threshold);

// Fixed-key-order JSON document:
// {iou_threshold, per_category:{name:{ap, recall, tp, fp, fn}}, mAP, AR}.
std::string report_to_json(const EvalReport& report, int indent = -1);

}  // namespace obbkit
