#include "obbkit/metrics.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

namespace obbkit {

double detection_iou(const ObbParams& det, const Quad& gt) {
  return quad_iou(obb_to_quad(det), gt);
}

MatchResult match_detections(const std::vector<DetectionRecord>& dets,
                             const std::vector<GroundTruthRecord>& gts,
                             double iou_threshold, const IouFn& iou) {
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
    throw ValidationError("iou_threshold must be in (0, 1)");
  }
  const std::string* category = nullptr;
  for (const auto& d : dets) {
    if (category && d.category != *category) {
      throw ValidationError("mixed categories: '" + *category + "' vs '" +
                            d.category + "'");
    }
    category = &d.category;
  }
  for (const auto& g : gts) {
    if (category && g.category != *category) {
      throw ValidationError("mixed categories: '" + *category + "' vs '" +
                            g.category + "'");
    }
    category = &g.category;
  }

  std::map<std::string, std::vector<std::size_t>> gts_by_image;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    gts_by_image[gts[i].image_id].push_back(i);
  }

  MatchResult m;
  m.iou_threshold = iou_threshold;
  m.ranking.resize(dets.size());
  std::iota(m.ranking.begin(), m.ranking.end(), std::size_t{0});
  std::stable_sort(m.ranking.begin(), m.ranking.end(),
                   [&](std::size_t a, std::size_t b) {
                     return dets[a].score > dets[b].score;
                   });

  m.flags.reserve(dets.size());
  m.gt_matched.assign(gts.size(), false);
  for (const std::size_t di : m.ranking) {
    const DetectionRecord& det = dets[di];
    double best_iou = 0.0;
    std::size_t best_gt = gts.size();
    const auto it = gts_by_image.find(det.image_id);
    if (it != gts_by_image.end()) {
      for (const std::size_t gi : it->second) {
        if (m.gt_matched[gi]) continue;  // difficult gts are never marked
        const double v = iou(det.box, gts[gi].quad);
        if (v > best_iou) {
          best_iou = v;
          best_gt = gi;
        }
      }
    }
    if (best_gt < gts.size() && best_iou >= iou_threshold) {
      if (gts[best_gt].difficult) {
        m.flags.push_back(DetFlag::ignored);
      } else {
        m.gt_matched[best_gt] = true;
        m.flags.push_back(DetFlag::tp);
      }
    } else {
      m.flags.push_back(DetFlag::fp);
    }
  }
  return m;
}

PrCurve pr_curve(const MatchResult& m, std::size_t num_gt) {
  PrCurve c;
  long long tp = 0, counted = 0;
  for (const DetFlag f : m.flags) {
    if (f == DetFlag::ignored) continue;
    ++counted;
    if (f == DetFlag::tp) ++tp;
    c.recall.push_back(num_gt ? static_cast<double>(tp) / num_gt : 0.0);
    c.precision.push_back(static_cast<double>(tp) / counted);
  }
  return c;
}

double average_precision(const PrCurve& c) {
  const std::size_t n = c.recall.size();
  if (n == 0) return 0.0;
  std::vector<double> envelope(c.precision);
  for (std::size_t i = n - 1; i-- > 0;) {
    envelope[i] = std::max(envelope[i], envelope[i + 1]);
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ap += (c.recall[i] - prev_recall) * envelope[i];
    prev_recall = c.recall[i];
  }
  return ap;
}

EvalReport evaluate(const std::vector<DetectionRecord>& dets,
                    const std::vector<GroundTruthRecord>& gts,
                    const DatasetManifest& manifest, double iou_threshold) {
  const std::set<std::string> known(manifest.categories.begin(),
                                    manifest.categories.end());
  for (const auto& d : dets) {
    if (!known.count(d.category)) {
      throw ValidationError("unknown category '" + d.category + "'");
    }
  }
  for (const auto& g : gts) {
    if (!known.count(g.category)) {
      throw ValidationError("unknown category '" + g.category + "'");
    }
  }

  EvalReport report;
  report.iou_threshold = iou_threshold;
  double ap_sum = 0.0, recall_sum = 0.0;
  for (const std::string& cat : manifest.categories) {
    std::vector<DetectionRecord> cat_dets;
    std::vector<GroundTruthRecord> cat_gts;
    for (const auto& d : dets)
      if (d.category == cat) cat_dets.push_back(d);
    for (const auto& g : gts)
      if (g.category == cat) cat_gts.push_back(g);

    std::size_t num_gt = 0;
    for (const auto& g : cat_gts)
      if (!g.difficult) ++num_gt;
    if (num_gt == 0 && cat_dets.empty()) continue;

    const MatchResult m = match_detections(cat_dets, cat_gts, iou_threshold);
    CategoryEval ev;
    ev.tp = std::count(m.flags.begin(), m.flags.end(), DetFlag::tp);
    ev.fp = std::count(m.flags.begin(), m.flags.end(), DetFlag::fp);
    ev.fn = static_cast<long long>(num_gt) - ev.tp;
    ev.recall = num_gt ? static_cast<double>(ev.tp) / num_gt : 0.0;
    ev.ap = average_precision(pr_curve(m, num_gt));
    ap_sum += ev.ap;
    recall_sum += ev.recall;
    report.per_category.emplace_back(cat, ev);
  }
  const std::size_t n = report.per_category.size();
  report.mAP = n ? ap_sum / n : 0.0;
  report.AR = n ? recall_sum / n : 0.0;
  return report;
}

std::string report_to_json(const EvalReport& report, int indent) {
  nlohmann::ordered_json j;
  j["iou_threshold"] = report.iou_threshold;
  auto per = nlohmann::ordered_json::object();
  for (const auto& [name, ev] : report.per_category) {
    per[name] = {{"ap", ev.ap},
                 {"recall", ev.recall},
                 {"tp", ev.tp},
                 {"fp", ev.fp},
                 {"fn", ev.fn}};
  }
  j["per_category"] = std::move(per);
  j["mAP"] = report.mAP;
  j["AR"] = report.AR;
  return j.dump(indent);
}

}  // namespace obbkit
