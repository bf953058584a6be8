#include "obbkit/optim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "obbkit/rng.hpp"

namespace obbkit {

namespace {

constexpr double kPi = 3.14159265358979323846;

LossValue eval_variant(const KeypointBox& pred, const KeypointBox& gt,
                       const ImageSize& img, const FitConfig& cfg) {
  return cfg.variant == LossVariant::head_tail
             ? head_tail_loss(pred, gt, img, cfg.loss)
             : four_point_loss(pred, gt, img, cfg.loss);
}

LossGradient grad_variant(const KeypointBox& pred, const KeypointBox& gt,
                          const ImageSize& img, const FitConfig& cfg) {
  return cfg.variant == LossVariant::head_tail
             ? head_tail_loss_grad(pred, gt, img, cfg.loss)
             : four_point_loss_grad(pred, gt, img, cfg.loss);
}

}  // namespace

double direction_error(const KeypointBox& pred, const KeypointBox& gt) {
  const Point2 u = pred.head - pred.center;
  const Point2 v = gt.head - gt.center;
  if (sq_norm(u) == 0.0 || sq_norm(v) == 0.0) {
    throw ValidationError("direction_error: degenerate axis (head == center)");
  }
  return std::atan2(std::abs(cross(u, v)), std::abs(dot(u, v)));
}

FitTrace fit_obb(const KeypointBox& init, const KeypointBox& target,
                 const ImageSize& img, const FitConfig& cfg) {
  if (cfg.max_iters <= 0 || !(cfg.tol > 0.0)) {
    throw ValidationError("fit_obb: max_iters and tol must be positive");
  }
  if (cfg.learning_rate && !(*cfg.learning_rate > 0.0)) {
    throw ValidationError("fit_obb: learning_rate must be positive");
  }
  const double lr = cfg.learning_rate.value_or(
      0.1 * normalizer(img, cfg.loss.normalization));

  FitTrace tr;
  KeypointBox box = init;
  double loss = eval_variant(box, target, img, cfg).value;
  tr.loss_history.push_back(loss);
  const double initial = loss;

  while (loss > cfg.tol && tr.iterations < cfg.max_iters) {
    const LossGradient g = grad_variant(box, target, img, cfg);
    box.center = box.center - g.d_center * lr;
    box.head = box.head - g.d_head * lr;
    box.width -= lr * g.d_width;
    ++tr.iterations;
    loss = eval_variant(box, target, img, cfg).value;
    tr.loss_history.push_back(loss);
    if (loss > 1e6 * initial) {
      throw ValidationError("fit_obb: diverged (loss " + std::to_string(loss) +
                            " from initial " + std::to_string(initial) + ")");
    }
  }
  tr.converged = loss <= cfg.tol;
  tr.final_box = box;
  tr.direction_error = direction_error(box, target);
  return tr;
}

std::pair<DatasetManifest, std::vector<DetectionRecord>> synth_dataset(
    const SynthSpec& spec) {
  if (spec.num_images <= 0) {
    throw ValidationError("synth_dataset: num_images must be positive");
  }
  if (!(spec.length_min > 0.0) || spec.length_max < spec.length_min) {
    throw ValidationError("synth_dataset: invalid length range");
  }
  if (!(spec.aspect_min >= 1.0) || spec.aspect_max < spec.aspect_min) {
    throw ValidationError("synth_dataset: aspect range must satisfy 1 <= min <= max");
  }
  if (spec.coord_noise < 0.0 || spec.score_noise < 0.0 ||
      spec.spurious_per_category < 0) {
    throw ValidationError("synth_dataset: noise magnitudes must be >= 0");
  }
  for (const auto& [cat, count] : spec.counts) {
    if (cat.empty()) throw ValidationError("synth_dataset: empty category name");
    if (count < 0) throw ValidationError("synth_dataset: negative count");
  }
  // The worst-case box diagonal must fit inside the image.
  const double worst_width = spec.length_max / spec.aspect_min;
  const double worst_diag = std::hypot(spec.length_max, worst_width);
  const double min_side = std::min(spec.image.width_px, spec.image.height_px);
  if (worst_diag > min_side) {
    throw ValidationError("synth_dataset: infeasible spec, boxes up to " +
                          std::to_string(worst_diag) +
                          " px diagonal cannot fit the image");
  }

  Rng rng(spec.seed);
  DatasetManifest manifest;
  std::vector<DetectionRecord> dets;

  std::vector<std::string> image_ids;
  for (int i = 0; i < spec.num_images; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "img_%04d", i);
    image_ids.emplace_back(buf);
    manifest.images.emplace_back(buf, spec.image);
  }

  const auto sample_box = [&]() {
    const double theta = rng.uniform(0.0, kPi);
    const double length = rng.uniform(spec.length_min, spec.length_max);
    const double aspect = rng.uniform(spec.aspect_min, spec.aspect_max);
    const double width = length / aspect;
    const double margin = 0.5 * std::hypot(length, width);
    const double cx = rng.uniform(margin, spec.image.width_px - margin);
    const double cy = rng.uniform(margin, spec.image.height_px - margin);
    return ObbParams(cx, cy, length, width, theta);
  };

  for (const auto& [cat, count] : spec.counts) {
    manifest.categories.push_back(cat);
    for (int k = 0; k < count; ++k) {
      const std::string& image_id = image_ids[rng.index(image_ids.size())];
      const ObbParams gt_box = sample_box();
      manifest.groundtruth.push_back(
          {image_id, obb_to_quad(gt_box), cat, false});

      const double dx = rng.uniform(-spec.coord_noise, spec.coord_noise);
      const double dy = rng.uniform(-spec.coord_noise, spec.coord_noise);
      const double score =
          std::clamp(1.0 - spec.score_noise * rng.unit(), 0.0, 1.0);
      dets.push_back({image_id,
                      ObbParams(gt_box.cx + dx, gt_box.cy + dy, gt_box.length,
                                gt_box.width, gt_box.theta),
                      cat, score});
    }
    for (int k = 0; k < spec.spurious_per_category; ++k) {
      const std::string& image_id = image_ids[rng.index(image_ids.size())];
      dets.push_back({image_id, sample_box(), cat, 0.3 * rng.unit()});
    }
  }
  return {std::move(manifest), std::move(dets)};
}

}  // namespace obbkit
