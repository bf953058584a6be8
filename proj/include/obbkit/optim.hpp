#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "obbkit/annotations.hpp"
#include "obbkit/losses.hpp"

namespace obbkit {

enum class LossVariant { head_tail, four_point };

struct FitConfig {
  // Unset means 0.1 * S: the loss gradients carry a 1/S factor, so this
  // makes the effective pixel step 0.1 regardless of image size.
  std::optional<double> learning_rate;
  int max_iters = 5000;
  double tol = 1e-10;
  LossVariant variant = LossVariant::head_tail;
  LossConfig loss;
};

struct FitTrace {
  std::vector<double> loss_history;  // one entry per evaluated iterate
  KeypointBox final_box;
  bool converged = false;
  int iterations = 0;  // gradient steps taken
  double direction_error = 0.0;
};

struct SynthSpec {
  std::uint64_t seed = 0;
  ImageSize image{1024, 1024};
  int num_images = 1;
  std::vector<std::pair<std::string, int>> counts;  // boxes per category
  double length_min = 40.0;
  double length_max = 200.0;
  double aspect_min = 1.0;  // length / width
  double aspect_max = 5.0;
  double coord_noise = 0.0;   // uniform center jitter for detections, px
  double score_noise = 0.0;   // scores drawn from [1 - score_noise, 1]
  int spurious_per_category = 0;  // extra low-score false detections
};

// Acute angle in [0, pi/2] between the undirected long axes of two
// keypoint boxes; replacing either head by its tail changes nothing.
// Throws ValidationError when a box has head == center.
double direction_error(const KeypointBox& pred, const KeypointBox& gt);

// Fixed-step gradient descent on the prediction's (center, head, width)
// against the configured loss. Stops when the loss drops to cfg.tol or
// after cfg.max_iters steps; throws ValidationError if the loss ever
// exceeds 1e6 times its initial value.
FitTrace fit_obb(const KeypointBox& init, const KeypointBox& target,
                 const ImageSize& img, const FitConfig& cfg = {});

// Deterministic synthetic scene: groundtruth boxes sampled fully inside
// the image, detections as jittered copies plus optional spurious boxes
// with scores below 0.3. Throws ValidationError for specs whose boxes
// cannot fit in the image.
std::pair<DatasetManifest, std::vector<DetectionRecord>> synth_dataset(
    const SynthSpec& spec);

}  // namespace obbkit
