#pragma once

#include "obbkit/geometry.hpp"

namespace obbkit {

// Divisor S applied to the squared-distance terms.
enum class Normalization {
  pixel_count,    // S = W*H, scale-invariant for the squared terms
  pixel_diag_sq,  // S = W^2 + H^2
};

// Optional width component added to the keypoint terms.
enum class WidthTerm {
  none,      // width ignored
  absolute,  // |w_p - w_g| / S
  squared,   // (w_p - w_g)^2 / S
};

// Extremity candidate that achieved the minimum distance. The two-point
// loss only ever selects head or tail; the four-point variant may also
// select the side midpoints.
enum class Branch { head, tail, left, right };

const char* branch_name(Branch b);

struct LossConfig {
  Normalization normalization = Normalization::pixel_count;
  WidthTerm width_term = WidthTerm::none;
  // Test-filtering knob only; no smoothing is applied at ties.
  double tie_epsilon = 0.0;
};

struct LossValue {
  double value = 0.0;  // center_term + extremity_term + width_term
  Branch active_branch = Branch::head;
  double center_term = 0.0;
  double extremity_term = 0.0;
  double width_term = 0.0;
};

// Gradient with respect to the prediction (center, head, width);
// the groundtruth is a fixed annotation.
struct LossGradient {
  Point2 d_center{0.0, 0.0};
  Point2 d_head{0.0, 0.0};
  double d_width = 0.0;
};

double normalizer(const ImageSize& img, Normalization n);

// Squared center distance plus the smaller of the squared distances
// from the predicted head to the groundtruth head and tail, divided by
// S. Either heading of the prediction scores the same, so the loss sees
// the object's direction but not its heading. Ties select head.
LossValue head_tail_loss(const KeypointBox& pred, const KeypointBox& gt,
                         const ImageSize& img, const LossConfig& cfg = {});

LossGradient head_tail_loss_grad(const KeypointBox& pred,
                                 const KeypointBox& gt, const ImageSize& img,
                                 const LossConfig& cfg = {});

// Variant taking the minimum over four candidate points: head, tail,
// and the two side midpoints placed across the groundtruth axis at
// half its width. Suits square-ish objects.
LossValue four_point_loss(const KeypointBox& pred, const KeypointBox& gt,
                          const ImageSize& img, const LossConfig& cfg = {});

LossGradient four_point_loss_grad(const KeypointBox& pred,
                                  const KeypointBox& gt, const ImageSize& img,
                                  const LossConfig& cfg = {});

}  // namespace obbkit
