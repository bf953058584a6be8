#include "obbkit/losses.hpp"

#include <array>
#include <cmath>

namespace obbkit {

namespace {

struct Selection {
  Branch branch;
  Point2 target;       // candidate point achieving the minimum
  double min_dist_sq;  // unnormalized
};

// Shared branch rule for value and gradient: strict < so that ties go
// to the earliest candidate (head first).
template <size_t N>
Selection select_branch(const Point2& pred_head,
                        const std::array<std::pair<Branch, Point2>, N>& cand) {
  Selection sel{cand[0].first, cand[0].second,
                dist_sq(pred_head, cand[0].second)};
  for (size_t i = 1; i < N; ++i) {
    const double d = dist_sq(pred_head, cand[i].second);
    if (d < sel.min_dist_sq) {
      sel = {cand[i].first, cand[i].second, d};
    }
  }
  return sel;
}

double width_component(double pred_w, double gt_w, double s, WidthTerm term) {
  switch (term) {
    case WidthTerm::none:
      return 0.0;
    case WidthTerm::absolute:
      return std::abs(pred_w - gt_w) / s;
    case WidthTerm::squared:
      return (pred_w - gt_w) * (pred_w - gt_w) / s;
  }
  return 0.0;
}

double width_gradient(double pred_w, double gt_w, double s, WidthTerm term) {
  switch (term) {
    case WidthTerm::none:
      return 0.0;
    case WidthTerm::absolute: {
      // Subgradient 0 at equality.
      if (pred_w > gt_w) return 1.0 / s;
      if (pred_w < gt_w) return -1.0 / s;
      return 0.0;
    }
    case WidthTerm::squared:
      return 2.0 * (pred_w - gt_w) / s;
  }
  return 0.0;
}

std::array<std::pair<Branch, Point2>, 2> head_tail_candidates(
    const KeypointBox& gt) {
  return {{{Branch::head, gt.head}, {Branch::tail, gt.tail()}}};
}

std::array<std::pair<Branch, Point2>, 4> four_point_candidates(
    const KeypointBox& gt) {
  const Point2 axis = gt.head - gt.center;
  const double n = norm(axis);
  if (n == 0.0) {
    throw ValidationError("four_point_loss: groundtruth head coincides with center");
  }
  const Point2 side = perp(axis) * (0.5 * gt.width / n);
  return {{{Branch::head, gt.head},
           {Branch::tail, gt.tail()},
           {Branch::left, gt.center + side},
           {Branch::right, gt.center - side}}};
}

template <size_t N>
LossValue eval_loss(const KeypointBox& pred, const KeypointBox& gt,
                    const ImageSize& img, const LossConfig& cfg,
                    const std::array<std::pair<Branch, Point2>, N>& cand) {
  const double s = normalizer(img, cfg.normalization);
  const Selection sel = select_branch(pred.head, cand);
  LossValue out;
  out.center_term = dist_sq(pred.center, gt.center) / s;
  out.extremity_term = sel.min_dist_sq / s;
  out.width_term = width_component(pred.width, gt.width, s, cfg.width_term);
  out.active_branch = sel.branch;
  out.value = out.center_term + out.extremity_term + out.width_term;
  return out;
}

template <size_t N>
LossGradient eval_grad(const KeypointBox& pred, const KeypointBox& gt,
                       const ImageSize& img, const LossConfig& cfg,
                       const std::array<std::pair<Branch, Point2>, N>& cand) {
  const double s = normalizer(img, cfg.normalization);
  const Selection sel = select_branch(pred.head, cand);
  LossGradient g;
  g.d_center = (pred.center - gt.center) * (2.0 / s);
  g.d_head = (pred.head - sel.target) * (2.0 / s);
  g.d_width = width_gradient(pred.width, gt.width, s, cfg.width_term);
  return g;
}

}  // namespace

const char* branch_name(Branch b) {
  switch (b) {
    case Branch::head:
      return "head";
    case Branch::tail:
      return "tail";
    case Branch::left:
      return "left";
    case Branch::right:
      return "right";
  }
  return "?";
}

double normalizer(const ImageSize& img, Normalization n) {
  return n == Normalization::pixel_count ? img.pixel_count() : img.diag_sq();
}

LossValue head_tail_loss(const KeypointBox& pred, const KeypointBox& gt,
                         const ImageSize& img, const LossConfig& cfg) {
  return eval_loss(pred, gt, img, cfg, head_tail_candidates(gt));
}

LossGradient head_tail_loss_grad(const KeypointBox& pred,
                                 const KeypointBox& gt, const ImageSize& img,
                                 const LossConfig& cfg) {
  return eval_grad(pred, gt, img, cfg, head_tail_candidates(gt));
}

LossValue four_point_loss(const KeypointBox& pred, const KeypointBox& gt,
                          const ImageSize& img, const LossConfig& cfg) {
  return eval_loss(pred, gt, img, cfg, four_point_candidates(gt));
}

LossGradient four_point_loss_grad(const KeypointBox& pred,
                                  const KeypointBox& gt, const ImageSize& img,
                                  const LossConfig& cfg) {
  return eval_grad(pred, gt, img, cfg, four_point_candidates(gt));
}

}  // namespace obbkit
