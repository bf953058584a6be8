#pragma once

#include <string>
#include <vector>

#include "obbkit/geometry.hpp"

namespace obbkit {

// Minimal standalone-SVG emitter for box/keypoint figures. Boxes are
// drawn as polygons and heads as circles; callers pick the stroke
// style per layer (solid groundtruth vs dashed/colored predictions).
class SvgScene {
 public:
  SvgScene(double width, double height) : width_(width), height_(height) {}

  void add_box(const KeypointBox& box, const std::string& stroke,
               bool dashed = false);
  void add_quad(const Quad& quad, const std::string& stroke,
                bool dashed = false);

  std::string render() const;
  void save(const std::string& path) const;

 private:
  double width_;
  double height_;
  std::vector<std::string> elements_;
};

}  // namespace obbkit
