#include "obbkit/svg.hpp"

#include <cstdio>
#include <fstream>

#include "obbkit/errors.hpp"

namespace obbkit {

namespace {

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string stroke_attrs(const std::string& stroke, bool dashed) {
  std::string s = " fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"1.5\"";
  if (dashed) s += " stroke-dasharray=\"6 4\"";
  return s;
}

}  // namespace

void SvgScene::add_quad(const Quad& quad, const std::string& stroke,
                        bool dashed) {
  std::string pts;
  for (const Point2& p : quad.pts) {
    if (!pts.empty()) pts += ' ';
    pts += num(p.x) + ',' + num(p.y);
  }
  elements_.push_back("<polygon points=\"" + pts + "\"" +
                      stroke_attrs(stroke, dashed) + "/>");
}

void SvgScene::add_box(const KeypointBox& box, const std::string& stroke,
                       bool dashed) {
  add_quad(obb_to_quad(keypoints_to_obb(box)), stroke, dashed);
  elements_.push_back("<circle cx=\"" + num(box.head.x) + "\" cy=\"" +
                      num(box.head.y) + "\" r=\"3\" fill=\"" + stroke + "\"/>");
}

std::string SvgScene::render() const {
  std::string svg =
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
      num(width_) + "\" height=\"" + num(height_) + "\" viewBox=\"0 0 " +
      num(width_) + ' ' + num(height_) + "\">\n";
  for (const std::string& e : elements_) {
    svg += "  " + e + "\n";
  }
  svg += "</svg>\n";
  return svg;
}

void SvgScene::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << render();
}

}  // namespace obbkit
