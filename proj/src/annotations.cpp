#include "obbkit/annotations.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <nlohmann/json.hpp>

namespace obbkit {

namespace {

using nlohmann::json;

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string quote(const std::string& s) { return json(s).dump(); }

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) tokens.push_back(std::move(tok));
  return tokens;
}

double parse_coord(const std::string& tok, std::size_t line_no) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    throw ParseError("non-numeric coordinate '" + tok + "'", line_no);
  }
  if (pos != tok.size() || !std::isfinite(v)) {
    throw ParseError("non-numeric coordinate '" + tok + "'", line_no);
  }
  return v;
}

bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

bool is_dota_header(const std::string& line) {
  const auto start = line.find_first_not_of(" \t");
  if (start == std::string::npos) return false;
  return line.compare(start, 11, "imagesource") == 0 ||
         line.compare(start, 3, "gsd") == 0;
}

}  // namespace

DotaLine parse_dota_line(const std::string& line, std::size_t line_no) {
  const auto tokens = split_ws(line);
  if (tokens.size() != 10) {
    throw ParseError("expected 10 tokens (8 coordinates, category, difficult), got " +
                         std::to_string(tokens.size()),
                     line_no);
  }
  Point2 p[4];
  for (int i = 0; i < 4; ++i) {
    p[i].x = parse_coord(tokens[2 * i], line_no);
    p[i].y = parse_coord(tokens[2 * i + 1], line_no);
  }
  DotaLine out;
  try {
    out.quad = make_quad(p[0], p[1], p[2], p[3]);
  } catch (const ValidationError& e) {
    throw ParseError(e.what(), line_no);
  }
  out.category = tokens[8];
  out.difficult = tokens[9] != "0";
  return out;
}

DotaParseResult parse_dota_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  const std::string image_id = std::filesystem::path(path).stem().string();

  DotaParseResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line) || is_dota_header(line)) continue;
    try {
      DotaLine parsed = parse_dota_line(line, line_no);
      result.records.push_back({image_id, parsed.quad,
                                std::move(parsed.category), parsed.difficult});
    } catch (const ParseError& e) {
      result.errors.push_back({line_no, e.what()});
    }
  }
  return result;
}

namespace {

namespace pt = boost::property_tree;

double require_field(const pt::ptree& node, const char* name) {
  const auto v = node.get_optional<double>(name);
  if (!v || !std::isfinite(*v)) {
    throw ParseError(std::string("missing required field '") + name + "'");
  }
  return *v;
}

void collect_hrsc_objects(const pt::ptree& node, const std::string& image_id,
                          std::vector<HrscObject>& out) {
  for (const auto& [key, child] : node) {
    if (key == "HRSC_Object") {
      const double cx = require_field(child, "mbox_cx");
      const double cy = require_field(child, "mbox_cy");
      const double w = require_field(child, "mbox_w");
      const double h = require_field(child, "mbox_h");
      const double ang = require_field(child, "mbox_ang");

      HrscObject obj;
      try {
        // The constructor maps the larger of w/h onto the heading axis,
        // rotating theta by pi/2 when they swap.
        obj.record.quad = obb_to_quad(ObbParams(cx, cy, w, h, ang));
      } catch (const ValidationError& e) {
        throw ParseError(std::string("invalid rotated box: ") + e.what());
      }
      obj.record.image_id = image_id;
      obj.record.category = child.get<std::string>("category", "ship");
      obj.record.difficult = child.get<int>("difficult", 0) != 0;

      const auto hx = child.get_optional<double>("header_x");
      const auto hy = child.get_optional<double>("header_y");
      if (hx && hy) {
        obj.header = Point2{*hx, *hy};
      } else if (hx || hy) {
        throw ParseError(std::string("missing required field '") +
                         (hx ? "header_y" : "header_x") + "'");
      }
      out.push_back(std::move(obj));
    } else {
      collect_hrsc_objects(child, image_id, out);
    }
  }
}

}  // namespace

std::vector<HrscObject> parse_hrsc_xml(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  pt::ptree tree;
  try {
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError(std::string("XML parse error: ") + e.what());
  }
  std::vector<HrscObject> out;
  collect_hrsc_objects(tree, std::filesystem::path(path).stem().string(), out);
  return out;
}

KeypointBox apply_head_hint(const KeypointBox& k, const Point2& hint) {
  return dist_sq(hint, k.tail()) < dist_sq(hint, k.head) ? k.flipped() : k;
}

namespace {

std::string gt_line(const GroundTruthRecord& r,
                    const std::optional<Point2>& head) {
  std::string s = "{\"image_id\":" + quote(r.image_id) + ",\"quad\":[";
  for (int i = 0; i < 4; ++i) {
    if (i) s += ',';
    s += '[' + g17(r.quad.pts[i].x) + ',' + g17(r.quad.pts[i].y) + ']';
  }
  s += "],\"category\":" + quote(r.category) +
       ",\"difficult\":" + (r.difficult ? "true" : "false");
  if (head) {
    s += ",\"head\":[" + g17(head->x) + ',' + g17(head->y) + ']';
  }
  s += '}';
  return s;
}

std::string det_line(const DetectionRecord& r) {
  return "{\"image_id\":" + quote(r.image_id) + ",\"obb\":{\"cx\":" +
         g17(r.box.cx) + ",\"cy\":" + g17(r.box.cy) + ",\"length\":" +
         g17(r.box.length) + ",\"width\":" + g17(r.box.width) + ",\"theta\":" +
         g17(r.box.theta) + "},\"category\":" + quote(r.category) +
         ",\"score\":" + g17(r.score) + '}';
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

json parse_line(const std::string& line, std::size_t line_no) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw ParseError("not a JSON object", line_no);
  }
  return j;
}

std::string str_field(const json& j, const char* key, std::size_t line_no) {
  if (!j.contains(key) || !j[key].is_string()) {
    throw ParseError(std::string("missing or non-string '") + key + "'", line_no);
  }
  return j[key].get<std::string>();
}

double num_field(const json& j, const char* key, std::size_t line_no) {
  if (!j.contains(key) || !j[key].is_number()) {
    throw ParseError(std::string("missing or non-numeric '") + key + "'", line_no);
  }
  return j[key].get<double>();
}

GroundTruthRecord gt_from_json(const json& j, std::size_t line_no) {
  GroundTruthRecord r;
  r.image_id = str_field(j, "image_id", line_no);
  r.category = str_field(j, "category", line_no);
  if (r.category.empty()) throw ParseError("empty category", line_no);
  if (!j.contains("difficult") || !j["difficult"].is_boolean()) {
    throw ParseError("missing or non-boolean 'difficult'", line_no);
  }
  r.difficult = j["difficult"].get<bool>();
  if (!j.contains("quad") || !j["quad"].is_array() || j["quad"].size() != 4) {
    throw ParseError("'quad' must be an array of 4 points", line_no);
  }
  Point2 p[4];
  for (int i = 0; i < 4; ++i) {
    const json& pt = j["quad"][i];
    if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() ||
        !pt[1].is_number()) {
      throw ParseError("'quad' corner must be [x, y]", line_no);
    }
    p[i] = {pt[0].get<double>(), pt[1].get<double>()};
  }
  try {
    r.quad = make_quad(p[0], p[1], p[2], p[3]);
  } catch (const ValidationError& e) {
    throw ParseError(e.what(), line_no);
  }
  return r;
}

DetectionRecord det_from_json(const json& j, std::size_t line_no) {
  DetectionRecord r;
  r.image_id = str_field(j, "image_id", line_no);
  r.category = str_field(j, "category", line_no);
  if (r.category.empty()) throw ParseError("empty category", line_no);
  r.score = num_field(j, "score", line_no);
  if (!(r.score >= 0.0 && r.score <= 1.0)) {
    throw ParseError("score out of [0, 1]", line_no);
  }
  if (!j.contains("obb") || !j["obb"].is_object()) {
    throw ParseError("missing 'obb' object", line_no);
  }
  const json& o = j["obb"];
  try {
    r.box = ObbParams(num_field(o, "cx", line_no), num_field(o, "cy", line_no),
                      num_field(o, "length", line_no),
                      num_field(o, "width", line_no),
                      num_field(o, "theta", line_no));
  } catch (const ValidationError& e) {
    throw ParseError(e.what(), line_no);
  }
  return r;
}

template <typename Record, typename FromJson>
std::vector<Record> read_jsonl(const std::string& path, FromJson from_json) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<Record> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    out.push_back(from_json(parse_line(line, line_no), line_no));
  }
  return out;
}

}  // namespace

void write_groundtruth_jsonl(const std::string& path,
                             const std::vector<GroundTruthRecord>& records) {
  auto out = open_out(path);
  for (const auto& r : records) out << gt_line(r, std::nullopt) << '\n';
}

void write_groundtruth_jsonl_ex(const std::string& path,
                                const std::vector<GroundTruthLine>& records) {
  auto out = open_out(path);
  for (const auto& r : records) out << gt_line(r.record, r.head) << '\n';
}

std::vector<GroundTruthRecord> read_groundtruth_jsonl(const std::string& path) {
  return read_jsonl<GroundTruthRecord>(path, gt_from_json);
}

void write_detections_jsonl(const std::string& path,
                            const std::vector<DetectionRecord>& records) {
  auto out = open_out(path);
  for (const auto& r : records) out << det_line(r) << '\n';
}

std::vector<DetectionRecord> read_detections_jsonl(const std::string& path) {
  return read_jsonl<DetectionRecord>(path, det_from_json);
}

std::vector<KeypointRecord> read_keypoint_boxes_jsonl(const std::string& path) {
  return read_jsonl<KeypointRecord>(path, [](const json& j, std::size_t line_no) {
    KeypointRecord out;
    if (j.contains("obb")) {
      const DetectionRecord det = det_from_json(j, line_no);
      out.image_id = det.image_id;
      out.box = obb_to_keypoints(det.box);
    } else if (j.contains("quad")) {
      const GroundTruthRecord gt = gt_from_json(j, line_no);
      out.image_id = gt.image_id;
      try {
        out.box = obb_to_keypoints(quad_to_obb(gt.quad));
      } catch (const ValidationError& e) {
        throw ParseError(e.what(), line_no);
      }
      if (j.contains("head")) {
        const json& h = j["head"];
        if (!h.is_array() || h.size() != 2 || !h[0].is_number() ||
            !h[1].is_number()) {
          throw ParseError("'head' must be [x, y]", line_no);
        }
        out.box = apply_head_hint(out.box,
                                  {h[0].get<double>(), h[1].get<double>()});
      }
    } else {
      throw ParseError("record has neither 'obb' nor 'quad'", line_no);
    }
    return out;
  });
}

DatasetManifest make_manifest(const std::vector<GroundTruthRecord>& gts,
                              const ImageSize& size) {
  DatasetManifest m;
  m.groundtruth = gts;
  std::set<std::string> seen_images;
  std::set<std::string> categories;
  for (const auto& r : gts) {
    if (seen_images.insert(r.image_id).second) {
      m.images.emplace_back(r.image_id, size);
    }
    categories.insert(r.category);
  }
  m.categories.assign(categories.begin(), categories.end());
  return m;
}

}  // namespace obbkit
