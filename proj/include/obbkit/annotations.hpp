#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "obbkit/geometry.hpp"

namespace obbkit {

struct GroundTruthRecord {
  std::string image_id;
  Quad quad;
  std::string category;
  bool difficult = false;
};

struct DetectionRecord {
  std::string image_id;
  ObbParams box;
  std::string category;
  double score = 0.0;
};

struct DatasetManifest {
  std::vector<std::pair<std::string, ImageSize>> images;
  std::vector<GroundTruthRecord> groundtruth;
  std::vector<std::string> categories;
};

// Groundtruth plus the dataset's optional explicit head point. When the
// hint is present it overrides the longer-side heading convention.
struct HrscObject {
  GroundTruthRecord record;
  std::optional<Point2> header;
};

struct LineIssue {
  std::size_t line = 0;
  std::string message;
};

// A file parse never drops lines silently: every non-header, non-empty
// line lands either in records or in errors.
struct DotaParseResult {
  std::vector<GroundTruthRecord> records;
  std::vector<LineIssue> errors;
};

struct DotaLine {
  Quad quad;
  std::string category;
  bool difficult = false;
};

// One DOTA annotation line: "x1 y1 x2 y2 x3 y3 x4 y4 category difficult".
// Corners are reordered to CCW. Throws ParseError (carrying `line_no`)
// on wrong arity, non-numeric coordinates, or a degenerate quad.
DotaLine parse_dota_line(const std::string& line, std::size_t line_no = 0);

// Parses a DOTA annotation file. The image id is the file stem; header
// lines starting with "imagesource" or "gsd" and blank lines are
// skipped. Throws IoError if the file cannot be read.
DotaParseResult parse_dota_file(const std::string& path);

// HRSC-style XML: per-object elements mbox_cx, mbox_cy, mbox_w, mbox_h,
// mbox_ang (radians), optional header_x/header_y. Throws ParseError on
// malformed XML or a missing required field (naming it), IoError on
// unreadable files.
std::vector<HrscObject> parse_hrsc_xml(const std::string& path);

// Flips the keypoint head to the extremity nearest the hint.
KeypointBox apply_head_hint(const KeypointBox& k, const Point2& hint);

// Canonical JSONL interchange. One record per line; coordinates are
// written with 17 significant digits so read(write(x)) == x bit-exactly.
// Unknown keys are ignored on read.
void write_groundtruth_jsonl(const std::string& path,
                             const std::vector<GroundTruthRecord>& records);
std::vector<GroundTruthRecord> read_groundtruth_jsonl(const std::string& path);
void write_detections_jsonl(const std::string& path,
                            const std::vector<DetectionRecord>& records);
std::vector<DetectionRecord> read_detections_jsonl(const std::string& path);

// Record with an optional head hint, for files converted from HRSC
// (serialized as a forward-compatible "head" key).
struct GroundTruthLine {
  GroundTruthRecord record;
  std::optional<Point2> head;
};

void write_groundtruth_jsonl_ex(const std::string& path,
                                const std::vector<GroundTruthLine>& records);

// Builds a manifest over a set of records: images in first-seen order
// (all assigned `size`), categories sorted and deduplicated.
DatasetManifest make_manifest(const std::vector<GroundTruthRecord>& gts,
                              const ImageSize& size);

struct KeypointRecord {
  std::string image_id;
  KeypointBox box;
};

// Reads either JSONL schema as keypoint boxes: detection lines through
// their obb, groundtruth lines through the fitted box (honoring a
// "head" hint when present).
std::vector<KeypointRecord> read_keypoint_boxes_jsonl(const std::string& path);

}  // namespace obbkit
