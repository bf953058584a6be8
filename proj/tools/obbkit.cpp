#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "obbkit/annotations.hpp"
#include "obbkit/losses.hpp"
#include "obbkit/metrics.hpp"
#include "obbkit/optim.hpp"
#include "obbkit/rng.hpp"
#include "obbkit/svg.hpp"

namespace {

using nlohmann::json;
using namespace obbkit;

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitData = 2;

void emit(const json& doc) { std::cout << doc.dump() << std::endl; }

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("OBBKIT_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ValidationError("OBBKIT_SEED is not a valid integer");
    }
  }
  return 0;
}

LossConfig
make_loss_config(const std::string& width_term, const std::string& norm) {
  LossConfig cfg;
  if (width_term == "none") {
    cfg.width_term = WidthTerm::none;
  } else if (width_term == "absolute") {
    cfg.width_term = WidthTerm::absolute;
  } else if (width_term == "squared") {
    cfg.width_term = WidthTerm::squared;
  } else {
    throw ValidationError("unknown width term '" + width_term + "'");
  }
  if (norm == "pixel-count") {
    cfg.normalization = Normalization::pixel_count;
  } else if (norm == "pixel-diag-sq") {
    cfg.normalization = Normalization::pixel_diag_sq;
  } else {
    throw ValidationError("unknown normalization '" + norm + "'");
  }
  return cfg;
}

LossVariant make_variant(const std::string& variant) {
  if (variant == "ht") return LossVariant::head_tail;
  if (variant == "ht4") return LossVariant::four_point;
  throw ValidationError("unknown loss variant '" + variant + "'");
}

// ---------------------------------------------------------------- convert

struct ConvertArgs {
  std::string from, in_path, out_path;
};

int cmd_convert(const ConvertArgs& a) {
  std::size_t n = 0;
  if (a.from == "dota") {
    const DotaParseResult res = parse_dota_file(a.in_path);
    if (!res.errors.empty()) {
      for (const auto& e : res.errors) {
        std::cerr << a.in_path << ":" << e.line << ": " << e.message << "\n";
      }
      return kExitData;
    }
    write_groundtruth_jsonl(a.out_path, res.records);
    n = res.records.size();
  } else if (a.from == "hrsc") {
    const std::vector<HrscObject> objs = parse_hrsc_xml(a.in_path);
    std::vector<GroundTruthLine> lines;
    lines.reserve(objs.size());
    for (const auto& o : objs) lines.push_back({o.record, o.header});
    write_groundtruth_jsonl_ex(a.out_path, lines);
    n = lines.size();
  } else if (a.from == "jsonl") {
    const auto records = read_groundtruth_jsonl(a.in_path);
    write_groundtruth_jsonl(a.out_path, records);
    n = records.size();
  } else {
    throw ValidationError("unknown input format '" + a.from + "'");
  }
  emit(json{{"records", n}});
  return kExitOk;
}

// ------------------------------------------------------------------- loss

struct LossArgs {
  std::string pred_path, gt_path;
  int image_w = 1024, image_h = 1024;
  std::string variant = "ht";
  std::string width_term = "none";
  std::string normalization = "pixel-count";
};

int cmd_loss(const LossArgs& a) {
  const auto preds = read_keypoint_boxes_jsonl(a.pred_path);
  const auto gts = read_keypoint_boxes_jsonl(a.gt_path);
  const ImageSize img(a.image_w, a.image_h);
  const LossConfig cfg = make_loss_config(a.width_term, a.normalization);
  const LossVariant variant = make_variant(a.variant);

  // Pair the k-th prediction of each image with the k-th groundtruth.
  std::map<std::string, std::vector<const KeypointBox*>> pred_groups;
  for (const auto& r : preds) pred_groups[r.image_id].push_back(&r.box);
  std::map<std::string, std::size_t> cursor;

  json pairs = json::array();
  double sum = 0.0;
  for (const auto& gt : gts) {
    const auto it = pred_groups.find(gt.image_id);
    std::size_t& k = cursor[gt.image_id];
    if (it == pred_groups.end() || k >= it->second.size()) {
      throw ParseError("unpaired groundtruth record for image '" +
                       gt.image_id + "'");
    }
    const KeypointBox& pred = *it->second[k++];
    const LossValue v = variant == LossVariant::head_tail
                            ? head_tail_loss(pred, gt.box, img, cfg)
                            : four_point_loss(pred, gt.box, img, cfg);
    pairs.push_back({{"value", v.value},
                     {"active_branch", branch_name(v.active_branch)},
                     {"components",
                      {{"center", v.center_term},
                       {"extremity", v.extremity_term},
                       {"width", v.width_term}}}});
    sum += v.value;
  }
  for (const auto& [image_id, group] : pred_groups) {
    if (cursor[image_id] != group.size()) {
      throw ParseError("unpaired prediction record for image '" + image_id +
                       "'");
    }
  }
  emit(json{{"pairs", pairs},
            {"mean", pairs.empty() ? 0.0 : sum / pairs.size()}});
  return kExitOk;
}

// ------------------------------------------------------------------- eval

struct EvalArgs {
  std::string det_path, gt_path;
  double iou = 0.5;
};

int cmd_eval(const EvalArgs& a) {
  const auto dets = read_detections_jsonl(a.det_path);
  const auto gts = read_groundtruth_jsonl(a.gt_path);
  const DatasetManifest manifest = make_manifest(gts, ImageSize(1, 1));
  const EvalReport report = evaluate(dets, gts, manifest, a.iou);
  std::cout << report_to_json(report) << std::endl;
  return kExitOk;
}

// -------------------------------------------------------------------- fit

struct FitArgs {
  std::optional<std::uint64_t> seed;
  int image = 1024;
  int trials = 1;
  bool flip_init = false;
  std::string variant = "ht";
  std::string width_term = "none";
  std::string normalization = "pixel-count";
  int max_iters = 5000;
  double tol = 1e-10;
  std::optional<double> lr;
  std::string svg_path;
};

KeypointBox random_box_in_image(Rng& rng, const ImageSize& img) {
  const double side = std::min(img.width_px, img.height_px);
  const double length = rng.uniform(side / 16.0, side / 4.0);
  const double aspect = rng.uniform(1.2, 4.0);
  const double width = length / aspect;
  const double theta = rng.uniform(0.0, 3.14159265358979323846);
  const double margin = 0.5 * std::hypot(length, width);
  const double cx = rng.uniform(margin, img.width_px - margin);
  const double cy = rng.uniform(margin, img.height_px - margin);
  return obb_to_keypoints(ObbParams(cx, cy, length, width, theta));
}

int cmd_fit(const FitArgs& a) {
  const ImageSize img(a.image, a.image);
  FitConfig cfg;
  cfg.learning_rate = a.lr;
  cfg.max_iters = a.max_iters;
  cfg.tol = a.tol;
  cfg.variant = make_variant(a.variant);
  cfg.loss = make_loss_config(a.width_term, a.normalization);

  Rng rng(resolve_seed(a.seed));

  int converged = 0, head_matches = 0, tail_matches = 0;
  double error_sum = 0.0;
  std::optional<SvgScene> scene;
  for (int t = 0; t < a.trials; ++t) {
    const KeypointBox target = random_box_in_image(rng, img);
    const KeypointBox init =
        a.flip_init ? target.flipped() : random_box_in_image(rng, img);
    try {
      const FitTrace tr = fit_obb(init, target, img, cfg);
      if (tr.converged) {
        ++converged;
        error_sum += tr.direction_error;
        // A converged head sits near one extremity; classify by the nearer.
        if (dist_sq(tr.final_box.head, target.head) <=
            dist_sq(tr.final_box.head, target.tail())) {
          ++head_matches;
        } else {
          ++tail_matches;
        }
      }
      if (!a.svg_path.empty() && t == a.trials - 1) {
        scene.emplace(img.width_px, img.height_px);
        scene->add_box(target, "#2a7f3f");             // groundtruth: solid green
        scene->add_box(init, "#8a8a8a", true);         // init: dashed gray
        scene->add_box(tr.final_box, "#d23a3a");       // final: solid red
      }
    } catch (const ValidationError& e) {
      std::cerr << "trial " << t << ": " << e.what() << "\n";
    }
  }
  if (scene) scene->save(a.svg_path);
  emit(json{{"trials", a.trials},
            {"converged", converged},
            {"head_matches", head_matches},
            {"tail_matches", tail_matches},
            {"mean_direction_error",
             converged ? error_sum / converged : 0.0}});
  return kExitOk;
}

// ------------------------------------------------------------------ synth

struct SynthArgs {
  std::optional<std::uint64_t> seed;
  std::string out_path, dets_path;
  int image_w = 1024, image_h = 1024;
  int images = 1;
  std::string counts = "ship=8";
  double len_min = 40.0, len_max = 200.0;
  double aspect_min = 1.0, aspect_max = 5.0;
  double coord_noise = 0.0, score_noise = 0.0;
  int spurious = 0;
};

std::vector<std::pair<std::string, int>> parse_counts(const std::string& s) {
  std::vector<std::pair<std::string, int>> out;
  if (s.empty()) return out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t comma = std::min(s.find(',', pos), s.size());
    const std::string item = s.substr(pos, comma - pos);
    const std::size_t eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ValidationError("bad --counts item '" + item +
                            "', expected name=count");
    }
    try {
      out.emplace_back(item.substr(0, eq), std::stoi(item.substr(eq + 1)));
    } catch (const std::exception&) {
      throw ValidationError("bad --counts item '" + item + "'");
    }
    pos = comma + 1;
  }
  return out;
}

int cmd_synth(const SynthArgs& a) {
  SynthSpec spec;
  spec.seed = resolve_seed(a.seed);
  spec.image = ImageSize(a.image_w, a.image_h);
  spec.num_images = a.images;
  spec.counts = parse_counts(a.counts);
  spec.length_min = a.len_min;
  spec.length_max = a.len_max;
  spec.aspect_min = a.aspect_min;
  spec.aspect_max = a.aspect_max;
  spec.coord_noise = a.coord_noise;
  spec.score_noise = a.score_noise;
  spec.spurious_per_category = a.spurious;

  const auto [manifest, dets] = synth_dataset(spec);
  write_groundtruth_jsonl(a.out_path, manifest.groundtruth);
  if (!a.dets_path.empty()) write_detections_jsonl(a.dets_path, dets);
  emit(json{{"images", manifest.images.size()},
            {"gts", manifest.groundtruth.size()},
            {"dets", dets.size()}});
  return kExitOk;
}

// -------------------------------------------------------------------- iou

struct IouArgs {
  std::string a, b;
};

ObbParams parse_box_flag(const std::string& s) {
  std::vector<double> v;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t comma = std::min(s.find(',', pos), s.size());
    try {
      v.push_back(std::stod(s.substr(pos, comma - pos)));
    } catch (const std::exception&) {
      throw ValidationError("bad box component in '" + s + "'");
    }
    pos = comma + 1;
  }
  if (v.size() != 5) {
    throw ValidationError("box must be cx,cy,length,width,theta");
  }
  return ObbParams(v[0], v[1], v[2], v[3], v[4]);
}

int cmd_iou(const IouArgs& a) {
  emit(json{{"iou", rotated_iou(parse_box_flag(a.a), parse_box_flag(a.b))}});
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"obbkit: oriented-box keypoint losses, rotated IoU, and "
               "detection metrics"};
  app.require_subcommand(1);

  ConvertArgs conv;
  auto* c_conv = app.add_subcommand("convert", "Convert annotations to canonical JSONL");
  c_conv->add_option("--from", conv.from, "Input format: dota, hrsc, jsonl")->required();
  c_conv->add_option("--in", conv.in_path, "Input file")->required();
  c_conv->add_option("--out", conv.out_path, "Output JSONL file")->required();

  LossArgs loss;
  auto* c_loss = app.add_subcommand("loss", "Evaluate the head-tail loss over paired records");
  c_loss->add_option("--pred", loss.pred_path, "Predictions JSONL")->required();
  c_loss->add_option("--gt", loss.gt_path, "Groundtruth JSONL")->required();
  c_loss->add_option("--image-w", loss.image_w, "Image width in px");
  c_loss->add_option("--image-h", loss.image_h, "Image height in px");
  c_loss->add_option("--variant", loss.variant, "Loss variant: ht, ht4");
  c_loss->add_option("--width-term", loss.width_term, "none, absolute, squared");
  c_loss->add_option("--normalization", loss.normalization, "pixel-count, pixel-diag-sq");

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("eval", "Evaluate detections against groundtruth");
  c_eval->add_option("--dets", eval.det_path, "Detections JSONL")->required();
  c_eval->add_option("--gt", eval.gt_path, "Groundtruth JSONL")->required();
  c_eval->add_option("--iou", eval.iou, "IoU threshold");

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "Gradient-descent fitting trials");
  c_fit->add_option("--seed", fit.seed, "RNG seed (falls back to OBBKIT_SEED)");
  c_fit->add_option("--image", fit.image, "Square image side in px");
  c_fit->add_option("--trials", fit.trials, "Number of trials");
  c_fit->add_flag("--flip-init", fit.flip_init, "Start from the heading-flipped target");
  c_fit->add_option("--variant", fit.variant, "Loss variant: ht, ht4");
  c_fit->add_option("--width-term", fit.width_term, "none, absolute, squared");
  c_fit->add_option("--normalization", fit.normalization, "pixel-count, pixel-diag-sq");
  c_fit->add_option("--max-iters", fit.max_iters, "Iteration cap");
  c_fit->add_option("--tol", fit.tol, "Convergence loss threshold");
  c_fit->add_option("--lr", fit.lr, "Learning rate (default 0.1*S)");
  c_fit->add_option("--svg", fit.svg_path, "Render the last trial to this SVG file");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  c_synth->add_option("--seed", synth.seed, "RNG seed (falls back to OBBKIT_SEED)");
  c_synth->add_option("--out", synth.out_path, "Groundtruth JSONL output")->required();
  c_synth->add_option("--dets", synth.dets_path, "Detections JSONL output");
  c_synth->add_option("--image-w", synth.image_w, "Image width in px");
  c_synth->add_option("--image-h", synth.image_h, "Image height in px");
  c_synth->add_option("--images", synth.images, "Number of images");
  c_synth->add_option("--counts", synth.counts, "Boxes per category, e.g. ship=5,plane=3");
  c_synth->add_option("--len-min", synth.len_min, "Minimum box length");
  c_synth->add_option("--len-max", synth.len_max, "Maximum box length");
  c_synth->add_option("--aspect-min", synth.aspect_min, "Minimum length/width");
  c_synth->add_option("--aspect-max", synth.aspect_max, "Maximum length/width");
  c_synth->add_option("--coord-noise", synth.coord_noise, "Center jitter for detections, px");
  c_synth->add_option("--score-noise", synth.score_noise, "Score jitter magnitude");
  c_synth->add_option("--spurious", synth.spurious, "Spurious detections per category");

  IouArgs iou;
  auto* c_iou = app.add_subcommand("iou", "Rotated IoU of two boxes");
  c_iou->add_option("--a", iou.a, "First box: cx,cy,length,width,theta")->required();
  c_iou->add_option("--b", iou.b, "Second box: cx,cy,length,width,theta")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitData;
  }

  try {
    if (c_conv->parsed()) return cmd_convert(conv);
    if (c_loss->parsed()) return cmd_loss(loss);
    if (c_eval->parsed()) return cmd_eval(eval);
    if (c_fit->parsed()) return cmd_fit(fit);
    if (c_synth->parsed()) return cmd_synth(synth);
    if (c_iou->parsed()) return cmd_iou(iou);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}
