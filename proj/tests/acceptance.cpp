// Acceptance suite: runs every release criterion and prints one
// PASS/FAIL line each. Exits with the number of failed criteria.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "obbkit/annotations.hpp"
#include "obbkit/losses.hpp"
#include "obbkit/metrics.hpp"
#include "obbkit/optim.hpp"
#include "obbkit/rng.hpp"

using namespace obbkit;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Check {
  bool ok = true;
  std::string detail;

  void fail(const std::string& msg) {
    if (ok) detail = msg;
    ok = false;
  }
  void expect(bool cond, const std::string& msg) {
    if (!cond) fail(msg);
  }
};

double rel_diff(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

KeypointBox random_keypoints(Rng& rng) {
  KeypointBox k;
  k.center = {rng.uniform(0.0, 1000.0), rng.uniform(0.0, 1000.0)};
  do {
    k.head = {k.center.x + rng.uniform(-200.0, 200.0),
              k.center.y + rng.uniform(-200.0, 200.0)};
  } while (dist_sq(k.head, k.center) < 1.0);
  k.width = rng.uniform(1.0, 100.0);
  return k;
}

// Coordinates on a 2^-16 lattice, so reflecting a head through a center
// (2c - h) is exact in IEEE-754 and the loss symmetry can be compared
// bit for bit. Arbitrary reals would add representation noise: the
// reflected head itself rounds, which no formula can undo.
double dyadic(Rng& rng, double lo, double hi) {
  const auto steps = static_cast<std::uint64_t>((hi - lo) * 65536.0);
  return lo + static_cast<double>(rng.index(steps + 1)) * 0x1.0p-16;
}

KeypointBox random_keypoints_dyadic(Rng& rng) {
  KeypointBox k;
  k.center = {dyadic(rng, 0.0, 1000.0), dyadic(rng, 0.0, 1000.0)};
  do {
    k.head = {dyadic(rng, 0.0, 1000.0), dyadic(rng, 0.0, 1000.0)};
  } while (dist_sq(k.head, k.center) < 1.0);
  k.width = dyadic(rng, 1.0, 100.0);
  return k;
}

// Independent two-branch oracle for the head-tail loss.
double ht_oracle(const KeypointBox& pred, const KeypointBox& gt, double s) {
  const double dcx = pred.center.x - gt.center.x;
  const double dcy = pred.center.y - gt.center.y;
  const double tx = 2.0 * gt.center.x - gt.head.x;
  const double ty = 2.0 * gt.center.y - gt.head.y;
  const double dh = (pred.head.x - gt.head.x) * (pred.head.x - gt.head.x) +
                    (pred.head.y - gt.head.y) * (pred.head.y - gt.head.y);
  const double dt = (pred.head.x - tx) * (pred.head.x - tx) +
                    (pred.head.y - ty) * (pred.head.y - ty);
  return (dcx * dcx + dcy * dcy) / s + (dh <= dt ? dh : dt) / s;
}

// --------------------------------------------------------------- criteria

// Worked example exact to 1e-12 plus 10,000-sample oracle agreement.
Check loss_correctness() {
  Check c;
  const KeypointBox gt{{0, 0}, {0, 5}, 2};
  const KeypointBox pred{{0, 0}, {3, 4}, 2};
  const LossValue v = head_tail_loss(pred, gt, ImageSize(10, 10));
  c.expect(std::abs(v.value - 0.1) <= 1e-12, "worked example value");
  c.expect(v.active_branch == Branch::head, "worked example branch");

  Rng rng(1001);
  const ImageSize img(1024, 768);
  for (int i = 0; i < 10000; ++i) {
    const KeypointBox p = random_keypoints(rng);
    const KeypointBox g = random_keypoints(rng);
    const double got = head_tail_loss(p, g, img).value;
    const double want = ht_oracle(p, g, img.pixel_count());
    if (rel_diff(got, want) > 1e-12) {
      c.fail("oracle mismatch at sample " + std::to_string(i));
      break;
    }
  }
  return c;
}

// Reflecting the groundtruth head through its center changes nothing,
// bit for bit, across 10,000 random pairs.
Check figure1_symmetry() {
  Check c;
  Rng rng(1002);
  const ImageSize img(1024, 1024);
  for (int i = 0; i < 10000; ++i) {
    const KeypointBox pred = random_keypoints_dyadic(rng);
    const KeypointBox gt = random_keypoints_dyadic(rng);
    const double a = head_tail_loss(pred, gt, img).value;
    const double b = head_tail_loss(pred, gt.flipped(), img).value;
    if (a != b) {
      c.fail("loss changed under head/tail reflection at sample " +
             std::to_string(i));
      break;
    }
  }
  return c;
}

// Analytic gradients vs central finite differences, h = 1e-6, on 1,000
// samples per variant with branch gap above 1e-6.
Check gradient_check() {
  Check c;
  const double h = 1e-6;
  const ImageSize img(100, 100);
  const LossConfig cfg;

  const auto loss_of = [&](bool four, const std::array<double, 5>& x,
                           const KeypointBox& gt) {
    const KeypointBox p{{x[0], x[1]}, {x[2], x[3]}, x[4]};
    return four ? four_point_loss(p, gt, img, cfg).value
                : head_tail_loss(p, gt, img, cfg).value;
  };
  const auto gap_of = [](const KeypointBox& p, const KeypointBox& g, bool four) {
    std::vector<double> d{dist_sq(p.head, g.head), dist_sq(p.head, g.tail())};
    if (four) {
      const Point2 axis = g.head - g.center;
      const Point2 side = perp(axis) * (0.5 * g.width / norm(axis));
      d.push_back(dist_sq(p.head, g.center + side));
      d.push_back(dist_sq(p.head, g.center - side));
    }
    std::sort(d.begin(), d.end());
    return d[1] - d[0];
  };

  for (const bool four : {false, true}) {
    Rng rng(1003);
    int checked = 0;
    while (checked < 1000) {
      const KeypointBox pred = random_keypoints(rng);
      const KeypointBox gt = random_keypoints(rng);
      if (gap_of(pred, gt, four) <= 1e-6) continue;
      const LossGradient g = four ? four_point_loss_grad(pred, gt, img, cfg)
                                  : head_tail_loss_grad(pred, gt, img, cfg);
      const std::array<double, 5> analytic{g.d_center.x, g.d_center.y,
                                           g.d_head.x, g.d_head.y, g.d_width};
      const std::array<double, 5> base{pred.center.x, pred.center.y,
                                       pred.head.x, pred.head.y, pred.width};
      double diff = 0.0, na = 0.0, nf = 0.0;
      for (int i = 0; i < 5; ++i) {
        auto plus = base, minus = base;
        plus[i] += h;
        minus[i] -= h;
        const double fd =
            (loss_of(four, plus, gt) - loss_of(four, minus, gt)) / (2.0 * h);
        diff += (analytic[i] - fd) * (analytic[i] - fd);
        na += analytic[i] * analytic[i];
        nf += fd * fd;
      }
      const double rel = std::sqrt(diff) / (std::sqrt(na) + std::sqrt(nf));
      if (rel > 1e-5) {
        c.fail((four ? std::string("ht4") : std::string("ht")) +
               " gradient off by " + std::to_string(rel));
        return c;
      }
      ++checked;
    }
  }
  return c;
}

// Exact clipping IoU vs the 2000-grid rasterization oracle, and the
// 45-degree unit-square closed form.
Check rotated_iou_check() {
  Check c;
  const double diag = rotated_iou(ObbParams(0, 0, 1, 1, 0),
                                  ObbParams(0, 0, 1, 1, kPi / 4));
  c.expect(std::abs(diag - 0.70711) <= 1e-3, "45-degree case");

  Rng rng(1004);
  for (int i = 0; i < 1000; ++i) {
    const double l1 = rng.uniform(1.0, 40.0);
    const ObbParams a(rng.uniform(-50, 50), rng.uniform(-50, 50), l1,
                      rng.uniform(0.5, l1), rng.uniform(0.0, kPi));
    const double l2 = rng.uniform(1.0, 40.0);
    const ObbParams b(a.cx + rng.uniform(-20, 20), a.cy + rng.uniform(-20, 20),
                      l2, rng.uniform(0.5, l2), rng.uniform(0.0, kPi));
    const double exact = rotated_iou(a, b);
    const double sampled = raster_iou_oracle(a, b, 2000);
    if (std::abs(exact - sampled) >= 5e-3) {
      c.fail("oracle gap " + std::to_string(std::abs(exact - sampled)) +
             " at pair " + std::to_string(i));
      break;
    }
  }
  return c;
}

// 1,000 seeded fits in a 1024^2 image: >= 99% converge, and every
// converged fit ends on the target head or tail with the direction
// recovered.
Check heading_bistability() {
  Check c;
  const ImageSize img(1024, 1024);
  Rng rng(1005);
  const auto sample = [&]() {
    const double length = rng.uniform(64.0, 256.0);
    const double width = length / rng.uniform(1.2, 4.0);
    const double margin = 0.5 * std::hypot(length, width);
    return obb_to_keypoints(
        ObbParams(rng.uniform(margin, 1024 - margin),
                  rng.uniform(margin, 1024 - margin), length, width,
                  rng.uniform(0.0, kPi)));
  };

  // At S = 1024^2 a loss of 1e-10 only pins the head to ~1e-2 px, so the
  // fits run to 1e-15, which satisfies both the loss and distance bounds.
  FitConfig cfg;
  cfg.tol = 1e-15;

  int converged = 0;
  for (int t = 0; t < 1000; ++t) {
    const KeypointBox target = sample();
    const KeypointBox init = sample();
    FitTrace tr;
    try {
      tr = fit_obb(init, target, img, cfg);
    } catch (const ValidationError&) {
      continue;  // divergence counts against the convergence rate
    }
    if (!tr.converged) continue;
    ++converged;
    c.expect(tr.loss_history.back() <= 1e-10, "converged above tol");
    const double to_head = norm(tr.final_box.head - target.head);
    const double to_tail = norm(tr.final_box.head - target.tail());
    c.expect(std::min(to_head, to_tail) < 1e-3,
             "final head away from both extremities at trial " +
                 std::to_string(t));
    c.expect(tr.direction_error <= 1e-4,
             "direction error " + std::to_string(tr.direction_error));
    c.expect(tr.iterations <= 5000, "iteration budget");
  }
  c.expect(converged >= 990,
           "only " + std::to_string(converged) + "/1000 converged");
  return c;
}

// Perfect synthetic data scores exactly 1.0, the half-perfect
// two-category construction exactly 0.5, and detection order is
// irrelevant.
Check metrics_pipeline() {
  Check c;
  SynthSpec spec;
  spec.seed = 1006;
  spec.num_images = 4;
  spec.counts = {{"ship", 10}, {"plane", 6}};
  auto [manifest, dets] = synth_dataset(spec);
  const EvalReport perfect = evaluate(dets, manifest.groundtruth, manifest, 0.5);
  c.expect(perfect.mAP == 1.0, "noise-free mAP");
  c.expect(perfect.AR == 1.0, "noise-free AR");

  // Two categories, one matched perfectly, one with groundtruth only.
  std::vector<GroundTruthRecord> gts{
      {"img", obb_to_quad(ObbParams(100, 100, 40, 16, 0.3)), "ship", false},
      {"img", obb_to_quad(ObbParams(300, 300, 40, 16, 1.2)), "plane", false}};
  std::vector<DetectionRecord> half{
      {"img", ObbParams(100, 100, 40, 16, 0.3), "ship", 1.0}};
  const EvalReport split =
      evaluate(half, gts, make_manifest(gts, ImageSize(512, 512)), 0.5);
  c.expect(split.mAP == 0.5, "half-perfect mAP");

  // Shuffling detections (distinct scores) must not change the report.
  SynthSpec noisy = spec;
  noisy.seed = 1007;
  noisy.coord_noise = 6.0;
  noisy.score_noise = 0.5;
  noisy.spurious_per_category = 3;
  auto [manifest2, dets2] = synth_dataset(noisy);
  const std::string before =
      report_to_json(evaluate(dets2, manifest2.groundtruth, manifest2, 0.5));
  Rng rng(1008);
  for (std::size_t i = dets2.size(); i > 1; --i) {
    std::swap(dets2[i - 1], dets2[rng.index(i)]);
  }
  const std::string after =
      report_to_json(evaluate(dets2, manifest2.groundtruth, manifest2, 0.5));
  c.expect(before == after, "detection order changed the report");
  return c;
}

// DOTA line fidelity, bit-exact JSONL round trips, and positioned
// errors (never crashes) on malformed input.
Check parser_fidelity() {
  Check c;
  const DotaLine line = parse_dota_line(
      "100.0 100.0 200.0 100.0 200.0 150.0 100.0 150.0 ship 0");
  c.expect(line.category == "ship" && !line.difficult, "DOTA fields");
  c.expect(line.quad.area() == 5000.0, "DOTA quad area");
  const ObbParams box = quad_to_obb(line.quad);
  c.expect(std::abs(box.cx - 150) < 1e-9 && std::abs(box.cy - 125) < 1e-9 &&
               std::abs(box.length - 100) < 1e-9 &&
               std::abs(box.width - 50) < 1e-9,
           "DOTA quad to obb");

  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "obbkit_acceptance";
  fs::create_directories(dir);
  const std::string gt_path = (dir / "gt.jsonl").string();
  const std::string det_path = (dir / "det.jsonl").string();

  Rng rng(1009);
  std::vector<GroundTruthRecord> gts;
  std::vector<DetectionRecord> dets;
  for (int i = 0; i < 1000; ++i) {
    const double length = rng.uniform(1.0, 40.0);
    const ObbParams b(rng.uniform(-50, 50), rng.uniform(-50, 50), length,
                      rng.uniform(0.5, length), rng.uniform(0.0, kPi));
    gts.push_back({"img_" + std::to_string(i % 9), obb_to_quad(b),
                   i % 2 ? "ship" : "plane", i % 3 == 0});
    dets.push_back({"img_" + std::to_string(i % 9), b,
                    i % 2 ? "ship" : "plane", rng.unit()});
  }
  write_groundtruth_jsonl(gt_path, gts);
  write_detections_jsonl(det_path, dets);
  const auto gts_back = read_groundtruth_jsonl(gt_path);
  const auto dets_back = read_detections_jsonl(det_path);
  c.expect(gts_back.size() == gts.size(), "gt count");
  c.expect(dets_back.size() == dets.size(), "det count");
  for (std::size_t i = 0; i < gts.size() && c.ok; ++i) {
    const auto& a = gts[i];
    const auto& b = gts_back[i];
    bool same = a.image_id == b.image_id && a.category == b.category &&
                a.difficult == b.difficult;
    for (int k = 0; k < 4; ++k) {
      same = same && a.quad.pts[k].x == b.quad.pts[k].x &&
             a.quad.pts[k].y == b.quad.pts[k].y;
    }
    c.expect(same, "gt round trip not identity at " + std::to_string(i));
  }
  for (std::size_t i = 0; i < dets.size() && c.ok; ++i) {
    const auto& a = dets[i];
    const auto& b = dets_back[i];
    c.expect(a.image_id == b.image_id && a.category == b.category &&
                 a.score == b.score && a.box.cx == b.box.cx &&
                 a.box.cy == b.box.cy && a.box.length == b.box.length &&
                 a.box.width == b.box.width && a.box.theta == b.box.theta,
             "det round trip not identity at " + std::to_string(i));
  }

  // Malformed inputs: positioned errors, never a crash.
  const char* kValid = "0 0 10 0 10 10 0 10 ship 0";
  std::vector<std::string> bad = {
      "",
      "1 2 3",
      "a b c d e f g h ship 0",
      "0 0 1 0 2 0 3 0 ship 0",
      "0 0 1 1 1 0 0 1 ship 0",
      "1 2 3 4 5 6 7 8 9 10 11",
      std::string(kValid) + " extra",
      "nan nan nan nan nan nan nan nan ship 0",
  };
  for (int i = 0; i < 200; ++i) {
    std::string s = kValid;
    s[rng.index(s.size())] = static_cast<char>('!' + rng.index(64));
    bad.push_back(s);
  }
  for (const auto& s : bad) {
    try {
      const DotaLine r = parse_dota_line(s, 7);  // mutations may stay valid
      c.expect(r.quad.area() > 0.0, "accepted a degenerate mutation");
    } catch (const ParseError& e) {
      c.expect(e.line() == 7, "error lost its line number");
    } catch (...) {
      c.fail("unexpected exception type for: " + s);
    }
  }

  // Same guarantee for the JSONL readers.
  const std::vector<std::string> bad_jsonl = {
      "not json",
      "[1,2,3]",
      "{\"image_id\":7}",
      R"({"image_id":"a","quad":[[0,0],[1,0],[1,1]],"category":"s","difficult":false})",
      R"({"image_id":"a","quad":[[0,0],[1,0],[2,0],[3,0]],"category":"s","difficult":false})",
      R"({"image_id":"a","quad":[[0,0],[1,0],[1,1],[0,1]],"category":"","difficult":false})",
      R"({"image_id":"a","obb":{"cx":0,"cy":0,"length":-2,"width":1,"theta":0},"category":"s","score":0.5})",
      R"({"image_id":"a","obb":{"cx":0,"cy":0,"length":2,"width":1,"theta":0},"category":"s","score":7})",
  };
  const std::string bad_path = (dir / "bad.jsonl").string();
  for (const auto& line : bad_jsonl) {
    {
      std::ofstream out(bad_path);
      out << "\n" << line << "\n";  // malformed content on line 2
    }
    for (const bool as_gt : {true, false}) {
      try {
        if (as_gt) {
          read_groundtruth_jsonl(bad_path);
        } else {
          read_detections_jsonl(bad_path);
        }
        c.fail("accepted malformed JSONL: " + line);
      } catch (const ParseError& e) {
        c.expect(e.line() == 2, "JSONL error lost its line number");
      } catch (...) {
        c.fail("unexpected exception type for JSONL: " + line);
      }
    }
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  return c;
}

// Scaling coordinates by k with S scaled by k^2 leaves the squared
// loss components unchanged to 1e-12 relative.
Check scale_invariance() {
  Check c;
  Rng rng(1010);
  const ImageSize base(100, 100);
  for (const double k : {0.5, 2.0, 10.0}) {
    const ImageSize scaled(static_cast<int>(100 * k),
                           static_cast<int>(100 * k));
    for (int i = 0; i < 300; ++i) {
      const KeypointBox pred = random_keypoints(rng);
      const KeypointBox gt = random_keypoints(rng);
      const auto scale_box = [k](const KeypointBox& b) {
        return KeypointBox{b.center * k, b.head * k, b.width * k};
      };
      for (const WidthTerm term : {WidthTerm::none, WidthTerm::squared}) {
        LossConfig cfg;
        cfg.width_term = term;
        const LossValue v0 = head_tail_loss(pred, gt, base, cfg);
        const LossValue v1 =
            head_tail_loss(scale_box(pred), scale_box(gt), scaled, cfg);
        if (rel_diff(v0.center_term, v1.center_term) > 1e-12 ||
            rel_diff(v0.extremity_term, v1.extremity_term) > 1e-12 ||
            rel_diff(v0.width_term, v1.width_term) > 1e-12) {
          c.fail("component drifted at k=" + std::to_string(k));
          return c;
        }
      }
    }
  }
  return c;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Check()> run;
    double budget_seconds;
  };
  const std::vector<Criterion> criteria = {
      {"1. loss correctness (worked example + 10k oracle samples)",
       loss_correctness, 1.0},
      {"2. head/tail symmetry bit-identical on 10k pairs", figure1_symmetry,
       1.0},
      {"3. analytic gradients vs finite differences", gradient_check, 5.0},
      {"4. rotated IoU vs rasterization oracle", rotated_iou_check, 60.0},
      {"5. heading bistability over 1000 fits", heading_bistability, 120.0},
      {"6. metrics pipeline exactness", metrics_pipeline, 5.0},
      {"7. parser fidelity and round trips", parser_fidelity, 5.0},
      {"8. scale invariance of squared terms", scale_invariance, 1.0},
  };

  int failed = 0;
  for (const auto& criterion : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Check result;
    try {
      result = criterion.run();
    } catch (const std::exception& e) {
      result.fail(std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (secs > criterion.budget_seconds) {
      result.fail("exceeded the " + std::to_string(criterion.budget_seconds) +
                  "s budget");
    }
    std::printf("[%s] %s (%.2fs)%s%s\n", result.ok ? "PASS" : "FAIL",
                criterion.name, secs, result.ok ? "" : " - ",
                result.ok ? "" : result.detail.c_str());
    if (!result.ok) ++failed;
  }
  return failed;
}
