#pragma once

// Command-line front end. Exit status: 0 success, 1 validation error, 2 I/O error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mitodet/annotation.hpp"
#include "mitodet/errors.hpp"
#include "mitodet/evaluation.hpp"
#include "mitodet/geometry.hpp"
#include "mitodet/imaging.hpp"
#include "mitodet/losses.hpp"
#include "mitodet/pipeline/atomic_file.hpp"
#include "mitodet/pipeline/config.hpp"
#include "mitodet/pipeline/manifest.hpp"
#include "mitodet/pipeline/png_io.hpp"
#include "mitodet/pipeline/serialize.hpp"
#include "mitodet/tiling.hpp"

namespace mitodet::pipeline {

namespace fs = std::filesystem;

enum ExitStatus : int { kExitOk = 0, kExitValidation = 1, kExitIo = 2 };

namespace detail {

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

inline void emit(const std::string& out_path, const Json& j, std::ostream& out) {
  if (out_path.empty()) {
    out << dump(j);
  } else {
    write_text_file(out_path, dump(j));
  }
}

inline std::vector<annotation::CentroidLabel> read_centroids(const fs::path& path, const std::string& slide_id,
                                                             bool swap_xy) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return annotation::parse_centroids(in, slide_id, swap_xy);
  } catch (const MalformedAnnotation& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

inline std::string tile_file_name(std::size_t index, const tiling::TileOrigin& o, bool flipped) {
  std::ostringstream name;
  name << "tile_" << std::setw(4) << std::setfill('0') << index << "_x" << o.x << "_y" << o.y
       << (flipped ? "_flip" : "") << ".png";
  return name.str();
}

/// Config-file value unless the flag was given on the command line.
template <typename T, typename U>
void apply_default(const CLI::Option* opt, T& target, const std::optional<RunConfig>& config, U RunConfig::*field) {
  if (config && opt->count() == 0) target = static_cast<T>((*config).*field);
}

}  // namespace detail

struct NormalizeArgs {
  std::string input, output, reference, target_profile, source_profile, profiles_out;
  imaging::StainEstimationOptions stain;
};

/// Estimates (or loads) source and target stain profiles and writes the normalized PNG.
inline void normalize_command(const NormalizeArgs& a, std::ostream&) {
  const RasterImage image = read_png(a.input);
  const imaging::StainProfile source =
      a.source_profile.empty() ? imaging::estimate_stain_profile(image, a.stain)
                               : stain_profile_from_json(parse_json(read_text_file(a.source_profile), a.source_profile));
  std::optional<imaging::StainProfile> target;
  if (!a.target_profile.empty()) {
    target = stain_profile_from_json(parse_json(read_text_file(a.target_profile), a.target_profile));
  } else if (!a.reference.empty()) {
    target = imaging::estimate_stain_profile(read_png(a.reference), a.stain);
  } else {
    throw ValidationError("normalize needs --reference or --target-profile");
  }
  write_png(a.output, imaging::normalize_stains(image, source, *target));
  if (!a.profiles_out.empty()) {
    write_text_file(a.profiles_out, detail::dump({{"source", to_json(source)}, {"target", to_json(*target)}}));
  }
}

struct TileArgs {
  std::string input, out_dir, manifest;
  int size = 512;
  double overlap = 0.6;
  bool flip = false;
};

inline tiling::TilePlan tile_command(const TileArgs& a, std::ostream&) {
  const RasterImage image = read_png(a.input);
  const auto plan = tiling::plan_tiles(image.width(), image.height(), a.size, a.overlap);
  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  if (ec) throw IoError("cannot create " + a.out_dir);
  for (std::size_t i = 0; i < plan.size(); ++i) {
    for (bool flipped : {false, true}) {
      if (flipped && !a.flip) continue;
      const auto ref = tiling::tile_ref(plan, i, flipped);
      write_png(fs::path(a.out_dir) / detail::tile_file_name(i, ref.origin, flipped),
                tiling::extract_tile(image, ref, plan.tile_size));
    }
  }
  if (!a.manifest.empty()) write_text_file(a.manifest, detail::dump(to_json(plan)));
  return plan;
}

struct MasksArgs {
  std::string centroids, image, mask_out, objects_out, slide_id, manifest, out_dir;
  int width = 0;
  int height = 0;
  std::optional<std::uint64_t> seed;
  bool swap_xy = false;
};

inline void masks_for_slide(const fs::path& centroids, int width, int height, std::uint64_t seed,
                            const std::string& slide_id, bool swap_xy, const std::string& mask_out,
                            const std::string& objects_out, std::ostream& out) {
  const auto labels = detail::read_centroids(centroids, slide_id, swap_xy);
  Rng rng(seed);
  const auto objects = annotation::synthesize_objects(labels, width, height, rng);
  if (!mask_out.empty()) write_mask_png(mask_out, annotation::union_mask(objects, width, height));
  detail::emit(objects_out, to_json(objects), out);
}

inline void masks_command(const MasksArgs& a, std::ostream& out) {
  if (!a.seed) throw ValidationError("masks requires an explicit --seed");
  if (!a.manifest.empty()) {
    if (a.out_dir.empty()) throw ValidationError("--manifest requires --out-dir");
    const auto manifest = load_manifest(a.manifest);
    const fs::path base = fs::path(a.manifest).parent_path();
    std::error_code ec;
    fs::create_directories(a.out_dir, ec);
    if (ec) throw IoError("cannot create " + a.out_dir);
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
      const auto& e = manifest.entries[i];
      const RasterImage image = read_png(base / e.image_path);
      const fs::path dir(a.out_dir);
      masks_for_slide(base / e.centroid_csv_path, image.width(), image.height(), *a.seed + i, e.slide_id, a.swap_xy,
                      (dir / (e.slide_id + "_mask.png")).string(), (dir / (e.slide_id + "_objects.json")).string(),
                      out);
    }
    return;
  }
  if (a.centroids.empty()) throw ValidationError("masks needs --centroids or --manifest");
  int width = a.width;
  int height = a.height;
  if (!a.image.empty()) {
    const RasterImage image = read_png(a.image);
    width = image.width();
    height = image.height();
  }
  if (width <= 0 || height <= 0) throw ValidationError("masks needs --image or positive --width/--height");
  masks_for_slide(a.centroids, width, height, *a.seed, a.slide_id, a.swap_xy, a.mask_out, a.objects_out, out);
}

struct ScoreArgs {
  std::string pred, gt, out;
  double radius = evaluation::kMatchRadius;
  double dedup_radius = evaluation::kMatchRadius;
  bool swap_xy = false;
};

inline evaluation::SlideEvaluation score_command(const ScoreArgs& a, std::ostream& out) {
  const auto detections = detections_from_json(parse_json(read_text_file(a.pred), a.pred));
  std::vector<Point> gts;
  for (const auto& label : detail::read_centroids(a.gt, detections.slide_id, a.swap_xy)) gts.push_back(label.point());
  const auto result = evaluation::evaluate_slide(detections.detections, gts, a.radius, a.dedup_radius);
  detail::emit(a.out, to_json(result), out);
  return result;
}

struct GradeArgs {
  std::optional<long long> count;
  std::string pred, out;
  double dedup_radius = evaluation::kMatchRadius;
};

inline void grade_command(const GradeArgs& a, std::ostream& out) {
  long long count = 0;
  if (a.count) {
    count = *a.count;
  } else if (!a.pred.empty()) {
    const auto file = detections_from_json(parse_json(read_text_file(a.pred), a.pred));
    count = static_cast<long long>(tiling::merge_tile_detections(file.detections, a.dedup_radius).size());
  } else {
    throw ValidationError("grade needs --count or --pred");
  }
  detail::emit(a.out, Json{{"count", count}, {"score", evaluation::mitotic_activity_score(count)}}, out);
}

struct LossCheckArgs {
  int trials = 1000;
  std::optional<std::uint64_t> seed;
  std::string out;
};

/// Returns true iff every loss passes.
inline bool losscheck_command(const LossCheckArgs& a, std::ostream& out) {
  if (!a.seed) throw ValidationError("losscheck requires an explicit --seed");
  const auto reports = losses::run_gradient_suite(a.trials, *a.seed);
  const Json j = to_json(reports);
  detail::emit(a.out, j, out);
  return j["pass"].get<bool>();
}

struct AnchorsArgs {
  int grid_width = 0;
  int grid_height = 0;
  double stride = 16.0;
  std::string gt, out;
  geometry::RpnThresholds thresholds;
};

inline void anchors_command(const AnchorsArgs& a, std::ostream& out) {
  const auto anchors = geometry::generate_anchors(a.grid_width, a.grid_height, a.stride);
  std::vector<BoundingBox> gts;
  if (!a.gt.empty()) gts = boxes_from_json(parse_json(read_text_file(a.gt), a.gt));
  std::vector<geometry::RpnTarget> targets;
  if (!a.gt.empty()) targets = geometry::assign_rpn_targets(anchors, gts, a.thresholds);
  detail::emit(a.out,
               Json{{"grid_width", a.grid_width},
                    {"grid_height", a.grid_height},
                    {"stride", a.stride},
                    {"anchors", anchors_to_json(anchors, targets)}},
               out);
}

/// Parses `args` (without the program name) and runs one subcommand.
inline int run_command(const std::vector<std::string>& args, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
  CLI::App app{"mitosis detection pipeline tools", "mitodet"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON run configuration supplying defaults");

  NormalizeArgs norm;
  auto* normalize = app.add_subcommand("normalize", "Macenko stain normalization to a reference");
  normalize->add_option("--input", norm.input, "image to normalize (PNG)")->required();
  normalize->add_option("--out", norm.output, "normalized image (PNG)")->required();
  normalize->add_option("--reference", norm.reference, "reference image defining the target stains");
  normalize->add_option("--target-profile", norm.target_profile, "target stain profile JSON");
  normalize->add_option("--source-profile", norm.source_profile, "use this source profile instead of estimating");
  normalize->add_option("--profiles-out", norm.profiles_out, "write source/target profiles as JSON");
  auto* od_opt = normalize->add_option("--od-threshold", norm.stain.od_threshold);
  auto* angle_opt = normalize->add_option("--angle-percentile", norm.stain.angle_percentile);

  TileArgs tile;
  auto* tile_cmd = app.add_subcommand("tile", "sliding-window tiles and plan manifest");
  tile_cmd->add_option("--input", tile.input)->required();
  auto* size_opt = tile_cmd->add_option("--size", tile.size);
  auto* overlap_opt = tile_cmd->add_option("--overlap", tile.overlap);
  tile_cmd->add_option("--out-dir", tile.out_dir)->required();
  tile_cmd->add_option("--manifest", tile.manifest, "tile plan JSON");
  tile_cmd->add_flag("--flip", tile.flip, "also write horizontally flipped tiles");

  MasksArgs masks;
  std::uint64_t mask_seed = 0;
  auto* masks_cmd = app.add_subcommand("masks", "synthetic circle/ellipse masks from centroid labels");
  masks_cmd->add_option("--centroids", masks.centroids, "centroid CSV (x,y per line)");
  masks_cmd->add_option("--image", masks.image, "image whose size the mask takes");
  masks_cmd->add_option("--width", masks.width);
  masks_cmd->add_option("--height", masks.height);
  auto* seed_opt = masks_cmd->add_option("--seed", mask_seed);
  masks_cmd->add_option("--mask-out", masks.mask_out, "union mask PNG (0/255)");
  masks_cmd->add_option("--objects-out", masks.objects_out, "objects JSON");
  masks_cmd->add_option("--slide-id", masks.slide_id);
  masks_cmd->add_option("--manifest", masks.manifest, "dataset manifest for batch mode");
  masks_cmd->add_option("--out-dir", masks.out_dir, "batch output directory");
  masks_cmd->add_flag("--swap-xy", masks.swap_xy, "CSV columns are row,col");

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "match detections to ground truth and report P/R/F");
  score_cmd->add_option("--pred", score.pred, "detections JSON")->required();
  score_cmd->add_option("--gt", score.gt, "ground-truth centroid CSV")->required();
  auto* radius_opt = score_cmd->add_option("--radius", score.radius);
  auto* dedup_opt = score_cmd->add_option("--dedup-radius", score.dedup_radius);
  score_cmd->add_option("--out", score.out, "metrics JSON");
  score_cmd->add_flag("--swap-xy", score.swap_xy);

  GradeArgs grade;
  long long grade_count = 0;
  auto* grade_cmd = app.add_subcommand("grade", "mitotic activity score");
  auto* count_opt = grade_cmd->add_option("--count", grade_count, "mitoses per 10 HPF");
  grade_cmd->add_option("--pred", grade.pred, "detections JSON to count");
  auto* grade_dedup_opt = grade_cmd->add_option("--dedup-radius", grade.dedup_radius);
  grade_cmd->add_option("--out", grade.out);

  LossCheckArgs check;
  std::uint64_t check_seed = 0;
  auto* check_cmd = app.add_subcommand("losscheck", "finite-difference verification of the loss gradients");
  check_cmd->add_option("--trials", check.trials);
  auto* check_seed_opt = check_cmd->add_option("--seed", check_seed);
  check_cmd->add_option("--out", check.out);

  AnchorsArgs anchors;
  auto* anchors_cmd = app.add_subcommand("anchors", "dump anchors and RPN target assignments");
  anchors_cmd->add_option("--grid-width", anchors.grid_width)->required();
  anchors_cmd->add_option("--grid-height", anchors.grid_height)->required();
  anchors_cmd->add_option("--stride", anchors.stride);
  anchors_cmd->add_option("--gt", anchors.gt, "objects or boxes JSON");
  auto* pos_opt = anchors_cmd->add_option("--positive-iou", anchors.thresholds.positive);
  auto* neg_opt = anchors_cmd->add_option("--negative-iou", anchors.thresholds.negative);
  anchors_cmd->add_option("--out", anchors.out);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "mitodet: " << e.what() << "\n";
    return kExitValidation;
  }

  try {
    std::optional<RunConfig> config;
    if (!config_path.empty()) config = run_config_from_json(parse_json(read_text_file(config_path), config_path));
    using detail::apply_default;

    if (normalize->parsed()) {
      if (config && od_opt->count() == 0) norm.stain.od_threshold = config->stain.od_threshold;
      if (config && angle_opt->count() == 0) norm.stain.angle_percentile = config->stain.angle_percentile;
      normalize_command(norm, out);
    } else if (tile_cmd->parsed()) {
      apply_default(size_opt, tile.size, config, &RunConfig::tile_size);
      apply_default(overlap_opt, tile.overlap, config, &RunConfig::overlap);
      tile_command(tile, out);
    } else if (masks_cmd->parsed()) {
      if (seed_opt->count() > 0) {
        masks.seed = mask_seed;
      } else if (config) {
        masks.seed = config->mask_seed;
      }
      masks_command(masks, out);
    } else if (score_cmd->parsed()) {
      apply_default(radius_opt, score.radius, config, &RunConfig::match_radius);
      apply_default(dedup_opt, score.dedup_radius, config, &RunConfig::dedup_radius);
      score_command(score, out);
    } else if (grade_cmd->parsed()) {
      if (count_opt->count() > 0) grade.count = grade_count;
      apply_default(grade_dedup_opt, grade.dedup_radius, config, &RunConfig::dedup_radius);
      grade_command(grade, out);
    } else if (check_cmd->parsed()) {
      if (check_seed_opt->count() > 0) check.seed = check_seed;
      if (!losscheck_command(check, out)) {
        err << "mitodet: gradient verification failed\n";
        return kExitValidation;
      }
    } else if (anchors_cmd->parsed()) {
      if (config && pos_opt->count() == 0) anchors.thresholds.positive = config->rpn.positive;
      if (config && neg_opt->count() == 0) anchors.thresholds.negative = config->rpn.negative;
      anchors_command(anchors, out);
    }
  } catch (const ValidationError& e) {
    err << "mitodet: " << e.what() << "\n";
    return kExitValidation;
  } catch (const IoError& e) {
    err << "mitodet: " << e.what() << "\n";
    return kExitIo;
  } catch (const nlohmann::json::exception& e) {
    err << "mitodet: malformed JSON content: " << e.what() << "\n";
    return kExitValidation;
  } catch (const fs::filesystem_error& e) {
    err << "mitodet: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}

}  // namespace mitodet::pipeline
