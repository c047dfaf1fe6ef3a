#pragma once

#include <cstdint>
#include <optional>

#include "mitodet/errors.hpp"
#include "mitodet/evaluation.hpp"
#include "mitodet/geometry.hpp"
#include "mitodet/imaging.hpp"
#include "mitodet/pipeline/serialize.hpp"

namespace mitodet::pipeline {

struct RunConfig {
  int tile_size = 512;
  double overlap = 0.6;
  std::optional<std::uint64_t> mask_seed;  // used by masks when --seed is absent
  double match_radius = evaluation::kMatchRadius;
  double dedup_radius = evaluation::kMatchRadius;
  imaging::StainEstimationOptions stain;
  double lambda = 1.0;
  geometry::RpnThresholds rpn;

  void validate() const {
    if (tile_size < 32) throw ValidationError("tile_size must be at least 32");
    if (!(overlap >= 0.0 && overlap <= 0.95)) throw ValidationError("overlap must lie in [0, 0.95]");
    if (!(match_radius > 0.0)) throw ValidationError("match_radius must be positive");
    if (!(dedup_radius > 0.0)) throw ValidationError("dedup_radius must be positive");
    if (!(lambda > 0.0)) throw ValidationError("lambda must be positive");
    stain.validate();
    rpn.validate();
  }
};

/// Missing keys keep their defaults; unknown keys are rejected.
inline RunConfig run_config_from_json(const Json& j) {
  RunConfig c;
  if (!j.is_object()) throw ValidationError("run config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "tile_size") c.tile_size = value.get<int>();
    else if (key == "overlap") c.overlap = value.get<double>();
    else if (key == "mask_seed") c.mask_seed = value.get<std::uint64_t>();
    else if (key == "match_radius") c.match_radius = value.get<double>();
    else if (key == "dedup_radius") c.dedup_radius = value.get<double>();
    else if (key == "od_threshold") c.stain.od_threshold = value.get<double>();
    else if (key == "angle_percentile") c.stain.angle_percentile = value.get<double>();
    else if (key == "lambda") c.lambda = value.get<double>();
    else if (key == "positive_iou") c.rpn.positive = value.get<double>();
    else if (key == "negative_iou") c.rpn.negative = value.get<double>();
    else throw ValidationError("run config: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

}  // namespace mitodet::pipeline
