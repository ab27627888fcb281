#pragma once

#include <span>
#include <string>

#include "scenecast/model/heatmap_io.hpp"
#include "scenecast/sampler/sampler.hpp"
#include "scenecast/scene/scene.hpp"

namespace scenecast::pipeline {

struct RenderOptions {
  double pixels_per_meter = 4.0;
  double margin = 10.0;  // meters
};

/// Standalone SVG of one scene in world coordinates: lanes, agent
/// histories and current positions, heatmap cells (opacity proportional to
/// probability, 1 at each agent's most likely cell), predicted endpoints and
/// trajectories. Each agent keeps one color for history, position and
/// heatmap; in a joint set endpoints are colored by modality instead.
std::string render_svg(const scene::Scene& world, const sampler::ModalitySet* prediction = nullptr,
                       std::span<const model::HeatmapRecord> heatmaps = {}, const RenderOptions& options = {});

}  // namespace scenecast::pipeline
