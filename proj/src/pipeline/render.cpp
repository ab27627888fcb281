#include "scenecast/pipeline/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

namespace scenecast::pipeline {

namespace {

constexpr std::array<const char*, 10> kPalette{"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                               "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

const char* color(std::size_t i) { return kPalette[i % kPalette.size()]; }

struct Box {
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
  double x1 = -x0, y1 = -x0;
  void add(const Vec2d& p) {
    x0 = std::min(x0, p.x());
    y0 = std::min(y0, p.y());
    x1 = std::max(x1, p.x());
    y1 = std::max(y1, p.y());
  }
  [[nodiscard]] bool empty() const { return x0 > x1; }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Smallest positive coordinate gap, i.e. the cell size of a regular grid.
double cell_size(const model::HeatmapRecord& r) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < r.centers.size(); ++i) {
    for (int d = 0; d < 2; ++d) {
      const double gap = std::abs(r.centers[i][d] - r.centers[0][d]);
      if (gap > 1e-9) best = std::min(best, gap);
    }
  }
  return std::isfinite(best) ? best : 0.5;
}

}  // namespace

std::string render_svg(const scene::Scene& world, const sampler::ModalitySet* prediction,
                       std::span<const model::HeatmapRecord> heatmaps, const RenderOptions& options) {
  Box box;
  for (const auto& l : world.lanes)
    for (const auto& p : l.points) box.add(p);
  for (const auto& a : world.agents)
    for (const auto& f : a.history)
      if (f.present) box.add(f.position);
  if (prediction != nullptr)
    for (const auto& per : prediction->endpoints)
      for (const auto& p : per) box.add(p);
  if (box.empty()) box.add(Vec2d::Zero());

  const double s = options.pixels_per_meter;
  const double x0 = box.x0 - options.margin, y1 = box.y1 + options.margin;
  const double width = (box.x1 - box.x0 + 2 * options.margin) * s;
  const double height = (box.y1 - box.y0 + 2 * options.margin) * s;
  // World y points up, SVG y points down.
  auto X = [&](double x) { return num((x - x0) * s); };
  auto Y = [&](double y) { return num((y1 - y) * s); };

  auto agent_color = [&](int id) {
    for (std::size_t i = 0; i < world.agents.size(); ++i)
      if (world.agents[i].id == id) return color(i);
    return color(world.agents.size());
  };

  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + num(width) + "\" height=\"" +
         num(height) + "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n";
  out += "<title>" + escape(world.id) + "</title>\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  out += "<g id=\"lanes\" fill=\"none\" stroke=\"#c8c8c8\" stroke-width=\"" + num(0.3 * s) + "\">\n";
  for (const auto& l : world.lanes) {
    out += "<polyline points=\"";
    for (const auto& p : l.points) out += X(p.x()) + "," + Y(p.y()) + " ";
    out += "\"/>\n";
  }
  out += "</g>\n";

  out += "<g id=\"heatmaps\" stroke=\"none\">\n";
  for (const auto& r : heatmaps) {
    if (r.centers.empty()) continue;
    const double pmax = *std::max_element(r.probability.begin(), r.probability.end());
    const double c = cell_size(r);
    for (std::size_t i = 0; i < r.centers.size(); ++i) {
      const double opacity = pmax > 0 ? r.probability[i] / pmax : 0.0;
      if (opacity < 1e-3) continue;
      out += "<rect x=\"" + X(r.centers[i].x() - c / 2) + "\" y=\"" + Y(r.centers[i].y() + c / 2) + "\" width=\"" +
             num(c * s) + "\" height=\"" + num(c * s) + "\" fill=\"" + agent_color(r.agent_id) +
             "\" fill-opacity=\"" + std::to_string(opacity) + "\"/>\n";
    }
  }
  out += "</g>\n";

  out += "<g id=\"agents\" fill=\"none\" stroke-width=\"" + num(0.4 * s) + "\">\n";
  for (std::size_t i = 0; i < world.agents.size(); ++i) {
    const auto& a = world.agents[i];
    out += "<polyline stroke=\"" + std::string(color(i)) + "\" points=\"";
    for (const auto& f : a.history)
      if (f.present) out += X(f.position.x()) + "," + Y(f.position.y()) + " ";
    out += "\"/>\n";
    if (a.current().present)
      out += "<circle cx=\"" + X(a.current().position.x()) + "\" cy=\"" + Y(a.current().position.y()) + "\" r=\"" +
             num(1.0 * s) + "\" fill=\"" + color(i) + "\"/>\n";
  }
  out += "</g>\n";

  if (prediction != nullptr) {
    const bool joint = prediction->orientation == sampler::Orientation::Joint;
    out += "<g id=\"predictions\" stroke-width=\"" + num(0.25 * s) + "\">\n";
    for (std::size_t a = 0; a < prediction->endpoints.size(); ++a) {
      for (std::size_t k = 0; k < prediction->endpoints[a].size(); ++k) {
        const char* col = joint ? color(k) : agent_color(prediction->agent_ids[a]);
        if (prediction->has_trajectories()) {
          out += "<polyline fill=\"none\" stroke-dasharray=\"4 2\" stroke=\"" + std::string(col) + "\" points=\"";
          for (const auto& p : prediction->trajectories[a][k]) out += X(p.x()) + "," + Y(p.y()) + " ";
          out += "\"/>\n";
        }
        const auto& e = prediction->endpoints[a][k];
        out += "<circle cx=\"" + X(e.x()) + "\" cy=\"" + Y(e.y()) + "\" r=\"" + num(0.7 * s) +
               "\" fill=\"white\" stroke=\"" + col + "\"><title>agent " + std::to_string(prediction->agent_ids[a]) +
               " modality " + std::to_string(k) + "</title></circle>\n";
      }
    }
    out += "</g>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace scenecast::pipeline
