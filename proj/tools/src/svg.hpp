#pragma once

#include <string>
#include <vector>

#include "gcl/geometry.hpp"

namespace gclab {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  std::string color;
};

/// Domain outline, omega cells, optional V mask, and boundary arcs coloured by the partition
/// (gamma1 red, gamma0 blue; omega's trace is drawn thicker).
std::string svg_region(const gcl::Grid& grid, const gcl::CellMask& omega, const gcl::CellMask* V,
                       const gcl::SegmentMask* gamma1, const gcl::SegmentMask& omega_trace);

/// Ray polylines over the omega mask.
std::string svg_rays(const gcl::Grid& grid, const gcl::CellMask& omega, const std::vector<std::vector<gcl::Vec2>>& paths);

/// Nodal field heat map (diverging palette, symmetric range).
std::string svg_heatmap(const gcl::Grid& grid, const std::vector<double>& nodal);

/// Line chart; log_y plots log10 of positive values.
std::string svg_lines(const std::vector<Series>& series, const std::string& title, bool log_y);

/// Scatter of values against their index.
std::string svg_scatter(const std::vector<double>& values, const std::string& title, bool log_y);

}  // namespace gclab
