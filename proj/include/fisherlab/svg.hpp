#pragma once

// Minimal SVG scatter plots of result tables.

#include <string>

#include "fisherlab/table.hpp"

namespace fisherlab {

struct PlotSpec {
  std::string x;
  std::string y;
  /// Text column splitting the points into series; empty for one series.
  std::string group;
  bool log_x = false;
  std::string title;
};

/// Default axes for a table of experiment `kind` ('a'..'e'), chosen from
/// the table's columns. Throws InvalidInput when nothing fits.
PlotSpec default_plot(const Table& table, char kind);

/// Scatter plot with one colour per series; NA points are skipped.
std::string render_svg(const Table& table, const PlotSpec& spec);

}  // namespace fisherlab
