#pragma once

#include "stgd/core/graph.hpp"
#include "stgd/evaluation/metrics.hpp"

#include <filesystem>
#include <string>

namespace stgd::eval {

/// Overlaid reference / generated histogram bars as a static SVG.
std::string histogram_svg(const std::string& title, const HistogramPair& h);

/// One panel per step: nodes at their coordinates, fill from feature 0,
/// radius from feature 1, and edges whose weight exceeds 0.5.
std::string sequence_svg(const std::string& title, const SpatiotemporalGraph& g);

/// Throws IoError when the file cannot be written.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace stgd::eval
