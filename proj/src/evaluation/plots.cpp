#include "stgd/evaluation/plots.hpp"

#include "stgd/core/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace stgd::eval {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

/// Blue-to-red ramp for t in [0, 1].
std::string ramp(double t) {
  t = std::clamp(t, 0.0, 1.0);
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(40 + 200 * t), 80,
                static_cast<int>(240 - 200 * t));
  return buf;
}

}  // namespace

std::string histogram_svg(const std::string& title, const HistogramPair& h) {
  const double width = 640, height = 360, left = 50, right = 20, top = 40, bottom = 40;
  const double plot_w = width - left - right, plot_h = height - top - bottom;
  const std::size_t bins = h.reference.size();
  double peak = 1e-12;
  for (std::size_t i = 0; i < bins; ++i) peak = std::max({peak, h.reference[i], h.generated[i]});
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
     << escape(title) << "</text>\n";
  const double bar = plot_w / static_cast<double>(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    const double x = left + bar * static_cast<double>(i);
    const double hr = plot_h * h.reference[i] / peak, hg = plot_h * h.generated[i] / peak;
    os << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(top + plot_h - hr) << "\" width=\""
       << fmt(bar * 0.45) << "\" height=\"" << fmt(hr) << "\" fill=\"#4477aa\"/>\n";
    os << "<rect x=\"" << fmt(x + bar * 0.5) << "\" y=\"" << fmt(top + plot_h - hg)
       << "\" width=\"" << fmt(bar * 0.45) << "\" height=\"" << fmt(hg)
       << "\" fill=\"#ee6677\"/>\n";
  }
  os << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w
     << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n";
  char range[96];
  std::snprintf(range, sizeof range, "%.4g", h.lo);
  os << "<text x=\"" << left << "\" y=\"" << height - 15 << "\" font-size=\"12\">" << range
     << "</text>\n";
  std::snprintf(range, sizeof range, "%.4g", h.hi);
  os << "<text x=\"" << left + plot_w << "\" y=\"" << height - 15
     << "\" text-anchor=\"end\" font-size=\"12\">" << range << "</text>\n";
  os << "<rect x=\"" << width - 170 << "\" y=\"34\" width=\"12\" height=\"12\" fill=\"#4477aa\"/>"
     << "<text x=\"" << width - 152 << "\" y=\"45\" font-size=\"12\">reference</text>\n";
  os << "<rect x=\"" << width - 90 << "\" y=\"34\" width=\"12\" height=\"12\" fill=\"#ee6677\"/>"
     << "<text x=\"" << width - 72 << "\" y=\"45\" font-size=\"12\">generated</text>\n";
  os << "</svg>\n";
  return os.str();
}

std::string sequence_svg(const std::string& title, const SpatiotemporalGraph& g) {
  const double panel = 200, pad = 10;
  const std::size_t steps = g.length();
  const double width = std::max(1.0, static_cast<double>(steps)) * panel, height = panel + 40;
  double cmin = 0, cmax = 1, fmin = 0, fmax = 1, smax = 1e-12;
  bool first = true;
  for (const Snapshot& s : g.snapshots) {
    if (s.coords.size() == 0) continue;
    const double lo = s.coords.minCoeff(), hi = s.coords.maxCoeff();
    cmin = first ? lo : std::min(cmin, lo);
    cmax = first ? hi : std::max(cmax, hi);
    if (s.node_features.cols() > 0) {
      fmin = first ? s.node_features.col(0).minCoeff() : std::min(fmin, s.node_features.col(0).minCoeff());
      fmax = first ? s.node_features.col(0).maxCoeff() : std::max(fmax, s.node_features.col(0).maxCoeff());
    }
    if (s.node_features.cols() > 1) smax = std::max(smax, s.node_features.col(1).cwiseAbs().maxCoeff());
    first = false;
  }
  const double cspan = cmax > cmin ? cmax - cmin : 1.0;
  const double fspan = fmax > fmin ? fmax - fmin : 1.0;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << pad << "\" y=\"20\" font-size=\"14\">" << escape(title) << "</text>\n";
  for (std::size_t t = 0; t < steps; ++t) {
    const Snapshot& s = g.snapshots[t];
    const double ox = panel * static_cast<double>(t), oy = 30;
    auto px = [&](Eigen::Index i) {
      const double x = s.coords.cols() > 0 ? (s.coords(i, 0) - cmin) / cspan : 0.5;
      const double y = s.coords.cols() > 1 ? (s.coords(i, 1) - cmin) / cspan : 0.5;
      return std::pair{ox + pad + x * (panel - 2 * pad), oy + pad + (1 - y) * (panel - 2 * pad)};
    };
    os << "<rect x=\"" << ox + 2 << "\" y=\"" << oy << "\" width=\"" << panel - 4
       << "\" height=\"" << panel << "\" fill=\"none\" stroke=\"#cccccc\"/>\n";
    const Eigen::Index n = s.adjacency.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        if (s.adjacency(i, j) <= 0.5) continue;
        auto [x1, y1] = px(i);
        auto [x2, y2] = px(j);
        os << "<line x1=\"" << fmt(x1) << "\" y1=\"" << fmt(y1) << "\" x2=\"" << fmt(x2)
           << "\" y2=\"" << fmt(y2) << "\" stroke=\"#888888\" stroke-width=\"1\"/>\n";
      }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      auto [x, y] = px(i);
      const double color = s.node_features.cols() > 0 ? (s.node_features(i, 0) - fmin) / fspan : 0.5;
      const double size = s.node_features.cols() > 1 ? std::abs(s.node_features(i, 1)) / smax : 0.5;
      os << "<circle cx=\"" << fmt(x) << "\" cy=\"" << fmt(y) << "\" r=\"" << fmt(2 + 5 * size)
         << "\" fill=\"" << ramp(color) << "\"/>\n";
    }
    os << "<text x=\"" << ox + pad << "\" y=\"" << oy + panel - 4 << "\" font-size=\"11\">t="
       << t + 1 << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace stgd::eval
