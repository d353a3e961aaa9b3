#pragma once

#include <string>
#include <vector>

namespace lkl::cli {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Minimal standalone SVG line chart with a shared linear y axis. Non-finite
// points are skipped.
std::string render_line_plot(const std::string& title, const std::string& x_label,
                             const std::vector<Series>& series);

}  // namespace lkl::cli
