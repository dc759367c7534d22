#pragma once

#include <string>
#include <utility>
#include <vector>

#include "drtune/strategy.hpp"

namespace drtune {

// metrics.csv: header "iter,reward,grad_norm,wall_ms", one row per
// optimizer step.
void write_metrics_csv(const std::string& path, const RunLog& log);

// summary.csv: "name,value" rows.
void write_summary_csv(const std::string& path,
                       const std::vector<std::pair<std::string, double>>& rows);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

// Minimal line plot: one <polyline> per series plus axes and a legend.
void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& xlabel, const std::string& ylabel,
                    const std::vector<Series>& series);

// Plain "P2" PGM; pixel = round((v + 1) / 2 * 255), clamped to [0, 255].
void write_pgm(const std::string& path, const Array& image, int height,
               int width);
Array read_pgm(const std::string& path, int& height, int& width);

}  // namespace drtune
