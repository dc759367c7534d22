#include "drtune/reports.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "drtune/error.hpp"

namespace drtune {
namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  return os;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

void write_metrics_csv(const std::string& path, const RunLog& log) {
  auto os = open_out(path);
  os << "iter,reward,grad_norm,wall_ms\n";
  for (const RunRecord& r : log.records)
    os << r.iter << "," << num(r.reward) << "," << num(r.grad_norm) << ","
       << num(r.wall_ms) << "\n";
  if (!os) throw IoError("write failed: " + path);
}

void write_summary_csv(
    const std::string& path,
    const std::vector<std::pair<std::string, double>>& rows) {
  auto os = open_out(path);
  os << "name,value\n";
  for (const auto& [name, value] : rows) os << name << "," << num(value) << "\n";
  if (!os) throw IoError("write failed: " + path);
}

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& xlabel, const std::string& ylabel,
                    const std::vector<Series>& series) {
  const int W = 720, H = 480;
  const int ml = 70, mr = 20, mt = 40, mb = 50;
  double xmin = std::numeric_limits<double>::max(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const Series& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  if (!(xmax > xmin)) xmax = xmin + 1.0;
  if (!(ymax > ymin)) ymax = ymin + 1.0;
  auto px = [&](double x) {
    return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr);
  };
  auto py = [&](double y) {
    return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb);
  };
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c",
                                 "#d62728", "#9467bd", "#8c564b"};

  auto os = open_out(path);
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
     << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        "font-size=\"16\">" << title << "</text>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr
     << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
     << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 12
     << "\" text-anchor=\"middle\" font-size=\"12\">" << xlabel << "</text>\n";
  os << "<text x=\"16\" y=\"" << H / 2
     << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
     << H / 2 << ")\">" << ylabel << "</text>\n";
  os << "<text x=\"" << ml << "\" y=\"" << H - mb + 16
     << "\" font-size=\"10\">" << num(xmin) << "</text>\n";
  os << "<text x=\"" << W - mr << "\" y=\"" << H - mb + 16
     << "\" text-anchor=\"end\" font-size=\"10\">" << num(xmax) << "</text>\n";
  os << "<text x=\"" << ml - 4 << "\" y=\"" << H - mb
     << "\" text-anchor=\"end\" font-size=\"10\">" << num(ymin) << "</text>\n";
  os << "<text x=\"" << ml - 4 << "\" y=\"" << mt + 10
     << "\" text-anchor=\"end\" font-size=\"10\">" << num(ymax) << "</text>\n";

  int ci = 0;
  for (const Series& s : series) {
    const char* color = colors[ci % 6];
    os << "<polyline fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (i) os << " ";
      os << num(px(s.x[i])) << "," << num(py(s.y[i]));
    }
    os << "\"/>\n";
    os << "<text x=\"" << W - mr - 6 << "\" y=\"" << mt + 14 + 14 * ci
       << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << color << "\">"
       << s.name << "</text>\n";
    ++ci;
  }
  os << "</svg>\n";
  if (!os) throw IoError("write failed: " + path);
}

void write_pgm(const std::string& path, const Array& image, int height,
               int width) {
  if (image.size() != static_cast<Eigen::Index>(height) * width)
    throw ShapeError("write_pgm: image size mismatch");
  auto os = open_out(path);
  os << "P2\n" << width << " " << height << "\n255\n";
  for (int i = 0; i < height; ++i) {
    for (int j = 0; j < width; ++j) {
      const double v = image[static_cast<Eigen::Index>(i) * width + j];
      int q = static_cast<int>(std::lround((v + 1.0) / 2.0 * 255.0));
      q = std::clamp(q, 0, 255);
      os << q << (j + 1 < width ? " " : "\n");
    }
  }
  if (!os) throw IoError("write failed: " + path);
}

Array read_pgm(const std::string& path, int& height, int& width) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open: " + path);
  std::string magic;
  is >> magic;
  if (magic != "P2") throw IoError("not a plain P2 PGM: " + path);
  int maxval = 0;
  is >> width >> height >> maxval;
  if (!is || maxval != 255) throw IoError("bad PGM header: " + path);
  Array out(static_cast<Eigen::Index>(height) * width);
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    int q;
    is >> q;
    if (!is) throw IoError("truncated PGM: " + path);
    out[i] = q / 255.0 * 2.0 - 1.0;
  }
  return out;
}

}  // namespace drtune
