#pragma once

#include "scgnn/common.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

namespace scgnn {
namespace svg {

/// Minimal deterministic SVG chart writer: scatter, polyline, step and bar
/// series on one pair of linear axes. Output is a pure function of the data.
class Plot {
 public:
  Plot(std::string title, std::string x_label, std::string y_label)
      : title_(std::move(title)), x_label_(std::move(x_label)),
        y_label_(std::move(y_label)) {}

  void scatter(const std::vector<double>& x, const std::vector<double>& y,
               const std::string& color) {
    series_.push_back({Kind::kScatter, x, y, color});
    extend(x, y);
  }

  void line(const std::vector<double>& x, const std::vector<double>& y,
            const std::string& color) {
    series_.push_back({Kind::kLine, x, y, color});
    extend(x, y);
  }

  void step(const std::vector<double>& x, const std::vector<double>& y,
            const std::string& color) {
    series_.push_back({Kind::kStep, x, y, color});
    extend(x, y);
  }

  void bars(const std::vector<double>& x, const std::vector<double>& y,
            const std::string& color) {
    series_.push_back({Kind::kBars, x, y, color});
    extend(x, y);
    ymin_ = std::min(ymin_, 0.0);
  }

  void hline(double y, const std::string& color) {
    hlines_.push_back({y, color});
    ymin_ = std::min(ymin_, y);
    ymax_ = std::max(ymax_, y);
  }

  void write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write plot: " + path);
    const int w = 640, h = 420, ml = 64, mr = 16, mt = 36, mb = 48;
    const double x0 = xmin_, x1 = xmax_ > xmin_ ? xmax_ : xmin_ + 1.0;
    const double y0 = ymin_, y1 = ymax_ > ymin_ ? ymax_ : ymin_ + 1.0;
    const double px = (w - ml - mr) / (x1 - x0);
    const double py = (h - mt - mb) / (y1 - y0);
    auto X = [&](double x) { return ml + (x - x0) * px; };
    auto Y = [&](double y) { return h - mb - (y - y0) * py; };
    auto num = [](double v) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.6g", v);
      return std::string(buf);
    };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
        << "\" height=\"" << h << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\" "
        << "font-size=\"14\">" << title_ << "</text>\n";
    // axes
    out << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr
        << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
        << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
      const double xv = x0 + (x1 - x0) * i / 5.0;
      const double yv = y0 + (y1 - y0) * i / 5.0;
      out << "<text x=\"" << num(X(xv)) << "\" y=\"" << h - mb + 16
          << "\" text-anchor=\"middle\" font-size=\"10\">" << num(xv) << "</text>\n";
      out << "<text x=\"" << ml - 6 << "\" y=\"" << num(Y(yv) + 3)
          << "\" text-anchor=\"end\" font-size=\"10\">" << num(yv) << "</text>\n";
    }
    out << "<text x=\"" << w / 2 << "\" y=\"" << h - 12
        << "\" text-anchor=\"middle\" font-size=\"12\">" << x_label_ << "</text>\n";
    out << "<text x=\"14\" y=\"" << h / 2
        << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
        << h / 2 << ")\">" << y_label_ << "</text>\n";

    for (const auto& [yv, color] : hlines_)
      out << "<line x1=\"" << ml << "\" y1=\"" << num(Y(yv)) << "\" x2=\"" << w - mr
          << "\" y2=\"" << num(Y(yv)) << "\" stroke=\"" << color
          << "\" stroke-dasharray=\"4 3\"/>\n";

    for (const auto& s : series_) {
      if (s.kind == Kind::kScatter) {
        for (std::size_t i = 0; i < s.x.size(); ++i)
          out << "<circle cx=\"" << num(X(s.x[i])) << "\" cy=\"" << num(Y(s.y[i]))
              << "\" r=\"2.2\" fill=\"" << s.color << "\" fill-opacity=\"0.6\"/>\n";
      } else if (s.kind == Kind::kBars) {
        const double bw = s.x.size() > 1 ? 0.8 * px * (s.x[1] - s.x[0]) : 8.0;
        for (std::size_t i = 0; i < s.x.size(); ++i)
          out << "<rect x=\"" << num(X(s.x[i]) - bw / 2) << "\" y=\"" << num(Y(s.y[i]))
              << "\" width=\"" << num(bw) << "\" height=\""
              << num(std::max(0.0, Y(0.0) - Y(s.y[i]))) << "\" fill=\"" << s.color
              << "\"/>\n";
      } else {
        out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
          if (s.kind == Kind::kStep && i > 0)
            out << num(X(s.x[i])) << "," << num(Y(s.y[i - 1])) << " ";
          out << num(X(s.x[i])) << "," << num(Y(s.y[i])) << " ";
        }
        out << "\"/>\n";
      }
    }
    out << "</svg>\n";
  }

 private:
  enum class Kind { kScatter, kLine, kStep, kBars };
  struct Series {
    Kind kind;
    std::vector<double> x, y;
    std::string color;
  };

  void extend(const std::vector<double>& x, const std::vector<double>& y) {
    for (double v : x) {
      xmin_ = std::min(xmin_, v);
      xmax_ = std::max(xmax_, v);
    }
    for (double v : y) {
      ymin_ = std::min(ymin_, v);
      ymax_ = std::max(ymax_, v);
    }
  }

  std::string title_, x_label_, y_label_;
  std::vector<Series> series_;
  std::vector<std::pair<double, std::string>> hlines_;
  double xmin_ = std::numeric_limits<double>::infinity();
  double xmax_ = -std::numeric_limits<double>::infinity();
  double ymin_ = std::numeric_limits<double>::infinity();
  double ymax_ = -std::numeric_limits<double>::infinity();
};

}  // namespace svg
}  // namespace scgnn
