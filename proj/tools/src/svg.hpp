#pragma once

#include <string>
#include <utility>
#include <vector>

namespace tlnmem::cli {

// Minimal static-SVG builder.  All coordinates are formatted with a fixed
// precision and elements appear in call order, so identical draw sequences
// produce byte-identical files.
class SvgCanvas {
 public:
  SvgCanvas(double width, double height);

  void comment(const std::string& text);
  void rect(double x, double y, double w, double h, const std::string& fill,
            const std::string& stroke = "none", double stroke_width = 0.0);
  void line(double x1, double y1, double x2, double y2, const std::string& stroke,
            double width = 1.0);
  void polyline(const std::vector<std::pair<double, double>>& pts,
                const std::string& stroke, double width = 1.0);
  void circle(double cx, double cy, double r, const std::string& fill);
  void text(double x, double y, const std::string& s, double size = 11.0,
            const std::string& anchor = "start");

  std::string str() const;
  void write(const std::string& path) const;

 private:
  double width_, height_;
  std::string body_;
};

// Affine map from a data interval to a pixel interval (possibly reversed,
// as for the y axis).
struct LinearMap {
  double lo = 0.0, hi = 1.0;
  double px_lo = 0.0, px_hi = 1.0;
  double operator()(double v) const {
    return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo);
  }
};

// Plot frame with tick marks and numeric labels on both axes.
void draw_frame(SvgCanvas& svg, const LinearMap& x, const LinearMap& y,
                const std::string& x_label, const std::string& y_label, int ticks = 5);

// Fixed categorical palette; index wraps.
const std::string& palette(std::size_t index);

}  // namespace tlnmem::cli
