#include "svg.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace tlnmem::cli {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

SvgCanvas::SvgCanvas(double width, double height) : width_(width), height_(height) {}

void SvgCanvas::comment(const std::string& text) {
  body_ += "<!-- " + escape(text) + " -->\n";
}

void SvgCanvas::rect(double x, double y, double w, double h, const std::string& fill,
                     const std::string& stroke, double stroke_width) {
  body_ += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) +
           "\" height=\"" + num(h) + "\" fill=\"" + fill + "\"";
  if (stroke != "none")
    body_ += " stroke=\"" + stroke + "\" stroke-width=\"" + num(stroke_width) + "\"";
  body_ += "/>\n";
}

void SvgCanvas::line(double x1, double y1, double x2, double y2,
                     const std::string& stroke, double width) {
  body_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) +
           "\" y2=\"" + num(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" +
           num(width) + "\"/>\n";
}

void SvgCanvas::polyline(const std::vector<std::pair<double, double>>& pts,
                         const std::string& stroke, double width) {
  body_ += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" +
           num(width) + "\" points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) body_ += " ";
    body_ += num(pts[i].first) + "," + num(pts[i].second);
  }
  body_ += "\"/>\n";
}

void SvgCanvas::circle(double cx, double cy, double r, const std::string& fill) {
  body_ += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(r) +
           "\" fill=\"" + fill + "\"/>\n";
}

void SvgCanvas::text(double x, double y, const std::string& s, double size,
                     const std::string& anchor) {
  body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + num(size) +
           "\" font-family=\"monospace\" text-anchor=\"" + anchor + "\">" + escape(s) +
           "</text>\n";
}

std::string SvgCanvas::str() const {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width_) +
         "\" height=\"" + num(height_) + "\" viewBox=\"0 0 " + num(width_) + " " +
         num(height_) + "\">\n" + body_ + "</svg>\n";
}

void SvgCanvas::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << str();
}

void draw_frame(SvgCanvas& svg, const LinearMap& x, const LinearMap& y,
                const std::string& x_label, const std::string& y_label, int ticks) {
  svg.line(x.px_lo, y.px_lo, x.px_hi, y.px_lo, "#333", 1.0);
  svg.line(x.px_lo, y.px_lo, x.px_lo, y.px_hi, "#333", 1.0);
  for (int k = 0; k <= ticks; ++k) {
    double fx = x.lo + (x.hi - x.lo) * k / ticks;
    double fy = y.lo + (y.hi - y.lo) * k / ticks;
    svg.line(x(fx), y.px_lo, x(fx), y.px_lo + 4, "#333", 1.0);
    svg.text(x(fx), y.px_lo + 16, num(fx), 10, "middle");
    svg.line(x.px_lo - 4, y(fy), x.px_lo, y(fy), "#333", 1.0);
    svg.text(x.px_lo - 6, y(fy) + 3, num(fy), 10, "end");
  }
  svg.text((x.px_lo + x.px_hi) / 2, y.px_lo + 32, x_label, 12, "middle");
  svg.text(x.px_lo, y.px_hi - 8, y_label, 12, "start");
}

const std::string& palette(std::size_t index) {
  static const std::array<std::string, 10> colors = {
      "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2",
      "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};
  return colors[index % colors.size()];
}

}  // namespace tlnmem::cli
