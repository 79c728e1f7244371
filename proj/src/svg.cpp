#include "ddm/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace ddm::svg {

namespace {

constexpr double kWidth = 720, kHeight = 540;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Largest of {1,2,5}*10^p not exceeding range/5; tick spacing for either axis.
double nice_step(double range) {
  const double raw = range / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double mult : {1.0, 2.0, 5.0}) {
    if (raw <= mult * mag * (1.0 + 1e-12)) return mult * mag;
  }
  return 10.0 * mag;
}

struct Frame {
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;      // data window
  double px0 = 0, px1 = 1, py0 = 0, py1 = 1;  // pixel box, py0 = top edge
  double px(double x) const { return px0 + (x - x0) / (x1 - x0) * (px1 - px0); }
  double py(double y) const { return py1 - (y - y0) / (y1 - y0) * (py1 - py0); }
};

std::ofstream open_svg(const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("svg: cannot open " + path + " for writing");
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
     << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  return os;
}

void close_svg(std::ofstream& os, const std::string& path) {
  os << "</svg>\n";
  os.flush();
  if (!os.good()) throw IoError("svg: failed writing " + path);
}

void draw_title(std::ofstream& os, const std::string& title) {
  os << "<text x=\"" << kWidth / 2
     << "\" y=\"24\" font-family=\"monospace\" font-size=\"16\" text-anchor=\"middle\">" << title
     << "</text>\n";
}

void draw_frame_box(std::ofstream& os, const Frame& f) {
  os << "<rect x=\"" << fmt(f.px0) << "\" y=\"" << fmt(f.py0) << "\" width=\""
     << fmt(f.px1 - f.px0) << "\" height=\"" << fmt(f.py1 - f.py0)
     << "\" fill=\"none\" stroke=\"#888888\"/>\n";
}

void draw_vertical_grid(std::ofstream& os, const Frame& f, double x, const std::string& label) {
  const double px = f.px(x);
  os << "<line x1=\"" << fmt(px) << "\" y1=\"" << fmt(f.py0) << "\" x2=\"" << fmt(px)
     << "\" y2=\"" << fmt(f.py1) << "\" stroke=\"#dddddd\"/>\n"
     << "<text x=\"" << fmt(px) << "\" y=\"" << fmt(f.py1 + 16)
     << "\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"middle\">" << label
     << "</text>\n";
}

void draw_horizontal_grid(std::ofstream& os, const Frame& f, double y, const std::string& label) {
  const double py = f.py(y);
  os << "<line x1=\"" << fmt(f.px0) << "\" y1=\"" << fmt(py) << "\" x2=\"" << fmt(f.px1)
     << "\" y2=\"" << fmt(py) << "\" stroke=\"#dddddd\"/>\n"
     << "<text x=\"" << fmt(f.px0 - 6) << "\" y=\"" << fmt(py + 4)
     << "\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"end\">" << label
     << "</text>\n";
}

void draw_series(std::ofstream& os, const Frame& f, const Series& s,
                 const std::vector<Vec2>& pts) {
  if (pts.empty()) return;
  os << (s.closed ? "<polygon" : "<polyline") << " points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) os << ' ';
    os << fmt(f.px(pts[i].x)) << ',' << fmt(f.py(pts[i].y));
  }
  os << "\" fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\"";
  if (s.dashed) os << " stroke-dasharray=\"6 4\"";
  os << "/>\n";
}

void draw_legend(std::ofstream& os, const std::vector<Series>& series) {
  std::size_t widest = 0;
  for (const Series& s : series) widest = std::max(widest, s.label.size());
  const double w = 46 + 7.5 * static_cast<double>(widest);
  const double h = 10 + 18.0 * static_cast<double>(series.size());
  const double x = kWidth - kRight - w - 8, y = kTop + 8;
  os << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(w) << "\" height=\""
     << fmt(h) << "\" fill=\"white\" stroke=\"#cccccc\"/>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double row = y + 18.0 * static_cast<double>(i) + 14;
    os << "<line x1=\"" << fmt(x + 8) << "\" y1=\"" << fmt(row - 4) << "\" x2=\"" << fmt(x + 32)
       << "\" y2=\"" << fmt(row - 4) << "\" stroke=\"" << series[i].color
       << "\" stroke-width=\"2\"";
    if (series[i].dashed) os << " stroke-dasharray=\"6 4\"";
    os << "/>\n<text x=\"" << fmt(x + 38) << "\" y=\"" << fmt(row)
       << "\" font-family=\"monospace\" font-size=\"12\">" << series[i].label << "</text>\n";
  }
}

}  // namespace

void write_overlay(const std::string& path, const std::string& title,
                   const std::vector<Series>& series) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const Series& s : series)
    for (const Vec2& p : s.points) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
  if (!(xmin <= xmax)) throw ConfigError("svg: overlay needs at least one point");

  // Square data window and square pixel box give exact equal aspect.
  const double cx = (xmin + xmax) / 2, cy = (ymin + ymax) / 2;
  double half = std::max({xmax - xmin, ymax - ymin, 1e-9}) / 2 * 1.1;
  const double side = std::min(kWidth - kLeft - kRight, kHeight - kTop - kBottom);
  Frame f;
  f.x0 = cx - half;
  f.x1 = cx + half;
  f.y0 = cy - half;
  f.y1 = cy + half;
  f.px0 = kLeft + (kWidth - kLeft - kRight - side) / 2;
  f.px1 = f.px0 + side;
  f.py0 = kTop + (kHeight - kTop - kBottom - side) / 2;
  f.py1 = f.py0 + side;

  std::ofstream os = open_svg(path);
  draw_title(os, title);
  const double step = nice_step(2 * half);
  for (double x = std::ceil(f.x0 / step) * step; x <= f.x1 + 1e-12; x += step)
    draw_vertical_grid(os, f, x, fmt(std::abs(x) < step * 1e-9 ? 0.0 : x));
  for (double y = std::ceil(f.y0 / step) * step; y <= f.y1 + 1e-12; y += step)
    draw_horizontal_grid(os, f, y, fmt(std::abs(y) < step * 1e-9 ? 0.0 : y));
  draw_frame_box(os, f);
  for (const Series& s : series) draw_series(os, f, s, s.points);
  draw_legend(os, series);
  close_svg(os, path);
}

void write_loss_curves(const std::string& path, const std::vector<EpochStats>& history) {
  if (history.empty()) throw ConfigError("svg: loss plot needs at least one epoch");
  struct Channel {
    Series meta;
    std::vector<Vec2> pts;  // (epoch, log10 value), positive values only
  };
  std::vector<Channel> channels{{{"l_ddm", "#000000", {}, false, false}, {}},
                                {{"l_phy", "#1f77b4", {}, false, false}, {}},
                                {{"l_dc", "#ff7f0e", {}, false, false}, {}},
                                {{"err", "#2ca02c", {}, false, true}, {}}};
  for (std::size_t e = 0; e < history.size(); ++e) {
    const double vals[4] = {history[e].l_ddm, history[e].l_phy, history[e].l_dc, history[e].err};
    for (int c = 0; c < 4; ++c)
      if (vals[c] > 0.0)
        channels[c].pts.push_back({static_cast<double>(e + 1), std::log10(vals[c])});
  }
  std::erase_if(channels, [](const Channel& c) { return c.pts.empty(); });
  if (channels.empty()) throw ConfigError("svg: loss plot needs a positive value");

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const Channel& c : channels)
    for (const Vec2& p : c.pts) {
      lo = std::min(lo, p.y);
      hi = std::max(hi, p.y);
    }
  Frame f;
  f.x0 = 1.0;
  f.x1 = std::max(2.0, static_cast<double>(history.size()));
  f.y0 = std::floor(lo);
  f.y1 = std::ceil(hi);
  if (f.y1 - f.y0 < 1.0) f.y1 = f.y0 + 1.0;
  f.px0 = kLeft;
  f.px1 = kWidth - kRight;
  f.py0 = kTop;
  f.py1 = kHeight - kBottom;

  std::ofstream os = open_svg(path);
  draw_title(os, "training history");
  const double xstep = std::max(1.0, std::floor(nice_step(f.x1 - f.x0)));
  for (double x = std::ceil(f.x0 / xstep) * xstep; x <= f.x1 + 1e-9; x += xstep)
    draw_vertical_grid(os, f, x, fmt(x));
  const int decade_step = std::max(1, static_cast<int>(std::ceil((f.y1 - f.y0) / 6.0)));
  for (int d = static_cast<int>(f.y0); d <= static_cast<int>(f.y1); d += decade_step)
    draw_horizontal_grid(os, f, d, "1e" + std::to_string(d));
  os << "<text x=\"" << fmt((f.px0 + f.px1) / 2) << "\" y=\"" << fmt(kHeight - 12)
     << "\" font-family=\"monospace\" font-size=\"13\" text-anchor=\"middle\">epoch</text>\n";
  draw_frame_box(os, f);
  std::vector<Series> legend;
  for (const Channel& c : channels) {
    draw_series(os, f, c.meta, c.pts);
    legend.push_back(c.meta);
  }
  draw_legend(os, legend);
  close_svg(os, path);
}

}  // namespace ddm::svg
