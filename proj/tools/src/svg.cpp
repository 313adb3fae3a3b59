#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace gclab {

namespace {

constexpr double kSize = 512.0;
constexpr double kPad = 16.0;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string header(double w, double h) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
         fmt(w) + "\" height=\"" + fmt(h) + "\" viewBox=\"0 0 " + fmt(w) + " " + fmt(h) + "\">\n" +
         "<rect x=\"0\" y=\"0\" width=\"" + fmt(w) + "\" height=\"" + fmt(h) + "\" fill=\"white\"/>\n";
}

struct Frame {
  double scale;
  double x0, y0;
  double ox, oy;
  double height;
  double px(double x) const { return ox + (x - x0) * scale; }
  double py(double y) const { return height - oy - (y - y0) * scale; }
};

Frame frame_of(const gcl::Grid& grid) {
  const gcl::Domain& d = grid.domain();
  const double s = (kSize - 2 * kPad) / std::max(d.width(), d.height());
  return {s, d.lower().x(), d.lower().y(), kPad, kPad, d.height() * s + 2 * kPad};
}

std::string canvas(const gcl::Grid& grid, const Frame& f) {
  return header(grid.domain().width() * f.scale + 2 * kPad, f.height);
}

std::string cells(const gcl::Grid& grid, const Frame& f, const gcl::CellMask& mask, const char* color,
                  const char* opacity) {
  std::string out;
  const double h = grid.h();
  for (std::size_t c = 0; c < mask.size(); ++c) {
    if (!mask[c]) continue;
    const gcl::Vec2 ctr = grid.cell_center(c);
    out += "<rect x=\"" + fmt(f.px(ctr.x() - h / 2)) + "\" y=\"" + fmt(f.py(ctr.y() + h / 2)) + "\" width=\"" +
           fmt(h * f.scale) + "\" height=\"" + fmt(h * f.scale) + "\" fill=\"" + color + "\" fill-opacity=\"" +
           opacity + "\"/>\n";
  }
  return out;
}

std::string outline(const gcl::Grid& grid, const Frame& f) {
  std::string pts;
  for (const auto& v : grid.domain().vertices()) pts += fmt(f.px(v.x())) + "," + fmt(f.py(v.y())) + " ";
  return "<polygon points=\"" + pts + "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
}

std::string segment(const Frame& f, const gcl::BoundarySegment& s, const char* color, double width) {
  return "<line x1=\"" + fmt(f.px(s.a.x())) + "\" y1=\"" + fmt(f.py(s.a.y())) + "\" x2=\"" + fmt(f.px(s.b.x())) +
         "\" y2=\"" + fmt(f.py(s.b.y())) + "\" stroke=\"" + color + "\" stroke-width=\"" + fmt(width) + "\"/>\n";
}

std::string palette(double t) {
  // t in [-1, 1]: blue - white - red.
  t = std::clamp(t, -1.0, 1.0);
  int r = 255, g = 255, b = 255;
  if (t < 0) {
    r = static_cast<int>(std::lround(255 * (1 + t)));
    g = r;
  } else {
    g = static_cast<int>(std::lround(255 * (1 - t)));
    b = g;
  }
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace

std::string svg_region(const gcl::Grid& grid, const gcl::CellMask& omega, const gcl::CellMask* V,
                       const gcl::SegmentMask* gamma1, const gcl::SegmentMask& omega_trace) {
  const Frame f = frame_of(grid);
  std::string out = canvas(grid, f);
  if (V != nullptr) out += cells(grid, f, *V, "#8fd18f", "0.35");
  out += cells(grid, f, omega, "#f0a030", "0.9");
  out += outline(grid, f);
  const auto& segs = grid.boundary_segments();
  for (std::size_t s = 0; s < segs.size(); ++s) {
    if (gamma1 != nullptr) out += segment(f, segs[s], (*gamma1)[s] ? "#d62728" : "#1f77b4", 2.0);
    if (omega_trace[s]) out += segment(f, segs[s], "#f0a030", 5.0);
  }
  return out + "</svg>\n";
}

std::string svg_rays(const gcl::Grid& grid, const gcl::CellMask& omega,
                     const std::vector<std::vector<gcl::Vec2>>& paths) {
  const Frame f = frame_of(grid);
  std::string out = canvas(grid, f);
  out += cells(grid, f, omega, "#f0a030", "0.6");
  out += outline(grid, f);
  for (const auto& p : paths) {
    std::string pts;
    for (const auto& x : p) pts += fmt(f.px(x.x())) + "," + fmt(f.py(x.y())) + " ";
    out += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\"/>\n";
  }
  return out + "</svg>\n";
}

std::string svg_heatmap(const gcl::Grid& grid, const std::vector<double>& nodal) {
  const Frame f = frame_of(grid);
  std::string out = canvas(grid, f);
  double amax = 0.0;
  for (double v : nodal) amax = std::max(amax, std::abs(v));
  if (amax == 0.0) amax = 1.0;
  const double h = grid.h();
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    if (!grid.cell_inside(c)) continue;
    const int i = grid.cell_i(c);
    const int j = grid.cell_j(c);
    const double avg = 0.25 * (nodal[grid.node(i, j)] + nodal[grid.node(i + 1, j)] + nodal[grid.node(i, j + 1)] +
                               nodal[grid.node(i + 1, j + 1)]);
    const gcl::Vec2 ctr = grid.cell_center(c);
    out += "<rect x=\"" + fmt(f.px(ctr.x() - h / 2)) + "\" y=\"" + fmt(f.py(ctr.y() + h / 2)) + "\" width=\"" +
           fmt(h * f.scale) + "\" height=\"" + fmt(h * f.scale) + "\" fill=\"" + palette(avg / amax) + "\"/>\n";
  }
  out += outline(grid, f);
  return out + "</svg>\n";
}

namespace {

std::string chart(const std::vector<Series>& series, const std::string& title, bool log_y, bool points) {
  const double W = 640, H = 400, L = 60, R = 20, T = 30, B = 40;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  auto ty = [&](double y) { return log_y ? std::log10(y) : y; };
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (log_y && !(s.y[i] > 0)) continue;
      if (!std::isfinite(s.y[i])) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, ty(s.y[i]));
      ymax = std::max(ymax, ty(s.y[i]));
    }
  }
  if (!(xmax > xmin)) { xmin = 0; xmax = 1; }
  if (!(ymax > ymin)) { ymin -= 1; ymax += 1; }
  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return H - B - (ty(y) - ymin) / (ymax - ymin) * (H - T - B); };
  std::string out = header(W, H);
  out += "<text x=\"" + fmt(W / 2) + "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" +
         title + "</text>\n";
  out += "<rect x=\"" + fmt(L) + "\" y=\"" + fmt(T) + "\" width=\"" + fmt(W - L - R) + "\" height=\"" +
         fmt(H - T - B) + "\" fill=\"none\" stroke=\"black\"/>\n";
  const auto label = [&](double x, double y, const std::string& s, const char* anchor) {
    return "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" text-anchor=\"" + anchor +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + s + "</text>\n";
  };
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", xmin);
  out += label(L, H - B + 15, buf, "start");
  std::snprintf(buf, sizeof buf, "%.4g", xmax);
  out += label(W - R, H - B + 15, buf, "end");
  std::snprintf(buf, sizeof buf, log_y ? "1e%.2g" : "%.4g", ymin);
  out += label(L - 4, H - B, buf, "end");
  std::snprintf(buf, sizeof buf, log_y ? "1e%.2g" : "%.4g", ymax);
  out += label(L - 4, T + 10, buf, "end");
  double ly = T + 15;
  for (const auto& s : series) {
    const std::string color = s.color.empty() ? "#1f77b4" : s.color;
    if (points) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if ((log_y && !(s.y[i] > 0)) || !std::isfinite(s.y[i])) continue;
        out += "<circle cx=\"" + fmt(px(s.x[i])) + "\" cy=\"" + fmt(py(s.y[i])) + "\" r=\"2.5\" fill=\"" + color +
               "\"/>\n";
      }
    } else {
      std::string pts;
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if ((log_y && !(s.y[i] > 0)) || !std::isfinite(s.y[i])) continue;
        pts += fmt(px(s.x[i])) + "," + fmt(py(s.y[i])) + " ";
      }
      out += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.2\"/>\n";
    }
    if (!s.name.empty()) {
      out += "<text x=\"" + fmt(W - R - 6) + "\" y=\"" + fmt(ly) + "\" text-anchor=\"end\" font-family=\"sans-serif\" "
             "font-size=\"11\" fill=\"" + color + "\">" + s.name + "</text>\n";
      ly += 14;
    }
  }
  return out + "</svg>\n";
}

}  // namespace

std::string svg_lines(const std::vector<Series>& series, const std::string& title, bool log_y) {
  return chart(series, title, log_y, false);
}

std::string svg_scatter(const std::vector<double>& values, const std::string& title, bool log_y) {
  Series s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    s.x.push_back(static_cast<double>(i));
    s.y.push_back(values[i]);
  }
  return chart({s}, title, log_y, true);
}

}  // namespace gclab
