#pragma once

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "floquet_ep/errors.hpp"
#include "floquet_ep/sweep.hpp"

namespace floquet_ep {

namespace render {

struct RGB {
  std::uint8_t r, g, b;
};

/// Dark-to-bright perceptual ramp (viridis anchors), t in [0, 1].
inline RGB colormap(double t) {
  static constexpr std::array<RGB, 9> kStops{{{68, 1, 84},
                                              {71, 44, 122},
                                              {59, 81, 139},
                                              {44, 113, 142},
                                              {33, 144, 141},
                                              {39, 173, 129},
                                              {92, 200, 99},
                                              {170, 220, 50},
                                              {253, 231, 37}}};
  if (!(t > 0.0)) return kStops.front();
  if (t >= 1.0) return kStops.back();
  const double x = t * (kStops.size() - 1);
  const auto k = static_cast<std::size_t>(x);
  const double u = x - static_cast<double>(k);
  auto mix = [u](std::uint8_t a, std::uint8_t b) {
    return static_cast<std::uint8_t>(std::lround(a + (static_cast<double>(b) - a) * u));
  };
  return {mix(kStops[k].r, kStops[k + 1].r), mix(kStops[k].g, kStops[k + 1].g), mix(kStops[k].b, kStops[k + 1].b)};
}

inline constexpr RGB kMissing{128, 128, 128};

inline std::string hex(RGB c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

inline std::string num(double v, int digits = 3) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  std::string s = buf;
  if (s.front() == '-' && s.find_first_not_of("0.", 1) == std::string::npos) s.erase(0, 1);
  return s;
}

inline std::string tick(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4g", std::abs(v) < 1e-14 ? 0.0 : v);
  return buf;
}

inline std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string base64(const std::vector<std::uint8_t>& data) {
  static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  for (std::size_t i = 0; i < data.size(); i += 3) {
    const std::uint32_t n = (std::uint32_t{data[i]} << 16) | (i + 1 < data.size() ? std::uint32_t{data[i + 1]} << 8 : 0u) |
                            (i + 2 < data.size() ? std::uint32_t{data[i + 2]} : 0u);
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += i + 1 < data.size() ? kAlphabet[(n >> 6) & 63] : '=';
    out += i + 2 < data.size() ? kAlphabet[n & 63] : '=';
  }
  return out;
}

/// RGB8 PNG of a width x height image stored top row first.
inline std::vector<std::uint8_t> encode_png(int width, int height, const std::vector<RGB>& pixels) {
  if (width <= 0 || height <= 0 || pixels.size() != static_cast<std::size_t>(width) * height)
    throw Error("encode_png: pixel count does not match the size");
  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<std::size_t>(height) * (3 * width + 1));
  for (int y = 0; y < height; ++y) {
    raw.push_back(0);  // filter: none
    for (int x = 0; x < width; ++x) {
      const RGB& p = pixels[static_cast<std::size_t>(y) * width + x];
      raw.insert(raw.end(), {p.r, p.g, p.b});
    }
  }
  uLongf zlen = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> z(zlen);
  if (compress2(z.data(), &zlen, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK)
    throw Error("encode_png: zlib compression failed");
  z.resize(zlen);

  std::vector<std::uint8_t> png{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  auto be32 = [&png](std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) png.push_back(static_cast<std::uint8_t>(v >> s));
  };
  auto chunk = [&](const char* type, const std::vector<std::uint8_t>& body) {
    be32(static_cast<std::uint32_t>(body.size()));
    const std::size_t start = png.size();
    png.insert(png.end(), type, type + 4);
    png.insert(png.end(), body.begin(), body.end());
    be32(static_cast<std::uint32_t>(crc32(0L, png.data() + start, static_cast<uInt>(png.size() - start))));
  };
  std::vector<std::uint8_t> ihdr;
  for (std::uint32_t v : {static_cast<std::uint32_t>(width), static_cast<std::uint32_t>(height)})
    for (int s = 24; s >= 0; s -= 8) ihdr.push_back(static_cast<std::uint8_t>(v >> s));
  ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});  // 8-bit RGB, deflate, no filter, no interlace
  chunk("IHDR", ihdr);
  chunk("IDAT", z);
  chunk("IEND", {});
  return png;
}

/// Plot frame: data rectangle with linear axes.
struct Frame {
  double left = 70, top = 40, width = 560, height = 420;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;

  [[nodiscard]] double px(double x) const { return left + (x1 == x0 ? 0.5 : (x - x0) / (x1 - x0)) * width; }
  [[nodiscard]] double py(double y) const { return top + height - (y1 == y0 ? 0.5 : (y - y0) / (y1 - y0)) * height; }
};

inline std::string svg_open(double w, double h) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w, 0) +
         "\" height=\"" + num(h, 0) + "\" viewBox=\"0 0 " + num(w, 0) + " " + num(h, 0) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
}

inline std::string axes(const Frame& f, const std::string& xlabel, const std::string& ylabel, const std::string& title,
                        int ticks = 5) {
  std::string s = "<rect x=\"" + num(f.left) + "\" y=\"" + num(f.top) + "\" width=\"" + num(f.width) + "\" height=\"" +
                  num(f.height) + "\" fill=\"none\" stroke=\"#000000\"/>\n";
  for (int k = 0; k <= ticks; ++k) {
    const double xv = f.x0 + (f.x1 - f.x0) * k / ticks, yv = f.y0 + (f.y1 - f.y0) * k / ticks;
    const double x = f.px(xv), y = f.py(yv), bottom = f.top + f.height;
    s += "<line x1=\"" + num(x) + "\" y1=\"" + num(bottom) + "\" x2=\"" + num(x) + "\" y2=\"" + num(bottom + 5) +
         "\" stroke=\"#000000\"/>\n";
    s += "<text x=\"" + num(x) + "\" y=\"" + num(bottom + 18) + "\" text-anchor=\"middle\">" + tick(xv) + "</text>\n";
    s += "<line x1=\"" + num(f.left - 5) + "\" y1=\"" + num(y) + "\" x2=\"" + num(f.left) + "\" y2=\"" + num(y) +
         "\" stroke=\"#000000\"/>\n";
    s += "<text x=\"" + num(f.left - 8) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">" + tick(yv) + "</text>\n";
  }
  s += "<text x=\"" + num(f.left + f.width / 2) + "\" y=\"" + num(f.top + f.height + 38) +
       "\" text-anchor=\"middle\" font-size=\"14\">" + escape(xlabel) + "</text>\n";
  s += "<text x=\"" + num(f.left - 48) + "\" y=\"" + num(f.top + f.height / 2) +
       "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 " + num(f.left - 48) + " " +
       num(f.top + f.height / 2) + ")\">" + escape(ylabel) + "</text>\n";
  s += "<text x=\"" + num(f.left + f.width / 2) + "\" y=\"" + num(f.top - 14) +
       "\" text-anchor=\"middle\" font-size=\"14\">" + escape(title) + "</text>\n";
  return s;
}

inline std::string contour_paths(const Frame& f, const EPContourSet& set) {
  std::string s;
  for (const auto& c : set.contours) {
    const bool ep = c.kind == DegeneracyKind::EP;
    const std::string color = ep ? "#ff3030" : "#ffffff";
    if (c.points.size() == 1) {
      s += "<circle cx=\"" + num(f.px(c.points[0].omega)) + "\" cy=\"" + num(f.py(c.points[0].gamma)) +
           "\" r=\"2\" fill=\"" + color + "\"/>\n";
      continue;
    }
    s += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\"" +
         (ep ? "" : " stroke-dasharray=\"3 2\"") + " points=\"";
    for (std::size_t k = 0; k < c.points.size(); ++k)
      s += (k ? " " : "") + num(f.px(c.points[k].omega)) + "," + num(f.py(c.points[k].gamma));
    s += "\"/>\n";
  }
  return s;
}

}  // namespace render

inline constexpr int kRectHeatmapLimit = 200;

/**
 * @brief SVG heatmap of max Im eps over (omega, gamma): omega on x, gamma on y,
 * linear ramp from 0 (dark) to the largest finite value; NaN cells grey.
 * Grids up to 200x200 are drawn as rects, larger ones as an embedded PNG.
 */
inline std::string heatmap_svg(const PhaseDiagram& d, const EPContourSet* overlay = nullptr) {
  using namespace render;
  const auto& g = d.grid;
  Frame f;
  f.x0 = g.omega_min;
  f.x1 = g.omega_max;
  f.y0 = g.gamma_min;
  f.y1 = g.gamma_max;
  double vmax = 0.0;
  for (double v : d.values)
    if (std::isfinite(v)) vmax = std::max(vmax, v);
  auto color = [&](double v) { return std::isnan(v) ? kMissing : colormap(vmax > 0 ? v / vmax : 0.0); };

  std::string s = svg_open(760, 520);
  const double cw = f.width / g.omega_count, ch = f.height / g.gamma_count;
  if (g.omega_count <= kRectHeatmapLimit && g.gamma_count <= kRectHeatmapLimit) {
    s += "<g shape-rendering=\"crispEdges\">\n";
    for (int j = 0; j < g.omega_count; ++j)
      for (int i = 0; i < g.gamma_count; ++i)
        s += "<rect x=\"" + num(f.left + j * cw) + "\" y=\"" + num(f.top + f.height - (i + 1) * ch) + "\" width=\"" +
             num(cw) + "\" height=\"" + num(ch) + "\" fill=\"" + hex(color(d.at(j, i))) + "\"/>\n";
    s += "</g>\n";
  } else {
    std::vector<RGB> px(g.size());
    for (int i = 0; i < g.gamma_count; ++i)
      for (int j = 0; j < g.omega_count; ++j)
        px[static_cast<std::size_t>(g.gamma_count - 1 - i) * g.omega_count + j] = color(d.at(j, i));
    s += "<image x=\"" + num(f.left) + "\" y=\"" + num(f.top) + "\" width=\"" + num(f.width) + "\" height=\"" +
         num(f.height) + "\" preserveAspectRatio=\"none\" style=\"image-rendering:pixelated\" href=\"data:image/png;base64," +
         base64(encode_png(g.omega_count, g.gamma_count, px)) + "\"/>\n";
  }
  if (overlay) {
    s += "<clipPath id=\"plot\"><rect x=\"" + num(f.left) + "\" y=\"" + num(f.top) + "\" width=\"" + num(f.width) +
         "\" height=\"" + num(f.height) + "\"/></clipPath>\n<g clip-path=\"url(#plot)\">\n" +
         contour_paths(f, *overlay) + "</g>\n";
  }
  s += axes(f, "omega", "gamma", d.model.name + " beta=" + std::to_string(d.model.beta) + " : max Im eps");

  // colorbar
  const double bx = f.left + f.width + 30, bw = 16;
  constexpr int kBands = 64;
  for (int k = 0; k < kBands; ++k)
    s += "<rect x=\"" + num(bx) + "\" y=\"" + num(f.top + f.height * (kBands - 1 - k) / kBands) + "\" width=\"" +
         num(bw) + "\" height=\"" + num(f.height / kBands + 0.5) + "\" fill=\"" + hex(colormap((k + 0.5) / kBands)) +
         "\"/>\n";
  s += "<rect x=\"" + num(bx) + "\" y=\"" + num(f.top) + "\" width=\"" + num(bw) + "\" height=\"" + num(f.height) +
       "\" fill=\"none\" stroke=\"#000000\"/>\n";
  s += "<text x=\"" + num(bx + bw + 4) + "\" y=\"" + num(f.top + 4) + "\">" + tick(vmax) + "</text>\n";
  s += "<text x=\"" + num(bx + bw + 4) + "\" y=\"" + num(f.top + f.height + 4) + "\">0</text>\n";
  s += "</svg>\n";
  return s;
}

/// EP contours alone on the grid's (omega, gamma) frame; EP solid red, Diabolic dashed.
inline std::string contours_svg(const EPContourSet& set, const ModelTemplate& model, const GridSpec& g) {
  using namespace render;
  Frame f;
  f.x0 = g.omega_min;
  f.x1 = g.omega_max;
  f.y0 = g.gamma_min;
  f.y1 = g.gamma_max;
  std::string s = svg_open(700, 520);
  s += "<rect x=\"" + num(f.left) + "\" y=\"" + num(f.top) + "\" width=\"" + num(f.width) + "\" height=\"" +
       num(f.height) + "\" fill=\"#202040\"/>\n";
  s += contour_paths(f, set);
  s += axes(f, "omega", "gamma", model.name + " beta=" + std::to_string(model.beta) + " : EP contours");
  s += "</svg>\n";
  return s;
}

/// Re theta and Im theta against gamma, one polyline per band.
inline std::string berry_svg(const BerryCurve& c) {
  using namespace render;
  static constexpr std::array<const char*, 2> kBandColor{"#1f77b4", "#d62728"};
  double gmin = INFINITY, gmax = -INFINITY;
  std::array<double, 2> lo{-std::numbers::pi, -0.1}, hi{std::numbers::pi, 0.1};
  auto plotted = [](const BerryRow& r) { return r.flags.find("uncertified") == std::string::npos; };
  for (const auto& r : c.rows) {
    gmin = std::min(gmin, r.gamma);
    gmax = std::max(gmax, r.gamma);
    if (!plotted(r)) continue;
    const std::array<double, 2> v{r.theta.real(), r.theta.imag()};
    for (int p = 0; p < 2; ++p)
      if (std::isfinite(v[p])) {
        lo[p] = std::min(lo[p], v[p]);
        hi[p] = std::max(hi[p], v[p]);
      }
  }
  if (c.rows.empty()) gmin = 0, gmax = 1;
  std::string s = svg_open(700, 860);
  const std::array<const char*, 2> label{"Re theta", "Im theta"};
  for (int p = 0; p < 2; ++p) {
    Frame f;
    f.top = 40 + p * 420;
    f.height = 340;
    f.x0 = gmin;
    f.x1 = gmax;
    f.y0 = lo[p];
    f.y1 = hi[p];
    for (int band = 0; band < 2; ++band) {
      // uncertified rows (EP on the loop) split the curve
      std::string pts;
      auto flush = [&] {
        if (!pts.empty())
          s += std::string("<polyline fill=\"none\" stroke=\"") + kBandColor[band] +
               "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
        pts.clear();
      };
      for (const auto& r : c.rows) {
        if (r.band != band) continue;
        const double v = p == 0 ? r.theta.real() : r.theta.imag();
        if (!plotted(r) || !std::isfinite(v)) {
          flush();
          continue;
        }
        pts += (pts.empty() ? "" : " ") + num(f.px(r.gamma)) + "," + num(f.py(v));
      }
      flush();
    }
    s += axes(f, "gamma", label[p], p == 0 ? c.model.name + " beta=" + std::to_string(c.model.beta) + " : Berry phase" : "");
  }
  s += "</svg>\n";
  return s;
}

}  // namespace floquet_ep
