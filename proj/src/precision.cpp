#include "pabs/precision.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pabs/error.hpp"

namespace pabs {

std::optional<double> PrecisionMap::mean_score() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& c : cells)
    if (auto s = c.score()) sum += *s, ++n;
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

PrecisionMap evaluate(const Abstraction& abst, const Dataset& test) {
  if (test.samples.empty()) throw ConfigError("evaluate: empty test set");
  const Partition part(abst.scenario.partition);
  PrecisionMap map;
  map.n_y = part.spec().n_y;
  map.n_theta = part.spec().n_theta;
  for (const auto& c : part.cells()) map.cells.push_back({c.iy, c.itheta, 0, 0});
  for (const auto& s : test.samples) {
    const auto idx = part.locate_index(s.state);
    if (!idx) {
      ++map.outside_domain;
      continue;
    }
    const CellAbstraction& ca = abst.cells[*idx];
    CellScore& cs = map.cells[*idx];
    ++cs.total;
    const double r = ca.radius;
    if (std::isinf(r) || percept_distance(s.perceived, ca.map.apply(s.truth), abst.scenario.norm) < r) ++cs.positives;
  }
  return map;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// white (255,255,255) to dark green (0,100,0)
std::string ramp(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(255.0 * (1.0 - t)));
  const int g = static_cast<int>(std::lround(255.0 + (100.0 - 255.0) * t));
  const int b = r;
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace

std::string heatmap_svg(const PrecisionMap& map) {
  constexpr double cell = 40.0;
  constexpr double margin = 50.0;
  constexpr double legend_w = 20.0;
  const double grid_w = cell * map.n_y;
  const double grid_h = cell * map.n_theta;
  const double width = margin * 2 + grid_w + 80.0;
  const double height = margin * 2 + grid_h;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width) << "\" height=\"" << fmt(height)
     << "\" viewBox=\"0 0 " << fmt(width) << ' ' << fmt(height) << "\">\n";
  os << "<defs><pattern id=\"undefined\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\">"
        "<rect width=\"6\" height=\"6\" fill=\"#ffffff\"/>"
        "<path d=\"M0,6 L6,0\" stroke=\"#999999\" stroke-width=\"1\"/></pattern>\n";
  os << "<linearGradient id=\"ramp\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\">"
        "<stop offset=\"0\" stop-color=\"#ffffff\"/><stop offset=\"1\" stop-color=\"#006400\"/>"
        "</linearGradient></defs>\n";
  os << "<g id=\"cells\">\n";
  // y runs left to right, theta bottom to top
  for (const auto& c : map.cells) {
    const double x = margin + cell * c.iy;
    const double y = margin + grid_h - cell * (c.itheta + 1);
    const auto s = c.score();
    os << "<rect class=\"cell\" data-iy=\"" << c.iy << "\" data-itheta=\"" << c.itheta << "\" x=\"" << fmt(x)
       << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(cell) << "\" height=\"" << fmt(cell) << "\" fill=\""
       << (s ? ramp(*s) : std::string("url(#undefined)")) << "\" stroke=\"#cccccc\" stroke-width=\"0.5\"><title>"
       << c.positives << "/" << c.total << "</title></rect>\n";
  }
  os << "</g>\n";
  os << "<text x=\"" << fmt(margin + grid_w / 2) << "\" y=\"" << fmt(height - 15)
     << "\" font-size=\"14\" text-anchor=\"middle\">y</text>\n";
  os << "<text x=\"15\" y=\"" << fmt(margin + grid_h / 2)
     << "\" font-size=\"14\" text-anchor=\"middle\">&#952;</text>\n";
  const double lx = margin + grid_w + 25.0;
  os << "<g id=\"legend\"><rect x=\"" << fmt(lx) << "\" y=\"" << fmt(margin) << "\" width=\"" << fmt(legend_w)
     << "\" height=\"" << fmt(grid_h) << "\" fill=\"url(#ramp)\" stroke=\"#000000\" stroke-width=\"0.5\"/>\n";
  for (double t : {0.0, 0.5, 1.0}) {
    const double ty = margin + grid_h * (1.0 - t);
    os << "<text class=\"tick\" x=\"" << fmt(lx + legend_w + 5) << "\" y=\"" << fmt(ty + 4)
       << "\" font-size=\"11\">" << (t == 0.0 ? "0" : t == 0.5 ? "0.5" : "1.0") << "</text>\n";
  }
  os << "</g>\n</svg>\n";
  return os.str();
}

std::string heatmap_csv(const PrecisionMap& map) {
  std::ostringstream os;
  os << "iy,itheta,positives,total,score\n";
  for (const auto& c : map.cells) {
    os << c.iy << ',' << c.itheta << ',' << c.positives << ',' << c.total << ',';
    if (auto s = c.score()) os << fmt(*s);
    os << '\n';
  }
  return os.str();
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace

void render_heatmap(const PrecisionMap& map, const std::filesystem::path& svg_path,
                    const std::filesystem::path& csv_path) {
  write_text(svg_path, heatmap_svg(map));
  if (!csv_path.empty()) write_text(csv_path, heatmap_csv(map));
}

}  // namespace pabs
