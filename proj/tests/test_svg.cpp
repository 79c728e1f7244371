#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ddm/svg.hpp"
#include "doctest.h"

using namespace ddm;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name)
      : path((std::filesystem::temp_directory_path() / name).string()) {}
  ~TempFile() { std::remove(path.c_str()); }
};

std::string slurp(const std::string& path) {
  std::ifstream is(path);
  REQUIRE(is.good());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

int count(const std::string& hay, const std::string& needle) {
  int n = 0;
  for (std::size_t at = hay.find(needle); at != std::string::npos; at = hay.find(needle, at + 1))
    ++n;
  return n;
}

// Pixel coordinates of the first element carrying a points="..." attribute
// with the given stroke color.
std::vector<Vec2> first_points_of(const std::string& body, const std::string& color) {
  const std::size_t el = body.find("stroke=\"" + color + "\"");
  REQUIRE(el != std::string::npos);
  const std::size_t open = body.rfind("points=\"", el);
  REQUIRE(open != std::string::npos);
  const std::size_t begin = open + 8;
  const std::size_t end = body.find('"', begin);
  std::istringstream ss(body.substr(begin, end - begin));
  std::vector<Vec2> pts;
  std::string pair;
  while (ss >> pair) {
    Vec2 p;
    REQUIRE(std::sscanf(pair.c_str(), "%lf,%lf", &p.x, &p.y) == 2);
    pts.push_back(p);
  }
  return pts;
}

std::vector<Vec2> circle_points(double r, int n) {
  std::vector<Vec2> pts;
  for (int i = 0; i < n; ++i) {
    const double t = 2.0 * pi * i / n;
    pts.push_back({r * std::cos(t), r * std::sin(t)});
  }
  return pts;
}

}  // namespace

TEST_CASE("boundary overlays are equal-aspect closed polygons with a legend") {
  svg::Series exact{"exact", "#000000", circle_points(1.0, 64), true, false};
  svg::Series ddm{"ddm", "#d62728", circle_points(1.2, 64), true, true};
  TempFile file("ddm_test_overlay.svg");
  svg::write_overlay(file.path, "unit disk", {exact, ddm});

  const std::string body = slurp(file.path);
  CHECK(body.rfind("<svg ", 0) == 0);
  CHECK(count(body, "</svg>") == 1);
  CHECK(count(body, "<polygon ") == 2);
  CHECK(count(body, "stroke-dasharray") == 2);  // dashed curve + its legend swatch
  CHECK(body.find(">exact</text>") != std::string::npos);
  CHECK(body.find(">ddm</text>") != std::string::npos);
  CHECK(body.find("unit disk") != std::string::npos);

  // Equal aspect: the drawn radius-1.2 circle has the same pixel extent in x
  // and in y, and encloses the radius-1.0 one.
  std::vector<Vec2> outer = first_points_of(body, "#d62728");
  REQUIRE(outer.size() == 64);
  double xmin = 1e9, xmax = -1e9, ymin = 1e9, ymax = -1e9;
  for (const Vec2& p : outer) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  CHECK(std::abs((xmax - xmin) - (ymax - ymin)) <= 0.5);
  std::vector<Vec2> inner = first_points_of(body, "#000000");
  double ixmax = -1e9;
  for (const Vec2& p : inner) ixmax = std::max(ixmax, p.x);
  CHECK(ixmax < xmax);

  CHECK_THROWS_AS(svg::write_overlay(file.path, "empty", {}), ConfigError);
}

TEST_CASE("loss plots drop all-zero channels and write log-decade labels") {
  std::vector<EpochStats> history;
  for (int e = 0; e < 20; ++e) {
    const double decay = std::pow(10.0, -e / 10.0);
    history.push_back({decay, 0.9 * decay, 0.0, 0.5 * decay});  // full aperture: l_dc = 0
  }
  TempFile file("ddm_test_loss.svg");
  svg::write_loss_curves(file.path, history);

  const std::string body = slurp(file.path);
  CHECK(count(body, "<polyline ") == 3);  // l_dc dropped entirely
  CHECK(body.find(">l_dc</text>") == std::string::npos);
  CHECK(body.find(">l_ddm</text>") != std::string::npos);
  CHECK(body.find(">1e0</text>") != std::string::npos);
  CHECK(body.find(">1e-2</text>") != std::string::npos);
  CHECK(body.find(">epoch</text>") != std::string::npos);

  // The l_ddm polyline is monotone left-to-right and rises in pixel y
  // (losses fall).
  std::vector<Vec2> pts = first_points_of(body, "#000000");
  REQUIRE(pts.size() == 20);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    CHECK(pts[i].x > pts[i - 1].x);
    CHECK(pts[i].y > pts[i - 1].y);
  }

  // Byte-identical on rerun.
  TempFile again("ddm_test_loss2.svg");
  svg::write_loss_curves(again.path, history);
  CHECK(slurp(again.path) == body);

  CHECK_THROWS_AS(svg::write_loss_curves(file.path, {}), ConfigError);
  CHECK_THROWS_AS(svg::write_loss_curves(file.path, {EpochStats{0.0, 0.0, 0.0, 0.0}}),
                  ConfigError);
}
