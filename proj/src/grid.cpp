#include "specpart/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "specpart/constants.hpp"
#include "specpart/errors.hpp"

namespace specpart {

double DyadicCube::side() const { return std::ldexp(1.0, -level); }

double DyadicCover::cube_area() const {
  const double s = std::ldexp(1.0, -level);
  return s * s;
}

ShapeSpec ShapeSpec::unit_square() { return ShapeSpec{}; }

ShapeSpec ShapeSpec::disk(double area) {
  ShapeSpec s;
  s.kind = ShapeKind::Disk;
  s.area = area;
  return s;
}

ShapeSpec ShapeSpec::regular_hexagon(double area) {
  ShapeSpec s;
  s.kind = ShapeKind::RegularHexagon;
  s.area = area;
  return s;
}

ShapeSpec ShapeSpec::rectangle(double a, double b) {
  ShapeSpec s;
  s.kind = ShapeKind::Rectangle;
  s.a = a;
  s.b = b;
  s.area = a * b;
  return s;
}

ShapeSpec ShapeSpec::polygon(std::vector<Point> vertices, double area) {
  ShapeSpec s;
  s.kind = ShapeKind::Polygon;
  s.vertices = std::move(vertices);
  s.area = area;
  return s;
}

ShapeSpec ShapeSpec::cube_union(DyadicCover cover) {
  ShapeSpec s;
  s.kind = ShapeKind::CubeUnion;
  s.area = cover.inner_area();
  s.cover = std::make_shared<const DyadicCover>(std::move(cover));
  return s;
}

namespace {

std::string fmt_num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

double signed_area(const std::vector<Point>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Point& p = v[i];
    const Point& q = v[(i + 1) % v.size()];
    s += p.x * q.y - q.x * p.y;
  }
  return 0.5 * s;
}

Point centroid(const std::vector<Point>& v) {
  const double a = signed_area(v);
  double cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Point& p = v[i];
    const Point& q = v[(i + 1) % v.size()];
    const double c = p.x * q.y - q.x * p.y;
    cx += (p.x + q.x) * c;
    cy += (p.y + q.y) * c;
  }
  return {cx / (6.0 * a), cy / (6.0 * a)};
}

double orient(Point a, Point b, Point c) { return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x); }

bool on_segment(Point a, Point b, Point p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

bool segments_intersect(Point a, Point b, Point c, Point d) {
  const double o1 = orient(a, b, c), o2 = orient(a, b, d);
  const double o3 = orient(c, d, a), o4 = orient(c, d, b);
  if (((o1 > 0 && o2 < 0) || (o1 < 0 && o2 > 0)) && ((o3 > 0 && o4 < 0) || (o3 < 0 && o4 > 0))) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

bool is_simple(const std::vector<Point>& v) {
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      // adjacent edges share a vertex
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n])) return false;
    }
  }
  return true;
}

bool point_in_polygon(const std::vector<Point>& v, double x, double y) {
  bool in = false;
  const std::size_t n = v.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    if ((v[i].y > y) != (v[j].y > y)) {
      const double xc = v[j].x + (y - v[j].y) * (v[i].x - v[j].x) / (v[i].y - v[j].y);
      if (x < xc) in = !in;
    }
  }
  return in;
}

std::vector<Point> hexagon_vertices(double area) {
  // flat-top: vertices at angles 0, 60, ..., 300 degrees
  const double R = std::sqrt(2.0 * area / (3.0 * std::sqrt(3.0)));
  std::vector<Point> v;
  for (int k = 0; k < 6; ++k) {
    const double t = kPi / 3.0 * k;
    v.push_back({0.5 + R * std::cos(t), 0.5 + R * std::sin(t)});
  }
  return v;
}

struct Box {
  double x0, y0, x1, y1;
};

}  // namespace

std::string ShapeSpec::tag() const {
  switch (kind) {
    case ShapeKind::UnitSquare: return "unit_square";
    case ShapeKind::Disk: return "disk(" + fmt_num(area) + ")";
    case ShapeKind::RegularHexagon: return "hexagon(" + fmt_num(area) + ")";
    case ShapeKind::Rectangle: return "rectangle(" + fmt_num(a) + "x" + fmt_num(b) + ")";
    case ShapeKind::Polygon: return "polygon(" + std::to_string(vertices.size()) + ")";
    case ShapeKind::CubeUnion:
      return "cube_union(level=" + std::to_string(cover ? cover->level : 0) + ",k=" +
             std::to_string(cover ? cover->k() : 0) + ")";
  }
  return "unknown";
}

double ShapeSpec::exact_area() const {
  switch (kind) {
    case ShapeKind::UnitSquare: return 1.0;
    case ShapeKind::Rectangle: return a * b;
    case ShapeKind::Polygon: return area > 0.0 ? area : std::abs(signed_area(vertices));
    case ShapeKind::CubeUnion: return cover ? cover->inner_area() : 0.0;
    default: return area;
  }
}

GridDomain::GridDomain(int width, int height, double h, Point origin, std::vector<std::uint8_t> inside,
                       std::string shape_tag)
    : width_(width), height_(height), h_(h), origin_(origin), inside_(std::move(inside)),
      shape_tag_(std::move(shape_tag)) {
  if (width_ < 2 || height_ < 2) throw InvalidInput("grid must be at least 2x2 cells");
  if (!(h_ > 0.0)) throw InvalidInput("cell size must be positive");
  if (inside_.size() != static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_))
    throw InvalidInput("inside mask size does not match grid dimensions");
  inside_count_ = static_cast<std::size_t>(std::count_if(inside_.begin(), inside_.end(), [](auto c) { return c != 0; }));
  if (inside_count_ == 0) throw InvalidInput("domain has no inside cells");
  std::ostringstream os;
  os << shape_tag_ << "@" << width_ << "x" << height_ << "/h=" << h_;
  id_ = os.str();
}

long GridDomain::first_col() const { return std::lround(origin_.x / h_ - 0.5); }
long GridDomain::first_row() const { return std::lround(origin_.y / h_ - 0.5); }

std::size_t SubdomainMask::count() const {
  return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](auto c) { return c != 0; }));
}

GridDomain build_domain(const ShapeSpec& shape, int resolution) {
  if (resolution < 32) throw InvalidInput("resolution must be >= 32 cells per unit length");
  const double h = 1.0 / resolution;

  std::vector<Point> poly;
  Box box{};
  double cx = 0.5, cy = 0.5, radius = 0.0;
  switch (shape.kind) {
    case ShapeKind::UnitSquare: box = {0.0, 0.0, 1.0, 1.0}; break;
    case ShapeKind::Rectangle:
      if (!(shape.a > 0.0) || !(shape.b > 0.0)) throw InvalidInput("rectangle sides must be positive");
      box = {0.0, 0.0, shape.a, shape.b};
      break;
    case ShapeKind::Disk:
      if (!(shape.area > 0.0)) throw InvalidInput("disk area must be positive");
      radius = std::sqrt(shape.area / kPi);
      box = {cx - radius, cy - radius, cx + radius, cy + radius};
      break;
    case ShapeKind::RegularHexagon:
      if (!(shape.area > 0.0)) throw InvalidInput("hexagon area must be positive");
      poly = hexagon_vertices(shape.area);
      break;
    case ShapeKind::Polygon: {
      if (shape.vertices.size() < 3) throw InvalidInput("polygon needs at least 3 vertices");
      const double a = signed_area(shape.vertices);
      if (!(std::abs(a) > 0.0) || !std::isfinite(a)) throw InvalidInput("degenerate polygon: zero area");
      if (!is_simple(shape.vertices)) throw InvalidInput("polygon is self-intersecting");
      poly = shape.vertices;
      if (shape.area > 0.0) {
        const Point c = centroid(poly);
        const double t = std::sqrt(shape.area / std::abs(a));
        for (auto& p : poly) p = {c.x + t * (p.x - c.x), c.y + t * (p.y - c.y)};
      }
      break;
    }
    case ShapeKind::CubeUnion: {
      if (!shape.cover || shape.cover->inner.empty()) throw InvalidInput("cube union has no inner cubes");
      box = {std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
             std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
      for (const auto& q : shape.cover->inner) {
        box.x0 = std::min(box.x0, q.x0());
        box.y0 = std::min(box.y0, q.y0());
        box.x1 = std::max(box.x1, q.x0() + q.side());
        box.y1 = std::max(box.y1, q.y0() + q.side());
      }
      break;
    }
  }
  if (!poly.empty()) {
    box = {poly[0].x, poly[0].y, poly[0].x, poly[0].y};
    for (const auto& p : poly) {
      box.x0 = std::min(box.x0, p.x);
      box.y0 = std::min(box.y0, p.y);
      box.x1 = std::max(box.x1, p.x);
      box.y1 = std::max(box.y1, p.y);
    }
  }

  const double eps = 1e-9;
  const long c0 = static_cast<long>(std::floor(box.x0 * resolution + eps));
  const long c1 = static_cast<long>(std::ceil(box.x1 * resolution - eps));
  const long r0 = static_cast<long>(std::floor(box.y0 * resolution + eps));
  const long r1 = static_cast<long>(std::ceil(box.y1 * resolution - eps));
  const int width = static_cast<int>(std::max(2L, c1 - c0));
  const int height = static_cast<int>(std::max(2L, r1 - r0));
  const Point origin{(static_cast<double>(c0) + 0.5) * h, (static_cast<double>(r0) + 0.5) * h};

  std::vector<std::uint8_t> inside(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
  const double r2 = radius * radius;
  for (int j = 0; j < height; ++j) {
    const double y = origin.y + h * j;
    for (int i = 0; i < width; ++i) {
      const double x = origin.x + h * i;
      bool in = false;
      switch (shape.kind) {
        case ShapeKind::UnitSquare: in = x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0; break;
        case ShapeKind::Rectangle: in = x > 0.0 && x < shape.a && y > 0.0 && y < shape.b; break;
        case ShapeKind::Disk: in = (x - cx) * (x - cx) + (y - cy) * (y - cy) < r2; break;
        case ShapeKind::RegularHexagon:
        case ShapeKind::Polygon: in = point_in_polygon(poly, x, y); break;
        case ShapeKind::CubeUnion:
          for (const auto& q : shape.cover->inner) {
            const double s = q.side();
            if (x > q.x0() && x < q.x0() + s && y > q.y0() && y < q.y0() + s) {
              in = true;
              break;
            }
          }
          break;
      }
      inside[static_cast<std::size_t>(j) * static_cast<std::size_t>(width) + static_cast<std::size_t>(i)] = in ? 1 : 0;
    }
  }

  const std::size_t count = static_cast<std::size_t>(std::count(inside.begin(), inside.end(), 1));
  if (count == 0) throw InvalidInput("resolution too coarse: no cell center inside " + shape.tag());
  const double target = shape.exact_area();
  const double measured = static_cast<double>(count) * h * h;
  if (std::abs(measured - target) > 0.02 * target) {
    std::ostringstream os;
    os << "resolution too coarse for " << shape.tag() << ": measured area " << measured << " vs " << target;
    throw InvalidInput(os.str());
  }
  return GridDomain(width, height, h, origin, std::move(inside), shape.tag());
}

DyadicCover dyadic_approximation(const GridDomain& domain, int level) {
  if (level < 1) throw InvalidInput("dyadic level must be >= 1");
  const double s = std::ldexp(1.0, -level);
  if (s < 4.0 * domain.h() * (1.0 - 1e-12))
    throw InvalidInput("dyadic level " + std::to_string(level) + " is finer than 4 cells per cube side");

  const double h = domain.h();
  const long gc0 = domain.first_col();
  const long gr0 = domain.first_row();
  const long gc1 = gc0 + domain.width();
  const long gr1 = gr0 + domain.height();

  // Lattice cells whose centers lie in [a, b): c with a <= (c + 1/2) h < b.
  auto cell_range = [h](double a, double b) {
    const long lo = static_cast<long>(std::ceil(a / h - 0.5 - 1e-9));
    const long hi = static_cast<long>(std::ceil(b / h - 0.5 - 1e-9));
    return std::pair<long, long>{lo, hi};
  };

  const long qx0 = static_cast<long>(std::floor(static_cast<double>(gc0) * h / s + 1e-9));
  const long qx1 = static_cast<long>(std::ceil(static_cast<double>(gc1) * h / s - 1e-9));
  const long qy0 = static_cast<long>(std::floor(static_cast<double>(gr0) * h / s + 1e-9));
  const long qy1 = static_cast<long>(std::ceil(static_cast<double>(gr1) * h / s - 1e-9));

  DyadicCover cover;
  cover.level = level;
  for (long qy = qy0; qy < qy1; ++qy) {
    for (long qx = qx0; qx < qx1; ++qx) {
      const auto [cx0, cx1] = cell_range(static_cast<double>(qx) * s, static_cast<double>(qx + 1) * s);
      const auto [cy0, cy1] = cell_range(static_cast<double>(qy) * s, static_cast<double>(qy + 1) * s);
      const long total = (cx1 - cx0) * (cy1 - cy0);
      long in = 0;
      for (long cy = std::max(cy0, gr0); cy < std::min(cy1, gr1); ++cy) {
        for (long cx = std::max(cx0, gc0); cx < std::min(cx1, gc1); ++cx) {
          if (domain.inside(static_cast<int>(cx - gc0), static_cast<int>(cy - gr0))) ++in;
        }
      }
      if (in == 0) continue;
      DyadicCube q{level, qx, qy};
      if (in == total) {
        cover.inner.push_back(q);
      } else {
        cover.boundary.push_back(q);
      }
    }
  }
  return cover;
}

SubdomainMask full_mask(const GridDomain& domain) {
  return SubdomainMask{domain.inside_cells(), domain.id(), domain.h()};
}

SubdomainMask empty_mask(const GridDomain& domain) {
  return SubdomainMask{std::vector<std::uint8_t>(domain.size(), 0), domain.id(), domain.h()};
}

double area(const SubdomainMask& mask) { return static_cast<double>(mask.count()) * mask.h * mask.h; }

}  // namespace specpart
