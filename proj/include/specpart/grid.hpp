#pragma once

// Uniform-grid discretizations of planar domains.
//
// Cells are squares of side h = 1/resolution whose faces sit on the lattice
// hZ^2, so the dyadic squares of side 2^-level (level <= log2 resolution) are
// unions of whole cells. A cell belongs to the domain when its center lies
// strictly inside the shape.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace specpart {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Axis-aligned square [ix*s, (ix+1)*s) x [iy*s, (iy+1)*s), s = 2^-level.
struct DyadicCube {
  int level = 0;
  long ix = 0;
  long iy = 0;

  double side() const;
  double x0() const { return static_cast<double>(ix) * side(); }
  double y0() const { return static_cast<double>(iy) * side(); }
  double area() const { return side() * side(); }
};

struct DyadicCover {
  int level = 0;
  std::vector<DyadicCube> inner;     // fully inside the domain, row-major order
  std::vector<DyadicCube> boundary;  // meet both the domain and its complement

  std::size_t k() const { return inner.size(); }
  std::size_t l() const { return boundary.size(); }
  double cube_area() const;
  double inner_area() const { return static_cast<double>(k()) * cube_area(); }
  // Sum of the boundary cube areas.
  double tail_area() const { return static_cast<double>(l()) * cube_area(); }
  bool empty_inner() const { return inner.empty(); }
};

enum class ShapeKind { UnitSquare, Disk, RegularHexagon, Rectangle, Polygon, CubeUnion };

struct ShapeSpec {
  ShapeKind kind = ShapeKind::UnitSquare;
  double area = 1.0;             // Disk, RegularHexagon, Polygon (<= 0 keeps the polygon as given)
  double a = 1.0, b = 1.0;       // Rectangle [0,a] x [0,b]
  std::vector<Point> vertices;   // Polygon
  std::shared_ptr<const DyadicCover> cover;  // CubeUnion: union of cover->inner

  static ShapeSpec unit_square();
  // Disk and hexagon are centered at (1/2, 1/2); the hexagon is flat-top.
  static ShapeSpec disk(double area);
  static ShapeSpec regular_hexagon(double area);
  static ShapeSpec rectangle(double a, double b);
  static ShapeSpec polygon(std::vector<Point> vertices, double area = 0.0);
  static ShapeSpec cube_union(DyadicCover cover);

  // Short descriptor, e.g. "disk(1)".
  std::string tag() const;
  // Exact area of the continuum shape.
  double exact_area() const;
};

class GridDomain {
 public:
  GridDomain(int width, int height, double h, Point origin, std::vector<std::uint8_t> inside,
             std::string shape_tag);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return inside_.size(); }
  double h() const { return h_; }
  // Center of cell (0, 0).
  Point origin() const { return origin_; }
  const std::string& shape_tag() const { return shape_tag_; }
  // Identifier shared by masks and partitions built on this grid.
  const std::string& id() const { return id_; }

  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(i);
  }
  int col(std::size_t idx) const { return static_cast<int>(idx % static_cast<std::size_t>(width_)); }
  int row(std::size_t idx) const { return static_cast<int>(idx / static_cast<std::size_t>(width_)); }
  double cell_x(int i) const { return origin_.x + h_ * i; }
  double cell_y(int j) const { return origin_.y + h_ * j; }
  // Lattice index of column 0, i.e. the left face of column i is at (first_col + i) * h.
  long first_col() const;
  long first_row() const;

  bool inside(std::size_t idx) const { return inside_[idx] != 0; }
  bool inside(int i, int j) const {
    return i >= 0 && j >= 0 && i < width_ && j < height_ && inside_[index(i, j)] != 0;
  }
  const std::vector<std::uint8_t>& inside_cells() const { return inside_; }
  std::size_t inside_count() const { return inside_count_; }
  double measured_area() const { return static_cast<double>(inside_count_) * h_ * h_; }

 private:
  int width_;
  int height_;
  double h_;
  Point origin_;
  std::vector<std::uint8_t> inside_;
  std::size_t inside_count_ = 0;
  std::string shape_tag_;
  std::string id_;
};

// Cell set of one subdomain of a GridDomain.
struct SubdomainMask {
  std::vector<std::uint8_t> cells;
  std::string parent_id;
  double h = 0.0;

  std::size_t count() const;
  bool empty() const { return count() == 0; }
};

GridDomain build_domain(const ShapeSpec& shape, int resolution);

DyadicCover dyadic_approximation(const GridDomain& domain, int level);

SubdomainMask full_mask(const GridDomain& domain);
SubdomainMask empty_mask(const GridDomain& domain);

// (cell count) * h^2
double area(const SubdomainMask& mask);

}  // namespace specpart
