#include <cmath>

#include "doctest.h"
#include "specpart/constants.hpp"
#include "specpart/errors.hpp"
#include "specpart/grid.hpp"

using namespace specpart;

TEST_SUITE("grid") {
  TEST_CASE("unit square fills its grid") {
    const GridDomain d = build_domain(ShapeSpec::unit_square(), 64);
    CHECK(d.width() == 64);
    CHECK(d.height() == 64);
    CHECK(d.inside_count() == 64u * 64u);
    CHECK(d.h() == doctest::Approx(1.0 / 64));
    CHECK(d.first_col() == 0);
    CHECK(d.first_row() == 0);
    CHECK(d.measured_area() == doctest::Approx(1.0));
    CHECK(d.id() == "unit_square@64x64/h=0.015625");
  }

  TEST_CASE("rectangle and index helpers") {
    const GridDomain d = build_domain(ShapeSpec::rectangle(1.0, 0.5), 64);
    CHECK(d.width() == 64);
    CHECK(d.height() == 32);
    const std::size_t g = d.index(5, 7);
    CHECK(d.col(g) == 5);
    CHECK(d.row(g) == 7);
    CHECK(d.cell_x(5) == doctest::Approx(5.5 / 64));
    CHECK_FALSE(d.inside(-1, 0));
    CHECK_FALSE(d.inside(64, 0));
  }

  TEST_CASE("curved shapes converge to their exact area") {
    for (const auto& s : {ShapeSpec::disk(1.0), ShapeSpec::regular_hexagon(1.0), ShapeSpec::disk(0.3)}) {
      CAPTURE(s.tag());
      const double exact = s.exact_area();
      const double coarse = std::abs(build_domain(s, 64).measured_area() - exact);
      const double fine = std::abs(build_domain(s, 256).measured_area() - exact);
      CHECK(fine < 0.005 * exact);
      CHECK(fine <= coarse + 1e-12);
    }
    CHECK(ShapeSpec::disk(2.0).exact_area() == doctest::Approx(2.0));
  }

  TEST_CASE("polygon scaling and rejection of bad input") {
    const std::vector<Point> tri{{0.1, 0.1}, {0.9, 0.1}, {0.5, 0.8}};
    const GridDomain d = build_domain(ShapeSpec::polygon(tri, 0.2), 256);
    CHECK(d.measured_area() == doctest::Approx(0.2).epsilon(0.01));
    const std::vector<Point> bow{{0, 0}, {1, 1}, {1, 0}, {0, 1}};
    CHECK_THROWS_AS(build_domain(ShapeSpec::polygon(bow), 64), InvalidInput);
    CHECK_THROWS_AS(build_domain(ShapeSpec::polygon({{0, 0}, {1, 1}}), 64), InvalidInput);
    CHECK_THROWS_AS(build_domain(ShapeSpec::disk(-1.0), 64), InvalidInput);
    CHECK_THROWS_AS(build_domain(ShapeSpec::unit_square(), 16), InvalidInput);
  }

  TEST_CASE("dyadic cover of the unit square has no boundary cubes") {
    const GridDomain d = build_domain(ShapeSpec::unit_square(), 64);
    for (int level = 1; level <= 4; ++level) {
      const DyadicCover c = dyadic_approximation(d, level);
      CHECK(c.k() == static_cast<std::size_t>(1) << (2 * level));
      CHECK(c.l() == 0);
      CHECK(c.inner_area() == doctest::Approx(1.0));
    }
    CHECK_THROWS_AS(dyadic_approximation(d, 5), InvalidInput);
    CHECK_THROWS_AS(dyadic_approximation(d, 0), InvalidInput);
  }

  TEST_CASE("dyadic cover of the disk: inner cubes lie inside, boundary cubes straddle") {
    const GridDomain d = build_domain(ShapeSpec::disk(1.0), 128);
    double prev = 0.0;
    for (int level = 1; level <= 5; ++level) {
      const DyadicCover c = dyadic_approximation(d, level);
      CAPTURE(level);
      // Inner area grows toward |Omega| as the cubes shrink.
      CHECK(c.inner_area() >= prev);
      CHECK(c.inner_area() <= d.measured_area() + 1e-12);
      CHECK(c.inner_area() + c.tail_area() >= d.measured_area() - 1e-12);
      prev = c.inner_area();
      const double s = c.inner.empty() ? 0.0 : c.inner[0].side();
      for (const auto& q : c.inner) {
        for (int j = 0; j < d.height(); ++j) {
          for (int i = 0; i < d.width(); ++i) {
            const double x = d.cell_x(i), y = d.cell_y(j);
            if (x > q.x0() && x < q.x0() + s && y > q.y0() && y < q.y0() + s) CHECK(d.inside(i, j));
          }
        }
      }
    }
    CHECK(dyadic_approximation(d, 2).k() == 12);
    CHECK(dyadic_approximation(d, 3).k() == 52);
  }

  TEST_CASE("cube union domain is exactly the union of the cubes") {
    const GridDomain disk = build_domain(ShapeSpec::disk(1.0), 128);
    DyadicCover c = dyadic_approximation(disk, 3);
    const std::size_t k = c.k();
    const double q = c.cube_area();
    const GridDomain u = build_domain(ShapeSpec::cube_union(std::move(c)), 128);
    CHECK(u.measured_area() == doctest::Approx(static_cast<double>(k) * q).epsilon(1e-12));
  }

  TEST_CASE("masks") {
    const GridDomain d = build_domain(ShapeSpec::disk(1.0), 64);
    const SubdomainMask f = full_mask(d);
    CHECK(f.count() == d.inside_count());
    CHECK(area(f) == doctest::Approx(d.measured_area()));
    CHECK(empty_mask(d).empty());
    CHECK(f.parent_id == d.id());
  }
}
