#include "doctest.h"

#include <cmath>
#include <numbers>

#include "ppdiag/manifold.hpp"
#include "support.hpp"

using namespace ppdiag;
using testsupport::matrix_of;

namespace {

constexpr double kPi = std::numbers::pi;

Basis col(std::initializer_list<double> v) {
  return Basis::from_orthonormal(Matrix(v.size(), 1, std::vector<double>(v)));
}

}  // namespace

TEST_CASE("orthonormalize examples") {
  const Matrix i32 = matrix_of(3, 2, {1, 0, 0, 1, 0, 0});
  CHECK(orthonormalize(i32).matrix() == i32);

  const Basis b = orthonormalize(matrix_of(3, 1, {2, 0, 0}));
  CHECK(b(0, 0) == 1.0);
  CHECK(b(1, 0) == 0.0);

  // Hand Gram-Schmidt: (1,1,0) minus its projection on e1 leaves e2.
  const Basis g = orthonormalize(matrix_of(3, 2, {1, 1, 0, 1, 0, 0}));
  CHECK(max_abs_diff(g.matrix(), i32) < 1e-15);
}

TEST_CASE("orthonormalize keeps the first direction and the span") {
  Rng rng(11);
  for (int rep = 0; rep < 100; ++rep) {
    Matrix m(6, 2);
    for (double& v : m.data()) v = rng.normal();
    const Basis b = orthonormalize(m);
    CHECK(orthonormality_error(b.matrix()) < 1e-12);
    const double n0 = norm(m.column(0));
    for (std::size_t i = 0; i < 6; ++i) CHECK(b(i, 0) == doctest::Approx(m(i, 0) / n0).epsilon(1e-12));
    // Each input column is reproduced by its projection on the span.
    const Matrix coef = cross_product(b.matrix(), m);
    CHECK(max_abs_diff(b.matrix() * coef, m) < 1e-12);
  }
}

TEST_CASE("orthonormalize rejects rank deficiency") {
  CHECK_THROWS_AS(orthonormalize(matrix_of(3, 2, {1, 2, 1, 2, 1, 2})), DegenerateInputError);
  CHECK_THROWS_AS(orthonormalize(Matrix(3, 1)), DegenerateInputError);
}

TEST_CASE("basis invariants are enforced") {
  CHECK_THROWS_AS(Basis::from_orthonormal(matrix_of(2, 1, {1, 1})), DegenerateInputError);
  CHECK_THROWS_AS(Basis::from_orthonormal(Matrix::identity(3)), DimensionError);
  CHECK_THROWS(Basis::from_orthonormal(matrix_of(2, 1, {NAN, 1})));
  CHECK(Basis::axes(4, {2}).flat() == std::vector<double>{0, 0, 1, 0});
}

TEST_CASE("geodesic distance examples") {
  const Basis e1 = col({1, 0});
  CHECK(geodesic_distance(e1, e1) == doctest::Approx(0.0));
  CHECK(geodesic_distance(e1, col({0, 1})) == doctest::Approx(kPi / 2).epsilon(1e-12));
  CHECK(geodesic_distance(e1, col({-1, 0})) == doctest::Approx(0.0));
  CHECK_THROWS_AS(geodesic_distance(e1, Basis::axes(3, {0})), DimensionError);
}

TEST_CASE("geodesic distance is a metric on spans") {
  Rng rng(17);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t p = 3 + rep % 4;
    const std::size_t d = 1 + rep % 2;
    const Basis a = random_basis(p, d, rng), b = random_basis(p, d, rng), c = random_basis(p, d, rng);
    const double ab = geodesic_distance(a, b);
    CHECK(ab >= 0.0);
    CHECK(ab == doctest::Approx(geodesic_distance(b, a)).epsilon(1e-10));
    CHECK(geodesic_distance(a, c) <= ab + geodesic_distance(b, c) + 1e-10);
    CHECK(geodesic_distance(a, a.with_column_negated(0)) < 1e-7);
  }
}

TEST_CASE("geodesic path examples") {
  const Basis e1 = col({1, 0}), e2 = col({0, 1});
  const auto same = geodesic_path(e1, e1);
  REQUIRE(same.frames.size() == 1);
  CHECK(same.frames[0] == e1);

  const auto quarter = geodesic_path(e1, e2, kPi / 4);
  REQUIRE(quarter.frames.size() == 3);
  CHECK(max_abs_diff(quarter.frames[0].matrix(), e1.matrix()) < 1e-12);
  const double h = 1.0 / std::sqrt(2.0);
  CHECK(max_abs_diff(quarter.frames[1].matrix(), matrix_of(2, 1, {h, h})) < 1e-12);
  CHECK(max_abs_diff(quarter.frames[2].matrix(), e2.matrix()) < 1e-12);
}

TEST_CASE("geodesic paths run at constant speed with exact endpoints") {
  Rng rng(23);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t p = 3 + rep % 4;
    const std::size_t d = 1 + rep % 2;
    const Basis a = random_basis(p, d, rng);
    const Basis b = orient_match(a, random_basis(p, d, rng));
    const auto path = geodesic_path(a, b, 0.05);
    const double dist = geodesic_distance(a, b);
    CHECK(path.frames.size() == static_cast<std::size_t>(std::ceil(dist / 0.05)) + 1);
    CHECK(max_abs_diff(path.frames.front().matrix(), a.matrix()) <= 1e-8);
    CHECK(max_abs_diff(path.frames.back().matrix(), b.matrix()) <= 1e-8);
    const double step = geodesic_distance(path.frames[0], path.frames[1]);
    for (std::size_t k = 1; k < path.frames.size(); ++k) {
      CHECK(orthonormality_error(path.frames[k].matrix()) <= 1e-8);
      CHECK(std::abs(geodesic_distance(path.frames[k - 1], path.frames[k]) - step) <= 1e-6);
    }
  }
}

TEST_CASE("planes in three dimensions share a line") {
  Rng rng(31);
  for (int rep = 0; rep < 200; ++rep) {
    const Basis a = random_basis(3, 2, rng);
    Basis b = random_basis(3, 2, rng);
    if (rep % 2) b = orient_match(a, b);
    const auto path = geodesic_path(a, b, 0.05);
    CHECK(max_abs_diff(path.frames.back().matrix(), b.matrix()) <= 1e-8);
    if (path.frames.size() < 3) continue;
    const double step = geodesic_distance(path.frames[0], path.frames[1]);
    for (std::size_t k = 1; k < path.frames.size(); ++k)
      CHECK(std::abs(geodesic_distance(path.frames[k - 1], path.frames[k]) - step) <= 1e-6);
  }
  // A shared column gives one zero principal angle.
  CHECK_NOTHROW(geodesic_path(Basis::axes(3, {0, 1}), Basis::axes(3, {0, 2})));
}

TEST_CASE("one-dimensional paths stay in the plane of the endpoints") {
  Rng rng(29);
  for (int rep = 0; rep < 50; ++rep) {
    const Basis v = random_basis(5, 1, rng);
    const Basis w = orient_match(v, random_basis(5, 1, rng));
    const Basis plane = orthonormalize(Matrix(5, 2, [&] {
      std::vector<double> x(v.flat());
      x.insert(x.end(), w.flat().begin(), w.flat().end());
      return x;
    }()));
    for (const auto& f : geodesic_path(v, w).frames) {
      const Matrix coef = cross_product(plane.matrix(), f.matrix());
      CHECK(max_abs_diff(plane.matrix() * coef, f.matrix()) <= 1e-8);
    }
  }
}

TEST_CASE("orient_match examples") {
  const Basis e1 = col({1, 0, 0}), e2 = col({0, 1, 0});
  CHECK(orient_match(e1, e1.negated()) == e1);
  CHECK(orient_match(e1, e2) == e2);

  const Basis aligned = Basis::axes(3, {0, 1});
  const Basis flipped = aligned.with_column_negated(1);
  // det(alignedᵀ·flipped) = det(diag(1, -1)) = -1, so the first column flips.
  CHECK(alignment_determinant(aligned, flipped) == doctest::Approx(-1.0));
  const Basis fixed = orient_match(aligned, flipped);
  CHECK(alignment_determinant(aligned, fixed) == doctest::Approx(1.0));
  CHECK(fixed == flipped.with_column_negated(0));
}

TEST_CASE("orient_match keeps |det| and is idempotent") {
  Rng rng(31);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t d = 1 + rep % 2;
    const Basis a = random_basis(4, d, rng), b = random_basis(4, d, rng);
    const Basis m = orient_match(a, b);
    CHECK(std::abs(alignment_determinant(a, m)) == doctest::Approx(std::abs(alignment_determinant(a, b))));
    CHECK(alignment_determinant(a, m) >= 0.0);
    CHECK(orient_match(a, m) == m);
  }
}

TEST_CASE("random_basis is reproducible, orthonormal and centred") {
  Rng r1(7), r2(7);
  CHECK(random_basis(5, 2, r1) == random_basis(5, 2, r2));

  Rng rng(41);
  std::vector<double> mean(5, 0.0);
  const int draws = 10000;
  for (int k = 0; k < draws; ++k) {
    const Basis b = random_basis(5, 1, rng);
    CHECK(orthonormality_error(b.matrix()) <= 1e-8);
    for (std::size_t i = 0; i < 5; ++i) mean[i] += b(i, 0) / draws;
  }
  for (double m : mean) CHECK(std::abs(m) < 4.0 / std::sqrt(draws));
}

TEST_CASE("linear_blend examples") {
  Rng rng(43);
  const Basis cur = random_basis(4, 2, rng), rnd = random_basis(4, 2, rng);
  CHECK(linear_blend(cur, rnd, 0.0) == cur);
  CHECK(max_abs_diff(linear_blend(cur, rnd, 1.0).matrix(), orthonormalize(rnd.matrix()).matrix()) < 1e-15);

  const Basis half = linear_blend(col({1, 0}), col({0, 1}), 0.5);
  const double h = 1.0 / std::sqrt(2.0);
  CHECK(max_abs_diff(half.matrix(), matrix_of(2, 1, {h, h})) < 1e-15);

  CHECK_THROWS_AS(linear_blend(col({1, 0}), col({-1, 0}), 0.5), DegenerateInputError);
}
