#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "hypdrift/geometry.hpp"

using namespace hypdrift;
using cplx = std::complex<double>;

namespace {
ModelPoint P(double x, double y) { return ModelPoint::plane(x, y); }
ModelPoint W(const char* w) { return ModelPoint::tree(w); }
}  // namespace

TEST_CASE("points validate their model invariants") {
    CHECK_THROWS(ModelPoint::plane(0.0, 0.0));
    CHECK_THROWS(ModelPoint::plane(1.0, 1e-13));
    CHECK_THROWS(ModelPoint::tree("aA"));
    CHECK_NOTHROW(ModelPoint::tree("aB"));
    CHECK_THROWS(BoundaryPoint::tree("a", "b", 0));
    CHECK_THROWS(dist(P(0, 1), W("a")));
}

TEST_CASE("distance") {
    CHECK(dist(P(0, 1), P(0, 2)) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(dist(W(""), W("aBa")) == 3.0);
    // arccosh(1 + |z - w|^2 / (2 Im z Im w)) for z = i, w = 1 + i
    CHECK(dist(P(0, 1), P(1, 1)) == doctest::Approx(0.96242365011920689).epsilon(1e-14));
    CHECK(dist(W("ab"), W("aB")) == 2.0);
}

TEST_CASE("geodesic points") {
    const ModelPoint m = geodesic_point(P(0, 1), P(0, 4), std::log(2.0));
    CHECK(m.z().real() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(m.z().imag() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(geodesic_point(W(""), W("abc"), 2) == W("ab"));
    CHECK(geodesic_point(W("ab"), W("aB"), 1) == W("a"));

    // points of [-1 + 0.1i, 1 + 0.1i] lie on one Euclidean circle centred on the real axis
    const ModelPoint x = P(-1, 0.1), y = P(1, 0.1);
    const double r2 = 1.0 + 0.01;
    for (double f : {0.1, 0.3, 0.5, 0.9}) {
        const cplx z = geodesic_point(x, y, f * dist(x, y)).z();
        CHECK(std::norm(z) == doctest::Approx(r2).epsilon(1e-10));
        CHECK(dist(x, geodesic_point(x, y, f * dist(x, y))) ==
              doctest::Approx(f * dist(x, y)).epsilon(1e-10));
    }
}

TEST_CASE("busemann functions") {
    const BoundaryPoint inf = BoundaryPoint::plane_infinity();
    CHECK(busemann(inf, P(0, 1), P(0, 2)) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(busemann(inf, P(0.3, 1.7), P(0.3, 1.7)) == 0.0);
    const BoundaryPoint aaa = BoundaryPoint::tree("", "a", 40);
    CHECK(busemann(aaa, W(""), W("ab")) == 0.0);
    CHECK(busemann(aaa, W(""), W("b")) == -1.0);
    CHECK(busemann(aaa, W(""), W("aa")) == 2.0);
    // horocycles through 0: beta_0(i, 2i) = log(1/2) - 0 by the image of infinity under z -> -1/z
    CHECK(busemann(BoundaryPoint::plane(0.0), P(0, 1), P(0, 2)) ==
          doctest::Approx(-std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("gromov products") {
    CHECK(gromov_product(W(""), W("aab"), W("aba")) == 1.0);
    CHECK(gromov_product(W(""), W("abab"), W("abab")) == 4.0);
    CHECK(gromov_product(P(0, 1), BoundaryPoint::plane(0.0), BoundaryPoint::plane_infinity()) ==
          doctest::Approx(0.0).epsilon(1e-9));
    // the geodesic (-1, 1) passes through i as well
    CHECK(std::abs(gromov_product(P(0, 1), BoundaryPoint::plane(-1.0), BoundaryPoint::plane(1.0))) <
          1e-9);
}

TEST_CASE("shadows") {
    const Shadow s(W(""), W("ab"), 0);
    CHECK(in_shadow(s, BoundaryPoint::tree("", "ab", 20)));
    CHECK_FALSE(in_shadow(s, BoundaryPoint::tree("ba", "a", 20)));
    CHECK(in_shadow(Shadow(P(0, 1), P(0, 4), 1.0), BoundaryPoint::plane_infinity()));
    CHECK_FALSE(in_shadow(Shadow(P(0, 1), P(0, 4), 1.0), BoundaryPoint::plane(0.5)));
}

TEST_CASE("horoballs") {
    const BoundaryPoint inf = BoundaryPoint::plane_infinity();
    CHECK(horoball_contains(P(0, 1), inf, 1.0, P(0, std::exp(2.0))));
    CHECK_FALSE(horoball_contains(P(0, 1), inf, 1.0, P(0, 1)));

    // a ball about the midpoint of [x, z] with beta(x, z) = 0 sits inside the horoball
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const double K = 1.0;
    for (double L : {20.0, 200.0, 2000.0})
        for (double r : {0.0, 0.5, 1.5}) {
            const ModelPoint x = P(0, 1), z = P(L, 1);
            const double d = dist(x, z);
            const ModelPoint m = geodesic_point(x, z, d / 2);
            const double rho = d / 2 - K - 2 * r;
            if (rho <= 0)
                continue;
            for (int k = 0; k < 100; ++k) {
                const double th = 2 * M_PI * U(rng);
                const cplx w = chart_point(m.z(), std::polar(1.0, th), rho * U(rng));
                CHECK(horoball_contains(x, inf, r, ModelPoint::plane(w)));
            }
        }
}

TEST_CASE("isometries") {
    const Isometry T = Isometry::mobius(1, 1, 0, 1);
    const Isometry S = Isometry::mobius(0, -1, 1, 0);
    CHECK(apply(T, P(0, 1)).z().real() == doctest::Approx(1.0));
    CHECK(apply(T, P(0, 1)).z().imag() == doctest::Approx(1.0));
    CHECK(std::abs(apply(S, P(0, 1)).z() - cplx(0, 1)) < 1e-15);
    CHECK(apply(Isometry::tree("ab"), W("Bc")) == W("ac"));
    CHECK((S * S).approx_equal(Isometry::identity(Model::plane)));
    const Isometry g = Isometry::mobius(2, 1, 3, 2);
    CHECK((g * g.inverse()).approx_equal(Isometry::identity(Model::plane)));
    CHECK(std::abs(g.matrix().det() - 1.0) < 1e-9);
    const BoundaryPoint b = apply(T, BoundaryPoint::plane(0.5));
    CHECK(b.real() == doctest::Approx(1.5));
    CHECK(apply(T, BoundaryPoint::plane_infinity()).is_infinity());
}

TEST_CASE("segment heights and scaled products") {
    // height from i to the segment [-1 + 0.1i, 1 + 0.1i] from side lengths and by direct minimisation
    const ModelPoint o = P(0, 1), p = P(-1, 0.1), q = P(1, 0.1);
    const double h = plane_segment_height(dist(o, p), dist(o, q), dist(p, q));
    CHECK(h == doctest::Approx(dist_to_segment(o, p, q)).epsilon(1e-9));
    CHECK(tree_segment_height(3, 4, 5) == 1.0);

    ScaledMatrix m;
    Mat2 exact;
    const Mat2 a{3, 0, 0, 1.0 / 3}, b{1.25, 0.75, 0.75, 1.25};
    for (int k = 0; k < 6; ++k) {
        m.right_multiply(k % 2 ? a : b);
        exact = exact * (k % 2 ? a : b);
    }
    CHECK(m.displacement_from_i() == doctest::Approx(displacement_from_i(exact)).epsilon(1e-12));
    ScaledMatrix big;
    for (int k = 0; k < 2000; ++k)
        big.right_multiply(a);
    CHECK(big.displacement_from_i() == doctest::Approx(2000 * 2 * std::log(3.0)).epsilon(1e-12));
    CHECK(log_cosh(1000.0) == doctest::Approx(1000.0 - std::log(2.0)).epsilon(1e-15));
}
