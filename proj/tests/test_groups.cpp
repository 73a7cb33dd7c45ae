#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "hypdrift/groups.hpp"

using namespace hypdrift;

TEST_CASE("builtin actions") {
    const auto f2 = GroupAction::free_group(2);
    CHECK(f2.model() == Model::tree);
    CHECK(f2.generators().size() == 4);
    for (const auto& g : f2.generators())
        CHECK(f2.element(std::string(1, g.inverse_symbol)) == f2.inverse(std::string(1, g.symbol)));

    const auto mod = GroupAction::modular();
    CHECK(mod.has_parabolics());
    CHECK_FALSE(mod.convex_cocompact());
    const Mat2 S = mod.matrix(mod.element("s"));
    const Mat2 T = mod.matrix(mod.element("t"));
    CHECK(std::abs(S.a) + std::abs(S.d) < 1e-15);
    CHECK(std::abs(std::abs(S.b) - 1) + std::abs(std::abs(S.c) - 1) < 1e-15);
    CHECK(std::abs(T.trace()) == doctest::Approx(2.0));

    const auto sch = GroupAction::schottky();
    CHECK(sch.convex_cocompact());
    CHECK_FALSE(sch.has_parabolics());
    CHECK(sch.displacement("a") == doctest::Approx(2 * std::log(3.0)).epsilon(1e-14));
    CHECK(sch.displacement("b") == doctest::Approx(2 * std::log(3.0)).epsilon(1e-14));

    CHECK_THROWS(GroupAction::by_name("lattice"));
    CHECK(GroupAction::by_name("free3").rank() == 3);
}

TEST_CASE("generators act isometrically") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    for (const auto* name : {"schottky", "modular"}) {
        const auto a = GroupAction::by_name(name);
        for (const auto& g : a.generators())
            for (int k = 0; k < 20; ++k) {
                const auto x = ModelPoint::plane(U(rng), std::exp(U(rng)));
                const auto y = ModelPoint::plane(U(rng), std::exp(U(rng)));
                CHECK(dist(apply(g.isometry, x), apply(g.isometry, y)) ==
                      doctest::Approx(dist(x, y)).epsilon(1e-8));
            }
    }
}

TEST_CASE("group operations in canonical form") {
    const auto mod = GroupAction::modular();
    CHECK(mod.element("ss").empty());
    CHECK(mod.element("tT").empty());
    CHECK(mod.element("t") == "sr");
    CHECK(mod.element("T") == "Rs");
    const std::string g = mod.element("tstTTs");
    CHECK(mod.multiply(g, mod.inverse(g)).empty());
    const Mat2 m = mod.matrix(g);
    const Mat2 mi = mod.matrix(mod.inverse(g));
    const Mat2 id = m * mi;
    CHECK(std::abs(std::abs(id.a) - 1) < 1e-12);
    CHECK(std::abs(id.b) < 1e-12);

    const auto f2 = GroupAction::free_group(2);
    CHECK(f2.multiply("abA", "aB") == "a");
    CHECK(f2.element("abBA").empty());
}

TEST_CASE("orbit balls") {
    const auto f2 = GroupAction::free_group(2);
    CHECK(orbit_ball(f2, 3).entries().size() == 53);
    CHECK(orbit_ball(f2, 0).entries().size() == 1);
    // closed shells hold both spheres of radius 4 and 5
    CHECK(orbit_ball(f2, 5).shell(5).size() == 4 * 27 + 4 * 81);

    // counts from an independent breadth-first enumeration with projective matrix dedup
    const auto mod = GroupAction::modular();
    CHECK(orbit_ball(mod, 4).entries().size() == 162);
    CHECK(orbit_ball(mod, 6).entries().size() == 1242);
    const auto sch = GroupAction::schottky();
    CHECK(orbit_ball(sch, 8).entries().size() == 157);

    const OrbitBall b = orbit_ball(mod, 6);
    std::set<std::string> seen;
    for (const auto& e : b.entries()) {
        CHECK(e.displacement <= 6.0 + 1e-12);
        CHECK(seen.insert(e.element).second);
    }
    // no two entries share a projective matrix
    const auto ms = b.matrices();
    for (std::size_t i = 0; i < ms.size(); ++i)
        for (std::size_t j = i + 1; j < ms.size() && b.entries()[j].displacement <
                                                        b.entries()[i].displacement + 1e-9;
             ++j) {
            const double s = ms[i].a * ms[j].a > 0 || ms[i].b * ms[j].b > 0 ? 1.0 : -1.0;
            const double diff = std::abs(ms[i].a - s * ms[j].a) + std::abs(ms[i].b - s * ms[j].b) +
                                std::abs(ms[i].c - s * ms[j].c) + std::abs(ms[i].d - s * ms[j].d);
            CHECK(diff > 1e-7);
        }

    const OrbitBall capped = orbit_ball(f2, 10, 100);
    CHECK_FALSE(capped.complete());
}

TEST_CASE("word norms") {
    const auto f2 = GroupAction::free_group(2);
    CHECK(f2.word_norm("abA") == 3);
    const auto mod = GroupAction::modular();
    CHECK(mod.word_norm(mod.element("ss")) == 0);
    for (int n = 1; n <= 12; ++n) {
        const std::string tn = mod.element(std::string(n, 't'));
        CHECK(mod.word_norm(tn) == n);
        CHECK(mod.word_norm_bfs(tn, 1'000'000) == n);
    }
    std::mt19937_64 rng(5);
    const char letters[] = {'s', 't', 'T'};
    for (int k = 0; k < 40; ++k) {
        std::string w;
        for (int j = 0; j < 7; ++j)
            w += letters[rng() % 3];
        const std::string g = mod.element(w);
        CHECK(mod.word_norm_bfs(g, 2'000'000) == mod.word_norm(g));
    }
}

TEST_CASE("critical exponents") {
    const auto f2 = GroupAction::free_group(2);
    CHECK(critical_exponent(orbit_ball(f2, 12), 6, 12).value ==
          doctest::Approx(std::log(3.0)).epsilon(0.01 / std::log(3.0)));
    const auto f3 = GroupAction::free_group(3);
    CHECK(critical_exponent(orbit_ball(f3, 8), 4, 8).value ==
          doctest::Approx(std::log(5.0)).epsilon(0.01 / std::log(5.0)));
    const auto mod = GroupAction::modular();
    const double v = critical_exponent(orbit_ball(mod, 12), 6, 12).value;
    CHECK(v > 0.9);
    CHECK(v < 1.1);
    CHECK_THROWS(critical_exponent(orbit_ball(f2, 5), 6, 12));
}

TEST_CASE("parabolic distortion") {
    const auto mod = GroupAction::modular();
    const DistortionReport r = parabolic_distortion_report(mod, "t", 60);
    CHECK(r.rows[0].word_norm == 1);
    CHECK(r.rows[0].displacement == doctest::Approx(std::acosh(1.5)).epsilon(1e-12));
    CHECK(r.rows[9].word_norm == 10);
    CHECK(std::abs(r.rows[9].displacement - std::acosh(51.0)) < 1e-9);
    CHECK(r.rows[9].ratio == doctest::Approx(std::log(10.0) / std::acosh(51.0)));
    CHECK(r.fit.slope > 0.45);
    CHECK(r.fit.slope < 0.55);
}
