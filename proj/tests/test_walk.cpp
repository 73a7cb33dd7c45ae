#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include <json.hpp>

#include "hypdrift/walk.hpp"

using namespace hypdrift;

namespace {
const GroupAction& f2() {
    static const GroupAction a = GroupAction::free_group(2);
    return a;
}
const GroupAction& modular() {
    static const GroupAction a = GroupAction::modular();
    return a;
}
WalkMeasure biased() { return make_measure(f2(), {{"a", 2}, {"A", 1}, {"b", 1}, {"B", 1}}); }
WalkMeasure modular_walk() { return make_measure(modular(), {{"s", 2}, {"t", 1}, {"T", 1}}); }
}  // namespace

TEST_CASE("measures") {
    const WalkMeasure u = uniform_measure(f2());
    CHECK(u.symmetric());
    CHECK(u.nearest_neighbour());
    CHECK(std::isfinite(u.moments().c8));
    const WalkMeasure b = biased();
    CHECK_FALSE(b.symmetric());
    CHECK(b.probability("a") == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(b.probability("B") == doctest::Approx(0.2).epsilon(1e-15));
    double total = 0;
    for (const auto& at : b.support())
        total += at.probability;
    CHECK(std::abs(total - 1) < 1e-12);

    CHECK_THROWS_AS(make_measure(f2(), {{"a", 1}, {"b", 1}}), std::invalid_argument);
    CHECK_THROWS_AS(make_measure(f2(), {{"a", 1}}), std::invalid_argument);
    CHECK_THROWS_AS(make_measure(f2(), {{"a", 1}, {"A", -1}}), std::invalid_argument);
    // T^-1 = S (T S)^2 lies in the semigroup generated by S and T
    CHECK_NOTHROW(make_measure(modular(), {{"s", 1}, {"t", 1}}));
}

TEST_CASE("reflection") {
    const WalkMeasure r = reflect(biased());
    CHECK(r.probability("A") == doctest::Approx(0.4));
    CHECK(r.probability("a") == doctest::Approx(0.2));
    CHECK(r.moments().c2 == doctest::Approx(biased().moments().c2));
    const WalkMeasure u = uniform_measure(f2());
    const WalkMeasure ru = reflect(u);
    for (const auto& at : u.support())
        CHECK(ru.probability(at.element) == at.probability);
}

TEST_CASE("sample paths are reproducible") {
    const WalkMeasure u = uniform_measure(f2());
    const auto p1 = sample_paths(u, 50, 4, 11);
    const auto p2 = sample_paths(u, 50, 4, 11);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(p1[i].increments == p2[i].increments);
    CHECK(p1[0].increments != p1[1].increments);
    CHECK(sample_path(u, 50, 11, 2).increments == p1[2].increments);

    std::size_t hits = 0, total = 0;
    for (const auto& p : sample_paths(u, 1000, 100, 5))
        for (auto i : p.increments) {
            hits += u.support()[i].element == "a";
            ++total;
        }
    CHECK(static_cast<double>(hits) / total == doctest::Approx(0.25).epsilon(0.02));

    const auto line = paths_to_jsonl(u, {p1[0]});
    const auto j = nlohmann::json::parse(line.substr(0, line.find('\n')));
    CHECK(j["increments"].size() == 50);
    CHECK(p1[0].position(u, 0).empty());
}

TEST_CASE("convolution powers") {
    const WalkMeasure u = uniform_measure(f2());
    std::map<std::string, double> d2;
    for (const auto& at : convolution_power(u, 2))
        d2[at.element] = at.probability;
    CHECK(d2[""] == doctest::Approx(0.25));
    CHECK(d2["ab"] == doctest::Approx(1.0 / 16));
    CHECK(shannon_entropy(convolution_power(u, 1)) == doctest::Approx(std::log(4.0)));

    // H(mu^{*n}) from an independent dictionary convolution
    const double H[] = {1.386294361119891, 2.426015131959808, 3.307547393147975,
                        4.101380813838197, 4.839265674995159, 5.539533754308214};
    for (std::size_t n = 1; n <= 6; ++n)
        CHECK(shannon_entropy(convolution_power(u, n)) == doctest::Approx(H[n - 1]).epsilon(1e-12));
    CHECK_THROWS_AS(convolution_power(u, 12, 1000), CapExceeded);
}

TEST_CASE("return probability is bounded by the collision probability") {
    for (const WalkMeasure& mu : {biased(), modular_walk()}) {
        for (std::size_t n : {2u, 3u, 4u}) {
            double collision = 0;
            for (const auto& at : convolution_power(mu, n))
                collision += at.probability * at.probability;
            for (const auto& at : convolution_power(mu, 2 * n))
                CHECK(at.probability <= collision + 1e-15);
        }
    }
}

TEST_CASE("exact Green function on the free group") {
    const WalkMeasure u = uniform_measure(f2());
    CHECK(green_function(u, "", GreenMethod::exact_recursive).value == doctest::Approx(1.5));
    CHECK(green_function(u, "ab", GreenMethod::exact_recursive).value == doctest::Approx(1.0 / 6));
    for (const char* g : {"", "a", "aB", "abA", "bbab"}) {
        const double exact = green_function(u, g, GreenMethod::exact_recursive).value;
        GreenParams p;
        p.horizon = 200;
        const double trunc = green_function(u, g, GreenMethod::truncated_convolution, p).value;
        CHECK(std::abs(exact - trunc) < 1e-6);
        CHECK(exact == doctest::Approx(1.5 * std::pow(3.0, -static_cast<double>(std::string(g).size()))));
    }
    CHECK(green_metric(u, "", GreenMethod::exact_recursive).value == 0.0);
    CHECK(green_metric(u, "ab", GreenMethod::exact_recursive).value ==
          doctest::Approx(2 * std::log(3.0)).epsilon(1e-14));

    GreenParams p;
    p.paths = 40'000;
    const GreenValue mc = green_function(u, "a", GreenMethod::monte_carlo, p);
    CHECK(std::abs(mc.value - 0.5) < 3 * mc.stderr_);
}

TEST_CASE("exact Green function matches truncated linear solves") {
    // d_G(e, g) from sparse Dirichlet solves on three nested balls, Aitken extrapolated
    const auto eb = ExactGreen::make(biased());
    REQUIRE(eb);
    const std::map<std::string, double> biased_oracle{
        {"a", 0.682333335911}, {"A", 1.375480516471}, {"b", 1.313813566193},
        {"ab", 1.996146904265}, {"aa", 1.364666672613}, {"AbA", 4.064774620437}};
    for (const auto& [g, v] : biased_oracle)
        CHECK(std::abs(eb->green_distance(g) - v) < 1e-7);
    CHECK(std::exp(eb->log_green_identity()) == doctest::Approx(1.448628142289).epsilon(1e-8));

    const auto em = ExactGreen::make(modular_walk());
    REQUIRE(em);
    const std::map<std::string, double> modular_oracle{
        {"s", 0.348917292807}, {"sr", 0.643920168356}, {"Rs", 0.643920168356},
        {"srs", 0.889398229680}, {"srsr", 1.276143302710}, {"sRsR", 1.724882224876}};
    for (const auto& [g, v] : modular_oracle)
        CHECK(std::abs(em->green_distance(g) - v) < 1e-6);
    CHECK(std::exp(em->log_green_identity()) == doctest::Approx(2.599701415426).epsilon(1e-6));

    CHECK_FALSE(ExactGreen::make(make_measure(f2(), {{"a", 1}, {"A", 1}, {"b", 1}, {"B", 1}, {"ab", 1}})));
}

TEST_CASE("biased Green values agree across methods") {
    const WalkMeasure b = biased();
    for (const char* g : {"a", "A", "aB", "Abb"}) {
        const double exact = green_function(b, g, GreenMethod::exact_recursive).value;
        const GreenValue t = green_function(b, g, GreenMethod::truncated_convolution);
        CHECK(std::abs(exact - t.value) <= t.truncation_bound + 1e-9);
    }
}

TEST_CASE("Green Busemann cocycle along a ray") {
    const WalkMeasure u = uniform_measure(f2());
    const BoundaryPoint zeta = BoundaryPoint::tree("", "a", 64);
    std::vector<std::string> approach;
    for (int n = 4; n <= 12; n += 2)
        approach.emplace_back(n, 'a');
    const auto ga = green_busemann(u, "a", zeta, approach, GreenMethod::exact_recursive);
    CHECK(ga.value.value == doctest::Approx(-std::log(3.0)));
    const auto gb = green_busemann(u, "b", zeta, approach, GreenMethod::exact_recursive);
    CHECK(gb.value.value == doctest::Approx(std::log(3.0)));
    const auto ge = green_busemann(u, "", zeta, approach, GreenMethod::exact_recursive);
    CHECK(ge.value.value == 0.0);
}
