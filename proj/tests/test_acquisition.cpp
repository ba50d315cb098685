#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "knobkit/acquisition.hpp"
#include "knobkit/rng.hpp"

using namespace knobkit;

namespace {

double monte_carlo_ei(double mean, double std_dev, double best, Sense sense, std::size_t draws,
                      std::uint64_t seed) {
    Rng rng(seed);
    double acc = 0.0;
    for (std::size_t i = 0; i < draws; ++i) {
        const double y = mean + std_dev * rng.normal();
        const double gain = sense == Sense::minimize ? best - y : y - best;
        acc += std::max(gain, 0.0);
    }
    return acc / static_cast<double>(draws);
}

} // namespace

TEST_CASE("ei collapses to deterministic improvement at zero std") {
    CHECK(expected_improvement(5.0, 0.0, 5.0, Sense::minimize) == 0.0);
    CHECK(expected_improvement(3.0, 0.0, 5.0, Sense::minimize) == 2.0);
    CHECK(expected_improvement(7.0, 0.0, 5.0, Sense::minimize) == 0.0);
    CHECK(expected_improvement(7.0, 0.0, 5.0, Sense::maximize) == 2.0);
    CHECK(expected_improvement(3.0, 0.0, 5.0, Sense::maximize) == 0.0);
}

TEST_CASE("ei matches a Monte-Carlo estimate") {
    struct Case {
        double mean, std_dev, best;
        Sense sense;
    };
    const Case cases[] = {
        {5.0, 1.0, 5.0, Sense::minimize},
        {2.0, 0.5, 1.8, Sense::minimize},
        {-1.0, 2.0, 0.5, Sense::maximize},
    };
    std::uint64_t seed = 900;
    for (const auto& c : cases) {
        const double closed = expected_improvement(c.mean, c.std_dev, c.best, c.sense);
        const double mc = monte_carlo_ei(c.mean, c.std_dev, c.best, c.sense, 1'000'000, seed++);
        CHECK_THAT(closed, Catch::Matchers::WithinAbs(mc, 1e-3 * std::max(1.0, c.std_dev)));
    }
}

TEST_CASE("ei at mean=best equals std times the unit-normal constant") {
    // With z = 0: EI = std * phi(0) = std / sqrt(2 pi).
    const double c0 = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    CHECK_THAT(expected_improvement(4.0, 1.0, 4.0, Sense::minimize),
               Catch::Matchers::WithinAbs(c0, 1e-12));
    CHECK_THAT(expected_improvement(4.0, 2.5, 4.0, Sense::maximize),
               Catch::Matchers::WithinAbs(2.5 * c0, 1e-12));
}

TEST_CASE("ei is nonnegative and monotone in std at mean=best") {
    double prev = -1.0;
    for (double s : {0.0, 0.01, 0.1, 0.5, 1.0, 2.0, 10.0}) {
        const double v = expected_improvement(0.0, s, 0.0, Sense::minimize);
        CHECK(v >= 0.0);
        CHECK(v >= prev);
        prev = v;
    }
    Rng rng(4);
    for (int t = 0; t < 200; ++t) {
        const double v = expected_improvement(rng.uniform(-5, 5), rng.uniform(0, 3),
                                              rng.uniform(-5, 5),
                                              t % 2 ? Sense::minimize : Sense::maximize);
        CHECK(v >= 0.0);
    }
}

namespace {

ConfigSpace line_space() {
    return ConfigSpace("line", {KnobSpec::make_continuous("x", 0.0, 1.0, 0.5)});
}

double peak_score(const Configuration& c) {
    const double x = std::get<double>(c.values[0]);
    return -(x - 0.37) * (x - 0.37);
}

} // namespace

TEST_CASE("budget=0 returns the best of the documented random candidates") {
    auto space = line_space();
    History empty;
    AcquisitionOptions opts;
    opts.budget = 0;
    auto got = maximize_acquisition(space, peak_score, empty, 123, opts);

    // The random phase is exactly random_sample(space, n_random, seed).
    auto candidates = random_sample(space, opts.n_random, 123);
    Configuration expect = candidates[0];
    for (const auto& c : candidates)
        if (peak_score(c) > peak_score(expect)) expect = c;
    CHECK(got == expect);
}

TEST_CASE("local search walks uphill past the random candidates") {
    auto space = line_space();
    History h;
    h.sense = Sense::maximize;
    Observation o;
    o.config.values = {KnobValue{0.9}};
    o.value = peak_score(o.config);
    h.append(o);

    auto got = maximize_acquisition(space, peak_score, h, 5);
    const double x = std::get<double>(got.values[0]);
    CHECK(std::abs(x - 0.37) < 0.06);  // within one neighbor step of the peak

    AcquisitionOptions no_local;
    no_local.budget = 0;
    auto rand_only = maximize_acquisition(space, peak_score, h, 5, no_local);
    CHECK(peak_score(got) >= peak_score(rand_only));
}

TEST_CASE("maximize_acquisition is deterministic per seed") {
    auto space = ConfigSpace("mix", {KnobSpec::make_continuous("x", 0.0, 1.0, 0.5),
                                     KnobSpec::make_categorical("c", {"a", "b", "z"}, "a")});
    const auto score = [](const Configuration& c) {
        const double x = std::get<double>(c.values[0]);
        const double bonus = std::get<std::string>(c.values[1]) == "b" ? 0.3 : 0.0;
        return -(x - 0.6) * (x - 0.6) + bonus;
    };
    History empty;
    auto a = maximize_acquisition(space, score, empty, 77);
    auto b = maximize_acquisition(space, score, empty, 77);
    CHECK(a == b);
    CHECK(std::get<std::string>(a.values[1]) == "b");
}

TEST_CASE("evaluated configurations are not resuggested") {
    ConfigSpace space("grid", {KnobSpec::make_integer("n", 0, 4, 0)});
    const auto score = [](const Configuration& c) {
        return static_cast<double>(std::get<std::int64_t>(c.values[0]));
    };
    History h;
    h.sense = Sense::maximize;
    Observation o;
    o.config.values = {KnobValue{std::int64_t{4}}};  // the global argmax, already evaluated
    o.value = 4.0;
    h.append(o);

    auto got = maximize_acquisition(space, score, h, 31);
    CHECK(std::get<std::int64_t>(got.values[0]) == 3);
}

TEST_CASE("returned configurations are always valid") {
    auto space = ConfigSpace("mix", {KnobSpec::make_continuous("x", -3.0, 9.0, 0.0),
                                     KnobSpec::make_integer("n", 2, 11, 2),
                                     KnobSpec::make_categorical("c", {"u", "v"}, "u")});
    Rng rng(8);
    History h;
    h.sense = Sense::minimize;
    for (const auto& c : random_sample(space, 5, 40)) {
        Observation o;
        o.config = c;
        o.value = rng.uniform();
        h.append(o);
    }
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto got = maximize_acquisition(
            space, [&](const Configuration&) { return rng.uniform(); }, h, seed);
        REQUIRE(space.valid(got));
    }
}
