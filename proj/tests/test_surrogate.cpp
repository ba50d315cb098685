#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "knobkit/forest.hpp"
#include "knobkit/gp.hpp"
#include "knobkit/kernel.hpp"
#include "knobkit/parzen.hpp"
#include "knobkit/rng.hpp"
#include "support/dense_oracle.hpp"

using namespace knobkit;

namespace {

std::vector<std::vector<double>> random_points(std::size_t n, std::size_t dim, Rng& rng) {
    std::vector<std::vector<double>> X(n, std::vector<double>(dim));
    for (auto& row : X)
        for (auto& v : row) v = rng.uniform();
    return X;
}

// Mixed-layout kernels used across the suite: columns 0..2 numeric, 3..4
// category indices.
std::vector<Kernel> kernel_zoo() {
    return {
        Kernel::rbf({0.5, 0.7, 0.3, 1.0, 0.6}),
        Kernel::matern52({0.4, 0.9, 0.5, 0.8, 1.2}, 2.0),
        Kernel::hamming({1.0, 0.5, 2.0, 0.7, 1.5}, 1.5),
        Kernel::product({Kernel::matern52({0.5, 0.5, 0.5}, 1.3, {0, 1, 2}),
                         Kernel::hamming({1.0, 1.0}, 1.0, {3, 4})}),
    };
}

} // namespace

TEST_CASE("kernel at zero distance returns the signal variance") {
    Rng rng(1);
    for (const auto& k : kernel_zoo()) {
        std::vector<double> a(5);
        for (auto& v : a) v = rng.uniform();
        double expected = 1.0;
        if (k.kind == Kernel::Kind::product) {
            for (const auto& c : k.components) expected *= c.signal_variance;
        } else {
            expected = k.signal_variance;
        }
        CHECK_THAT(kernel_eval(k, a, a), Catch::Matchers::WithinAbs(expected, 1e-12));
    }
}

TEST_CASE("hamming kernel counts weighted mismatches") {
    auto k = Kernel::hamming({1.0, 1.0, 1.0});
    std::vector<double> a{0.0, 1.0, 2.0};
    std::vector<double> b{0.0, 1.0, 3.0};  // one of three columns differs
    CHECK_THAT(kernel_eval(k, a, b), Catch::Matchers::WithinAbs(std::exp(-1.0), 1e-12));

    auto kw = Kernel::hamming({2.0, 1.0, 0.5});
    std::vector<double> c{9.0, 1.0, 3.0};  // mismatch on columns 0 and 2
    CHECK_THAT(kernel_eval(kw, a, c),
               Catch::Matchers::WithinAbs(std::exp(-(1.0 / 2.0 + 1.0 / 0.5)), 1e-12));
}

TEST_CASE("rbf and matern52 match their closed forms") {
    std::vector<double> a{0.2, 0.8};
    std::vector<double> b{0.5, 0.4};
    const double r2 = std::pow(0.3 / 0.5, 2) + std::pow(0.4 / 0.25, 2);
    CHECK_THAT(kernel_eval(Kernel::rbf({0.5, 0.25}, 2.0), a, b),
               Catch::Matchers::WithinAbs(2.0 * std::exp(-0.5 * r2), 1e-12));
    const double r = std::sqrt(r2);
    const double expected = 3.0 * (1.0 + std::sqrt(5.0) * r + 5.0 * r2 / 3.0) *
                            std::exp(-std::sqrt(5.0) * r);
    CHECK_THAT(kernel_eval(Kernel::matern52({0.5, 0.25}, 3.0), a, b),
               Catch::Matchers::WithinAbs(expected, 1e-12));
}

TEST_CASE("product kernel multiplies its components") {
    auto parts = Kernel::product({Kernel::rbf({0.5}, 1.2, {0}), Kernel::hamming({1.0}, 0.8, {1})});
    std::vector<double> a{0.1, 2.0};
    std::vector<double> b{0.7, 3.0};
    const double expected = kernel_eval(parts.components[0], a, b) *
                            kernel_eval(parts.components[1], a, b);
    CHECK_THAT(kernel_eval(parts, a, b), Catch::Matchers::WithinAbs(expected, 1e-12));
}

TEST_CASE("kernel symmetry on random pairs") {
    Rng rng(7);
    for (const auto& k : kernel_zoo()) {
        for (int t = 0; t < 20; ++t) {
            std::vector<double> a(5), b(5);
            for (auto& v : a) v = rng.uniform();
            for (auto& v : b) v = rng.uniform();
            CHECK_THAT(kernel_eval(k, a, b),
                       Catch::Matchers::WithinAbs(kernel_eval(k, b, a), 1e-12));
        }
    }
}

TEST_CASE("kernel validation rejects bad structure") {
    CHECK_THROWS_AS(Kernel::rbf({0.5}).validate(3), ValidationError);           // too few ls
    CHECK_THROWS_AS(Kernel::rbf({-1.0, 1.0, 1.0}).validate(3), ValidationError);
    CHECK_THROWS_AS(Kernel::rbf({1.0}, 1.0, {5}).validate(3), ValidationError); // col out of range
    auto overlap = Kernel::product(
        {Kernel::rbf({1.0}, 1.0, {0}), Kernel::hamming({1.0}, 1.0, {0})});
    CHECK_THROWS_AS(overlap.validate(2), ValidationError);
}

TEST_CASE("kernel matrices stay near-PSD after jitter") {
    Rng rng(11);
    for (const auto& k : kernel_zoo()) {
        auto X = random_points(20, 5, rng);
        Eigen::MatrixXd K(20, 20);
        for (int i = 0; i < 20; ++i)
            for (int j = 0; j < 20; ++j) K(i, j) = kernel_eval(k, X[i], X[j]);
        K.diagonal().array() += 1e-8;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
        CHECK(es.eigenvalues().minCoeff() >= -1e-8);
    }
}

TEST_CASE("gp_predict matches the dense-solve reference") {
    Rng rng(21);
    for (const auto& k : kernel_zoo()) {
        for (int trial = 0; trial < 12; ++trial) {
            const std::size_t n = 2 + rng.index(49);
            auto X = random_points(n, 5, rng);
            std::vector<double> y(n);
            for (auto& v : y) v = rng.uniform(-3.0, 7.0);
            const double noise = rng.uniform(1e-4, 0.05);
            auto m = gp_fit(X, y, k, noise);
            for (int q = 0; q < 5; ++q) {
                std::vector<double> query(5);
                for (auto& v : query) v = rng.uniform();
                auto [mean, var] = m.predict(query);
                auto [omean, ovar] = oracle::gp_predict(X, y, k, noise, query);
                CHECK_THAT(mean, Catch::Matchers::WithinAbs(omean, 1e-8));
                CHECK_THAT(var, Catch::Matchers::WithinAbs(ovar, 1e-8));
            }
        }
    }
}

TEST_CASE("gp interpolates training points with zero noise") {
    Rng rng(31);
    auto X = random_points(12, 3, rng);
    std::vector<double> y(12);
    for (auto& v : y) v = rng.uniform(0.0, 10.0);
    auto m = gp_fit(X, y, Kernel::rbf({0.5, 0.5, 0.5}), 0.0);
    for (std::size_t i = 0; i < X.size(); ++i) {
        auto [mean, var] = m.predict(X[i]);
        CHECK_THAT(mean, Catch::Matchers::WithinAbs(y[i], 1e-6));
        CHECK(var >= 0.0);
        CHECK(var <= 1e-8);
    }
}

TEST_CASE("gp single-point fit predicts that point") {
    auto m = gp_fit({{0.4, 0.6}}, {5.0}, Kernel::rbf({1.0, 1.0}), 0.0);
    auto [mean, var] = m.predict(std::vector<double>{0.4, 0.6});
    CHECK_THAT(mean, Catch::Matchers::WithinAbs(5.0, 1e-9));
    CHECK(var <= 1e-8);
}

TEST_CASE("gp empty fit is the prior") {
    auto m = gp_fit({}, {}, Kernel::rbf({0.5, 0.5}, 2.5), 1e-3);
    auto [mean, var] = m.predict(std::vector<double>{0.3, 0.9});
    CHECK(mean == 0.0);
    CHECK_THAT(var, Catch::Matchers::WithinAbs(2.5, 1e-12));
}

TEST_CASE("gp duplicated rows never crash") {
    std::vector<std::vector<double>> X(6, {0.5, 0.5});
    std::vector<double> y{1.0, 1.0, 1.0, 2.0, 2.0, 2.0};
    try {
        auto m = gp_fit(X, y, Kernel::rbf({0.5, 0.5}), 0.0);
        auto [mean, var] = m.predict(std::vector<double>{0.5, 0.5});
        CHECK(std::isfinite(mean));
        CHECK(var >= 0.0);
    } catch (const ConditioningError&) {
        SUCCEED("conditioning failure reported cleanly");
    }
}

TEST_CASE("gp variance is nonnegative everywhere") {
    Rng rng(41);
    auto X = random_points(30, 4, rng);
    std::vector<double> y(30);
    for (auto& v : y) v = rng.uniform(-1.0, 1.0);
    auto m = gp_fit(X, y, Kernel::matern52({0.3, 0.3, 0.3, 0.3}), 1e-6);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> q(4);
        for (auto& v : q) v = rng.uniform();
        auto [mean, var] = m.predict(q);
        CHECK(var >= 0.0);
    }
}

TEST_CASE("gp leave-one-out closed form matches refitting") {
    Rng rng(51);
    auto X = random_points(12, 2, rng);
    std::vector<double> y(12);
    for (std::size_t i = 0; i < 12; ++i)
        y[i] = std::sin(3.0 * X[i][0]) + X[i][1] + 0.1 * rng.normal();
    const auto kernel = Kernel::rbf({0.4, 0.4}, 1.5);
    const double noise = 1e-2;
    auto m = gp_fit(X, y, kernel, noise);
    auto loo = m.loo_predictions();
    REQUIRE(loo.size() == 12);
    for (std::size_t i = 0; i < 12; ++i) {
        std::vector<std::vector<double>> Xi;
        std::vector<double> yi;
        for (std::size_t j = 0; j < 12; ++j) {
            if (j == i) continue;
            Xi.push_back(X[j]);
            yi.push_back(y[j]);
        }
        // Refit without standardization drift: compare in the full model's
        // standardized frame by refitting on raw values with the same hypers.
        auto mi = gp_fit(Xi, yi, kernel, noise);
        auto [mean_i, var_i] = mi.predict(X[i]);
        // The closed form conditions on the full standardization; refit
        // standardizes on 11 points. Allow the small resulting slack.
        CHECK_THAT(loo[i].first, Catch::Matchers::WithinAbs(mean_i, 0.2));
        CHECK(loo[i].second > 0.0);
    }
}

TEST_CASE("hyperparameter search recovers a known lengthscale") {
    // Draw a function from an RBF GP with lengthscale 0.5 on 30 points.
    Rng rng(61);
    auto X = random_points(30, 1, rng);
    Eigen::MatrixXd K(30, 30);
    const auto truth = Kernel::rbf({0.5});
    for (int i = 0; i < 30; ++i)
        for (int j = 0; j < 30; ++j) K(i, j) = kernel_eval(truth, X[i], X[j]);
    K.diagonal().array() += 1e-8;
    Eigen::LLT<Eigen::MatrixXd> llt(K);
    REQUIRE(llt.info() == Eigen::Success);
    Eigen::VectorXd z(30);
    for (int i = 0; i < 30; ++i) z(i) = rng.normal();
    Eigen::VectorXd f = llt.matrixL() * z;
    std::vector<double> y(30);
    for (int i = 0; i < 30; ++i) y[i] = f(i);

    auto result = gp_fit_hypers(X, y, Kernel::rbf({1.0}), 17);
    const double recovered = result.kernel.lengthscales[0];
    CHECK(recovered >= 0.25);
    CHECK(recovered <= 1.0);
}

TEST_CASE("hyperparameter search is deterministic and handles constant targets") {
    Rng rng(71);
    auto X = random_points(10, 2, rng);
    std::vector<double> y(10, 4.2);
    auto a = gp_fit_hypers(X, y, Kernel::rbf({1.0, 1.0}), 5);
    auto b = gp_fit_hypers(X, y, Kernel::rbf({1.0, 1.0}), 5);
    CHECK(a.kernel.lengthscales == b.kernel.lengthscales);
    CHECK(a.noise == b.noise);

    auto m = gp_fit(X, y, a.kernel, a.noise);
    for (int t = 0; t < 10; ++t) {
        std::vector<double> q{rng.uniform(), rng.uniform()};
        auto [mean, var] = m.predict(q);
        CHECK_THAT(mean, Catch::Matchers::WithinAbs(4.2, 1e-6));
    }
}

TEST_CASE("forest fits constants exactly") {
    Rng rng(81);
    auto X = random_points(20, 3, rng);
    std::vector<double> y(20, 7.0);
    auto m = rf_fit(X, y, {}, {.n_trees = 10}, 3);
    for (int t = 0; t < 20; ++t) {
        std::vector<double> q{rng.uniform(), rng.uniform(), rng.uniform()};
        auto [mean, var] = m.predict(q);
        CHECK(mean == 7.0);
        CHECK(var == 0.0);
    }
}

TEST_CASE("forest root splits latch onto the informative column") {
    Rng rng(91);
    auto X = random_points(200, 2, rng);
    std::vector<double> y(200);
    for (std::size_t i = 0; i < 200; ++i) y[i] = 10.0 * X[i][0] + 0.01 * rng.normal();
    auto m = rf_fit(X, y, {}, {.n_trees = 50, .feature_fraction = 1.0}, 5);
    std::size_t on_x1 = 0;
    for (const auto& tree : m.trees())
        if (!tree[0].leaf && tree[0].column == 0) ++on_x1;
    CHECK(on_x1 >= 45);  // >= 90% of 50 root splits
}

TEST_CASE("memorizing tree reproduces its training targets") {
    Rng rng(101);
    auto X = random_points(30, 2, rng);
    std::vector<double> y(30);
    for (auto& v : y) v = rng.uniform(-5.0, 5.0);
    auto m = rf_fit(X, y, {}, {.n_trees = 1, .bootstrap = false}, 9);
    for (std::size_t i = 0; i < 30; ++i) {
        auto [mean, var] = m.predict(X[i]);
        CHECK_THAT(mean, Catch::Matchers::WithinAbs(y[i], 1e-9));
        CHECK(var == 0.0);
    }
}

TEST_CASE("forest mean and variance equal brute-force tree statistics") {
    Rng rng(111);
    auto X = random_points(60, 3, rng);
    std::vector<double> y(60);
    for (std::size_t i = 0; i < 60; ++i) y[i] = X[i][0] * X[i][1] + std::cos(4.0 * X[i][2]);
    auto m = rf_fit(X, y, {}, {.n_trees = 25}, 13);
    for (int t = 0; t < 30; ++t) {
        std::vector<double> q{rng.uniform(), rng.uniform(), rng.uniform()};
        auto preds = m.tree_predictions(q);
        double mean = 0.0;
        for (double p : preds) mean += p;
        mean /= static_cast<double>(preds.size());
        double var = 0.0;
        for (double p : preds) var += (p - mean) * (p - mean);
        var /= static_cast<double>(preds.size());
        auto [pm, pv] = m.predict(q);
        CHECK(pm == mean);
        CHECK(pv == var);
    }
}

TEST_CASE("forest variance semantics on tiny hand ensembles") {
    // Two trees predicting 1 and 3 => mean 2, population variance 1. Force
    // the shape with single-leaf trees over two disjoint bootstrap draws.
    Rng rng(121);
    std::vector<std::vector<double>> X{{0.0}, {1.0}};
    std::vector<double> y{1.0, 3.0};
    // Direct check of the statistic itself on a synthetic prediction pair:
    std::vector<double> preds{1.0, 3.0};
    double mean = (preds[0] + preds[1]) / 2.0;
    double var = ((preds[0] - mean) * (preds[0] - mean) +
                  (preds[1] - mean) * (preds[1] - mean)) / 2.0;
    CHECK(mean == 2.0);
    CHECK(var == 1.0);
    // And the degenerate rule: a single tree always has variance zero.
    auto m = rf_fit(X, y, {}, {.n_trees = 1, .bootstrap = false}, 1);
    auto [pm, pv] = m.predict(std::vector<double>{0.0});
    CHECK(pv == 0.0);
}

TEST_CASE("forest splits categorical columns by subset membership") {
    Rng rng(131);
    // Column 1 is categorical with 4 levels; levels {0,2} shift y by +10.
    std::vector<std::vector<double>> X;
    std::vector<double> y;
    for (int i = 0; i < 200; ++i) {
        const double cat = static_cast<double>(rng.index(4));
        X.push_back({rng.uniform(), cat});
        y.push_back((cat == 0.0 || cat == 2.0 ? 10.0 : 0.0) + 0.01 * rng.normal());
    }
    auto m = rf_fit(X, y, {ColumnKind::numeric, ColumnKind::categorical},
                    {.n_trees = 20, .feature_fraction = 1.0}, 7);
    auto [hi, hv] = m.predict(std::vector<double>{0.5, 2.0});
    auto [lo, lv] = m.predict(std::vector<double>{0.5, 3.0});
    CHECK(hi > 8.0);
    CHECK(lo < 2.0);
}

TEST_CASE("forest serialization round-trips predictions exactly") {
    Rng rng(141);
    std::vector<std::vector<double>> X;
    std::vector<double> y;
    for (int i = 0; i < 120; ++i) {
        X.push_back({rng.uniform(), rng.uniform(), static_cast<double>(rng.index(3))});
        y.push_back(3.0 * X.back()[0] - X.back()[1] + (X.back()[2] == 1.0 ? 2.0 : 0.0));
    }
    auto m = rf_fit(X, y, {ColumnKind::numeric, ColumnKind::numeric, ColumnKind::categorical},
                    {.n_trees = 30}, 23);
    auto doc = m.to_json();
    auto text = doc.dump();
    auto loaded = ForestModel::from_json(nlohmann::json::parse(text));
    for (int t = 0; t < 100; ++t) {
        std::vector<double> q{rng.uniform(), rng.uniform(), static_cast<double>(rng.index(3))};
        auto [m1, v1] = m.predict(q);
        auto [m2, v2] = loaded.predict(q);
        CHECK(m1 == m2);
        CHECK(v1 == v2);
    }
}

TEST_CASE("forest determinism per seed") {
    Rng rng(151);
    auto X = random_points(50, 3, rng);
    std::vector<double> y(50);
    for (auto& v : y) v = rng.uniform(0.0, 1.0);
    auto a = rf_fit(X, y, {}, {.n_trees = 10}, 77);
    auto b = rf_fit(X, y, {}, {.n_trees = 10}, 77);
    CHECK(a.to_json() == b.to_json());
    auto c = rf_fit(X, y, {}, {.n_trees = 10}, 78);
    CHECK(a.to_json() != c.to_json());
}

namespace {

History make_history(const ConfigSpace& space, const std::vector<double>& xs,
                     const std::vector<double>& ys, Sense sense = Sense::minimize) {
    History h;
    h.sense = sense;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        Observation o;
        o.config.values = {KnobValue{xs[i]}};
        o.value = ys[i];
        h.append(o);
    }
    return h;
}

} // namespace

TEST_CASE("tpe quantile split sizes the good set by ceil(gamma n)") {
    ConfigSpace space("s", {KnobSpec::make_continuous("x", 0.0, 1.0, 0.5)});
    auto h = make_history(space, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8},
                          {8, 7, 6, 5, 4, 3, 2, 1});
    auto pair = tpe_fit(space, h, 0.25);
    const auto& good = std::get<ParzenPair::NumericDensity>(pair.good[0]);
    const auto& bad = std::get<ParzenPair::NumericDensity>(pair.bad[0]);
    CHECK(good.centers.size() == 2);  // ceil(0.25 * 8)
    CHECK(bad.centers.size() == 6);
    // minimize: best two are y=1 (x=0.8) and y=2 (x=0.7)
    CHECK_THAT(good.centers[0], Catch::Matchers::WithinAbs(0.8, 1e-12));
    CHECK_THAT(good.centers[1], Catch::Matchers::WithinAbs(0.7, 1e-12));
}

TEST_CASE("tpe tie split falls back to observation order") {
    ConfigSpace space("s", {KnobSpec::make_continuous("x", 0.0, 1.0, 0.5)});
    auto h = make_history(space, {0.1, 0.2, 0.3, 0.4}, {5, 5, 5, 5});
    auto pair = tpe_fit(space, h, 0.25);
    const auto& good = std::get<ParzenPair::NumericDensity>(pair.good[0]);
    REQUIRE(good.centers.size() == 1);
    CHECK_THAT(good.centers[0], Catch::Matchers::WithinAbs(0.1, 1e-12));  // first observed
}

TEST_CASE("tpe categorical frequencies are smoothed and sum to one") {
    ConfigSpace space("s", {KnobSpec::make_categorical("c", {"a", "b", "z"}, "a")});
    History h;
    h.sense = Sense::minimize;
    for (int i = 0; i < 10; ++i) {
        Observation o;
        o.config.values = {KnobValue{std::string{i < 9 ? "a" : "b"}}};
        o.value = static_cast<double>(i);
        h.append(o);
    }
    auto pair = tpe_fit(space, h, 0.3);
    for (const auto* side : {&pair.good, &pair.bad}) {
        const auto& d = std::get<ParzenPair::CategoricalDensity>((*side)[0]);
        double total = 0.0;
        for (double p : d.probs) {
            CHECK(p > 0.0);  // smoothing keeps unseen categories alive
            total += p;
        }
        CHECK_THAT(total, Catch::Matchers::WithinAbs(1.0, 1e-12));
    }
}

TEST_CASE("parzen numeric densities integrate to one") {
    ConfigSpace space("s", {KnobSpec::make_continuous("x", 0.0, 1.0, 0.5)});
    auto h = make_history(space, {0.05, 0.2, 0.35, 0.5, 0.6, 0.75, 0.9, 0.97},
                          {1, 2, 3, 4, 5, 6, 7, 8});
    auto pair = tpe_fit(space, h, 0.5);
    for (const auto* side : {&pair.good, &pair.bad}) {
        const auto& d = std::get<ParzenPair::NumericDensity>((*side)[0]);
        // Trapezoid quadrature fine enough for the bandwidth floor.
        const std::size_t grid = 200001;
        double integral = 0.0;
        double prev = d.density(0.0);
        for (std::size_t i = 1; i < grid; ++i) {
            const double u = static_cast<double>(i) / (grid - 1);
            const double cur = d.density(u);
            integral += 0.5 * (prev + cur) / (grid - 1);
            prev = cur;
        }
        CHECK_THAT(integral, Catch::Matchers::WithinAbs(1.0, 1e-3));
    }
}

TEST_CASE("tpe score favors the good mode and stays finite") {
    ConfigSpace space("s", {KnobSpec::make_continuous("x", 0.0, 1.0, 0.5)});
    // Good observations cluster near 0.2, bad near 0.8.
    auto h = make_history(space, {0.18, 0.2, 0.22, 0.78, 0.8, 0.82, 0.79, 0.81},
                          {1, 2, 3, 10, 11, 12, 13, 14});
    auto pair = tpe_fit(space, h, 0.375);
    Configuration at_good, at_bad;
    at_good.values = {KnobValue{0.2}};
    at_bad.values = {KnobValue{0.8}};
    CHECK(tpe_score(pair, at_good) > 1.0);
    CHECK(tpe_score(pair, at_bad) < 1.0);
    for (double x : {0.0, 0.1, 0.5, 0.9, 1.0}) {
        Configuration c;
        c.values = {KnobValue{x}};
        CHECK(std::isfinite(tpe_score(pair, c)));
    }
}

TEST_CASE("tpe score is one when both densities coincide") {
    ConfigSpace space("s", {KnobSpec::make_continuous("x", 0.0, 1.0, 0.5)});
    // gamma=0.5 on symmetric duplicate values: good and bad get mirrored
    // member sets {0.3, 0.7} each, so l = g everywhere.
    auto h = make_history(space, {0.3, 0.7, 0.3, 0.7}, {1, 1, 2, 2});
    auto pair = tpe_fit(space, h, 0.5);
    for (double x : {0.1, 0.3, 0.5, 0.7, 0.95}) {
        Configuration c;
        c.values = {KnobValue{x}};
        CHECK_THAT(tpe_score(pair, c), Catch::Matchers::WithinAbs(1.0, 1e-9));
    }
}

TEST_CASE("tpe sampling respects the space and the seed") {
    ConfigSpace space("s", {KnobSpec::make_continuous("x", 0.0, 1.0, 0.5),
                            KnobSpec::make_integer("n", 0, 9, 4),
                            KnobSpec::make_categorical("c", {"u", "v"}, "u")});
    History h;
    h.sense = Sense::minimize;
    Rng gen(3);
    for (int i = 0; i < 12; ++i) {
        Observation o;
        o.config.values = {KnobValue{gen.uniform()},
                           KnobValue{static_cast<std::int64_t>(gen.index(10))},
                           KnobValue{std::string{gen.index(2) == 0 ? "u" : "v"}}};
        o.value = static_cast<double>(i);
        h.append(o);
    }
    auto pair = tpe_fit(space, h, 0.25);
    Rng r1(9), r2(9);
    for (int i = 0; i < 20; ++i) {
        auto c1 = tpe_sample_good(pair, r1);
        auto c2 = tpe_sample_good(pair, r2);
        REQUIRE(space.valid(c1));
        CHECK(c1 == c2);
    }
}

TEST_CASE("tpe_fit refuses degenerate histories") {
    ConfigSpace space("s", {KnobSpec::make_continuous("x", 0.0, 1.0, 0.5)});
    auto h = make_history(space, {0.5}, {1.0});
    CHECK_THROWS_AS(tpe_fit(space, h, 0.25), ValidationError);
}
