#include "survtest/error.hpp"
#include "survtest/features.hpp"
#include "survtest/metrics.hpp"
#include "survtest/model.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

using namespace survtest;

namespace {

CensoredSample sample_with(std::size_t n, std::size_t censored, std::uint64_t seed) {
    RandomStream rng(seed);
    std::vector<double> t(n);
    std::vector<std::uint8_t> f(n, 0);
    for (auto& v : t) v = -std::log(rng.uniform());
    for (std::size_t i = 0; i < censored; ++i) f[i] = 1;
    return CensoredSample::from_unsorted(std::move(t), std::move(f));
}

// Feature 0 carries the label via `signal`; the rest is uniform noise.
TrainingSet toy_set(std::size_t rows, std::uint64_t seed, double (*signal)(int, RandomStream&)) {
    RandomStream rng(seed);
    TrainingSet d;
    for (std::size_t i = 0; i < rows; ++i) {
        const int y = static_cast<int>(i % 2);
        FeatureVector f;
        for (auto& v : f.values) v = rng.uniform();
        f.values[0] = signal(y, rng);
        d.add(f, y);
    }
    return d;
}

double separable(int y, RandomStream& rng) { return y + 0.2 + 0.5 * rng.uniform(); }
double noisy(int y, RandomStream& rng) { return y + 1.5 * (rng.uniform() - 0.5) * 2; }

Model zero_logreg() {
    TrainingSet d = toy_set(200, 1, separable);
    Model m = train_logreg(d);
    m.intercept = 0;
    std::fill(m.weights.begin(), m.weights.end(), 0.0);
    return m;
}

}  // namespace

TEST_CASE("feature layout") {
    const auto names = feature_names();
    REQUIRE(names.size() == 21);
    CHECK(names[0] == "peto_pv");
    CHECK(names[9] == "wkm_pv");
    CHECK(names[10] == "q_test");
    CHECK(names[11] == "max_test");
    CHECK(names[12] == "min3");
    CHECK(names[13] == "n_small");
    CHECK(names[20] == "r_high");
    CHECK(feature_checksum() == feature_checksum());
    CHECK(feature_checksum().size() == 16);
}

TEST_CASE("bin indicators follow the sample sizes and pooled rate") {
    // 15 censored of 150 pooled gives r = 0.1.
    const auto f = build_features(sample_with(75, 8, 1), sample_with(75, 7, 2));
    CHECK(f.values[14] == 1.0);  // (50, 100]
    CHECK(f.values[18] == 1.0);  // (0, 0.15]
    CHECK(std::accumulate(f.values.begin() + 13, f.values.begin() + 17, 0.0) == 1.0);
    CHECK(std::accumulate(f.values.begin() + 17, f.values.end(), 0.0) == 1.0);

    const auto g = build_features(sample_with(20, 0, 3), sample_with(20, 0, 4));
    CHECK(g.values[13] == 1.0);
    CHECK(g.values[17] == 1.0);
    CHECK(std::accumulate(g.values.begin() + 13, g.values.end(), 0.0) == 2.0);
}

TEST_CASE("feature ranges on random samples") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto f = build_features(sample_with(30 + seed, seed % 10, seed * 2 + 1), sample_with(40, 5, seed * 2 + 2));
        for (std::size_t k = 0; k < 10; ++k) {
            CHECK(f.values[k] >= 0.0);
            CHECK(f.values[k] <= 1.0);
        }
        CHECK(f.values[12] >= 0.0);
        CHECK(f.values[12] <= 1.0);
        CHECK(f.values[11] >= 0.0);
        CHECK(f.degenerate_mask == 0);
    }
}

TEST_CASE("degenerate tests take conservative fills") {
    const std::vector<double> t = {1, 2, 3};
    const std::vector<int> c = {1, 1, 1};
    const auto s = CensoredSample::make(t, c);
    const auto f = build_features(s, s);
    CHECK(f.degenerate_mask == (1u << 13) - 1);
    for (std::size_t k = 0; k < 10; ++k) CHECK(f.values[k] == 1.0);
    CHECK(f.values[10] == 0.0);
    CHECK(f.values[11] == 0.0);
    CHECK(f.values[12] == 1.0);
}

TEST_CASE("rank-based features are invariant under increasing time transforms") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto a = sample_with(40, 10, 100 + seed), b = sample_with(35, 6, 200 + seed);
        auto transform = [](const CensoredSample& s) {
            std::vector<double> t(s.times().begin(), s.times().end());
            for (auto& v : t) v = std::exp(3 * v) + 2;
            return CensoredSample::from_unsorted(t, std::vector<std::uint8_t>(s.flags().begin(), s.flags().end()));
        };
        const auto f = build_features(a, b), g = build_features(transform(a), transform(b));
        for (std::size_t k = 0; k < kFeatureCount; ++k) {
            if (k == 9 || k == 12) continue;  // wkm_pv and min3 integrate over time
            CHECK(f.values[k] == doctest::Approx(g.values[k]).epsilon(1e-9));
        }
    }
}

TEST_CASE("logreg separates a separable set") {
    const auto d = toy_set(400, 11, separable);
    const auto m = train_logreg(d, {1e-4, 100, 1e-8});
    CHECK(accuracy(m, d) == 1.0);
}

TEST_CASE("logreg solution satisfies the penalized score equations") {
    const auto d = toy_set(2000, 12, noisy);
    const LogregParams params{1e-3, 100, 1e-10};
    const auto m = train_logreg(d, params);
    std::array<double, kFeatureCount + 1> grad{};
    for (std::size_t i = 0; i < d.rows(); ++i) {
        const double r = predict(m, d.row(i)) - d.y[i];
        grad[0] += r;
        for (std::size_t j = 0; j < kFeatureCount; ++j) grad[j + 1] += r * (d.row(i)[j] - m.mean[j]) / m.scale[j];
    }
    CHECK(std::fabs(grad[0] / static_cast<double>(d.rows())) < 1e-9);
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
        CHECK(std::fabs(grad[j + 1] / static_cast<double>(d.rows()) + params.l2 * m.weights[j]) < 1e-9);
    }
    CHECK(m.weights[0] > 0);
}

TEST_CASE("logreg on constant features predicts the class prior") {
    TrainingSet d;
    FeatureVector f;
    f.values.fill(0.25);
    for (int i = 0; i < 100; ++i) d.add(f, i < 30 ? 1 : 0);
    const auto m = train_logreg(d);
    for (std::size_t i = 0; i < d.rows(); ++i) CHECK(std::fabs(predict(m, d.row(i)) - 0.3) < 1e-9);
    CHECK(evaluate(m, d).roc_auc.value == 0.5);
}

TEST_CASE("logreg training validation") {
    TrainingSet empty;
    CHECK_THROWS_AS(train_logreg(empty), TrainingError);
    auto d = toy_set(50, 2, noisy);
    CHECK_THROWS_AS(train_logreg(d, {1e-4, 1, 1e-8}), TrainingError);
    d.y[0] = 2;
    CHECK_THROWS_AS(train_logreg(d), TrainingError);
}

TEST_CASE("zero-weight logreg predicts one half; positive weights are monotone") {
    const auto m = zero_logreg();
    RandomStream rng(5);
    std::array<double, kFeatureCount> x{};
    for (int i = 0; i < 20; ++i) {
        for (auto& v : x) v = rng.uniform() * 10 - 5;
        CHECK(predict(m, x) == 0.5);
    }
    const auto fitted = train_logreg(toy_set(500, 3, noisy));
    REQUIRE(fitted.weights[0] > 0);
    double prev = 0;
    for (int k = 0; k <= 20; ++k) {
        x[0] = -2 + 0.2 * k;
        const double p = predict(fitted, x);
        CHECK(p > prev);
        CHECK(p < 1.0);
        prev = p;
    }
}

TEST_CASE("gbt learns XOR where logreg cannot") {
    TrainingSet d;
    for (int i = 0; i < 800; ++i) {
        FeatureVector f;
        const int a = (i / 2) % 2, b = (i / 4) % 2;
        f.values[3] = a;
        f.values[7] = b;
        d.add(f, a ^ b);
    }
    const auto gbt = train_gbt(d, {50, 2, 0.3, 5, 1.0});
    CHECK(accuracy(gbt, d) > 0.95);
    const auto lr = train_logreg(d);
    CHECK(accuracy(lr, d) < 0.6);
}

TEST_CASE("depth-one tree picks the brute-force optimal split") {
    const auto d = toy_set(300, 21, noisy);
    const double lambda = 1.0;
    const auto m = train_gbt(d, {1, 1, 1.0, 1, lambda});
    REQUIRE(m.trees.size() == 1);
    const auto& root = m.trees[0].nodes[0];

    const double prior = std::accumulate(d.y.begin(), d.y.end(), 0.0) / static_cast<double>(d.rows());
    double best_gain = -1, best_threshold = 0;
    int best_feature = -1;
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
        std::vector<double> values;
        for (std::size_t i = 0; i < d.rows(); ++i) values.push_back(d.row(i)[j]);
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        for (std::size_t k = 0; k + 1 < values.size(); ++k) {
            double gl = 0, hl = 0, g = 0, h = 0;
            for (std::size_t i = 0; i < d.rows(); ++i) {
                const double gi = prior - d.y[i], hi = prior * (1 - prior);
                g += gi;
                h += hi;
                if (d.row(i)[j] <= values[k]) {
                    gl += gi;
                    hl += hi;
                }
            }
            const double gain = gl * gl / (hl + lambda) + (g - gl) * (g - gl) / (h - hl + lambda) - g * g / (h + lambda);
            if (gain > best_gain + 1e-12) {
                best_gain = gain;
                best_feature = static_cast<int>(j);
                best_threshold = values[k];
            }
        }
    }
    CHECK(root.feature == best_feature);
    CHECK(root.threshold == best_threshold);
}

TEST_CASE("gbt is deterministic and stops when no split gains") {
    const auto d = toy_set(400, 4, noisy);
    CHECK(to_json_text(train_gbt(d, {20, 3, 0.1, 10, 1})) == to_json_text(train_gbt(d, {20, 3, 0.1, 10, 1})));

    TrainingSet flat;
    FeatureVector f;
    f.values.fill(1.0);
    for (int i = 0; i < 100; ++i) flat.add(f, i % 2);
    const auto m = train_gbt(flat, {10, 3, 0.1, 5, 1});
    REQUIRE(m.trees.size() == 1);
    CHECK(m.trees[0].nodes.size() == 1);
    CHECK(predict(m, flat.row(0)) == doctest::Approx(0.5));
}

TEST_CASE("validation truncation keeps the best prefix") {
    const auto train = toy_set(600, 5, noisy), validation = toy_set(400, 6, noisy);
    const auto m = train_gbt(train, {60, 3, 0.2, 20, 1}, &validation);
    CHECK(m.trees.size() <= 60);
    CHECK(m.trees.size() >= 1);
    CHECK(std::stod(m.metadata.at("validation_accuracy")) == accuracy(m, validation));
}

TEST_CASE("model files round-trip to bit-identical predictions") {
    const auto d = toy_set(600, 7, noisy);
    for (const auto& m : {train_logreg(d), train_gbt(d, {30, 3, 0.1, 10, 1})}) {
        const auto back = model_from_json_text(to_json_text(m));
        CHECK(to_json_text(back) == to_json_text(m));
        CHECK(model_id(back) == model_id(m));
        RandomStream rng(77);
        for (int i = 0; i < 100; ++i) {
            std::array<double, kFeatureCount> x{};
            for (auto& v : x) v = rng.uniform() * 3 - 1;
            CHECK(predict(back, x) == predict(m, x));
        }
    }
}

TEST_CASE("imported model files use the same schema") {
    auto m = train_logreg(toy_set(300, 8, noisy));
    m.kind = ModelKind::imported;
    const auto back = model_from_json_text(to_json_text(m));
    CHECK(back.kind == ModelKind::imported);
    CHECK(predict(back, std::span<const double>(toy_set(1, 9, noisy).row(0))) ==
          predict(m, std::span<const double>(toy_set(1, 9, noisy).row(0))));
}

TEST_CASE("incompatible model files are rejected") {
    const auto m = train_logreg(toy_set(300, 8, noisy));
    auto text = to_json_text(m);
    auto bad_checksum = text;
    bad_checksum.replace(bad_checksum.find(m.feature_checksum), 16, "0000000000000000");
    CHECK_THROWS_AS(model_from_json_text(bad_checksum), IncompatibleModel);
    auto bad_order = text;
    bad_order.replace(bad_order.find("\"peto_pv\""), 9, "\"gehan_x\"");
    CHECK_THROWS_AS(model_from_json_text(bad_order), IncompatibleModel);
    CHECK_THROWS_AS(model_from_json_text("{}"), IncompatibleModel);
    CHECK_THROWS_AS(model_from_json_text("not json"), IncompatibleModel);
}

TEST_CASE("ml p-values and decisions") {
    const auto m = zero_logreg();
    EmpiricalNull t;
    t.statistic = ml_statistic_name(m);
    t.bins = {SizeBin::Small, CensoringBin::None};
    for (int i = 1; i <= 999; ++i) t.values.push_back(i / 1000.0);
    const double n = static_cast<double>(t.size());
    CHECK(std::fabs(ml_p_value(m, 0.0, t.bins, t) - 1.0) <= 1 / (n + 1));
    CHECK(std::fabs(ml_p_value(m, 0.5, t.bins, t) - 0.5) <= 1 / n);
    double prev = 2;
    for (int k = 0; k <= 50; ++k) {
        const double p = ml_p_value(m, k / 50.0, t.bins, t);
        CHECK(p <= prev);
        prev = p;
    }
    CHECK_THROWS_AS(ml_p_value(m, 0.5, {SizeBin::Low, CensoringBin::None}, t), CalibrationRequired);
    auto other = t;
    other.statistic = "ml:0000000000000000";
    CHECK_THROWS_AS(ml_p_value(m, 0.5, t.bins, other), CalibrationRequired);

    CHECK(decide(0.04, 0.05));
    CHECK_FALSE(decide(0.05, 0.05));
    CHECK_FALSE(decide(0.0, 0.0));
}

TEST_CASE("ml statistic evaluates the model on built features") {
    const auto m = train_logreg(toy_set(300, 8, noisy));
    const auto stat = ml_statistic(m);
    CHECK(stat.name == ml_statistic_name(m));
    const TwoSampleData data(sample_with(30, 3, 1), sample_with(30, 4, 2));
    CHECK(stat.evaluate(data) == predict(m, build_features(data)));
}

TEST_CASE("metrics against reference values") {
    const std::vector<double> s = {0.9, 0.8, 0.8, 0.7, 0.6, 0.55, 0.5, 0.4, 0.3, 0.3, 0.2, 0.1};
    const std::vector<int> y = {1, 1, 0, 1, 0, 1, 0, 0, 1, 0, 0, 0};
    // scikit-learn average_precision_score and roc_auc_score
    CHECK(average_precision(s, y) == doctest::Approx(0.7166666666666666).epsilon(1e-12));
    CHECK(roc_auc(s, y) == doctest::Approx(0.7714285714285715).epsilon(1e-12));

    const auto m = compute_metrics(s, y, 0.5);
    // threshold 0.5: TP 4, FP 3, FN 1, TN 4
    CHECK(m.accuracy.value == doctest::Approx(8.0 / 12));
    CHECK(m.accuracy.value == doctest::Approx(1 - 4.0 / 12));
    CHECK(m.precision.value == doctest::Approx(4.0 / 7));
    CHECK(m.recall.value == doctest::Approx(4.0 / 5));
    CHECK(m.specificity.value == doctest::Approx(4.0 / 7));
    CHECK(m.prop_without_fn.value == doctest::Approx(11.0 / 12));
    for (const auto* e : {&m.accuracy, &m.precision, &m.recall, &m.specificity, &m.roc_auc, &m.average_precision,
                          &m.prop_without_fn}) {
        CHECK(e->lo <= e->value);
        CHECK(e->value <= e->hi);
        CHECK(e->lo >= 0.0);
        CHECK(e->hi <= 1.0);
    }
}

TEST_CASE("perfect and random predictors") {
    std::vector<double> s;
    std::vector<int> y;
    for (int i = 0; i < 100; ++i) {
        y.push_back(i % 2);
        s.push_back(i % 2 ? 0.9 : 0.1);
    }
    const auto perfect = compute_metrics(s, y);
    CHECK(perfect.accuracy.value == 1.0);
    CHECK(perfect.roc_auc.value == 1.0);
    CHECK(perfect.average_precision.value == 1.0);

    RandomStream rng(3);
    s.clear();
    y.clear();
    for (int i = 0; i < 10000; ++i) {
        y.push_back(i % 2);
        s.push_back(rng.uniform());
    }
    const auto random = compute_metrics(s, y);
    CHECK(std::fabs(random.accuracy.value - 0.5) < 0.02);
    CHECK(std::fabs(random.roc_auc.value - 0.5) < 0.02);

    CHECK_THROWS_AS(compute_metrics(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), DomainError);
}

TEST_CASE("auc equals the pair-counting definition") {
    RandomStream rng(4);
    std::vector<double> s;
    std::vector<int> y;
    for (int i = 0; i < 300; ++i) {
        y.push_back(rng.uniform() < 0.4);
        s.push_back(std::floor(rng.uniform() * 20) / 20);  // heavy ties
    }
    double wins = 0, pairs = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[i] != 1 || y[j] != 0) continue;
            pairs += 1;
            wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
        }
    }
    CHECK(roc_auc(s, y) == doctest::Approx(wins / pairs).epsilon(1e-12));
}

TEST_CASE("permutation importance") {
    const auto d = toy_set(2000, 31, noisy);
    auto m = train_logreg(d);
    m.weights[5] = 0.0;
    const auto imp = permutation_importance(m, d, 3, 10);
    REQUIRE(imp.size() == kFeatureCount);
    CHECK(imp.front().feature == "peto_pv");
    for (const auto& i : imp) {
        if (i.feature == feature_names()[5]) CHECK(std::fabs(i.mean_drop) <= 0.002);
    }
    const auto again = permutation_importance(m, d, 3, 10);
    for (std::size_t k = 0; k < imp.size(); ++k) CHECK(again[k].mean_drop == imp[k].mean_drop);
    CHECK_THROWS_AS(permutation_importance(m, d, 2, 10), ParameterError);
}

TEST_CASE("duplicated informative feature splits its importance") {
    const auto single = toy_set(3000, 41, noisy);
    auto twin = single;
    for (std::size_t i = 0; i < twin.rows(); ++i) twin.x[i * kFeatureCount + 1] = twin.x[i * kFeatureCount];
    const auto drop_of = [](const std::vector<Importance>& v, std::size_t j) {
        return std::find_if(v.begin(), v.end(), [&](const Importance& i) { return i.feature == feature_names()[j]; })->mean_drop;
    };
    const auto a = permutation_importance(train_logreg(single), single, 5, 1);
    const auto b = permutation_importance(train_logreg(twin), twin, 5, 1);
    CHECK(drop_of(b, 0) < drop_of(a, 0));
    CHECK(drop_of(b, 1) < drop_of(a, 0));
}
