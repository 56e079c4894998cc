#include "oracles.hpp"

#include "survtest/distributions.hpp"
#include "survtest/error.hpp"
#include "survtest/two_sample_tests.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace survtest;

namespace {

CensoredSample make(std::vector<double> t, std::vector<int> f) { return CensoredSample::make(t, f); }

CensoredSample uncensored(std::vector<double> t) { return make(t, std::vector<int>(t.size(), 0)); }

// Random censored sample; `grain` > 0 rounds times to force ties.
CensoredSample random_sample(RandomStream& r, int n, const DistSpec& life, double censor_rate, double grain = 0) {
    std::vector<double> t(n);
    std::vector<int> f(n);
    for (int i = 0; i < n; ++i) {
        double x = sample(life, r);
        const double c = sample({Family::Exp, 0, censor_rate > 0 ? censor_rate : 1}, r);
        f[i] = censor_rate > 0 && c < x ? 1 : 0;
        if (f[i]) x = c;
        if (grain > 0) x = std::round(x / grain) * grain + grain;
        t[i] = x;
    }
    return make(t, f);
}

CensoredSample transformed(const CensoredSample& s) {
    std::vector<double> t(s.times().begin(), s.times().end());
    for (auto& x : t) x = std::exp(2 * x) + x * x * x;
    return make(t, std::vector<int>(s.flags().begin(), s.flags().end()));
}

constexpr WlrKernel kKernels[] = {WlrKernel::logrank, WlrKernel::gehan, WlrKernel::peto_peto_prentice,
                                  WlrKernel::tarone_ware, WlrKernel::prentice};
constexpr BnModel kModels[] = {BnModel::SCE, BnModel::MCE, BnModel::GPH};

}  // namespace

TEST_CASE("four-point weighted log-rank example") {
    const auto s1 = uncensored({1, 3}), s2 = uncensored({2, 4});
    const auto [u, var] = oracle::wlr_parts(s1, s2, WlrKernel::logrank);
    CHECK(u == doctest::Approx(1.0 / 3));
    CHECK(var == doctest::Approx(0.180556).epsilon(1e-5));
    const auto r = weighted_logrank(s1, s2, WlrKernel::logrank);
    CHECK(r.statistic == doctest::Approx(0.6154).epsilon(1e-4));
    CHECK(r.null_law.kind == LawKind::ChisqRight);
    CHECK(r.null_law.df == 1);
    CHECK(std::fabs(logrank_z(s1, s2).statistic) == doctest::Approx(0.7845).epsilon(1e-4));
}

TEST_CASE("Gehan score sums") {
    const auto s1 = uncensored({1, 3}), s2 = uncensored({2, 4});
    CHECK(gehan_score_sum(TwoSampleData(s1, s2)) == -2.0);
    std::vector<double> lo, hi;
    for (int i = 0; i < 10; ++i) {
        lo.push_back(i);
        hi.push_back(100 + i);
    }
    CHECK(gehan_score_sum(TwoSampleData(uncensored(lo), uncensored(hi))) == -100.0);
}

TEST_CASE("statistics agree with direct-from-definition oracles, with and without ties") {
    RandomStream r(31);
    for (int rep = 0; rep < 40; ++rep) {
        const double grain = rep % 2 ? 0.1 : 0.0;
        const auto a = random_sample(r, 15 + rep % 7, {Family::Exp, 0, 1}, rep % 3 ? 0.4 : 0.0, grain);
        const auto b = random_sample(r, 12 + rep % 5, {Family::We, 0, 1.2, 1.5}, rep % 4 ? 0.3 : 0.0, grain);
        const TwoSampleData d(a, b);
        for (auto k : kKernels) {
            const auto [u, var] = oracle::wlr_parts(a, b, k);
            CHECK(weighted_logrank(d, k).statistic == doctest::Approx(u * u / var).epsilon(1e-10));
        }
        const auto [u, var] = oracle::wlr_parts(a, b, WlrKernel::logrank);
        CHECK(logrank_z(d).statistic == doctest::Approx(u / std::sqrt(var)).epsilon(1e-10));
        CHECK(gehan_score_sum(d) == oracle::gehan_cross_sum(a, b));
        CHECK(gehan_z(d).statistic == doctest::Approx(oracle::gehan_z(a, b)).epsilon(1e-10));
        CHECK(peto_z(d).statistic == doctest::Approx(oracle::peto_z(a, b)).epsilon(1e-10));
        for (auto m : kModels) CHECK(bn(d, m).statistic == doctest::Approx(oracle::bn(a, b, m)).epsilon(1e-7));
        const auto [wu, wvar] = oracle::wkm_parts(a, b);
        CHECK(wkm(d).statistic == doctest::Approx(wu / std::sqrt(wvar)).epsilon(1e-9));
    }
}

TEST_CASE("logrank_z squared equals the weighted log-rank statistic") {
    RandomStream r(8);
    for (int rep = 0; rep < 20; ++rep) {
        const auto a = random_sample(r, 40, {Family::Exp, 0, 1}, 0.3);
        const auto b = random_sample(r, 35, {Family::Exp, 0, 1.3}, 0.3);
        const double z = logrank_z(a, b).statistic;
        CHECK(std::fabs(z * z - weighted_logrank(a, b, WlrKernel::logrank).statistic) < 1e-9);
    }
}

TEST_CASE("Gehan pairwise and risk-set forms agree on large uncensored samples") {
    RandomStream r(12);
    for (int rep = 0; rep < 10; ++rep) {
        const auto a = random_sample(r, 300, {Family::Exp, 0, 1}, 0.0);
        const auto b = random_sample(r, 300, {Family::Exp, 0, 1.15}, 0.0);
        const double z = gehan_z(a, b).statistic;
        const double w = weighted_logrank(a, b, WlrKernel::gehan).statistic;
        CHECK(std::fabs(z * z - w) <= 0.02 * w);
    }
}

TEST_CASE("swap symmetry") {
    RandomStream r(77);
    for (int rep = 0; rep < 20; ++rep) {
        const auto a = random_sample(r, 30, {Family::Exp, 0, 1}, 0.25);
        const auto b = random_sample(r, 25, {Family::LgN, 0, 0.8}, 0.25);
        const TwoSampleData ab(a, b), ba(b, a);
        CHECK(logrank_z(ab).statistic == doctest::Approx(-logrank_z(ba).statistic).epsilon(1e-12));
        CHECK(gehan_z(ab).statistic == doctest::Approx(-gehan_z(ba).statistic).epsilon(1e-12));
        CHECK(peto_z(ab).statistic == doctest::Approx(-peto_z(ba).statistic).epsilon(1e-12));
        CHECK(wkm(ab).statistic == doctest::Approx(-wkm(ba).statistic).epsilon(1e-10));
        for (auto k : kKernels) {
            CHECK(weighted_logrank(ab, k).statistic == doctest::Approx(weighted_logrank(ba, k).statistic).epsilon(1e-12));
        }
        for (auto m : kModels) CHECK(bn(ab, m).statistic == doctest::Approx(bn(ba, m).statistic).epsilon(1e-9));
        CHECK(max_test(ab).statistic == doctest::Approx(max_test(ba).statistic).epsilon(1e-12));
    }
}

TEST_CASE("rank-based statistics are invariant under increasing transforms") {
    RandomStream r(5);
    for (int rep = 0; rep < 20; ++rep) {
        const auto a = random_sample(r, 30, {Family::Exp, 0, 1}, 0.3);
        const auto b = random_sample(r, 30, {Family::G, 0, 1, 2}, 0.3);
        const auto ta = transformed(a), tb = transformed(b);
        const TwoSampleData d(a, b), td(ta, tb);
        for (Method m : all_methods()) {
            if (m == Method::wkm || m == Method::min3) continue;
            CHECK(run_method(d, m).statistic == doctest::Approx(run_method(td, m).statistic).epsilon(1e-9));
        }
    }
    // wkm integrates over time and is not rank-based.
    const auto a = uncensored({0.2, 0.5, 0.9, 1.4}), b = uncensored({0.3, 0.8, 1.1, 2.0});
    CHECK(std::fabs(wkm(a, b).statistic - wkm(transformed(a), transformed(b)).statistic) > 1e-3);
}

TEST_CASE("Peto scores sum to zero on uncensored input") {
    RandomStream r(2);
    for (int rep = 0; rep < 20; ++rep) {
        const auto a = random_sample(r, 20 + rep, {Family::Exp, 0, 1}, 0.0, rep % 2 ? 0.2 : 0.0);
        const auto b = random_sample(r, 17, {Family::Exp, 0, 2}, 0.0);
        double sum = 0;
        for (double u : peto_scores(TwoSampleData(a, b))) sum += u;
        CHECK(std::fabs(sum) < 1e-9);
    }
}

TEST_CASE("identical samples") {
    const auto a = make({0.5, 1.0, 1.5, 2.2, 3.0}, {0, 1, 0, 0, 1});
    const TwoSampleData d(a, a);
    CHECK(wkm(d).statistic == 0.0);
    const auto q = q_test(d);
    CHECK(q.selector == 0.0);
    REQUIRE(q.selected.has_value());
    CHECK(*q.selected == Method::peto);
    CHECK(std::fabs(q.statistic) < 1e-12);
}

TEST_CASE("q_test selects log-rank or Peto by the sign of Q") {
    RandomStream r(404);
    int lg = 0, p = 0;
    for (int rep = 0; rep < 60; ++rep) {
        const auto a = random_sample(r, 40, {Family::Exp, 0, 1}, 0.2);
        const auto b = random_sample(r, 40, {Family::We, 0, 1, rep % 2 ? 0.6 : 2.0}, 0.2);
        const TwoSampleData d(a, b);
        const auto q = q_test(d);
        REQUIRE(q.selected.has_value());
        CHECK(q.null_law.kind == LawKind::NormalTwoSided);
        if (q.selector < 0) {
            CHECK(*q.selected == Method::logrank);
            CHECK(q.statistic == logrank_z(d).statistic);
            ++lg;
        } else {
            CHECK(*q.selected == Method::peto);
            CHECK(q.statistic == peto_z(d).statistic);
            ++p;
        }
    }
    CHECK(lg > 0);
    CHECK(p > 0);
}

TEST_CASE("max_test and min3 compose their components") {
    RandomStream r(17);
    for (int rep = 0; rep < 20; ++rep) {
        const auto a = random_sample(r, 30, {Family::Exp, 0, 1}, 0.2);
        const auto b = random_sample(r, 30, {Family::Exp, 0.1, 1}, 0.2);
        const TwoSampleData d(a, b);
        const double lg = std::fabs(logrank_z(d).statistic), g = std::fabs(gehan_z(d).statistic);
        const auto m = max_test(d);
        CHECK(m.statistic == std::max(lg, g));
        CHECK(m.statistic >= lg);
        CHECK(m.statistic >= g);
        CHECK_FALSE(m.p_value.has_value());
        const auto mn = min3(d);
        const double expected = std::min({*wkm(d).p_value, *bn(d, BnModel::MCE).p_value, *bn(d, BnModel::GPH).p_value});
        CHECK(mn.statistic == expected);
        CHECK(mn.statistic >= 0.0);
        CHECK(mn.statistic <= 1.0);
        CHECK(mn.null_law.kind == LawKind::EmpiricalLeft);
    }
}

TEST_CASE("null laws and p-values") {
    CHECK(null_law(Method::bn_mce).df == 3);
    CHECK(null_law(Method::bn_sce).df == 2);
    CHECK(null_law(Method::wlr_prentice).df == 1);
    CHECK(null_law(Method::max_test).kind == LawKind::EmpiricalRight);

    TestResult n;
    n.method = Method::logrank;
    n.null_law = NullLaw::normal();
    n.statistic = 0.0;
    CHECK(p_value(n) == 1.0);
    n.statistic = 1.959964;
    CHECK(p_value(n) == doctest::Approx(0.05).epsilon(1e-5));

    TestResult c;
    c.method = Method::bn_sce;
    c.null_law = NullLaw::chisq(2);
    c.statistic = 5.991;
    CHECK(std::fabs(p_value(c) - 0.05) < 1e-4);

    TestResult e;
    e.method = Method::max_test;
    e.null_law = NullLaw::empirical_right();
    e.bins = bins_for(100, 100, 0.0);
    e.statistic = 0.95;
    CHECK_THROWS_AS(p_value(e), CalibrationRequired);
    EmpiricalNull t;
    t.statistic = "max_test";
    t.bins = e.bins;
    for (int i = 1; i <= 999; ++i) t.values.push_back(i / 1000.0);
    CHECK(std::fabs(p_value(e, &t) - 0.05) < 2.0 / 999);
    t.bins = bins_for(20, 20, 0.0);
    CHECK_THROWS_AS(p_value(e, &t), CalibrationRequired);
    t.bins = e.bins;
    t.statistic = "min3";
    CHECK_THROWS_AS(p_value(e, &t), CalibrationRequired);
}

TEST_CASE("method names round-trip") {
    CHECK(all_methods().size() == kMethodCount);
    for (Method m : all_methods()) CHECK(parse_method(method_name(m)) == m);
    CHECK_THROWS_AS(parse_method("cox"), ParameterError);
}

TEST_CASE("degenerate inputs are reported") {
    const auto all_cens = make({1, 2, 3}, {1, 1, 1});
    CHECK_THROWS_AS(logrank_z(all_cens, all_cens), DegenerateStatistic);
    CHECK_THROWS_AS(weighted_logrank(all_cens, all_cens, WlrKernel::gehan), DegenerateStatistic);
    CHECK_THROWS_AS(bn(all_cens, all_cens, BnModel::MCE), DegenerateStatistic);
    // One failure: MCE's 3x3 covariance has rank one.
    CHECK_THROWS_AS(bn(uncensored({1}), make({2, 3}, {1, 1}), BnModel::MCE), DegenerateStatistic);
    const auto battery = run_all(all_cens, all_cens);
    CHECK_FALSE(battery[Method::logrank].has_value());
    CHECK_FALSE(battery.failures[index_of(Method::logrank)].empty());
}

TEST_CASE("bn and weighted statistics are non-negative") {
    RandomStream r(9);
    for (int rep = 0; rep < 50; ++rep) {
        const auto a = random_sample(r, 10, {Family::Exp, 0, 1}, 0.5);
        const auto b = random_sample(r, 10, {Family::Exp, 0, 1}, 0.5);
        const auto battery = run_all(a, b);
        for (Method m : {Method::bn_sce, Method::bn_mce, Method::bn_gph, Method::wlr_gehan}) {
            if (battery[m]) CHECK(battery[m]->statistic >= 0.0);
        }
        for (const auto& res : battery.results) {
            if (res && res->p_value) {
                CHECK(*res->p_value >= 0.0);
                CHECK(*res->p_value <= 1.0);
            }
        }
    }
}

// Uncensored, w = 1 and U is sqrt(n/2) times the (restricted) mean difference,
// whose sd is sqrt(2/n) = 0.1 against a shift of 0.1: P(U > 0) = Φ(1).
TEST_CASE("wkm direction under a shifted alternative") {
    RandomStream r(1234);
    int positive = 0;
    for (int rep = 0; rep < 1000; ++rep) {
        const auto a = random_sample(r, 200, {Family::Exp, 0, 1}, 0.0);
        const auto b = random_sample(r, 200, {Family::Exp, 0.1, 1}, 0.0);
        positive += wkm(a, b).statistic > 0 ? 1 : 0;
    }
    const double expected = 0.8413447;
    CHECK(std::fabs(positive / 1000.0 - expected) < 3 * std::sqrt(expected * (1 - expected) / 1000));
}
