#include "survtest/analysis.hpp"
#include "survtest/error.hpp"

#include <doctest.h>

#include <cmath>
#include <string>

using namespace survtest;

namespace {

PowerCell cell(std::string method, std::string alt, double power, long long n = 20) {
    PowerCell c;
    c.method = std::move(method);
    c.alt = std::move(alt);
    c.n = n;
    c.alpha = 0.05;
    c.power = power;
    return c;
}

const MethodRank& rank_of(const RankReport& r, const std::string& m) {
    for (const auto& x : r.methods) {
        if (x.method == m) return x;
    }
    throw std::runtime_error("missing " + m);
}

EmpiricalNull uniform_table(std::size_t size, double shift = 0.0) {
    EmpiricalNull t;
    t.statistic = "s";
    t.replications = static_cast<long long>(size);
    for (std::size_t i = 1; i <= size; ++i) t.values.push_back(static_cast<double>(i) / static_cast<double>(size + 1) + shift);
    return t;
}

}  // namespace

TEST_CASE("symmetric two-method ranking") {
    const PowerTable t = {cell("a", "H01", 0.9), cell("b", "H01", 0.5), cell("a", "H02", 0.2), cell("b", "H02", 0.4)};
    const auto r = rank_methods(t, 0.05);
    CHECK(r.cells == 2);
    for (const char* m : {"a", "b"}) {
        CHECK(rank_of(r, m).average == 1.5);
        CHECK(rank_of(r, m).wald == 2.0);
        CHECK(rank_of(r, m).savage == 1.0);
    }
    CHECK(r.censoring_regime == "0%");
}

TEST_CASE("dominating method and midrank ties") {
    const PowerTable t = {cell("a", "H01", 0.9), cell("b", "H01", 0.5), cell("c", "H01", 0.5),
                          cell("a", "H05", 0.8), cell("b", "H05", 0.1), cell("c", "H05", 0.2)};
    const auto r = rank_methods(t, 0.05);
    CHECK(rank_of(r, "a").average == 1.0);
    CHECK(rank_of(r, "a").wald == 1.0);
    CHECK(rank_of(r, "a").savage == 0.0);
    CHECK(rank_of(r, "b").average == doctest::Approx((2.5 + 3.0) / 2));
    CHECK(rank_of(r, "c").average == doctest::Approx((2.5 + 2.0) / 2));
    CHECK(r.methods.front().method == "a");
    CHECK(rank_of(r, "a").group_average.at("I") == 1.0);
    CHECK(rank_of(r, "a").group_average.at("II") == 1.0);

    const auto pr = rank_methods(t, 0.05, RegretMode::power);
    CHECK(rank_of(pr, "b").savage == doctest::Approx(0.7));
}

TEST_CASE("ranking is invariant under increasing transforms of power") {
    PowerTable t;
    RandomStream rng(5);
    for (const char* alt : {"H01", "H02", "H03", "H11"}) {
        for (const char* m : {"a", "b", "c", "d"}) t.push_back(cell(m, alt, rng.uniform()));
    }
    auto u = t;
    for (auto& c : u) c.power = std::sqrt(c.power) * 0.5;
    const auto a = rank_methods(t, 0.05), b = rank_methods(u, 0.05);
    REQUIRE(a.methods.size() == b.methods.size());
    for (std::size_t i = 0; i < a.methods.size(); ++i) {
        CHECK(a.methods[i].method == b.methods[i].method);
        CHECK(a.methods[i].average == b.methods[i].average);
        CHECK(a.methods[i].wald == b.methods[i].wald);
        CHECK(a.methods[i].savage == b.methods[i].savage);
    }
}

TEST_CASE("ranking requires a dense table") {
    const PowerTable t = {cell("a", "H01", 0.9), cell("b", "H01", 0.5), cell("a", "H02", 0.2)};
    try {
        rank_methods(t, 0.05);
        FAIL("expected a density error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("b@H02") != std::string::npos);
    }
    CHECK_THROWS_AS(rank_methods(t, 0.01), ValidationError);
}

TEST_CASE("power CSV round-trip and hand-written input") {
    const auto parsed = parse_power_table_csv("method,alt,n,rate,alpha,power\na,H01,20,0,0.05,0.9\nb,H01,20,0,0.05,0.5\n"
                                              "a,H02,20,0,0.05,0.2\nb,H02,20,0,0.05,0.4\n");
    const auto r = rank_methods(parsed, 0.05);
    CHECK(rank_of(r, "a").average == 1.5);
    CHECK(rank_of(r, "b").savage == 1.0);

    PowerTable t = {cell("a", "H01", 0.25)};
    t[0].rejections = 25;
    t[0].replications = 100;
    t[0].rate = 0.3;
    const auto text = power_table_csv(t);
    const auto back = parse_power_table_csv(text);
    REQUIRE(back.size() == 1);
    CHECK(back[0].power == 0.25);
    CHECK(back[0].rejections == 25);
    CHECK(back[0].rate == 0.3);
    CHECK(power_table_csv(back) == text);
    CHECK_THROWS_AS(parse_power_table_csv("method,alt\n"), ValidationError);
    CHECK_THROWS_AS(parse_power_table_csv("method,alt,n,rate,alpha,power\na,H01,20,0,0.05,1.5\n"), ValidationError);
}

TEST_CASE("power at the extreme levels") {
    PowerRequest req;
    req.alt = "H01";
    req.n = 30;
    req.alphas = {0.0, 1.0};
    req.replications = 200;
    req.seed = 3;
    const auto cells = estimate_power({classical(Method::logrank), classical(Method::bn_mce)}, req, {}, 1);
    REQUIRE(cells.size() == 4);
    for (const auto& c : cells) CHECK(c.power == (c.alpha == 0.0 ? 0.0 : 1.0));
}

TEST_CASE("size under H0 sits in the binomial band") {
    PowerRequest req;
    req.alt = "H01";
    req.hyp = Hypothesis::H0;
    req.n = 100;
    req.alphas = {0.05};
    req.replications = 4000;
    req.seed = 8;
    const auto cells = estimate_power({classical(Method::logrank), classical(Method::gehan)}, req, {}, 2);
    const double band = 3 * std::sqrt(0.05 * 0.95 / 4000);
    for (const auto& c : cells) CHECK(std::fabs(c.power - 0.05) < band);
}

TEST_CASE("log-rank power on H01 at n = 1000 exceeds one half") {
    PowerRequest req;
    req.alt = "H01";
    req.n = 1000;
    req.replications = 400;
    req.seed = 1;
    CHECK(estimate_power({classical(Method::logrank)}, req, {}, 1).front().power > 0.5);
}

TEST_CASE("power grows with sample size") {
    int inversions = 0;
    for (const char* alt : {"H01", "H02", "H13"}) {
        double prev = 0, prev_se = 0;
        for (long long n : {20LL, 100LL, 500LL}) {
            PowerRequest req;
            req.alt = alt;
            req.n = n;
            req.rate = 0.2;
            req.replications = 600;
            req.seed = 4;
            const double pw = estimate_power({classical(Method::logrank)}, req, {}, 1).front().power;
            const double se = std::sqrt(pw * (1 - pw) / 600);
            if (pw < prev) {
                ++inversions;
                CHECK(prev - pw < 2 * std::hypot(se, prev_se));
            }
            prev = pw;
            prev_se = se;
        }
    }
    CHECK(inversions <= 1);
}

TEST_CASE("empirical-law contestants need their design-cell table") {
    PowerRequest req;
    req.alt = "H07";
    req.n = 25;
    req.rate = 0.3;
    req.replications = 300;
    req.seed = 2;
    const std::vector<Contestant> who = {classical(Method::max_test), classical(Method::min3)};
    CHECK_THROWS_AS(estimate_power(who, req, {}, 1), CalibrationRequired);

    NullTableSpec spec;
    spec.n = 25;
    spec.rate = 0.3;
    spec.replications = 1000;
    spec.seed = 99;
    NullTableSet tables;
    for (auto& t : build_null_tables({method_statistic(Method::max_test), method_statistic(Method::min3)}, spec, 1)) {
        tables.add(std::move(t));
    }
    CHECK(tables.find("max_test", 25, 0.3) != nullptr);
    CHECK(tables.find("max_test", 25, 0.2) == nullptr);
    CHECK(tables.find_bins("min3", bins_for(25, 25, 0.3)) != nullptr);
    const auto one = estimate_power(who, req, tables, 1);
    const auto three = estimate_power(who, req, tables, 3);
    REQUIRE(one.size() == 2);
    for (std::size_t i = 0; i < one.size(); ++i) {
        CHECK(one[i].rejections == three[i].rejections);
        CHECK(one[i].power >= 0.0);
        CHECK(one[i].power <= 1.0);
    }
}

TEST_CASE("model contestants use the model's table") {
    TrainingSet d;
    RandomStream rng(1);
    for (int i = 0; i < 200; ++i) {
        FeatureVector f;
        for (auto& v : f.values) v = rng.uniform();
        d.add(f, i % 2);
    }
    const auto model = train_logreg(d);
    PowerRequest req;
    req.alt = "H01";
    req.n = 20;
    req.replications = 100;
    const std::vector<Contestant> who = {ml_contestant("logreg", model)};
    CHECK(who[0].statistic() == ml_statistic_name(model));
    CHECK_THROWS_AS(estimate_power(who, req, {}, 1), CalibrationRequired);
    NullTableSpec spec;
    spec.n = 20;
    spec.replications = 1000;
    NullTableSet tables;
    tables.add(build_null_table(ml_statistic(model), spec, 1));
    CHECK(estimate_power(who, req, tables, 1).front().replications == 100);
}

TEST_CASE("envelope of identical tables collapses") {
    const auto t = uniform_table(2000);
    const auto r = null_envelope({t, t, t});
    CHECK(r.deviation == 0.0);
    CHECK(r.curves == 3);
    CHECK(r.grid.size() == 2000);
    CHECK_THROWS_AS(null_envelope({t}), ParameterError);
}

TEST_CASE("envelope sandwiches every curve") {
    std::vector<EmpiricalNull> tables;
    for (int k = 0; k < 5; ++k) tables.push_back(uniform_table(1000 + 100 * k, 0.01 * k));
    const auto r = null_envelope(tables);
    CHECK(r.deviation > 0.0);
    for (std::size_t i = 0; i < r.grid.size(); ++i) {
        CHECK(r.g_min[i] <= r.g_avg[i]);
        CHECK(r.g_avg[i] <= r.g_max[i]);
        if (i > 0) {
            CHECK(r.g_min[i - 1] <= r.g_min[i]);
            CHECK(r.g_max[i - 1] <= r.g_max[i]);
        }
        for (const auto& t : tables) {
            CHECK(t.cdf(r.grid[i]) >= r.g_min[i]);
            CHECK(t.cdf(r.grid[i]) <= r.g_max[i]);
        }
    }
    CHECK(envelope_curves_csv(r).rfind("x,g_min,g_avg,g_max\n", 0) == 0);
}

TEST_CASE("envelope grid is capped") {
    const auto r = null_envelope({uniform_table(8000), uniform_table(7000)});
    CHECK(r.grid.size() == kMaxEnvelopeKnots);
}

TEST_CASE("percentage points of a uniform table") {
    const auto t = uniform_table(30000);
    const std::vector<double> levels = {0.1, 0.05, 0.025, 0.01};
    const auto pts = percentage_points(t, levels);
    REQUIRE(pts.size() == 4);
    for (const auto& p : pts) CHECK(std::fabs(p.quantile - (1 - p.level)) < 2 / std::sqrt(30000.0));
    for (std::size_t i = 1; i < pts.size(); ++i) CHECK(pts[i].quantile >= pts[i - 1].quantile);
    CHECK_THROWS_AS(percentage_points(t, {1.0}), DomainError);
    CHECK_THROWS_AS(percentage_points(t, {0.0}), DomainError);
    CHECK_THROWS_AS(percentage_points(uniform_table(999), {0.05}), ParameterError);
    for (const auto& p : percentage_points(t, levels, true)) {
        CHECK(std::fabs(p.quantile - p.level) < 2 / std::sqrt(30000.0));
    }
}

TEST_CASE("registry laws are distinct") {
    const auto laws = registry_laws();
    CHECK(laws.size() >= 27);
    CHECK(laws.size() <= 54);
    for (std::size_t i = 0; i < laws.size(); ++i) {
        for (std::size_t j = i + 1; j < laws.size(); ++j) CHECK_FALSE(laws[i] == laws[j]);
    }
}

TEST_CASE("envelope tables draw each law from its own seed") {
    NullTableSpec spec;
    spec.n = 20;
    spec.replications = 1000;
    spec.seed = 5;
    const std::vector<DistSpec> laws = {{Family::Exp, 0, 1}, {Family::Exp, 0, 2}};
    const auto t = envelope_tables({method_statistic(Method::logrank)}, laws, spec, 1);
    REQUIRE(t.size() == 1);
    REQUIRE(t[0].size() == 2);
    // logrank is distribution-free without censoring; common seeds would give identical tables.
    CHECK(t[0][0].values != t[0][1].values);
    CHECK(null_envelope(t[0]).deviation < 0.02);
}
