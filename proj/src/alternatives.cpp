#include "survtest/alternatives.hpp"

#include "survtest/error.hpp"
#include "survtest/format.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>

namespace survtest {

namespace {

constexpr std::string_view kGroupDescriptions[] = {
    "0 intersections, difference at early time",
    "0 intersections, difference at middle time",
    "0 intersections, difference at late time",
    "1 intersection at early time",
    "1 intersection at middle time",
    "1 intersection at late time",
    "2 intersections at early and middle time",
    "2 intersections at early and late time",
    "2 intersections at middle and late time",
};

AlternativePair entry(const char* id, AltGroup g, DistSpec s1, DistSpec s2) {
    return {id, g, s1, s2, std::string(kGroupDescriptions[static_cast<int>(g) - 1])};
}

DistSpec exp_(double mu, double lambda) { return {Family::Exp, mu, lambda, 1.0}; }
DistSpec we(double mu, double lambda, double nu) { return {Family::We, mu, lambda, nu}; }
DistSpec ga(double mu, double lambda, double nu) { return {Family::G, mu, lambda, nu}; }
DistSpec lgn(double mu, double lambda) { return {Family::LgN, mu, lambda, 1.0}; }

std::vector<AlternativePair> build_registry() {
    using G = AltGroup;
    return {
        entry("H01", G::I, exp_(0, 1), exp_(0.1, 1)),
        entry("H02", G::I, we(0, 1.1, 2.4), lgn(0, 0.370)),
        entry("H03", G::I, lgn(0.01, 0.913), exp_(0, 0.742)),
        entry("H04", G::II, ga(0, 1.060, 1.160), exp_(0, 0.863)),
        entry("H05", G::II, exp_(0, 1.3), we(0, 0.9, 1.1)),
        entry("H06", G::II, exp_(0, 1), we(0.09, 1.1, 1.07)),
        entry("H07", G::III, exp_(0, 1.3), ga(0, 0.806, 1.064)),
        entry("H08", G::III, we(0.5, 1, 1.2), exp_(0.567, 1)),
        entry("H09", G::III, we(0.118, 1.1, 1.735), lgn(0.01, 0.6)),
        entry("H11", G::IV, exp_(0, 1), exp_(0.05, 1.159)),
        entry("H12", G::IV, ga(0, 1.273, 1.475), ga(0.159, 1.300, 1.273)),
        entry("H13", G::IV, we(0.02, 1, 1.1), exp_(0, 0.909)),
        entry("H14", G::V, we(0, 0.980, 0.905), ga(0, 0.972, 0.974)),
        entry("H15", G::V, exp_(0, 1), we(0.071, 0.906, 1.059)),
        entry("H16", G::V, ga(0.01, 1, 1.15), exp_(0, 0.833)),
        entry("H17", G::VI, we(0, 0.968, 1.214), exp_(0, 1.107)),
        entry("H18", G::VI, ga(0, 1.1, 1.040), ga(0, 0.9, 1.302)),
        entry("H19", G::VI, we(0.5, 1.1, 1.1), exp_(0.471, 1)),
        entry("H21", G::VII, lgn(0, 0.948), we(0.173, 1.325, 0.911)),
        entry("H22", G::VII, exp_(0.5, 1.047), lgn(0.141, 0.596)),
        entry("H23", G::VII, we(0.5, 1, 1.2), exp_(0.530, 1)),
        entry("H24", G::VIII, lgn(0, 0.916), ga(0.01, 1.213, 1.192)),
        entry("H25", G::VIII, lgn(0, 0.817), exp_(0.185, 0.818)),
        entry("H26", G::VIII, we(0.01, 1.697, 1.846), lgn(0.293, 0.569)),
        entry("H27", G::IX, we(0, 1.355, 1.018), lgn(0.000, 0.867)),
        entry("H28", G::IX, ga(0, 1.134, 1.231), lgn(0, 0.876)),
        entry("H29", G::IX, exp_(0, 0.744), lgn(0, 0.866)),
    };
}

constexpr std::array<std::string_view, 9> kGroupLabels = {"I", "II", "III", "IV", "V", "VI", "VII", "VIII", "IX"};

// Upper integration limit beyond which both survival functions are below 1e-13.
double upper_limit(const DistSpec& a, const DistSpec& b) {
    return std::max(quantile(a, 1.0 - 1e-13), quantile(b, 1.0 - 1e-13));
}

template <class F>
double integrate(F&& f, double lo, double hi, double tol) {
    double error = 0.0;
    const double value =
        boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, 12, tol, &error);
    if (!std::isfinite(value)) throw NumericError("quadrature produced a non-finite value");
    return value;
}

DistSpec censor_spec(Family family, double parameter, double shape) {
    switch (family) {
        case Family::Exp: return {Family::Exp, 0.0, parameter, 1.0};
        case Family::We: return {Family::We, 0.0, parameter, shape};
        case Family::G: return {Family::G, 0.0, parameter, shape};
        case Family::LgN: return {Family::LgN, std::log(parameter), shape, 1.0};
    }
    throw ParameterError("unknown censoring family");
}

}  // namespace

std::string_view group_label(AltGroup g) { return kGroupLabels.at(static_cast<std::size_t>(g) - 1); }

AltGroup parse_group(std::string_view label) {
    for (std::size_t i = 0; i < kGroupLabels.size(); ++i) {
        if (kGroupLabels[i] == label) return static_cast<AltGroup>(i + 1);
    }
    throw ValidationError("unknown alternative group '" + std::string(label) + "'");
}

std::span<const AlternativePair> registry() {
    static const std::vector<AlternativePair> pairs = build_registry();
    return pairs;
}

const AlternativePair& find_alternative(std::string_view id) {
    for (const auto& p : registry()) {
        if (p.id == id) return p;
    }
    throw ParameterError("unknown alternative '" + std::string(id) + "'");
}

std::string registry_to_text(std::span<const AlternativePair> pairs) {
    std::string out;
    for (const auto& p : pairs) {
        out += p.id + '\t' + std::string(group_label(p.group)) + '\t' + to_string(p.s1) + '\t' + to_string(p.s2) +
               '\t' + p.description + '\n';
    }
    return out;
}

std::vector<AlternativePair> registry_from_text(std::string_view text) {
    std::vector<AlternativePair> out;
    std::size_t line_no = 0;
    for (std::string_view line : split(text, '\n')) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split(line, '\t');
        if (fields.size() != 5) throw ValidationError("registry: expected 5 tab-separated fields", line_no);
        out.push_back({std::string(fields[0]), parse_group(fields[1]), parse_dist(fields[2]), parse_dist(fields[3]),
                       std::string(fields[4])});
    }
    return out;
}

double l1_distance(const DistSpec& a, const DistSpec& b) {
    validate(a);
    validate(b);
    if (a == b) return 0.0;
    std::vector<double> cuts = {0.0, support_min(a), support_min(b), upper_limit(a, b)};
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    const auto f = [&](double t) { return std::fabs(survival(a, t) - survival(b, t)); };
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (cuts[i] < 0.0) cuts[i] = 0.0;
        if (cuts[i + 1] > cuts[i]) total += integrate(f, cuts[i], cuts[i + 1], 1e-10);
    }
    return total;
}

double expected_censoring_rate(const DistSpec& failure, const DistSpec& censor) {
    validate(failure);
    validate(censor);
    const auto f = [&](double u) { return cdf(censor, quantile(failure, u)); };
    // Split at the median so the steep region near u -> 1 gets its own panel.
    return std::clamp(integrate(f, 0.0, 0.5, 1e-10) + integrate(f, 0.5, 1.0, 1e-10), 0.0, 1.0);
}

CensoringPlan calibrate_censoring(const DistSpec& failure, Family censor_family, double target_rate, double shape) {
    validate(failure);
    if (!(target_rate >= 0.0 && target_rate <= 0.5)) {
        throw DomainError("censoring target rate must lie in [0, 0.5], got " + format_double(target_rate));
    }
    if (!(shape > 0.0) || !std::isfinite(shape)) throw ParameterError("censoring shape must be > 0");
    CensoringPlan plan{failure, std::nullopt, target_rate};
    if (target_rate == 0.0) return plan;

    const auto rate_at = [&](double log_param) {
        return expected_censoring_rate(failure, censor_spec(censor_family, std::exp(log_param), shape));
    };
    const double lo = std::log(1e-6), hi = std::log(1e6);
    const double f_lo = rate_at(lo) - target_rate, f_hi = rate_at(hi) - target_rate;
    if (!(f_lo * f_hi < 0.0)) {
        throw CalibrationError("censoring calibration: target rate " + format_double(target_rate) +
                               " is not bracketed by " + std::string(family_name(censor_family)) +
                               " parameters in [1e-6, 1e6]");
    }
    std::uintmax_t max_iter = 200;
    const auto [a, b] = boost::math::tools::toms748_solve(
        [&](double x) { return rate_at(x) - target_rate; }, lo, hi, f_lo, f_hi,
        boost::math::tools::eps_tolerance<double>(48), max_iter);
    const double root = 0.5 * (a + b);
    const DistSpec censor = censor_spec(censor_family, std::exp(root), shape);
    const double achieved = expected_censoring_rate(failure, censor);
    if (std::fabs(achieved - target_rate) > 1e-6) {
        throw CalibrationError("censoring calibration did not reach the target: achieved " + format_double(achieved) +
                               " for target " + format_double(target_rate));
    }
    plan.censor = censor;
    return plan;
}

AlternativeConfig parse_alternative_config(std::string_view json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("alternative config: ") + e.what());
    }
    try {
        AlternativeConfig c;
        c.id = j.value("id", std::string());
        if (j.contains("s1")) {
            c.s1 = parse_dist(j.at("s1").get<std::string>());
            c.s2 = parse_dist(j.at("s2").get<std::string>());
        } else {
            const auto& alt = find_alternative(c.id);
            c.s1 = alt.s1;
            c.s2 = alt.s2;
        }
        if (j.contains("censoring")) {
            const auto& cen = j.at("censoring");
            c.censor_family = parse_family(cen.value("family", std::string("Exp")));
            c.censor_shape = cen.value("shape", 1.0);
            c.rate = cen.value("rate", 0.0);
        }
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("alternative config: ") + e.what());
    }
}

std::string to_json_text(const AlternativeConfig& c) {
    nlohmann::ordered_json j;
    j["id"] = c.id;
    j["s1"] = to_string(c.s1);
    j["s2"] = to_string(c.s2);
    nlohmann::ordered_json cen;
    cen["family"] = std::string(family_name(c.censor_family));
    if (c.censor_shape != 1.0) cen["shape"] = c.censor_shape;
    cen["rate"] = c.rate;
    j["censoring"] = cen;
    return j.dump(2) + "\n";
}

}  // namespace survtest
