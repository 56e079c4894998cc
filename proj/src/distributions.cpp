#include "survtest/distributions.hpp"

#include "survtest/error.hpp"
#include "survtest/format.hpp"
#include "survtest/special_functions.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace survtest {
namespace {

double gamma_quantile_standard(double shape, double p) {
    const double lg = special::log_gamma(shape);
    const auto cdf_at = [&](double x) { return special::gamma_p(shape, x, lg); };
    const auto pdf_at = [&](double x) {
        return std::exp((shape - 1.0) * std::log(x) - x - lg);
    };

    // Wilson-Hilferty start.
    const double z = special::normal_quantile(p);
    const double c = 1.0 / (9.0 * shape);
    double x = shape * std::pow(1.0 - c + z * std::sqrt(c), 3);
    if (!(x > 0.0) || !std::isfinite(x)) {
        // Small-p series P(a,x) ~ x^a / Γ(a+1).
        x = std::exp((std::log(p) + special::log_gamma(shape + 1.0)) / shape);
    }

    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    constexpr int kMaxIter = 200;
    constexpr double kTol = 1e-10;
    for (int i = 0; i < kMaxIter; ++i) {
        const double f = cdf_at(x) - p;
        if (f == 0.0) return x;
        if (f < 0.0) lo = x; else hi = x;
        const double d = pdf_at(x);
        double next = (d > 0.0 && std::isfinite(d)) ? x - f / d : std::numeric_limits<double>::quiet_NaN();
        if (!(next > lo && next < hi)) {
            next = std::isinf(hi) ? 2.0 * x + 1.0 : 0.5 * (lo + hi);
        }
        const double step = std::fabs(next - x);
        x = next;
        if (step <= kTol * std::max(1.0, x) * 1e-3) return x;
        if (std::isfinite(hi) && hi - lo <= 1e-15 * std::max(1.0, hi)) return x;
    }
    throw NumericError("gamma quantile: Newton iteration did not converge");
}

}  // namespace

std::string_view family_name(Family f) {
    switch (f) {
        case Family::Exp: return "Exp";
        case Family::We: return "We";
        case Family::G: return "G";
        case Family::LgN: return "LgN";
    }
    return "?";
}

Family parse_family(std::string_view name) {
    name = trim(name);
    if (name == "Exp") return Family::Exp;
    if (name == "We") return Family::We;
    if (name == "G") return Family::G;
    if (name == "LgN") return Family::LgN;
    throw ParameterError("unknown distribution family '" + std::string(name) + "'");
}

bool family_has_shape(Family f) { return f == Family::We || f == Family::G; }

void validate(const DistSpec& spec) {
    if (!std::isfinite(spec.mu)) throw ParameterError("distribution: mu must be finite");
    if (!(spec.lambda > 0.0) || !std::isfinite(spec.lambda)) {
        throw ParameterError("distribution " + std::string(family_name(spec.family)) + ": lambda must be > 0");
    }
    if (family_has_shape(spec.family) && (!(spec.nu > 0.0) || !std::isfinite(spec.nu))) {
        throw ParameterError("distribution " + std::string(family_name(spec.family)) + ": nu must be > 0");
    }
}

double support_min(const DistSpec& spec) { return spec.family == Family::LgN ? 0.0 : spec.mu; }

double pdf(const DistSpec& spec, double t) {
    validate(spec);
    switch (spec.family) {
        case Family::Exp:
            if (t < spec.mu) return 0.0;
            return spec.lambda * std::exp(-spec.lambda * (t - spec.mu));
        case Family::We: {
            if (t < spec.mu) return 0.0;
            const double z = (t - spec.mu) / spec.lambda;
            return spec.nu / spec.lambda * std::pow(z, spec.nu - 1.0) * std::exp(-std::pow(z, spec.nu));
        }
        case Family::G: {
            if (t < spec.mu) return 0.0;
            const double z = (t - spec.mu) / spec.lambda;
            if (z == 0.0) {
                if (spec.nu < 1.0) return std::numeric_limits<double>::infinity();
                return spec.nu == 1.0 ? 1.0 / spec.lambda : 0.0;
            }
            return std::exp((spec.nu - 1.0) * std::log(z) - z - special::log_gamma(spec.nu)) / spec.lambda;
        }
        case Family::LgN: {
            if (t <= 0.0) return 0.0;
            const double s = spec.lambda;
            const double u = (std::log(t) - spec.mu) / s;
            return std::exp(-0.5 * u * u) / (t * s * std::sqrt(2.0 * std::numbers::pi));
        }
    }
    return 0.0;
}

double cdf(const DistSpec& spec, double t) {
    validate(spec);
    if (std::isnan(t)) throw DomainError("cdf: t is NaN");
    switch (spec.family) {
        case Family::Exp:
            if (t <= spec.mu) return 0.0;
            return -std::expm1(-spec.lambda * (t - spec.mu));
        case Family::We:
            if (t <= spec.mu) return 0.0;
            return -std::expm1(-std::pow((t - spec.mu) / spec.lambda, spec.nu));
        case Family::G:
            if (t <= spec.mu) return 0.0;
            return special::gamma_p(spec.nu, (t - spec.mu) / spec.lambda);
        case Family::LgN:
            if (t <= 0.0) return 0.0;
            return special::normal_cdf((std::log(t) - spec.mu) / spec.lambda);
    }
    return 0.0;
}

double survival(const DistSpec& spec, double t) {
    validate(spec);
    switch (spec.family) {
        case Family::Exp:
            if (t <= spec.mu) return 1.0;
            return std::exp(-spec.lambda * (t - spec.mu));
        case Family::We:
            if (t <= spec.mu) return 1.0;
            return std::exp(-std::pow((t - spec.mu) / spec.lambda, spec.nu));
        case Family::G:
            if (t <= spec.mu) return 1.0;
            return special::gamma_q(spec.nu, (t - spec.mu) / spec.lambda);
        case Family::LgN:
            if (t <= 0.0) return 1.0;
            return special::normal_sf((std::log(t) - spec.mu) / spec.lambda);
    }
    return 1.0;
}

double quantile(const DistSpec& spec, double p) {
    validate(spec);
    if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile: p must be in (0,1)");
    switch (spec.family) {
        case Family::Exp:
            return spec.mu - std::log1p(-p) / spec.lambda;
        case Family::We:
            return spec.mu + spec.lambda * std::pow(-std::log1p(-p), 1.0 / spec.nu);
        case Family::G:
            return spec.mu + spec.lambda * gamma_quantile_standard(spec.nu, p);
        case Family::LgN:
            return std::exp(spec.mu + spec.lambda * special::normal_quantile(p));
    }
    return 0.0;
}

std::string to_string(const DistSpec& spec) {
    std::string out(family_name(spec.family));
    out += '(';
    out += format_double(spec.mu);
    out += ',';
    out += format_double(spec.lambda);
    if (family_has_shape(spec.family)) {
        out += ',';
        out += format_double(spec.nu);
    }
    out += ')';
    return out;
}

DistSpec parse_dist(std::string_view text) {
    const std::string_view t = trim(text);
    const auto open = t.find('(');
    if (open == std::string_view::npos || t.back() != ')') {
        throw ValidationError("distribution spec must look like family(mu,lambda[,nu]): '" + std::string(t) + "'");
    }
    DistSpec spec;
    spec.family = parse_family(t.substr(0, open));
    const auto args = split(t.substr(open + 1, t.size() - open - 2), ',');
    const std::size_t expected = family_has_shape(spec.family) ? 3 : 2;
    if (args.size() != expected) {
        throw ValidationError("distribution " + std::string(family_name(spec.family)) + " takes " +
                              std::to_string(expected) + " parameters: '" + std::string(t) + "'");
    }
    spec.mu = parse_double(args[0]);
    spec.lambda = parse_double(args[1]);
    if (expected == 3) spec.nu = parse_double(args[2]);
    validate(spec);
    return spec;
}

NullLaw NullLaw::chisq(int df) {
    if (df < 1 || df > 3) throw ParameterError("chi-square null law supports df 1..3");
    return {LawKind::ChisqRight, df, nullptr};
}

std::string describe(const NullLaw& law) {
    switch (law.kind) {
        case LawKind::NormalTwoSided: return "normal_two_sided";
        case LawKind::ChisqRight: return "chisq_right(" + std::to_string(law.df) + ")";
        case LawKind::EmpiricalRight: return "empirical_right";
        case LawKind::EmpiricalLeft: return "empirical_left";
    }
    return "?";
}

double limit_cdf(LawKind kind, int df, double x) {
    if (std::isnan(x)) throw DomainError("limit_cdf: x is NaN");
    switch (kind) {
        case LawKind::NormalTwoSided:
            return special::normal_cdf(x);
        case LawKind::ChisqRight:
            if (df < 1 || df > 3) throw ParameterError("limit_cdf: chi-square df must be 1, 2 or 3");
            return special::chisq_cdf(df, x);
        default:
            throw ParameterError("limit_cdf: empirical laws have no analytic limit");
    }
}

}  // namespace survtest
