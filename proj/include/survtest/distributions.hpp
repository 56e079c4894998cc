#pragma once

#include "survtest/rng.hpp"

#include <memory>
#include <string>
#include <string_view>

namespace survtest {

/// Lifetime families. Exp: lambda is a rate. We, G: lambda is a scale and nu
/// a shape. LgN: mu is the log-mean and lambda the log-sd (no shift).
enum class Family { Exp, We, G, LgN };

std::string_view family_name(Family f);
Family parse_family(std::string_view name);
bool family_has_shape(Family f);

struct DistSpec {
    Family family = Family::Exp;
    double mu = 0.0;
    double lambda = 1.0;
    double nu = 1.0;

    friend bool operator==(const DistSpec&, const DistSpec&) = default;
};

/// Throws ParameterError for lambda <= 0, nu <= 0 or non-finite values.
void validate(const DistSpec& spec);

/// Lower end of the support: mu for shifted families, 0 for LgN.
double support_min(const DistSpec& spec);

double pdf(const DistSpec& spec, double t);
double cdf(const DistSpec& spec, double t);
double survival(const DistSpec& spec, double t);

/// Inverse CDF on (0,1). Closed form except Gamma, which uses a safeguarded
/// Newton iteration started from the Wilson-Hilferty approximation.
double quantile(const DistSpec& spec, double p);

/// Inverse-transform draw.
inline double sample(const DistSpec& spec, RandomStream& rng) { return quantile(spec, rng.uniform()); }

/// Text form `family(mu,lambda[,nu])`, e.g. `We(0,1.1,2.4)`. Numbers use the
/// shortest round-trip representation.
std::string to_string(const DistSpec& spec);
DistSpec parse_dist(std::string_view text);

struct EmpiricalNull;

enum class LawKind { NormalTwoSided, ChisqRight, EmpiricalRight, EmpiricalLeft };

struct NullLaw {
    LawKind kind = LawKind::NormalTwoSided;
    int df = 0;  // chi-square degrees of freedom, 1..3
    std::shared_ptr<const EmpiricalNull> table;

    static NullLaw normal() { return {LawKind::NormalTwoSided, 0, nullptr}; }
    static NullLaw chisq(int df);
    static NullLaw empirical_right() { return {LawKind::EmpiricalRight, 0, nullptr}; }
    static NullLaw empirical_left() { return {LawKind::EmpiricalLeft, 0, nullptr}; }

    bool is_empirical() const { return kind == LawKind::EmpiricalRight || kind == LawKind::EmpiricalLeft; }
};

std::string describe(const NullLaw& law);

/// CDF of an analytic limit law: Φ(x) for the normal kind, F_{χ²(df)}(x) for
/// chi-square with df in {1,2,3}.
double limit_cdf(LawKind kind, int df, double x);

}  // namespace survtest
