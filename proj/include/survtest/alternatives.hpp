#pragma once

#include "survtest/distributions.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace survtest {

enum class AltGroup { I = 1, II, III, IV, V, VI, VII, VIII, IX };

std::string_view group_label(AltGroup g);
AltGroup parse_group(std::string_view label);

struct AlternativePair {
    std::string id;  // H01..H09, H11..H19, H21..H29
    AltGroup group = AltGroup::I;
    DistSpec s1;
    DistSpec s2;
    std::string description;

    friend bool operator==(const AlternativePair&, const AlternativePair&) = default;
};

/// The 27 competing-hypothesis pairs in nine groups of three.
std::span<const AlternativePair> registry();
const AlternativePair& find_alternative(std::string_view id);

/// Tab-separated lines `id group s1 s2 description`; round-trips exactly.
std::string registry_to_text(std::span<const AlternativePair> pairs);
std::vector<AlternativePair> registry_from_text(std::string_view text);

/// ∫ |S_a(t) - S_b(t)| dt by adaptive Gauss-Kronrod quadrature.
double l1_distance(const DistSpec& a, const DistSpec& b);

/// P(C < T) = ∫ F^C(t) f(t) dt, evaluated as ∫_0^1 F^C(Q_T(u)) du.
double expected_censoring_rate(const DistSpec& failure, const DistSpec& censor);

struct CensoringPlan {
    DistSpec failure;
    std::optional<DistSpec> censor;  // none <=> target_rate == 0
    double target_rate = 0.0;
};

/// Solves for the free parameter of the censoring family so that the expected
/// rate equals `target_rate` (within 1e-6). Free parameter: the rate for Exp,
/// the scale for We and G (shape fixed at `shape`), the log-mean for LgN
/// (log-sd fixed at `shape`). Shift is 0. Target 0 yields a plan without
/// censoring. Throws CalibrationError when the root is not bracketed.
CensoringPlan calibrate_censoring(const DistSpec& failure, Family censor_family, double target_rate,
                                  double shape = 1.0);

/// Alternative config file:
/// {"id": "H05", "s1": "Exp(0,1.3)", "s2": "We(0,0.9,1.1)", "censoring": {"family": "Exp", "rate": 0.2}}
struct AlternativeConfig {
    std::string id;
    DistSpec s1;
    DistSpec s2;
    Family censor_family = Family::Exp;
    double censor_shape = 1.0;
    double rate = 0.0;
};

AlternativeConfig parse_alternative_config(std::string_view json_text);
std::string to_json_text(const AlternativeConfig& config);

}  // namespace survtest
