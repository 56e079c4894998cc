#pragma once

#include "survtest/empirical_null.hpp"
#include "survtest/simulation.hpp"
#include "survtest/two_sample_tests.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>

namespace survtest {

inline constexpr std::size_t kFeatureCount = 21;

/// Canonical order: ten p-values (`<method>_pv`), three two-stage statistics,
/// four sample-size indicators, four censoring-rate indicators.
std::span<const std::string> feature_names();

/// FNV-1a of the comma-joined feature names, hex encoded.
std::string feature_checksum();

struct FeatureVector {
    std::array<double, kFeatureCount> values{};
    std::uint32_t degenerate_mask = 0;  // bit k: kDatasetStatistics[k] was degenerate
    Bins bins;
};

/// Degenerate components take conservative values: p-value 1, min3 1,
/// max_test 0, q_test 0.
FeatureVector features_from_battery(const Battery& battery, const Bins& bins);
FeatureVector build_features(const TwoSampleData& d);
FeatureVector build_features(const CensoredSample& s1, const CensoredSample& s2);
FeatureVector features_from_row(const FeatureRow& row);

}  // namespace survtest
