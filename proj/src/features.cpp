#include "survtest/features.hpp"

#include "survtest/format.hpp"

#include <vector>

namespace survtest {

namespace {

std::vector<std::string> make_names() {
    std::vector<std::string> names;
    for (std::size_t k = 0; k < kDatasetStatistics.size(); ++k) {
        names.push_back(std::string(method_name(kDatasetStatistics[k])) + (k < kPValueColumns ? "_pv" : ""));
    }
    for (const char* s : {"n_small", "n_low", "n_medium", "n_high", "r_none", "r_low", "r_medium", "r_high"}) {
        names.emplace_back(s);
    }
    return names;
}

void set_bins(FeatureVector& f, const Bins& bins) {
    f.bins = bins;
    f.values[13 + static_cast<std::size_t>(bins.n_bin)] = 1.0;
    f.values[17 + static_cast<std::size_t>(bins.r_bin)] = 1.0;
}

}  // namespace

std::span<const std::string> feature_names() {
    static const std::vector<std::string> names = make_names();
    return names;
}

std::string feature_checksum() {
    std::string joined;
    for (const auto& n : feature_names()) joined += n + ",";
    return hex64(fnv1a(joined));
}

FeatureVector features_from_battery(const Battery& battery, const Bins& bins) {
    FeatureVector f;
    for (std::size_t k = 0; k < kDatasetStatistics.size(); ++k) {
        const Method m = kDatasetStatistics[k];
        const auto& r = battery[m];
        if (!r) {
            f.degenerate_mask |= 1u << k;
            f.values[k] = (k < kPValueColumns || m == Method::min3) ? 1.0 : 0.0;
            continue;
        }
        f.values[k] = k < kPValueColumns ? *r->p_value : r->statistic;
    }
    set_bins(f, bins);
    return f;
}

FeatureVector build_features(const TwoSampleData& d) { return features_from_battery(run_all(d), d.bins()); }

FeatureVector build_features(const CensoredSample& s1, const CensoredSample& s2) {
    return build_features(TwoSampleData(s1, s2));
}

FeatureVector features_from_row(const FeatureRow& row) {
    FeatureVector f;
    for (std::size_t k = 0; k < kDatasetStatistics.size(); ++k) {
        f.values[k] = k < kPValueColumns ? row.p_values[k] : row.statistics[k];
    }
    set_bins(f, bins_for(row.n1, row.n2, row.pooled_rate()));
    return f;
}

}  // namespace survtest
