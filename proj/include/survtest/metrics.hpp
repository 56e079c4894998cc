#pragma once

#include "survtest/model.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace survtest {

struct Estimate {
    double value = 0.0;
    double lo = 0.0;  // 95% normal-approximation interval, clipped to [0, 1]
    double hi = 0.0;
};

struct Metrics {
    long long count = 0;
    long long positives = 0;
    Estimate accuracy;
    Estimate precision;
    Estimate recall;
    Estimate specificity;
    Estimate roc_auc;
    Estimate average_precision;
    Estimate prop_without_fn;  // (TP + FP + TN) / total
};

/// Labels are 0/1; `threshold` applies to the score for the confusion-matrix metrics.
/// Throws DomainError when only one class is present (AUC and AP are undefined).
Metrics compute_metrics(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

/// Midrank (Mann-Whitney) AUC; ties count one half.
double roc_auc(std::span<const double> scores, std::span<const int> labels);
/// Step-wise average precision over distinct score thresholds.
double average_precision(std::span<const double> scores, std::span<const int> labels);

Metrics evaluate(const Model& model, const TrainingSet& data, double threshold = 0.5);

std::string to_json_text(const Metrics& m);

struct Importance {
    std::string feature;
    double mean_drop = 0.0;  // accuracy decrease when the feature column is permuted
    double sd_drop = 0.0;
};

/// Deterministic given `seed`; sorted by decreasing mean drop.
std::vector<Importance> permutation_importance(const Model& model, const TrainingSet& data, int repeats,
                                               std::uint64_t seed);

}  // namespace survtest
