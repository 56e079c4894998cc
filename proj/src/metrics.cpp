#include "survtest/metrics.hpp"

#include "survtest/error.hpp"
#include "survtest/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace survtest {

namespace {

Estimate proportion(double successes, double trials) {
    if (trials <= 0) return {0.0, 0.0, 1.0};
    const double p = successes / trials;
    const double half = 1.959963984540054 * std::sqrt(p * (1 - p) / trials);
    return {p, std::max(0.0, p - half), std::min(1.0, p + half)};
}

Estimate around(double value, double se) {
    const double half = 1.959963984540054 * se;
    return {value, std::max(0.0, value - half), std::min(1.0, value + half)};
}

void check(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw ParameterError("scores and labels differ in length");
    if (scores.empty()) throw ParameterError("metrics of an empty set");
    for (int y : labels) {
        if (y != 0 && y != 1) throw ParameterError("labels must be 0 or 1");
    }
}

std::vector<std::size_t> order_desc(std::span<const double> scores) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t l, std::size_t r) { return scores[l] > scores[r]; });
    return idx;
}

nlohmann::ordered_json estimate_json(const Estimate& e) { return {{"value", e.value}, {"lo", e.lo}, {"hi", e.hi}}; }

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
    check(scores, labels);
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t l, std::size_t r) { return scores[l] < scores[r]; });
    double rank_sum = 0;
    long long pos = 0;
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            if (labels[idx[k]] == 1) {
                rank_sum += midrank;
                ++pos;
            }
        }
        i = j;
    }
    const auto neg = static_cast<long long>(scores.size()) - pos;
    if (pos == 0 || neg == 0) throw DomainError("AUC needs both classes");
    const double p = static_cast<double>(pos);
    return (rank_sum - p * (p + 1) / 2) / (p * static_cast<double>(neg));
}

double average_precision(std::span<const double> scores, std::span<const int> labels) {
    check(scores, labels);
    const auto idx = order_desc(scores);
    const double total_pos = std::accumulate(labels.begin(), labels.end(), 0.0);
    if (total_pos == 0) throw DomainError("average precision needs positive labels");
    double tp = 0, fp = 0, prev_recall = 0, ap = 0;
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
            (labels[idx[j]] == 1 ? tp : fp) += 1;
            ++j;
        }
        const double recall = tp / total_pos;
        ap += (recall - prev_recall) * tp / (tp + fp);
        prev_recall = recall;
        i = j;
    }
    return ap;
}

Metrics compute_metrics(std::span<const double> scores, std::span<const int> labels, double threshold) {
    check(scores, labels);
    double tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] >= threshold;
        if (labels[i] == 1) (predicted ? tp : fn) += 1;
        else (predicted ? fp : tn) += 1;
    }
    Metrics m;
    m.count = static_cast<long long>(scores.size());
    m.positives = static_cast<long long>(tp + fn);
    m.accuracy = proportion(tp + tn, tp + tn + fp + fn);
    m.precision = proportion(tp, tp + fp);
    m.recall = proportion(tp, tp + fn);
    m.specificity = proportion(tn, tn + fp);
    m.prop_without_fn = proportion(tp + fp + tn, tp + tn + fp + fn);
    const double pos = tp + fn, neg = tn + fp;
    // Hanley-McNeil standard error.
    const double a = roc_auc(scores, labels);
    const double q1 = a / (2 - a), q2 = 2 * a * a / (1 + a);
    const double var = (a * (1 - a) + (pos - 1) * (q1 - a * a) + (neg - 1) * (q2 - a * a)) / (pos * neg);
    m.roc_auc = around(a, std::sqrt(std::max(var, 0.0)));
    const double ap = average_precision(scores, labels);
    m.average_precision = around(ap, std::sqrt(ap * (1 - ap) / pos));
    return m;
}

Metrics evaluate(const Model& model, const TrainingSet& data, double threshold) {
    std::vector<double> scores(data.rows());
    for (std::size_t i = 0; i < data.rows(); ++i) scores[i] = predict(model, data.row(i));
    return compute_metrics(scores, data.y, threshold);
}

std::string to_json_text(const Metrics& m) {
    nlohmann::ordered_json j;
    j["count"] = m.count;
    j["positives"] = m.positives;
    j["accuracy"] = estimate_json(m.accuracy);
    j["precision"] = estimate_json(m.precision);
    j["recall"] = estimate_json(m.recall);
    j["specificity"] = estimate_json(m.specificity);
    j["roc_auc"] = estimate_json(m.roc_auc);
    j["average_precision"] = estimate_json(m.average_precision);
    j["prop_without_fn"] = estimate_json(m.prop_without_fn);
    return j.dump(2) + "\n";
}

std::vector<Importance> permutation_importance(const Model& model, const TrainingSet& data, int repeats,
                                               std::uint64_t seed) {
    if (repeats < 3) throw ParameterError("importance needs at least three repeats");
    const double base = accuracy(model, data);
    const auto names = feature_names();
    std::vector<Importance> out;
    TrainingSet shuffled = data;
    const std::size_t rows = data.rows();
    std::vector<double> column(rows);
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
        std::vector<double> drops;
        for (int r = 0; r < repeats; ++r) {
            for (std::size_t i = 0; i < rows; ++i) column[i] = data.x[i * kFeatureCount + j];
            RandomStream rng(derive_seed(seed, {j, static_cast<std::uint64_t>(r)}));
            for (std::size_t i = rows; i > 1; --i) std::swap(column[i - 1], column[rng.below(i)]);
            for (std::size_t i = 0; i < rows; ++i) shuffled.x[i * kFeatureCount + j] = column[i];
            drops.push_back(base - accuracy(model, shuffled));
        }
        for (std::size_t i = 0; i < rows; ++i) shuffled.x[i * kFeatureCount + j] = data.x[i * kFeatureCount + j];
        const double mean = std::accumulate(drops.begin(), drops.end(), 0.0) / repeats;
        double sq = 0;
        for (double d : drops) sq += (d - mean) * (d - mean);
        out.push_back({names[j], mean, repeats > 1 ? std::sqrt(sq / (repeats - 1)) : 0.0});
    }
    std::stable_sort(out.begin(), out.end(), [](const Importance& l, const Importance& r) { return l.mean_drop > r.mean_drop; });
    return out;
}

}  // namespace survtest
