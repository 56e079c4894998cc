#pragma once

#include "survtest/empirical_null.hpp"
#include "survtest/features.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace survtest {

enum class ModelKind { logreg, gbt, imported };
std::string_view to_string(ModelKind k);

/// Internal node when `feature >= 0`: x[feature] <= threshold goes left.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf contribution, learning rate folded in
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    double eval(std::span<const double> x) const;
};

struct Model {
    ModelKind kind = ModelKind::logreg;
    std::vector<std::string> feature_order;
    std::string feature_checksum;
    std::vector<double> mean;   // standardization: z = (x - mean) / scale
    std::vector<double> scale;

    // Linear form: logit = intercept + weights . z
    double intercept = 0.0;
    std::vector<double> weights;

    // Tree form: logit = base_score + sum of trees on z
    double base_score = 0.0;
    std::vector<Tree> trees;

    std::map<std::string, std::string> metadata;

    bool is_linear() const { return trees.empty(); }
};

/// Throws IncompatibleModel unless the model's feature order and
/// checksum match this build's feature set.
void check_compatible(const Model& model);

/// Probability of H1 for a raw (unstandardized) feature vector.
double predict(const Model& model, std::span<const double> x);
double predict(const Model& model, const FeatureVector& f);

/// FNV-1a over the serialized parameters. Names the model's null tables.
std::string model_id(const Model& model);
std::string ml_statistic_name(const Model& model);

std::string to_json_text(const Model& model);
Model model_from_json_text(std::string_view text);
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

/// Right-tail empirical p-value of a prediction; the table must belong to
/// this model and to the sample's bins.
double ml_p_value(const Model& model, double prediction, const Bins& bins, const EmpiricalNull& table);
inline bool decide(double p_value, double alpha) { return p_value < alpha; }

/// Row-major design matrix with 0/1 labels.
struct TrainingSet {
    std::vector<double> x;  // rows * kFeatureCount
    std::vector<int> y;
    std::size_t rows() const { return y.size(); }
    std::span<const double> row(std::size_t i) const { return {x.data() + i * kFeatureCount, kFeatureCount}; }
    void add(const FeatureVector& f, int label);
};

struct LogregParams {
    double l2 = 1e-4;  // penalty on the mean log-loss, intercept unpenalized
    int max_iter = 100;
    double tol = 1e-8;
};

struct GbtParams {
    int trees = 200;
    int depth = 4;
    double learning_rate = 0.1;
    int min_leaf = 50;
    double lambda = 1.0;
};

Model train_logreg(const TrainingSet& data, const LogregParams& params = {});

/// With a validation set, the ensemble is truncated to the prefix with the
/// best validation accuracy.
Model train_gbt(const TrainingSet& data, const GbtParams& params = {}, const TrainingSet* validation = nullptr);

/// Grid search on validation accuracy. logreg: l2 in {1e-4, 1e-3, 1e-2};
/// gbt: depth {3, 4, 5} x learning rate {0.05, 0.1, 0.2}.
Model select_model(ModelKind kind, const TrainingSet& train, const TrainingSet& validation, const GbtParams& base = {});

double accuracy(const Model& model, const TrainingSet& data, double threshold = 0.5);

/// Replication index decides the split, so every design cell contributes
/// 55% / 30% / 15% of its reps to train / validate / test.
enum class Split { train, validate, test };
Split split_of(long long rep);
TrainingSet training_set(std::span<const FeatureRow> rows, Split split);

/// The model's prediction as a statistic, for building its null tables.
NamedStatistic ml_statistic(const Model& model);

}  // namespace survtest
