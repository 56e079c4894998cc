#include "survtest/model.hpp"

#include "survtest/error.hpp"
#include "survtest/format.hpp"
#include "survtest/simulation.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

namespace survtest {

namespace {

using json = nlohmann::ordered_json;

double sigmoid(double eta) {
    if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

// log(1 + exp(eta)) - y * eta
double log_loss(double eta, int y) {
    return std::max(eta, 0.0) + std::log1p(std::exp(-std::fabs(eta))) - (y ? eta : 0.0);
}

void require_shape(const TrainingSet& data) {
    if (data.rows() == 0) throw TrainingError("training set is empty");
    if (data.x.size() != data.rows() * kFeatureCount) throw TrainingError("training matrix has the wrong shape");
    for (int v : data.y) {
        if (v != 0 && v != 1) throw TrainingError("labels must be 0 or 1");
    }
}

Model blank_model(ModelKind kind) {
    Model m;
    m.kind = kind;
    const auto names = feature_names();
    m.feature_order.assign(names.begin(), names.end());
    m.feature_checksum = feature_checksum();
    m.mean.assign(kFeatureCount, 0.0);
    m.scale.assign(kFeatureCount, 1.0);
    m.metadata["tool_version"] = std::string(kToolVersion);
    return m;
}

double raw_score(const Model& m, std::span<const double> x) {
    if (m.is_linear()) {
        double eta = m.intercept;
        for (std::size_t j = 0; j < m.weights.size(); ++j) eta += m.weights[j] * (x[j] - m.mean[j]) / m.scale[j];
        return eta;
    }
    std::array<double, kFeatureCount> z{};
    for (std::size_t j = 0; j < kFeatureCount; ++j) z[j] = (x[j] - m.mean[j]) / m.scale[j];
    double eta = m.base_score;
    for (const auto& t : m.trees) eta += t.eval(z);
    return eta;
}

json params_json(const Model& m) {
    json p;
    if (m.is_linear()) {
        p["form"] = "linear";
        p["intercept"] = m.intercept;
        p["weights"] = m.weights;
    } else {
        p["form"] = "trees";
        p["base_score"] = m.base_score;
        json trees = json::array();
        for (const auto& t : m.trees) {
            json nodes = json::array();
            for (const auto& n : t.nodes) {
                if (n.feature < 0) {
                    nodes.push_back({{"leaf", n.value}});
                } else {
                    nodes.push_back(
                        {{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
                }
            }
            trees.push_back(std::move(nodes));
        }
        p["trees"] = std::move(trees);
    }
    return p;
}

}  // namespace

std::string_view to_string(ModelKind k) {
    switch (k) {
        case ModelKind::logreg: return "logreg";
        case ModelKind::gbt: return "gbt";
        case ModelKind::imported: return "imported";
    }
    return "?";
}

double Tree::eval(std::span<const double> x) const {
    std::size_t i = 0;
    while (nodes[i].feature >= 0) {
        const auto& n = nodes[i];
        i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes[i].value;
}

void check_compatible(const Model& model) {
    const auto names = feature_names();
    if (model.feature_order.size() != names.size() || !std::equal(names.begin(), names.end(), model.feature_order.begin())) {
        throw IncompatibleModel("model feature order does not match this build");
    }
    if (model.feature_checksum != feature_checksum()) {
        throw IncompatibleModel("model feature checksum " + model.feature_checksum + " does not match " +
                                feature_checksum());
    }
}

double predict(const Model& model, std::span<const double> x) {
    if (x.size() != kFeatureCount) throw IncompatibleModel("feature vector has the wrong length");
    return sigmoid(raw_score(model, x));
}

double predict(const Model& model, const FeatureVector& f) { return predict(model, std::span<const double>(f.values)); }

std::string model_id(const Model& model) {
    json j;
    j["mean"] = model.mean;
    j["scale"] = model.scale;
    j["params"] = params_json(model);
    return hex64(fnv1a(j.dump()));
}

std::string ml_statistic_name(const Model& model) { return "ml:" + model_id(model); }

std::string to_json_text(const Model& m) {
    json j;
    j["kind"] = std::string(to_string(m.kind));
    j["feature_order"] = m.feature_order;
    j["feature_checksum"] = m.feature_checksum;
    j["standardization"] = {{"mean", m.mean}, {"scale", m.scale}};
    j["params"] = params_json(m);
    j["metadata"] = m.metadata;
    j["model_id"] = model_id(m);
    return j.dump(2) + "\n";
}

Model model_from_json_text(std::string_view text) {
    Model m;
    try {
        const auto j = json::parse(text);
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "logreg") m.kind = ModelKind::logreg;
        else if (kind == "gbt") m.kind = ModelKind::gbt;
        else if (kind == "imported") m.kind = ModelKind::imported;
        else throw IncompatibleModel("unknown model kind '" + kind + "'");
        m.feature_order = j.at("feature_order").get<std::vector<std::string>>();
        m.feature_checksum = j.at("feature_checksum").get<std::string>();
        m.mean = j.at("standardization").at("mean").get<std::vector<double>>();
        m.scale = j.at("standardization").at("scale").get<std::vector<double>>();
        if (m.mean.size() != kFeatureCount || m.scale.size() != kFeatureCount) {
            throw IncompatibleModel("standardization has the wrong length");
        }
        for (double s : m.scale) {
            if (!(s > 0) || !std::isfinite(s)) throw IncompatibleModel("standardization scale must be positive");
        }
        const auto& p = j.at("params");
        const auto form = p.at("form").get<std::string>();
        if (form == "linear") {
            m.intercept = p.at("intercept").get<double>();
            m.weights = p.at("weights").get<std::vector<double>>();
            if (m.weights.size() != kFeatureCount) throw IncompatibleModel("weights have the wrong length");
        } else if (form == "trees") {
            m.base_score = p.at("base_score").get<double>();
            for (const auto& tj : p.at("trees")) {
                Tree t;
                for (const auto& nj : tj) {
                    TreeNode n;
                    if (nj.contains("leaf")) {
                        n.value = nj.at("leaf").get<double>();
                    } else {
                        n.feature = nj.at("feature").get<int>();
                        n.threshold = nj.at("threshold").get<double>();
                        n.left = nj.at("left").get<int>();
                        n.right = nj.at("right").get<int>();
                    }
                    t.nodes.push_back(n);
                }
                const int size = static_cast<int>(t.nodes.size());
                if (size == 0) throw IncompatibleModel("empty tree");
                for (int i = 0; i < size; ++i) {
                    const auto& n = t.nodes[static_cast<std::size_t>(i)];
                    if (n.feature < 0) continue;
                    if (n.feature >= static_cast<int>(kFeatureCount) || n.left <= i || n.right <= i || n.left >= size ||
                        n.right >= size) {
                        throw IncompatibleModel("malformed tree node " + std::to_string(i));
                    }
                }
                m.trees.push_back(std::move(t));
            }
            if (m.trees.empty()) throw IncompatibleModel("tree model without trees");
        } else {
            throw IncompatibleModel("unknown parameter form '" + form + "'");
        }
        if (j.contains("metadata")) {
            for (const auto& [k, v] : j.at("metadata").items()) m.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
        }
    } catch (const nlohmann::json::exception& e) {
        throw IncompatibleModel(std::string("malformed model file: ") + e.what());
    }
    check_compatible(m);
    return m;
}

void save_model(const Model& model, const std::string& path) { write_text_file(path, to_json_text(model)); }

Model load_model(const std::string& path) { return model_from_json_text(read_text_file(path)); }

double ml_p_value(const Model& model, double prediction, const Bins& bins, const EmpiricalNull& table) {
    const auto name = ml_statistic_name(model);
    if (table.statistic != name) {
        throw CalibrationRequired("null table is for '" + table.statistic + "', model needs '" + name + "'");
    }
    if (!(table.bins == bins)) {
        throw CalibrationRequired("null table bins " + to_string(table.bins) + " do not match sample bins " +
                                  to_string(bins));
    }
    return table.p_right(prediction);
}

void TrainingSet::add(const FeatureVector& f, int label) {
    x.insert(x.end(), f.values.begin(), f.values.end());
    y.push_back(label);
}

Model train_logreg(const TrainingSet& data, const LogregParams& params) {
    require_shape(data);
    if (!(params.l2 >= 0) || params.max_iter < 1 || !(params.tol > 0)) throw ParameterError("invalid logreg parameters");
    const auto rows = static_cast<Eigen::Index>(data.rows());
    constexpr auto cols = static_cast<Eigen::Index>(kFeatureCount);
    Model m = blank_model(ModelKind::logreg);

    for (std::size_t j = 0; j < kFeatureCount; ++j) {
        double mean = 0, sq = 0;
        for (std::size_t i = 0; i < data.rows(); ++i) mean += data.x[i * kFeatureCount + j];
        mean /= static_cast<double>(rows);
        for (std::size_t i = 0; i < data.rows(); ++i) {
            const double d = data.x[i * kFeatureCount + j] - mean;
            sq += d * d;
        }
        const double sd = std::sqrt(sq / static_cast<double>(rows));
        m.mean[j] = mean;
        m.scale[j] = sd > 1e-12 ? sd : 1.0;
    }

    Eigen::MatrixXd a(rows, cols + 1);
    Eigen::VectorXd y(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        a(i, 0) = 1.0;
        const auto r = data.row(static_cast<std::size_t>(i));
        for (Eigen::Index j = 0; j < cols; ++j) {
            a(i, j + 1) = (r[static_cast<std::size_t>(j)] - m.mean[static_cast<std::size_t>(j)]) /
                          m.scale[static_cast<std::size_t>(j)];
        }
        y(i) = data.y[static_cast<std::size_t>(i)];
    }
    Eigen::VectorXd penalty = Eigen::VectorXd::Constant(cols + 1, params.l2);
    penalty(0) = 0.0;

    const double inv_n = 1.0 / static_cast<double>(rows);
    auto objective = [&](const Eigen::VectorXd& beta) {
        const Eigen::VectorXd eta = a * beta;
        double loss = 0;
        for (Eigen::Index i = 0; i < rows; ++i) loss += log_loss(eta(i), static_cast<int>(y(i)));
        return loss * inv_n + 0.5 * beta.cwiseProduct(penalty).dot(beta);
    };

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(cols + 1);
    double current = objective(beta);
    bool converged = false;
    double grad_norm = 0;
    int iter = 0;
    for (; iter < params.max_iter && !converged; ++iter) {
        const Eigen::VectorXd eta = a * beta;
        Eigen::VectorXd p(rows), w(rows);
        for (Eigen::Index i = 0; i < rows; ++i) {
            p(i) = sigmoid(eta(i));
            w(i) = std::max(p(i) * (1.0 - p(i)), 1e-12);
        }
        const Eigen::VectorXd grad = a.transpose() * (p - y) * inv_n + penalty.cwiseProduct(beta);
        grad_norm = grad.norm();
        Eigen::MatrixXd hess = a.transpose() * w.asDiagonal() * a * inv_n;
        hess.diagonal() += penalty;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
        if (ldlt.info() != Eigen::Success) throw TrainingError("logistic regression Hessian is not positive definite");
        const Eigen::VectorXd step = ldlt.solve(grad);

        double t = 1.0;
        Eigen::VectorXd next = beta - step;
        double value = objective(next);
        // Slack absorbs rounding in the objective near the optimum.
        const double slack = 1e-12 * std::max(1.0, std::fabs(current));
        while (value > current + slack && t > 1e-10) {
            t *= 0.5;
            next = beta - t * step;
            value = objective(next);
        }
        converged = step.cwiseAbs().maxCoeff() < params.tol;
        beta = next;
        current = value;
    }
    if (!converged) {
        throw TrainingError("logistic regression did not converge in " + std::to_string(params.max_iter) +
                            " iterations (gradient norm " + format_double(grad_norm) + ")");
    }
    m.intercept = beta(0);
    m.weights.resize(kFeatureCount);
    for (std::size_t j = 0; j < kFeatureCount; ++j) m.weights[j] = beta(static_cast<Eigen::Index>(j + 1));
    m.metadata["l2"] = format_double(params.l2);
    m.metadata["iterations"] = std::to_string(iter);
    return m;
}

namespace {

struct SplitStats {
    double g = 0, h = 0;
    long long count = 0;
};

struct Candidate {
    double gain = -1;
    int feature = -1;
    double threshold = 0;
    bool valid = false;
};

}  // namespace

Model train_gbt(const TrainingSet& data, const GbtParams& params, const TrainingSet* validation) {
    require_shape(data);
    if (params.trees < 1 || params.depth < 1 || params.min_leaf < 1 || !(params.learning_rate > 0) ||
        !(params.lambda >= 0)) {
        throw ParameterError("invalid gbt parameters");
    }
    if (validation) require_shape(*validation);
    const std::size_t rows = data.rows();
    Model m = blank_model(ModelKind::gbt);

    const double prior = std::accumulate(data.y.begin(), data.y.end(), 0.0) / static_cast<double>(rows);
    const double clipped = std::clamp(prior, 1e-6, 1.0 - 1e-6);
    m.base_score = std::log(clipped / (1.0 - clipped));

    std::vector<std::vector<std::uint32_t>> order(kFeatureCount, std::vector<std::uint32_t>(rows));
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
        auto& o = order[j];
        std::iota(o.begin(), o.end(), 0u);
        std::stable_sort(o.begin(), o.end(), [&](std::uint32_t l, std::uint32_t r) {
            return data.x[l * kFeatureCount + j] < data.x[r * kFeatureCount + j];
        });
    }

    std::vector<double> score(rows, m.base_score), grad(rows), hess(rows);
    std::vector<int> node_of(rows);
    const double lambda = params.lambda;
    auto leaf_term = [lambda](double g, double h) { return g * g / (h + lambda); };

    std::vector<double> val_score;
    std::vector<double> val_accuracy;  // after k trees, k = 0..
    if (validation) {
        val_score.assign(validation->rows(), m.base_score);
        long long correct = 0;
        for (std::size_t i = 0; i < validation->rows(); ++i) correct += ((m.base_score > 0) == (validation->y[i] == 1));
        val_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(validation->rows()));
    }

    for (int round = 0; round < params.trees; ++round) {
        for (std::size_t i = 0; i < rows; ++i) {
            const double p = sigmoid(score[i]);
            grad[i] = p - data.y[i];
            hess[i] = p * (1.0 - p);
        }
        Tree tree;
        tree.nodes.emplace_back();
        std::fill(node_of.begin(), node_of.end(), 0);
        std::vector<int> level = {0};
        std::vector<SplitStats> totals(1);
        for (std::size_t i = 0; i < rows; ++i) {
            totals[0].g += grad[i];
            totals[0].h += hess[i];
            ++totals[0].count;
        }
        double tree_gain = 0;

        for (int depth = 0; depth < params.depth && !level.empty(); ++depth) {
            std::vector<int> slot_of(tree.nodes.size(), -1);
            for (std::size_t s = 0; s < level.size(); ++s) slot_of[static_cast<std::size_t>(level[s])] = static_cast<int>(s);
            std::vector<Candidate> best(level.size());

            std::vector<SplitStats> left(level.size());
            std::vector<double> last(level.size());
            for (std::size_t j = 0; j < kFeatureCount; ++j) {
                std::fill(left.begin(), left.end(), SplitStats{});
                for (std::uint32_t i : order[j]) {
                    const int nd = node_of[i];
                    if (nd < 0) continue;
                    const int s = slot_of[static_cast<std::size_t>(nd)];
                    if (s < 0) continue;
                    const auto su = static_cast<std::size_t>(s);
                    const double xv = data.x[i * kFeatureCount + j];
                    auto& l = left[su];
                    if (l.count > 0 && xv != last[su]) {
                        const auto& t = totals[su];
                        const long long right_count = t.count - l.count;
                        if (l.count >= params.min_leaf && right_count >= params.min_leaf) {
                            const double gain =
                                leaf_term(l.g, l.h) + leaf_term(t.g - l.g, t.h - l.h) - leaf_term(t.g, t.h);
                            if (!best[su].valid || gain > best[su].gain) {
                                best[su] = {gain, static_cast<int>(j), last[su], true};
                            }
                        }
                    }
                    l.g += grad[i];
                    l.h += hess[i];
                    ++l.count;
                    last[su] = xv;
                }
            }

            std::vector<int> next_level;
            std::vector<SplitStats> next_totals;
            std::vector<int> remap(tree.nodes.size(), -1);  // parent node -> left child index
            for (std::size_t s = 0; s < level.size(); ++s) {
                if (!best[s].valid || best[s].gain < -1e-12) continue;
                const int parent = level[s];
                const int li = static_cast<int>(tree.nodes.size());
                tree.nodes.emplace_back();
                tree.nodes.emplace_back();
                auto& pn = tree.nodes[static_cast<std::size_t>(parent)];
                pn.feature = best[s].feature;
                pn.threshold = best[s].threshold;
                pn.left = li;
                pn.right = li + 1;
                remap[static_cast<std::size_t>(parent)] = li;
                tree_gain += std::max(best[s].gain, 0.0);
                next_level.push_back(li);
                next_level.push_back(li + 1);
            }
            next_totals.assign(next_level.size(), SplitStats{});
            std::vector<int> slot_next(tree.nodes.size(), -1);
            for (std::size_t s = 0; s < next_level.size(); ++s) slot_next[static_cast<std::size_t>(next_level[s])] = static_cast<int>(s);
            for (std::size_t i = 0; i < rows; ++i) {
                const int nd = node_of[i];
                if (nd < 0 || nd >= static_cast<int>(remap.size()) || remap[static_cast<std::size_t>(nd)] < 0) continue;
                const auto& pn = tree.nodes[static_cast<std::size_t>(nd)];
                const int child = data.x[i * kFeatureCount + static_cast<std::size_t>(pn.feature)] <= pn.threshold ? pn.left : pn.right;
                node_of[i] = child;
                auto& t = next_totals[static_cast<std::size_t>(slot_next[static_cast<std::size_t>(child)])];
                t.g += grad[i];
                t.h += hess[i];
                ++t.count;
            }
            level = std::move(next_level);
            totals = std::move(next_totals);
        }
        if (tree_gain <= 1e-12) break;

        std::vector<SplitStats> leaf(tree.nodes.size());
        for (std::size_t i = 0; i < rows; ++i) {
            auto& l = leaf[static_cast<std::size_t>(node_of[i])];
            l.g += grad[i];
            l.h += hess[i];
        }
        for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
            if (tree.nodes[k].feature < 0) tree.nodes[k].value = -params.learning_rate * leaf[k].g / (leaf[k].h + lambda);
        }
        for (std::size_t i = 0; i < rows; ++i) score[i] += tree.nodes[static_cast<std::size_t>(node_of[i])].value;
        if (validation) {
            long long correct = 0;
            for (std::size_t i = 0; i < validation->rows(); ++i) {
                val_score[i] += tree.eval(validation->row(i));
                correct += ((val_score[i] > 0) == (validation->y[i] == 1));
            }
            val_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(validation->rows()));
        }
        m.trees.push_back(std::move(tree));
    }

    if (validation && !m.trees.empty()) {
        const auto best = std::max_element(val_accuracy.begin() + 1, val_accuracy.end()) - val_accuracy.begin();
        m.trees.resize(static_cast<std::size_t>(best));
        m.metadata["validation_accuracy"] = format_double(val_accuracy[static_cast<std::size_t>(best)]);
    }
    if (m.trees.empty()) {
        // Keep the tree form valid: a single leaf carries no signal beyond the prior.
        Tree t;
        t.nodes.emplace_back();
        m.trees.push_back(t);
    }
    m.metadata["trees"] = std::to_string(m.trees.size());
    m.metadata["depth"] = std::to_string(params.depth);
    m.metadata["learning_rate"] = format_double(params.learning_rate);
    m.metadata["min_leaf"] = std::to_string(params.min_leaf);
    m.metadata["lambda"] = format_double(params.lambda);
    return m;
}

double accuracy(const Model& model, const TrainingSet& data, double threshold) {
    if (data.rows() == 0) throw ParameterError("accuracy of an empty set");
    long long correct = 0;
    for (std::size_t i = 0; i < data.rows(); ++i) correct += ((predict(model, data.row(i)) >= threshold) == (data.y[i] == 1));
    return static_cast<double>(correct) / static_cast<double>(data.rows());
}

Model select_model(ModelKind kind, const TrainingSet& train, const TrainingSet& validation, const GbtParams& base) {
    Model best;
    double best_acc = -1;
    auto consider = [&](Model candidate) {
        const double acc = accuracy(candidate, validation);
        if (acc > best_acc) {
            best_acc = acc;
            best = std::move(candidate);
        }
    };
    if (kind == ModelKind::logreg) {
        for (double l2 : {1e-4, 1e-3, 1e-2}) consider(train_logreg(train, {l2, 100, 1e-8}));
    } else if (kind == ModelKind::gbt) {
        for (int depth : {3, 4, 5}) {
            for (double lr : {0.05, 0.1, 0.2}) {
                GbtParams p = base;
                p.depth = depth;
                p.learning_rate = lr;
                consider(train_gbt(train, p, &validation));
            }
        }
    } else {
        throw ParameterError("imported models are not trained here");
    }
    best.metadata["validation_accuracy"] = format_double(best_acc);
    return best;
}

Split split_of(long long rep) {
    const long long k = rep % 20;
    if (k < 11) return Split::train;
    if (k < 17) return Split::validate;
    return Split::test;
}

TrainingSet training_set(std::span<const FeatureRow> rows, Split split) {
    TrainingSet out;
    for (const auto& r : rows) {
        if (r.degenerate || split_of(r.rep) != split) continue;
        out.add(features_from_row(r), r.target);
    }
    return out;
}

NamedStatistic ml_statistic(const Model& model) {
    auto shared = std::make_shared<const Model>(model);
    return {ml_statistic_name(model), [shared](const TwoSampleData& d) { return predict(*shared, build_features(d)); }};
}

}  // namespace survtest
