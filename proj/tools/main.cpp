#include "survtest/analysis.hpp"
#include "survtest/error.hpp"
#include "survtest/format.hpp"
#include "survtest/metrics.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace survtest;
using json = nlohmann::ordered_json;

namespace {

enum Exit : int {
    kAccept = 0,
    kReject = 3,
    kUsage = 4,
    kValidation = 5,
    kCalibrationRequired = 6,
    kIncompatibleModel = 7,
    kDegenerate = 8,
    kOther = 9,
};

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    for (auto part : split(text, ',')) {
        const auto t = trim(part);
        if (!t.empty()) out.emplace_back(t);
    }
    return out;
}

std::vector<long long> integer_list(const std::string& text) {
    std::vector<long long> out;
    for (const auto& s : split_list(text)) out.push_back(parse_integer(s));
    if (out.empty()) throw ParameterError("empty integer list");
    return out;
}

std::vector<double> real_list(const std::string& text) {
    std::vector<double> out;
    for (const auto& s : split_list(text)) out.push_back(parse_double(s));
    if (out.empty()) throw ParameterError("empty number list");
    return out;
}

std::vector<std::string> alternative_list(const std::string& text) {
    if (text == "all") {
        std::vector<std::string> ids;
        for (const auto& p : registry()) ids.push_back(p.id);
        return ids;
    }
    auto ids = split_list(text);
    for (const auto& id : ids) find_alternative(id);
    return ids;
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    write_text_file(path, text);
}

std::string config_line(const json& config) { return "# config: " + config.dump() + "\n"; }

std::string with_config(const std::string& json_text, const json& config) {
    auto j = json::parse(json_text);
    j["config"] = config;
    return j.dump(2) + "\n";
}

std::string strip_comments(const std::string& text) {
    std::string out;
    for (auto line : split(text, '\n')) {
        if (!line.empty() && line.front() == '#') continue;
        out.append(line);
        out += '\n';
    }
    return out;
}

NullTableSet load_tables(const std::vector<std::string>& paths) {
    NullTableSet set;
    for (const auto& p : paths) {
        if (fs::is_directory(p)) {
            std::vector<fs::path> files;
            for (const auto& e : fs::directory_iterator(p)) {
                if (e.path().extension() == ".json") files.push_back(e.path());
            }
            std::sort(files.begin(), files.end());
            for (const auto& f : files) set.add(load_null_table(f.string()));
        } else {
            set.add(load_null_table(p));
        }
    }
    return set;
}

std::string table_file_name(const EmpiricalNull& t) {
    std::string stat = t.statistic;
    std::replace(stat.begin(), stat.end(), ':', '_');
    return stat + "_n" + std::to_string(t.n) + "_r" + format_double(t.rate) + ".json";
}

Split parse_split(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "validate") return Split::validate;
    if (s == "test") return Split::test;
    throw ParameterError("unknown split '" + s + "' (train, validate, test)");
}

TrainingSet load_split(const std::string& data_dir, const std::string& split_name) {
    const auto rows = read_dataset_csv((fs::path(data_dir) / "dataset.csv").string());
    if (split_name == "all") {
        TrainingSet all;
        for (const auto& r : rows) {
            if (!r.degenerate) all.add(features_from_row(r), r.target);
        }
        return all;
    }
    return training_set(rows, parse_split(split_name));
}

struct Common {
    int workers = 1;
};

// test ----------------------------------------------------------------------

struct TestOptions {
    std::string sample1, sample2, method, model;
    double alpha = 0.05;
    std::vector<std::string> tables;
};

int run_test(const TestOptions& o) {
    if (o.method.empty() == o.model.empty()) throw ParameterError("exactly one of --method and --model is required");
    if (!(o.alpha >= 0 && o.alpha <= 1)) throw ParameterError("--alpha must lie in [0, 1]");
    const auto s1 = read_sample_csv(o.sample1);
    const auto s2 = read_sample_csv(o.sample2);
    const TwoSampleData d(s1, s2);
    const NullTableSet tables = load_tables(o.tables);
    double p = 1.0;

    if (!o.method.empty()) {
        const Method m = parse_method(o.method);
        const TestResult r = run_method(d, m);
        if (r.null_law.is_empirical()) {
            const auto* t = tables.find_bins(std::string(method_name(m)), d.bins());
            if (!t) {
                throw CalibrationRequired(std::string(method_name(m)) + " needs a null table for bins " +
                                          to_string(d.bins()) + " (pass --null-table)");
            }
            p = p_value(r, t);
        } else {
            p = *r.p_value;
        }
        std::cout << "method: " << method_name(m) << "\n"
                  << "statistic: " << format_double(r.statistic) << "\n"
                  << "null_law: " << describe(r.null_law) << "\n";
        if (r.selected) {
            std::cout << "selected: " << method_name(*r.selected) << " (Q = " << format_double(r.selector) << ")\n";
        }
    } else {
        const Model model = load_model(o.model);
        const FeatureVector f = build_features(d);
        const double pred = predict(model, f);
        const auto name = ml_statistic_name(model);
        const auto* t = tables.find_bins(name, f.bins);
        if (!t) throw CalibrationRequired(name + " needs a null table for bins " + to_string(f.bins) + " (pass --null-table)");
        p = ml_p_value(model, pred, f.bins, *t);
        std::cout << "method: " << name << " (" << to_string(model.kind) << ")\n"
                  << "statistic: " << format_double(pred) << "\n"
                  << "null_law: empirical_right\n";
        if (f.degenerate_mask) {
            std::string names;
            for (std::size_t k = 0; k < kDatasetStatistics.size(); ++k) {
                if (f.degenerate_mask & (1u << k)) names += std::string(" ") + std::string(method_name(kDatasetStatistics[k]));
            }
            std::cout << "note: degenerate components filled conservatively:" << names << "\n";
        }
    }
    const bool reject = decide(p, o.alpha);
    std::cout << "bins: " << to_string(d.bins()) << "\n"
              << "p_value: " << format_double(p) << "\n"
              << "alpha: " << format_double(o.alpha) << "\n"
              << "decision: " << (reject ? "reject_H0" : "accept_H0") << "\n";
    return reject ? kReject : kAccept;
}

// calibrate-censoring -------------------------------------------------------

struct CalibrateOptions {
    std::string failure, alternative, family = "Exp", out;
    double rate = 0.3, shape = 1.0;
};

int run_calibrate(const CalibrateOptions& o) {
    if (o.failure.empty() == o.alternative.empty()) throw ParameterError("exactly one of --failure and --alternative is required");
    std::vector<std::pair<std::string, DistSpec>> laws;
    if (!o.failure.empty()) {
        laws.emplace_back("failure", parse_dist(o.failure));
    } else {
        const auto& alt = find_alternative(o.alternative);
        laws.emplace_back("s1", alt.s1);
        laws.emplace_back("s2", alt.s2);
    }
    json out;
    out["config"] = {{"family", o.family}, {"rate", o.rate}, {"shape", o.shape}};
    for (const auto& [label, law] : laws) {
        const auto plan = calibrate_censoring(law, parse_family(o.family), o.rate, o.shape);
        json e;
        e["failure"] = to_string(law);
        e["censor"] = plan.censor ? to_string(*plan.censor) : "none";
        e["target_rate"] = plan.target_rate;
        e["expected_rate"] = plan.censor ? expected_censoring_rate(law, *plan.censor) : 0.0;
        out[label] = std::move(e);
    }
    write_output(o.out, out.dump(2) + "\n");
    return kAccept;
}

// simulate ------------------------------------------------------------------

struct SimulateOptions {
    bool desk = false;
    std::string manifest, alternatives = "all", sizes = "20,100", rates = "0,0.3", out, censor_family = "Exp";
    long long reps = 1000;
    double censor_shape = 1.0;
    std::optional<std::uint64_t> seed;
};

int run_simulate(const SimulateOptions& o, const Common& c) {
    GridSpec grid;
    if (!o.manifest.empty()) {
        grid = load_manifest(o.manifest).grid;
    } else {
        if (!o.seed) throw ParameterError("--seed is required (no wall-clock seeding)");
        if (o.desk) {
            grid = desk_grid(*o.seed, o.reps);
        } else {
            grid.alternatives = alternative_list(o.alternatives);
            grid.sample_sizes = integer_list(o.sizes);
            grid.censoring_rates = real_list(o.rates);
            grid.replications = o.reps;
            grid.master_seed = *o.seed;
            grid.censor_family = parse_family(o.censor_family);
            grid.censor_shape = o.censor_shape;
        }
    }
    validate(grid);
    fs::create_directories(o.out);
    const auto m = generate_dataset(grid, o.out, c.workers);
    std::cout << "rows: " << m.rows << "\n"
              << "degenerate_rows: " << m.degenerate_rows << "\n"
              << "data_fnv1a: " << m.data_fnv1a << "\n"
              << "manifest: " << (fs::path(o.out) / "manifest.json").string() << "\n";
    for (const auto& cell : m.cells) {
        if (!cell.error.empty()) std::cerr << "warning: " << cell.alt << " rate " << cell.rate << ": " << cell.error << "\n";
    }
    return kAccept;
}

// train / evaluate / predict / importance ------------------------------------

struct TrainOptions {
    std::string data, kind = "logreg", out;
    bool no_grid = false;
    double l2 = 1e-4, learning_rate = 0.1;
    int trees = 200, depth = 4, min_leaf = 50;
};

json metrics_json(const Metrics& m) { return json::parse(to_json_text(m)); }

int run_train(const TrainOptions& o) {
    const auto manifest = load_manifest((fs::path(o.data) / "manifest.json").string());
    const auto rows = read_dataset_csv((fs::path(o.data) / "dataset.csv").string());
    const auto train = training_set(rows, Split::train);
    const auto validation = training_set(rows, Split::validate);
    const auto test = training_set(rows, Split::test);
    if (train.rows() == 0 || validation.rows() == 0) throw TrainingError("dataset too small for a train/validate split");

    Model model;
    const GbtParams gbt{o.trees, o.depth, o.learning_rate, o.min_leaf, 1.0};
    if (o.kind == "logreg") {
        model = o.no_grid ? train_logreg(train, {o.l2, 100, 1e-8}) : select_model(ModelKind::logreg, train, validation);
    } else if (o.kind == "gbt") {
        model = o.no_grid ? train_gbt(train, gbt, &validation) : select_model(ModelKind::gbt, train, validation, gbt);
    } else {
        throw ParameterError("--kind must be logreg or gbt");
    }
    model.metadata["dataset_fnv1a"] = manifest.data_fnv1a;
    model.metadata["train_rows"] = std::to_string(train.rows());
    model.metadata["validation_accuracy"] = format_double(accuracy(model, validation));
    if (test.rows() > 0) {
        const auto m = evaluate(model, test);
        model.metadata["test_accuracy"] = format_double(m.accuracy.value);
        model.metadata["test_roc_auc"] = format_double(m.roc_auc.value);
    }
    json config = {{"data_fnv1a", manifest.data_fnv1a}, {"kind", o.kind}, {"grid", !o.no_grid}};
    if (o.no_grid) {
        config["l2"] = o.l2;
        config["trees"] = o.trees;
        config["depth"] = o.depth;
        config["learning_rate"] = o.learning_rate;
        config["min_leaf"] = o.min_leaf;
    }
    model.metadata["config"] = config.dump();
    write_output(o.out, to_json_text(model));
    std::cout << "model_id: " << model_id(model) << "\n";
    for (const auto& [k, v] : model.metadata) {
        if (k != "config") std::cout << k << ": " << v << "\n";
    }
    return kAccept;
}

struct EvaluateOptions {
    std::string model, data, split = "test", out;
};

int run_evaluate(const EvaluateOptions& o) {
    const Model model = load_model(o.model);
    const auto manifest = load_manifest((fs::path(o.data) / "manifest.json").string());
    const auto it = model.metadata.find("dataset_fnv1a");
    if (it != model.metadata.end() && it->second == manifest.data_fnv1a && (o.split == "train" || o.split == "all")) {
        std::cerr << "warning: evaluating on rows the model was trained on\n";
    }
    const auto data = load_split(o.data, o.split);
    json j = metrics_json(evaluate(model, data));
    j["config"] = {{"model_id", model_id(model)}, {"data_fnv1a", manifest.data_fnv1a}, {"split", o.split}};
    write_output(o.out, j.dump(2) + "\n");
    return kAccept;
}

struct PredictOptions {
    std::string model, sample1, sample2;
};

int run_predict(const PredictOptions& o) {
    const Model model = load_model(o.model);
    const auto f = build_features(read_sample_csv(o.sample1), read_sample_csv(o.sample2));
    std::cout << "prediction: " << format_double(predict(model, f)) << "\n"
              << "bins: " << to_string(f.bins) << "\n";
    for (std::size_t k = 0; k < kFeatureCount; ++k) std::cout << feature_names()[k] << ": " << format_double(f.values[k]) << "\n";
    return kAccept;
}

struct ImportanceOptions {
    std::string model, data, split = "test", out;
    int repeats = 5;
    std::optional<std::uint64_t> seed;
};

int run_importance(const ImportanceOptions& o) {
    if (!o.seed) throw ParameterError("--seed is required (no wall-clock seeding)");
    const Model model = load_model(o.model);
    const auto data = load_split(o.data, o.split);
    const auto imp = permutation_importance(model, data, o.repeats, *o.seed);
    const json config = {{"model_id", model_id(model)}, {"split", o.split}, {"repeats", o.repeats}, {"seed", *o.seed}};
    std::string out = config_line(config) + "feature,mean_drop,sd_drop\n";
    for (const auto& i : imp) out += i.feature + ',' + format_double(i.mean_drop) + ',' + format_double(i.sd_drop) + '\n';
    write_output(o.out, out);
    return kAccept;
}

// nulltable -----------------------------------------------------------------

struct NullTableOptions {
    std::string methods, model, sizes = "100", rates = "0", out, h0_law = "Exp(0,1)", censor_family = "Exp";
    long long reps = 10000;
    double censor_shape = 1.0;
    std::optional<std::uint64_t> seed;
};

std::vector<NamedStatistic> statistics_for(const std::string& methods, const std::string& model_path) {
    std::vector<NamedStatistic> stats;
    for (const auto& m : split_list(methods)) stats.push_back(method_statistic(parse_method(m)));
    if (!model_path.empty()) stats.push_back(ml_statistic(load_model(model_path)));
    if (stats.empty()) throw ParameterError("pass --method and/or --model");
    return stats;
}

int run_nulltable(const NullTableOptions& o, const Common& c) {
    if (!o.seed) throw ParameterError("--seed is required (no wall-clock seeding)");
    const auto stats = statistics_for(o.methods, o.model);
    fs::create_directories(o.out);
    for (long long n : integer_list(o.sizes)) {
        for (double rate : real_list(o.rates)) {
            NullTableSpec spec;
            spec.n = n;
            spec.rate = rate;
            spec.replications = o.reps;
            spec.seed = *o.seed;
            spec.h0_law = parse_dist(o.h0_law);
            spec.censor_family = parse_family(o.censor_family);
            spec.censor_shape = o.censor_shape;
            for (const auto& t : build_null_tables(stats, spec, c.workers)) {
                const json config = {{"statistic", t.statistic}, {"n", n},           {"rate", rate},
                                     {"replications", o.reps}, {"seed", *o.seed}, {"h0_law", o.h0_law},
                                     {"censor_family", o.censor_family}, {"censor_shape", o.censor_shape}};
                const auto path = (fs::path(o.out) / table_file_name(t)).string();
                write_text_file(path, with_config(to_json_text(t), config));
                std::cout << path << " (" << t.values.size() << " values, " << t.degenerate << " degenerate)\n";
            }
        }
    }
    return kAccept;
}

// power / rank ----------------------------------------------------------------

struct PowerOptions {
    std::string methods = "peto,gehan,logrank,bn_sce,bn_mce,bn_gph,wlr_tarone_ware,wlr_peto_peto_prentice,wlr_prentice,wkm,q_test";
    std::vector<std::string> models;  // name=path
    std::string alternatives = "all", sizes = "20,100", rates = "0,0.3", alphas = "0.01,0.05,0.1", hyp = "H1", out;
    std::string censor_family = "Exp";
    double censor_shape = 1.0;
    long long reps = 1000;
    std::vector<std::string> tables;
    std::optional<std::uint64_t> seed;
};

int run_power(const PowerOptions& o, const Common& c) {
    if (!o.seed) throw ParameterError("--seed is required (no wall-clock seeding)");
    std::vector<Contestant> who;
    for (const auto& m : split_list(o.methods)) who.push_back(classical(parse_method(m)));
    json model_ids = json::object();
    for (const auto& spec : o.models) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos) throw ParameterError("--model expects name=path");
        Model m = load_model(spec.substr(eq + 1));
        model_ids[spec.substr(0, eq)] = model_id(m);
        who.push_back(ml_contestant(spec.substr(0, eq), std::move(m)));
    }
    const NullTableSet tables = load_tables(o.tables);
    PowerTable table;
    for (const auto& alt : alternative_list(o.alternatives)) {
        for (long long n : integer_list(o.sizes)) {
            for (double rate : real_list(o.rates)) {
                PowerRequest req;
                req.alt = alt;
                req.hyp = parse_hypothesis(o.hyp);
                req.n = n;
                req.rate = rate;
                req.alphas = real_list(o.alphas);
                req.replications = o.reps;
                req.seed = *o.seed;
                req.censor_family = parse_family(o.censor_family);
                req.censor_shape = o.censor_shape;
                const auto cells = estimate_power(who, req, tables, c.workers);
                table.insert(table.end(), cells.begin(), cells.end());
            }
        }
    }
    const json config = {{"methods", o.methods}, {"models", model_ids}, {"alternatives", o.alternatives},
                         {"sizes", o.sizes},     {"rates", o.rates},    {"alphas", o.alphas},
                         {"hyp", o.hyp},         {"replications", o.reps}, {"seed", *o.seed},
                         {"censor_family", o.censor_family}, {"censor_shape", o.censor_shape}};
    write_output(o.out, config_line(config) + power_table_csv(table));
    return kAccept;
}

struct RankOptions {
    std::string power, regret = "rank", out;
    double alpha = 0.05;
};

int run_rank(const RankOptions& o) {
    const auto table = parse_power_table_csv(strip_comments(read_text_file(o.power)));
    if (o.regret != "rank" && o.regret != "power") throw ParameterError("--regret must be rank or power");
    const auto report = rank_methods(table, o.alpha, o.regret == "rank" ? RegretMode::rank : RegretMode::power);
    write_output(o.out, rank_report_csv(report));
    return kAccept;
}

// envelope / percentage-points -------------------------------------------------

struct EnvelopeOptions {
    std::string methods, model, laws = "registry", out, plot_data, censor_family = "Exp";
    long long n = 20, reps = 10000;
    double rate = 0.0, censor_shape = 1.0;
    std::optional<std::uint64_t> seed;
};

int run_envelope(const EnvelopeOptions& o, const Common& c) {
    if (!o.seed) throw ParameterError("--seed is required (no wall-clock seeding)");
    const auto stats = statistics_for(o.methods, o.model);
    std::vector<DistSpec> laws;
    if (o.laws == "registry") {
        laws = registry_laws();
    } else {
        for (auto part : split(o.laws, ';')) {
            if (!trim(part).empty()) laws.push_back(parse_dist(trim(part)));
        }
    }
    NullTableSpec spec;
    spec.n = o.n;
    spec.rate = o.rate;
    spec.replications = o.reps;
    spec.seed = *o.seed;
    spec.censor_family = parse_family(o.censor_family);
    spec.censor_shape = o.censor_shape;
    const auto tables = envelope_tables(stats, laws, spec, c.workers);
    json out = json::array();
    for (std::size_t s = 0; s < stats.size(); ++s) {
        const auto report = null_envelope(tables[s]);
        out.push_back(json::parse(to_json_text(report)));
        std::cout << report.statistic << " n=" << report.n << " rate=" << format_double(report.rate)
                  << " curves=" << report.curves << " deviation=" << format_double(report.deviation) << "\n";
        if (!o.plot_data.empty()) {
            fs::create_directories(o.plot_data);
            std::string name = report.statistic;
            std::replace(name.begin(), name.end(), ':', '_');
            write_text_file((fs::path(o.plot_data) / (name + "_envelope.csv")).string(), envelope_curves_csv(report));
            for (std::size_t l = 0; l < laws.size(); ++l) {
                std::string curve = "x,cdf\n";
                for (double x : report.grid) curve += format_double(x) + ',' + format_double(tables[s][l].cdf(x)) + '\n';
                write_text_file((fs::path(o.plot_data) / (name + "_law" + std::to_string(l) + ".csv")).string(), curve);
            }
        }
    }
    json doc;
    doc["config"] = {{"methods", o.methods}, {"model", o.model.empty() ? json() : json(model_id(load_model(o.model)))},
                     {"laws", o.laws},       {"n", o.n},
                     {"rate", o.rate},       {"replications", o.reps},
                     {"seed", *o.seed},      {"censor_family", o.censor_family},
                     {"censor_shape", o.censor_shape}};
    doc["envelopes"] = std::move(out);
    if (!o.out.empty()) write_output(o.out, doc.dump(2) + "\n");
    return kAccept;
}

struct PointsOptions {
    std::vector<std::string> tables;
    std::string levels = "0.1,0.05,0.025,0.01", out;
};

int run_points(const PointsOptions& o) {
    std::string out;
    const NullTableSet set = load_tables(o.tables);
    for (const auto& t : set.tables()) {
        // Only min3 rejects in the left tail; model and MAX statistics reject in the right.
        const bool left = t.statistic == method_name(Method::min3);
        auto csv = percentage_points_csv(t, percentage_points(t, real_list(o.levels), left));
        if (!out.empty()) csv = csv.substr(csv.find('\n') + 1);
        out += csv;
    }
    write_output(o.out, out);
    return kAccept;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ParameterError*>(&e) || dynamic_cast<const DomainError*>(&e)) return kUsage;
    if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const IoError*>(&e)) return kValidation;
    if (dynamic_cast<const CalibrationRequired*>(&e)) return kCalibrationRequired;
    if (dynamic_cast<const IncompatibleModel*>(&e)) return kIncompatibleModel;
    if (dynamic_cast<const DegenerateStatistic*>(&e)) return kDegenerate;
    return kOther;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-sample tests for right-censored data"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);
    Common common;
    std::function<int()> action;

    auto add_workers = [&](CLI::App* cmd) {
        cmd->add_option("--workers", common.workers, "Worker threads (never changes outputs)")->check(CLI::PositiveNumber);
    };

    TestOptions test;
    auto* t = app.add_subcommand("test", "Run a two-sample test; exit 0 accepts H0, 3 rejects");
    t->add_option("sample1", test.sample1, "First sample CSV (time,censored)")->required();
    t->add_option("sample2", test.sample2, "Second sample CSV")->required();
    auto* method_opt = t->add_option("--method", test.method, "Classical method name");
    t->add_option("--model", test.model, "Model JSON")->excludes(method_opt);
    t->add_option("--alpha", test.alpha, "Significance level");
    t->add_option("--null-table", test.tables, "Null table file or directory (repeatable)");
    t->callback([&] { action = [&] { return run_test(test); }; });

    CalibrateOptions cal;
    auto* cc = app.add_subcommand("calibrate-censoring", "Solve for a censoring law with a target rate");
    cc->add_option("--failure", cal.failure, "Failure law, e.g. We(0,1,2)");
    cc->add_option("--alternative", cal.alternative, "Registry id; calibrates both of its laws");
    cc->add_option("--family", cal.family, "Censoring family (Exp, We, G, LgN)");
    cc->add_option("--rate", cal.rate, "Target censoring rate in [0, 0.5]");
    cc->add_option("--shape", cal.shape, "Fixed shape of the censoring family");
    cc->add_option("--out", cal.out, "Output JSON (default stdout)");
    cc->callback([&] { action = [&] { return run_calibrate(cal); }; });

    SimulateOptions sim;
    auto* s = app.add_subcommand("simulate", "Generate a labelled dataset and its manifest");
    s->add_flag("--desk", sim.desk, "Desk grid: all alternatives x {20,100} x {0,0.3}");
    s->add_option("--from-manifest", sim.manifest, "Regenerate the grid of an existing manifest");
    s->add_option("--alternatives", sim.alternatives, "Comma list of ids or 'all'");
    s->add_option("--sizes", sim.sizes, "Comma list of per-group sample sizes");
    s->add_option("--rates", sim.rates, "Comma list of censoring rates");
    s->add_option("--reps", sim.reps, "Replications per cell");
    s->add_option("--censor-family", sim.censor_family, "Censoring family");
    s->add_option("--censor-shape", sim.censor_shape, "Censoring family shape");
    s->add_option("--seed", sim.seed, "Master seed");
    s->add_option("--out", sim.out, "Output directory")->required();
    add_workers(s);
    s->callback([&] { action = [&] { return run_simulate(sim, common); }; });

    TrainOptions train;
    auto* tr = app.add_subcommand("train", "Train a classifier on a dataset directory");
    tr->add_option("--data", train.data, "Dataset directory (dataset.csv, manifest.json)")->required();
    tr->add_option("--kind", train.kind, "logreg or gbt");
    tr->add_option("--out", train.out, "Model JSON")->required();
    tr->add_flag("--no-grid", train.no_grid, "Use the given hyperparameters instead of the selection grid");
    tr->add_option("--l2", train.l2, "logreg penalty");
    tr->add_option("--trees", train.trees, "gbt rounds");
    tr->add_option("--depth", train.depth, "gbt depth");
    tr->add_option("--learning-rate", train.learning_rate, "gbt learning rate");
    tr->add_option("--min-leaf", train.min_leaf, "gbt minimum leaf size");
    tr->callback([&] { action = [&] { return run_train(train); }; });

    EvaluateOptions ev;
    auto* e = app.add_subcommand("evaluate", "Metrics of a model on a dataset split");
    e->add_option("--model", ev.model, "Model JSON")->required();
    e->add_option("--data", ev.data, "Dataset directory")->required();
    e->add_option("--split", ev.split, "train, validate, test or all");
    e->add_option("--out", ev.out, "Output JSON (default stdout)");
    e->callback([&] { action = [&] { return run_evaluate(ev); }; });

    PredictOptions pr;
    auto* p = app.add_subcommand("predict", "Model output and features for a sample pair");
    p->add_option("--model", pr.model, "Model JSON")->required();
    p->add_option("sample1", pr.sample1)->required();
    p->add_option("sample2", pr.sample2)->required();
    p->callback([&] { action = [&] { return run_predict(pr); }; });

    ImportanceOptions imp;
    auto* im = app.add_subcommand("importance", "Permutation importance of the features");
    im->add_option("--model", imp.model, "Model JSON")->required();
    im->add_option("--data", imp.data, "Dataset directory")->required();
    im->add_option("--split", imp.split, "train, validate, test or all");
    im->add_option("--repeats", imp.repeats, "Shuffles per feature (>= 3)");
    im->add_option("--seed", imp.seed, "Shuffle seed");
    im->add_option("--out", imp.out, "Output CSV (default stdout)");
    im->callback([&] { action = [&] { return run_importance(imp); }; });

    NullTableOptions nt;
    auto* n = app.add_subcommand("nulltable", "Monte-Carlo null tables per design cell");
    n->add_option("--method", nt.methods, "Comma list of classical methods");
    n->add_option("--model", nt.model, "Model JSON");
    n->add_option("--sizes", nt.sizes, "Comma list of per-group sizes");
    n->add_option("--rates", nt.rates, "Comma list of censoring rates");
    n->add_option("--reps", nt.reps, "Replications (>= 1000)");
    n->add_option("--h0-law", nt.h0_law, "Common failure law under H0");
    n->add_option("--censor-family", nt.censor_family, "Censoring family");
    n->add_option("--censor-shape", nt.censor_shape, "Censoring family shape");
    n->add_option("--seed", nt.seed, "Master seed");
    n->add_option("--out", nt.out, "Output directory")->required();
    add_workers(n);
    n->callback([&] { action = [&] { return run_nulltable(nt, common); }; });

    PowerOptions pw;
    auto* po = app.add_subcommand("power", "Rejection rates over alternatives and design cells");
    po->add_option("--methods", pw.methods, "Comma list of classical methods");
    po->add_option("--model", pw.models, "Model contestant name=path (repeatable)");
    po->add_option("--alternatives", pw.alternatives, "Comma list of ids or 'all'");
    po->add_option("--sizes", pw.sizes, "Comma list of per-group sizes");
    po->add_option("--rates", pw.rates, "Comma list of censoring rates");
    po->add_option("--alphas", pw.alphas, "Comma list of levels");
    po->add_option("--hyp", pw.hyp, "H1 for power, H0 for size");
    po->add_option("--reps", pw.reps, "Replications per cell");
    po->add_option("--censor-family", pw.censor_family, "Censoring family");
    po->add_option("--censor-shape", pw.censor_shape, "Censoring family shape");
    po->add_option("--null-table", pw.tables, "Null table file or directory (repeatable)");
    po->add_option("--seed", pw.seed, "Master seed");
    po->add_option("--out", pw.out, "Output CSV (default stdout)");
    add_workers(po);
    po->callback([&] { action = [&] { return run_power(pw, common); }; });

    RankOptions rk;
    auto* r = app.add_subcommand("rank", "Average rank, Wald and Savage scores from a power table");
    r->add_option("--power", rk.power, "Power CSV")->required();
    r->add_option("--alpha", rk.alpha, "Level to rank at");
    r->add_option("--regret", rk.regret, "rank or power");
    r->add_option("--out", rk.out, "Output CSV (default stdout)");
    r->callback([&] { action = [&] { return run_rank(rk); }; });

    EnvelopeOptions env;
    auto* en = app.add_subcommand("envelope", "Null CDF envelope across H0 failure laws");
    en->add_option("--method", env.methods, "Comma list of classical methods");
    en->add_option("--model", env.model, "Model JSON");
    en->add_option("--laws", env.laws, "'registry' or ';'-separated laws");
    en->add_option("--n", env.n, "Per-group size");
    en->add_option("--rate", env.rate, "Censoring rate");
    en->add_option("--reps", env.reps, "Replications per law");
    en->add_option("--censor-family", env.censor_family, "Censoring family");
    en->add_option("--censor-shape", env.censor_shape, "Censoring family shape");
    en->add_option("--seed", env.seed, "Master seed");
    en->add_option("--out", env.out, "Report JSON");
    en->add_option("--plot-data", env.plot_data, "Directory for per-curve CSVs");
    add_workers(en);
    en->callback([&] { action = [&] { return run_envelope(env, common); }; });

    PointsOptions pts;
    auto* pp = app.add_subcommand("percentage-points", "Rejection-tail critical values of null tables");
    pp->add_option("--table", pts.tables, "Null table file or directory (repeatable)")->required();
    pp->add_option("--levels", pts.levels, "Comma list of upper-tail levels");
    pp->add_option("--out", pts.out, "Output CSV (default stdout)");
    pp->callback([&] { action = [&] { return run_points(pts); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }
    try {
        return action();
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return exit_code_for(ex);
    }
}
