#include "survtest/simulation.hpp"

#include "survtest/error.hpp"
#include "survtest/format.hpp"
#include "survtest/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>

namespace survtest {

namespace {

constexpr std::size_t kChunk = 1 << 15;

std::uint64_t rate_key(double rate) { return static_cast<std::uint64_t>(std::llround(rate * 1e6)); }

}  // namespace

std::string_view to_string(Hypothesis h) { return h == Hypothesis::H0 ? "H0" : "H1"; }

Hypothesis parse_hypothesis(std::string_view s) {
    if (s == "H0") return Hypothesis::H0;
    if (s == "H1") return Hypothesis::H1;
    throw ValidationError("hypothesis must be H0 or H1, got '" + std::string(s) + "'");
}

void validate(const GridSpec& grid) {
    if (grid.alternatives.empty()) throw ParameterError("grid: no alternatives");
    for (const auto& id : grid.alternatives) find_alternative(id);
    if (grid.sample_sizes.empty()) throw ParameterError("grid: no sample sizes");
    for (long long n : grid.sample_sizes) {
        if (n < 2) throw ParameterError("grid: sample sizes must be >= 2");
    }
    if (grid.censoring_rates.empty()) throw ParameterError("grid: no censoring rates");
    for (double r : grid.censoring_rates) {
        if (!(r >= 0.0 && r <= 0.5)) throw ParameterError("grid: censoring rates must lie in [0, 0.5]");
    }
    if (grid.replications < 1) throw ParameterError("grid: replications must be >= 1");
}

GridSpec desk_grid(std::uint64_t seed, long long replications) {
    GridSpec g;
    for (const auto& p : registry()) g.alternatives.push_back(p.id);
    g.sample_sizes = {20, 100};
    g.censoring_rates = {0.0, 0.3};
    g.replications = replications;
    g.master_seed = seed;
    return g;
}

CensoredSample draw_censored_sample(const DistSpec& failure, const CensoringPlan& plan, std::size_t n,
                                    RandomStream& rng) {
    std::vector<double> times(n);
    std::vector<std::uint8_t> flags(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = sample(failure, rng);
        if (plan.censor) {
            const double c = sample(*plan.censor, rng);
            if (c < t) {
                times[i] = c;
                flags[i] = 1;
                continue;
            }
        }
        times[i] = t;
    }
    return CensoredSample::from_unsorted(std::move(times), std::move(flags));
}

CellPlans plan_cell(const AlternativePair& alt, double rate, Family censor_family, double censor_shape) {
    return {calibrate_censoring(alt.s1, censor_family, rate, censor_shape),
            calibrate_censoring(alt.s2, censor_family, rate, censor_shape)};
}

std::uint64_t replication_seed(std::uint64_t master, const std::string& alt, Hypothesis hyp, long long n,
                               double rate, long long rep) {
    return derive_seed(master, {hash_label(alt), static_cast<std::uint64_t>(hyp), static_cast<std::uint64_t>(n),
                                rate_key(rate), static_cast<std::uint64_t>(rep)});
}

std::pair<CensoredSample, CensoredSample> draw_pair(const AlternativePair& alt, const CellPlans& plans,
                                                    Hypothesis hyp, long long n, std::uint64_t seed) {
    RandomStream rng(seed);
    auto x1 = draw_censored_sample(alt.s1, plans.first, static_cast<std::size_t>(n), rng);
    auto x2 = hyp == Hypothesis::H0 ? draw_censored_sample(alt.s1, plans.first, static_cast<std::size_t>(n), rng)
                                    : draw_censored_sample(alt.s2, plans.second, static_cast<std::size_t>(n), rng);
    return {std::move(x1), std::move(x2)};
}

void fill_row(FeatureRow& row, const Battery& battery) {
    for (std::size_t k = 0; k < kDatasetStatistics.size(); ++k) {
        const auto& r = battery[kDatasetStatistics[k]];
        if (!r) {
            row.degenerate = true;
            row.reason = std::string(method_name(kDatasetStatistics[k]));
            return;
        }
        row.statistics[k] = r->statistic;
        if (k < kPValueColumns) row.p_values[k] = *r->p_value;
    }
}

FeatureRow run_replication(const AlternativePair& alt, const CellPlans& plans, Hypothesis hyp, long long n,
                           long long rep, std::uint64_t seed) {
    const auto [x1, x2] = draw_pair(alt, plans, hyp, n, seed);
    FeatureRow row;
    row.alt = alt.id;
    row.hyp = hyp;
    row.n1 = static_cast<long long>(x1.size());
    row.n2 = static_cast<long long>(x2.size());
    row.r1 = x1.censoring_rate();
    row.r2 = x2.censoring_rate();
    row.rep = rep;
    row.seed = seed;
    row.target = hyp == Hypothesis::H1 ? 1 : 0;
    fill_row(row, run_all(TwoSampleData(x1, x2)));
    return row;
}

std::string dataset_header() {
    std::string h = "alt,hyp,n1,n2,r1,r2,rep,seed";
    for (Method m : kDatasetStatistics) {
        h += ',';
        h += method_name(m);
    }
    for (std::size_t k = 0; k < kPValueColumns; ++k) {
        h += ',';
        h += method_name(kDatasetStatistics[k]);
        h += "_pv";
    }
    h += ",target";
    return h;
}

std::string format_row(const FeatureRow& r) {
    std::string s;
    s.reserve(512);
    s += r.alt;
    s += ',';
    s += to_string(r.hyp);
    s += ',' + std::to_string(r.n1) + ',' + std::to_string(r.n2) + ',' + format_double(r.r1) + ',' +
         format_double(r.r2) + ',' + std::to_string(r.rep) + ',' + std::to_string(r.seed);
    for (double v : r.statistics) s += ',' + format_double(v);
    for (double v : r.p_values) s += ',' + format_double(v);
    s += ',' + std::to_string(r.target);
    return s;
}

DatasetManifest generate_dataset(const GridSpec& grid, const std::string& out_dir, int workers) {
    validate(grid);
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    struct Cell {
        const AlternativePair* alt;
        Hypothesis hyp;
        long long n;
        double rate;
        std::optional<CellPlans> plans;
        std::string error;
    };
    std::vector<Cell> cells;
    for (const auto& id : grid.alternatives) {
        const auto& alt = find_alternative(id);
        for (Hypothesis hyp : {Hypothesis::H0, Hypothesis::H1}) {
            for (long long n : grid.sample_sizes) {
                for (double r : grid.censoring_rates) cells.push_back({&alt, hyp, n, r, std::nullopt, {}});
            }
        }
    }
    // Calibration is per (alternative, rate); the result is shared by its cells.
    std::map<std::pair<std::string, std::uint64_t>, std::pair<std::optional<CellPlans>, std::string>> plan_cache;
    for (auto& c : cells) {
        auto key = std::make_pair(c.alt->id, rate_key(c.rate));
        auto it = plan_cache.find(key);
        if (it == plan_cache.end()) {
            std::pair<std::optional<CellPlans>, std::string> entry;
            try {
                entry.first = plan_cell(*c.alt, c.rate, grid.censor_family, grid.censor_shape);
            } catch (const CalibrationError& e) {
                entry.second = e.what();
            }
            it = plan_cache.emplace(key, std::move(entry)).first;
        }
        c.plans = it->second.first;
        c.error = it->second.second;
    }

    DatasetManifest manifest;
    manifest.grid = grid;
    manifest.data_file = "dataset.csv";
    const std::string data_path = (fs::path(out_dir) / manifest.data_file).string();
    std::ofstream out(data_path, std::ios::binary);
    if (!out) throw IoError("cannot write " + data_path);
    const std::string header = dataset_header() + "\n";
    out << header;
    std::uint64_t hash = fnv1a(header);

    const auto reps = static_cast<std::size_t>(grid.replications);
    std::vector<FeatureRow> rows;
    for (const auto& c : cells) {
        CellSummary summary{c.alt->id, c.hyp, c.n, c.rate, manifest.rows, 0, 0, {}, c.error};
        if (c.plans) {
            for (std::size_t begin = 0; begin < reps; begin += kChunk) {
                const std::size_t count = std::min(kChunk, reps - begin);
                rows.assign(count, FeatureRow{});
                parallel_for(count, workers, [&](std::size_t i) {
                    const auto rep = static_cast<long long>(begin + i);
                    rows[i] = run_replication(*c.alt, *c.plans, c.hyp, c.n, rep,
                                              replication_seed(grid.master_seed, c.alt->id, c.hyp, c.n, c.rate, rep));
                });
                for (const auto& row : rows) {
                    if (row.degenerate) {
                        ++summary.degenerate;
                        ++summary.degenerate_reasons[row.reason];
                        continue;
                    }
                    const std::string line = format_row(row) + "\n";
                    out << line;
                    hash = fnv1a(line, hash);
                    ++summary.rows;
                }
            }
        }
        manifest.rows += summary.rows;
        manifest.degenerate_rows += summary.degenerate;
        manifest.cells.push_back(std::move(summary));
    }
    out.close();
    if (!out) throw IoError("failed writing " + data_path);
    manifest.data_fnv1a = hex64(hash);
    write_text_file((fs::path(out_dir) / "manifest.json").string(), to_json_text(manifest));
    return manifest;
}

std::string to_json_text(const DatasetManifest& m) {
    nlohmann::ordered_json j;
    j["tool_version"] = m.tool_version;
    nlohmann::ordered_json g;
    g["alternatives"] = m.grid.alternatives;
    g["sample_sizes"] = m.grid.sample_sizes;
    g["censoring_rates"] = m.grid.censoring_rates;
    g["replications"] = m.grid.replications;
    g["master_seed"] = m.grid.master_seed;
    g["censoring_family"] = std::string(family_name(m.grid.censor_family));
    g["censoring_shape"] = m.grid.censor_shape;
    j["grid"] = g;
    j["data_file"] = m.data_file;
    j["data_fnv1a"] = m.data_fnv1a;
    j["rows"] = m.rows;
    j["degenerate_rows"] = m.degenerate_rows;
    auto cells = nlohmann::ordered_json::array();
    for (const auto& c : m.cells) {
        nlohmann::ordered_json e;
        e["alt"] = c.alt;
        e["hyp"] = std::string(to_string(c.hyp));
        e["n"] = c.n;
        e["rate"] = c.rate;
        e["first_row"] = c.first_row;
        e["rows"] = c.rows;
        e["degenerate"] = c.degenerate;
        if (!c.degenerate_reasons.empty()) e["degenerate_reasons"] = c.degenerate_reasons;
        if (!c.error.empty()) e["error"] = c.error;
        cells.push_back(std::move(e));
    }
    j["cells"] = std::move(cells);
    return j.dump(2) + "\n";
}

DatasetManifest manifest_from_json_text(std::string_view text) {
    DatasetManifest m;
    try {
        const auto j = nlohmann::json::parse(text);
        const auto& g = j.at("grid");
        m.grid.alternatives = g.at("alternatives").get<std::vector<std::string>>();
        m.grid.sample_sizes = g.at("sample_sizes").get<std::vector<long long>>();
        m.grid.censoring_rates = g.at("censoring_rates").get<std::vector<double>>();
        m.grid.replications = g.at("replications").get<long long>();
        m.grid.master_seed = g.at("master_seed").get<std::uint64_t>();
        m.grid.censor_family = parse_family(g.value("censoring_family", std::string("Exp")));
        m.grid.censor_shape = g.value("censoring_shape", 1.0);
        m.tool_version = j.value("tool_version", std::string());
        m.data_file = j.value("data_file", std::string("dataset.csv"));
        m.data_fnv1a = j.value("data_fnv1a", std::string());
        m.rows = j.value("rows", 0LL);
        m.degenerate_rows = j.value("degenerate_rows", 0LL);
        for (const auto& e : j.value("cells", nlohmann::json::array())) {
            CellSummary c;
            c.alt = e.at("alt").get<std::string>();
            c.hyp = parse_hypothesis(e.at("hyp").get<std::string>());
            c.n = e.at("n").get<long long>();
            c.rate = e.at("rate").get<double>();
            c.first_row = e.at("first_row").get<long long>();
            c.rows = e.at("rows").get<long long>();
            c.degenerate = e.value("degenerate", 0LL);
            if (e.contains("degenerate_reasons")) {
                c.degenerate_reasons = e.at("degenerate_reasons").get<std::map<std::string, long long>>();
            }
            c.error = e.value("error", std::string());
            m.cells.push_back(std::move(c));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("manifest JSON: ") + e.what());
    }
    validate(m.grid);
    return m;
}

DatasetManifest load_manifest(const std::string& path) { return manifest_from_json_text(read_text_file(path)); }

std::vector<FeatureRow> parse_dataset_csv(std::string_view text) {
    std::vector<FeatureRow> rows;
    const std::string header = dataset_header();
    std::size_t line_no = 0;
    std::size_t pos = 0;
    constexpr std::size_t kFields = 8 + 13 + kPValueColumns + 1;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line_no == 1) {
            if (line != header) throw ValidationError("dataset: unexpected header", line_no);
            continue;
        }
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != kFields) throw ValidationError("dataset: expected " + std::to_string(kFields) + " fields", line_no);
        try {
            FeatureRow r;
            r.alt = std::string(f[0]);
            r.hyp = parse_hypothesis(f[1]);
            r.n1 = parse_integer(f[2]);
            r.n2 = parse_integer(f[3]);
            r.r1 = parse_double(f[4]);
            r.r2 = parse_double(f[5]);
            r.rep = parse_integer(f[6]);
            r.seed = std::stoull(std::string(f[7]));
            for (std::size_t k = 0; k < 13; ++k) r.statistics[k] = parse_double(f[8 + k]);
            for (std::size_t k = 0; k < kPValueColumns; ++k) r.p_values[k] = parse_double(f[21 + k]);
            r.target = static_cast<int>(parse_integer(f[kFields - 1]));
            if (r.target != static_cast<int>(r.hyp)) throw ValidationError("target does not match hypothesis");
            rows.push_back(std::move(r));
        } catch (const ValidationError& e) {
            throw ValidationError(std::string("dataset: ") + e.what(), line_no);
        } catch (const std::exception& e) {
            throw ValidationError(std::string("dataset: bad field: ") + e.what(), line_no);
        }
    }
    if (line_no == 0) throw ValidationError("dataset: empty file");
    return rows;
}

std::vector<FeatureRow> read_dataset_csv(const std::string& path) { return parse_dataset_csv(read_text_file(path)); }

NamedStatistic method_statistic(Method m) {
    return {std::string(method_name(m)), [m](const TwoSampleData& d) { return run_method(d, m).statistic; }};
}

std::vector<EmpiricalNull> build_null_tables(const std::vector<NamedStatistic>& stats, const NullTableSpec& spec,
                                             int workers) {
    if (spec.replications < 1000) throw ParameterError("null table: at least 1000 replications required");
    if (spec.n < 2) throw ParameterError("null table: sample size must be >= 2");
    const CensoringPlan plan = calibrate_censoring(spec.h0_law, spec.censor_family, spec.rate, spec.censor_shape);
    const auto reps = static_cast<std::size_t>(spec.replications);
    const std::size_t k = stats.size();
    std::vector<double> values(reps * k);
    std::vector<std::uint8_t> ok(reps * k, 0);
    parallel_for(reps, workers, [&](std::size_t i) {
        RandomStream rng(derive_seed(spec.seed, {static_cast<std::uint64_t>(spec.n), rate_key(spec.rate), i}));
        const auto x1 = draw_censored_sample(spec.h0_law, plan, static_cast<std::size_t>(spec.n), rng);
        const auto x2 = draw_censored_sample(spec.h0_law, plan, static_cast<std::size_t>(spec.n), rng);
        const TwoSampleData d(x1, x2);
        for (std::size_t s = 0; s < k; ++s) {
            try {
                values[i * k + s] = stats[s].evaluate(d);
                ok[i * k + s] = 1;
            } catch (const DegenerateStatistic&) {
            }
        }
    });
    std::vector<EmpiricalNull> tables;
    for (std::size_t s = 0; s < k; ++s) {
        EmpiricalNull t;
        t.statistic = stats[s].name;
        t.n = spec.n;
        t.rate = spec.rate;
        t.bins = bins_for(spec.n, spec.n, spec.rate);
        t.seed = spec.seed;
        t.replications = spec.replications;
        t.h0_law = to_string(spec.h0_law);
        t.values.reserve(reps);
        for (std::size_t i = 0; i < reps; ++i) {
            if (ok[i * k + s]) t.values.push_back(values[i * k + s]);
        }
        t.degenerate = static_cast<long long>(reps - t.values.size());
        if (static_cast<double>(t.degenerate) > 0.01 * static_cast<double>(reps)) {
            throw CalibrationError("null table for " + t.statistic + ": " + std::to_string(t.degenerate) + " of " +
                                   std::to_string(reps) + " replications are degenerate (limit 1%)");
        }
        std::sort(t.values.begin(), t.values.end());
        tables.push_back(std::move(t));
    }
    return tables;
}

EmpiricalNull build_null_table(const NamedStatistic& stat, const NullTableSpec& spec, int workers) {
    return std::move(build_null_tables({stat}, spec, workers).front());
}

EmpiricalNull build_null_table(Method m, const NullTableSpec& spec, int workers) {
    return build_null_table(method_statistic(m), spec, workers);
}

}  // namespace survtest
