#include "survtest/analysis.hpp"

#include "survtest/error.hpp"
#include "survtest/format.hpp"
#include "survtest/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace survtest {

namespace {

bool same_rate(double a, double b) { return std::llround(a * 1e6) == std::llround(b * 1e6); }

const std::vector<std::string>& power_columns() {
    static const std::vector<std::string> cols = {"method", "alt",         "hyp",          "n",         "rate",
                                                  "alpha",  "rejections", "replications", "degenerate", "power"};
    return cols;
}

}  // namespace

void NullTableSet::add(EmpiricalNull table) { tables_.push_back(std::move(table)); }

const EmpiricalNull* NullTableSet::find(const std::string& statistic, long long n, double rate) const {
    for (const auto& t : tables_) {
        if (t.statistic == statistic && t.n == n && same_rate(t.rate, rate)) return &t;
    }
    return nullptr;
}

const EmpiricalNull* NullTableSet::find_bins(const std::string& statistic, const Bins& bins) const {
    for (const auto& t : tables_) {
        if (t.statistic == statistic && t.bins == bins) return &t;
    }
    return nullptr;
}

std::string Contestant::statistic() const {
    return model ? ml_statistic_name(*model) : std::string(method_name(*method));
}

bool Contestant::needs_table() const { return model || null_law(*method).is_empirical(); }

Contestant classical(Method m) { return {std::string(method_name(m)), m, nullptr}; }

Contestant ml_contestant(std::string name, Model model) {
    return {std::move(name), std::nullopt, std::make_shared<const Model>(std::move(model))};
}

bool rejects(double p_value, double alpha) { return alpha >= 1.0 || decide(p_value, alpha); }

std::vector<PowerCell> estimate_power(const std::vector<Contestant>& contestants, const PowerRequest& request,
                                      const NullTableSet& tables, int workers) {
    if (request.replications < 1) throw ParameterError("power: at least one replication required");
    for (double a : request.alphas) {
        if (!(a >= 0.0 && a <= 1.0)) throw ParameterError("power: alpha must lie in [0, 1]");
    }
    const auto& alt = find_alternative(request.alt);
    const auto plans = plan_cell(alt, request.rate, request.censor_family, request.censor_shape);

    const std::size_t k = contestants.size();
    std::vector<const EmpiricalNull*> table_of(k, nullptr);
    bool need_features = false;
    for (std::size_t c = 0; c < k; ++c) {
        if (contestants[c].model) need_features = true;
        if (!contestants[c].needs_table()) continue;
        table_of[c] = tables.find(contestants[c].statistic(), request.n, request.rate);
        if (!table_of[c]) {
            throw CalibrationRequired("no null table for " + contestants[c].statistic() + " at n=" +
                                      std::to_string(request.n) + ", rate=" + format_double(request.rate));
        }
    }

    const auto reps = static_cast<std::size_t>(request.replications);
    constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> p(reps * k, kUndefined);
    parallel_for(reps, workers, [&](std::size_t i) {
        const auto seed = derive_seed(request.seed, {hash_label("power"), hash_label(request.alt),
                                                     static_cast<std::uint64_t>(request.hyp),
                                                     static_cast<std::uint64_t>(request.n),
                                                     static_cast<std::uint64_t>(std::llround(request.rate * 1e6)), i});
        const auto [x1, x2] = draw_pair(alt, plans, request.hyp, request.n, seed);
        const TwoSampleData d(x1, x2);
        const Battery battery = run_all(d);
        std::optional<FeatureVector> features;
        if (need_features) features = features_from_battery(battery, d.bins());
        for (std::size_t c = 0; c < k; ++c) {
            const auto& who = contestants[c];
            double& out = p[i * k + c];
            if (who.model) {
                out = table_of[c]->p_right(predict(*who.model, *features));
                continue;
            }
            const auto& r = battery[*who.method];
            if (!r) continue;
            if (!table_of[c]) {
                out = *r->p_value;
            } else {
                out = null_law(*who.method).kind == LawKind::EmpiricalLeft ? table_of[c]->p_left(r->statistic)
                                                                            : table_of[c]->p_right(r->statistic);
            }
        }
    });

    std::vector<PowerCell> cells;
    for (std::size_t c = 0; c < k; ++c) {
        for (double a : request.alphas) {
            PowerCell cell{contestants[c].name, request.alt, request.hyp, request.n, request.rate, a, 0.0, 0,
                           request.replications, 0};
            for (std::size_t i = 0; i < reps; ++i) {
                const double v = p[i * k + c];
                if (std::isnan(v)) {
                    ++cell.degenerate;
                    if (a >= 1.0) ++cell.rejections;
                    continue;
                }
                if (rejects(v, a)) ++cell.rejections;
            }
            cell.power = static_cast<double>(cell.rejections) / static_cast<double>(cell.replications);
            cells.push_back(cell);
        }
    }
    return cells;
}

std::string power_table_csv(const PowerTable& table) {
    std::string out;
    for (std::size_t i = 0; i < power_columns().size(); ++i) out += (i ? "," : "") + power_columns()[i];
    out += '\n';
    for (const auto& c : table) {
        out += c.method + ',' + c.alt + ',' + std::string(to_string(c.hyp)) + ',' + std::to_string(c.n) + ',' +
               format_double(c.rate) + ',' + format_double(c.alpha) + ',' + std::to_string(c.rejections) + ',' +
               std::to_string(c.replications) + ',' + std::to_string(c.degenerate) + ',' + format_double(c.power) +
               '\n';
    }
    return out;
}

PowerTable parse_power_table_csv(std::string_view text) {
    const auto lines = split(text, '\n');
    std::map<std::string, std::size_t> col;
    PowerTable table;
    std::size_t line_no = 0;
    for (const auto raw : lines) {
        ++line_no;
        const auto line = trim(raw);
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        if (col.empty()) {
            for (std::size_t i = 0; i < fields.size(); ++i) col[std::string(trim(fields[i]))] = i;
            for (const char* need : {"method", "alt", "n", "rate", "alpha"}) {
                if (!col.count(need)) throw ValidationError(std::string("power CSV: missing column '") + need + "'", line_no);
            }
            const bool counts = col.count("rejections") && col.count("replications");
            if (!counts && !col.count("power")) {
                throw ValidationError("power CSV: needs 'power' or 'rejections' and 'replications'", line_no);
            }
            continue;
        }
        if (fields.size() != col.size()) throw ValidationError("power CSV: wrong number of fields", line_no);
        auto field = [&](const char* name) { return trim(fields[col.at(name)]); };
        try {
            PowerCell c;
            c.method = std::string(field("method"));
            c.alt = std::string(field("alt"));
            c.hyp = col.count("hyp") ? parse_hypothesis(field("hyp")) : Hypothesis::H1;
            c.n = parse_integer(field("n"));
            c.rate = parse_double(field("rate"));
            c.alpha = parse_double(field("alpha"));
            if (col.count("rejections") && col.count("replications")) {
                c.rejections = parse_integer(field("rejections"));
                c.replications = parse_integer(field("replications"));
                if (c.replications < 1 || c.rejections < 0 || c.rejections > c.replications) {
                    throw ValidationError("power CSV: inconsistent counts", line_no);
                }
                c.power = static_cast<double>(c.rejections) / static_cast<double>(c.replications);
            }
            if (col.count("power")) {
                c.power = parse_double(field("power"));
                if (!(c.power >= 0 && c.power <= 1)) throw ValidationError("power CSV: power outside [0, 1]", line_no);
            }
            if (col.count("degenerate")) c.degenerate = parse_integer(field("degenerate"));
            table.push_back(std::move(c));
        } catch (const ValidationError&) {
            throw;
        } catch (const Error& e) {
            throw ValidationError(std::string("power CSV: ") + e.what(), line_no);
        }
    }
    if (col.empty()) throw ValidationError("power CSV: missing header");
    return table;
}

RankReport rank_methods(const PowerTable& table, double alpha, RegretMode regret) {
    using CellKey = std::tuple<std::string, long long, long long>;  // alt, n, rate key
    std::set<std::string> methods;
    std::map<CellKey, std::map<std::string, double>> cells;
    bool censored = false;
    for (const auto& c : table) {
        if (c.hyp != Hypothesis::H1 || std::llround(c.alpha * 1e9) != std::llround(alpha * 1e9)) continue;
        methods.insert(c.method);
        cells[{c.alt, c.n, std::llround(c.rate * 1e6)}][c.method] = c.power;
        censored = censored || c.rate > 0;
    }
    if (cells.empty()) throw ValidationError("rank: no H1 cells at alpha " + format_double(alpha));
    std::string gaps;
    for (const auto& [key, row] : cells) {
        for (const auto& m : methods) {
            if (!row.count(m)) {
                gaps += " " + m + "@" + std::get<0>(key) + "/n=" + std::to_string(std::get<1>(key)) +
                        "/r=" + format_double(static_cast<double>(std::get<2>(key)) / 1e6);
            }
        }
    }
    if (!gaps.empty()) throw ValidationError("rank: power table is not dense; missing" + gaps);

    std::map<std::string, MethodRank> out;
    std::map<std::string, std::map<std::string, std::pair<double, int>>> group_sums;
    for (const auto& m : methods) out[m].method = m;
    for (const auto& [key, row] : cells) {
        std::vector<std::pair<double, std::string>> order;
        for (const auto& [m, pw] : row) order.emplace_back(pw, m);
        std::sort(order.begin(), order.end(), [](const auto& l, const auto& r) { return l.first > r.first; });
        std::map<std::string, double> rank;
        for (std::size_t i = 0; i < order.size();) {
            std::size_t j = i;
            while (j < order.size() && order[j].first == order[i].first) ++j;
            const double mid = 0.5 * static_cast<double>(i + 1 + j);
            for (std::size_t q = i; q < j; ++q) rank[order[q].second] = mid;
            i = j;
        }
        const double best_rank = rank.at(order.front().second);
        const double best_power = order.front().first;
        const std::string group(group_label(find_alternative(std::get<0>(key)).group));
        for (const auto& [m, rk] : rank) {
            auto& r = out[m];
            r.average += rk;
            r.wald = std::max(r.wald, rk);
            r.savage = std::max(r.savage, regret == RegretMode::rank ? rk - best_rank : best_power - row.at(m));
            auto& g = group_sums[m][group];
            g.first += rk;
            g.second += 1;
        }
    }
    RankReport report;
    report.alpha = alpha;
    report.censoring_regime = censored ? "0-50%" : "0%";
    report.regret = regret;
    report.cells = static_cast<long long>(cells.size());
    for (auto& [m, r] : out) {
        r.average /= static_cast<double>(cells.size());
        for (const auto& [g, sum] : group_sums[m]) r.group_average[g] = sum.first / sum.second;
        report.methods.push_back(r);
    }
    std::stable_sort(report.methods.begin(), report.methods.end(),
                     [](const MethodRank& l, const MethodRank& r) { return l.average < r.average; });
    return report;
}

std::string rank_report_csv(const RankReport& report) {
    std::set<std::string> groups;
    for (const auto& m : report.methods) {
        for (const auto& [g, v] : m.group_average) groups.insert(g);
    }
    std::string out = "# alpha=" + format_double(report.alpha) + " censoring=" + report.censoring_regime +
                      " ties=" + report.tie_rule + " regret=" + (report.regret == RegretMode::rank ? "rank" : "power") +
                      " cells=" + std::to_string(report.cells) + "\nmethod,avg,wald,savage";
    for (const auto& g : groups) out += ",avg_" + g;
    out += '\n';
    for (const auto& m : report.methods) {
        out += m.method + ',' + format_double(m.average) + ',' + format_double(m.wald) + ',' + format_double(m.savage);
        for (const auto& g : groups) {
            const auto it = m.group_average.find(g);
            out += ',' + (it == m.group_average.end() ? std::string() : format_double(it->second));
        }
        out += '\n';
    }
    return out;
}

EnvelopeReport null_envelope(const std::vector<EmpiricalNull>& tables) {
    if (tables.size() < 2) throw ParameterError("envelope needs at least two null tables");
    EnvelopeReport r;
    r.statistic = tables.front().statistic;
    r.n = tables.front().n;
    r.rate = tables.front().rate;
    r.curves = static_cast<long long>(tables.size());
    std::vector<double> grid;
    for (const auto& t : tables) {
        if (t.values.empty()) throw CalibrationError("envelope: empty null table");
        if (static_cast<double>(t.degenerate) > 0.01 * static_cast<double>(t.replications)) {
            throw CalibrationError("envelope: null table for " + t.statistic + " exceeds 1% degenerate replications");
        }
        grid.insert(grid.end(), t.values.begin(), t.values.end());
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    if (grid.size() > kMaxEnvelopeKnots) {
        const double lo = grid.front(), hi = grid.back();
        grid.resize(kMaxEnvelopeKnots);
        for (std::size_t i = 0; i < kMaxEnvelopeKnots; ++i) {
            grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(kMaxEnvelopeKnots - 1);
        }
    }
    r.grid = grid;
    r.g_min.assign(grid.size(), 1.0);
    r.g_max.assign(grid.size(), 0.0);
    for (const auto& t : tables) {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double f = t.cdf(grid[i]);
            r.g_min[i] = std::min(r.g_min[i], f);
            r.g_max[i] = std::max(r.g_max[i], f);
        }
    }
    r.g_avg.resize(grid.size());
    double sum = 0;
    long long count = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        r.g_avg[i] = 0.5 * (r.g_min[i] + r.g_max[i]);
        if (r.g_avg[i] >= 0.9 && r.g_avg[i] < 1.0) {
            sum += r.g_avg[i] - r.g_min[i];
            ++count;
        }
    }
    r.deviation = count ? sum / static_cast<double>(count) : 0.0;
    return r;
}

std::string to_json_text(const EnvelopeReport& r) {
    nlohmann::ordered_json j;
    j["statistic"] = r.statistic;
    j["n"] = r.n;
    j["rate"] = r.rate;
    j["curves"] = r.curves;
    j["deviation"] = r.deviation;
    j["grid"] = r.grid;
    j["g_min"] = r.g_min;
    j["g_avg"] = r.g_avg;
    j["g_max"] = r.g_max;
    return j.dump(2) + "\n";
}

std::string envelope_curves_csv(const EnvelopeReport& r) {
    std::string out = "x,g_min,g_avg,g_max\n";
    for (std::size_t i = 0; i < r.grid.size(); ++i) {
        out += format_double(r.grid[i]) + ',' + format_double(r.g_min[i]) + ',' + format_double(r.g_avg[i]) + ',' +
               format_double(r.g_max[i]) + '\n';
    }
    return out;
}

std::vector<DistSpec> registry_laws() {
    std::vector<DistSpec> laws;
    for (const auto& p : registry()) {
        for (const auto& s : {p.s1, p.s2}) {
            if (std::find(laws.begin(), laws.end(), s) == laws.end()) laws.push_back(s);
        }
    }
    return laws;
}

std::vector<std::vector<EmpiricalNull>> envelope_tables(const std::vector<NamedStatistic>& stats,
                                                        const std::vector<DistSpec>& laws, NullTableSpec spec,
                                                        int workers) {
    std::vector<std::vector<EmpiricalNull>> out(stats.size());
    const std::uint64_t master = spec.seed;
    for (const auto& law : laws) {
        spec.h0_law = law;
        spec.seed = derive_seed(master, {hash_label(to_string(law))});
        auto tables = build_null_tables(stats, spec, workers);
        for (std::size_t s = 0; s < stats.size(); ++s) out[s].push_back(std::move(tables[s]));
    }
    return out;
}

std::vector<PercentagePoint> percentage_points(const EmpiricalNull& table, const std::vector<double>& levels,
                                               bool left_tail) {
    if (table.values.size() < 1000) throw ParameterError("percentage points need a table of at least 1000 values");
    std::vector<PercentagePoint> out;
    const auto& v = table.values;
    for (double a : levels) {
        if (!(a > 0.0 && a < 1.0)) throw DomainError("percentage point level must lie in (0, 1)");
        const double h = static_cast<double>(v.size() - 1) * (left_tail ? a : 1.0 - a);
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = std::min(lo + 1, v.size() - 1);
        out.push_back({a, v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo])});
    }
    return out;
}

std::string percentage_points_csv(const EmpiricalNull& table, const std::vector<PercentagePoint>& points) {
    std::string out = "statistic,n,rate,level,quantile\n";
    for (const auto& p : points) {
        out += table.statistic + ',' + std::to_string(table.n) + ',' + format_double(table.rate) + ',' +
               format_double(p.level) + ',' + format_double(p.quantile) + '\n';
    }
    return out;
}

}  // namespace survtest
