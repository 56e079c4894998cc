#pragma once

#include "survtest/model.hpp"
#include "survtest/simulation.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace survtest {

/// Null tables looked up by statistic name and design cell (n, rate).
class NullTableSet {
public:
    void add(EmpiricalNull table);
    const EmpiricalNull* find(const std::string& statistic, long long n, double rate) const;
    /// First table for the statistic whose bins equal `bins`.
    const EmpiricalNull* find_bins(const std::string& statistic, const Bins& bins) const;
    const std::vector<EmpiricalNull>& tables() const { return tables_; }

private:
    std::vector<EmpiricalNull> tables_;
};

/// A classical method or a trained model, as a power-study contestant.
struct Contestant {
    std::string name;
    std::optional<Method> method;
    std::shared_ptr<const Model> model;
    std::string statistic() const;  // null-table statistic name
    bool needs_table() const;
};

Contestant classical(Method m);
Contestant ml_contestant(std::string name, Model model);

struct PowerCell {
    std::string method;
    std::string alt;
    Hypothesis hyp = Hypothesis::H1;
    long long n = 0;
    double rate = 0.0;
    double alpha = 0.0;
    double power = 0.0;
    long long rejections = 0;    // counts are 0 when a table only carries power
    long long replications = 0;
    long long degenerate = 0;  // replications where the method was undefined (never rejected below alpha 1)
};

struct PowerRequest {
    std::string alt;
    Hypothesis hyp = Hypothesis::H1;
    long long n = 100;
    double rate = 0.0;
    std::vector<double> alphas{0.05};
    long long replications = 1000;
    std::uint64_t seed = 0;
    Family censor_family = Family::Exp;
    double censor_shape = 1.0;
};

/// Level-alpha rejection: p < alpha, and every replication is rejected at alpha = 1.
bool rejects(double p_value, double alpha);

/// Rejection counts for every contestant and alpha from shared replications.
/// Empirical-law methods and models use the table of the design cell (n, rate);
/// a missing table raises CalibrationRequired.
std::vector<PowerCell> estimate_power(const std::vector<Contestant>& contestants, const PowerRequest& request,
                                      const NullTableSet& tables, int workers);

using PowerTable = std::vector<PowerCell>;

std::string power_table_csv(const PowerTable& table);
/// Needs columns method, alt, n, rate, alpha and either power or rejections + replications.
PowerTable parse_power_table_csv(std::string_view text);

enum class RegretMode { rank, power };

struct MethodRank {
    std::string method;
    double average = 0.0;  // mean midrank over cells, 1 = most powerful
    double wald = 0.0;     // worst rank over cells
    double savage = 0.0;   // largest regret over cells
    std::map<std::string, double> group_average;  // alternative group label -> mean rank
};

struct RankReport {
    double alpha = 0.05;
    std::string censoring_regime;  // "0%" when every cell is uncensored, else "0-50%"
    std::string tie_rule = "midrank";
    RegretMode regret = RegretMode::rank;
    long long cells = 0;
    std::vector<MethodRank> methods;  // sorted by average rank
};

/// Ranks at one alpha over (alt, n, rate) cells; throws ValidationError listing
/// the missing (method, cell) combinations when the table is not dense.
RankReport rank_methods(const PowerTable& table, double alpha, RegretMode regret = RegretMode::rank);
std::string rank_report_csv(const RankReport& report);

struct EnvelopeReport {
    std::string statistic;
    long long n = 0;
    double rate = 0.0;
    long long curves = 0;
    std::vector<double> grid;
    std::vector<double> g_min, g_max, g_avg;
    double deviation = 0.0;  // mean of g_avg - g_min where g_avg in [0.9, 1)
};

inline constexpr std::size_t kMaxEnvelopeKnots = 10000;

/// Pointwise CDF envelope of at least two null tables of one statistic.
EnvelopeReport null_envelope(const std::vector<EmpiricalNull>& tables);
std::string to_json_text(const EnvelopeReport& report);
std::string envelope_curves_csv(const EnvelopeReport& report);

/// Distinct failure laws of the registry, in registry order.
std::vector<DistSpec> registry_laws();

/// Null tables of each statistic under each H0 law at one design cell; result[s][l]
/// is statistic s under laws[l]. Each law draws from its own seed.
std::vector<std::vector<EmpiricalNull>> envelope_tables(const std::vector<NamedStatistic>& stats,
                                                        const std::vector<DistSpec>& laws, NullTableSpec spec,
                                                        int workers);

struct PercentagePoint {
    double level = 0.0;     // rejection-tail probability
    double quantile = 0.0;  // empirical (1 - level) quantile, or the level quantile when left-tailed; type 7
};

std::vector<PercentagePoint> percentage_points(const EmpiricalNull& table, const std::vector<double>& levels,
                                               bool left_tail = false);
std::string percentage_points_csv(const EmpiricalNull& table, const std::vector<PercentagePoint>& points);

}  // namespace survtest
