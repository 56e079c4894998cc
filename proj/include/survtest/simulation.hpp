#pragma once

#include "survtest/alternatives.hpp"
#include "survtest/empirical_null.hpp"
#include "survtest/rng.hpp"
#include "survtest/survival.hpp"
#include "survtest/two_sample_tests.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace survtest {

inline constexpr std::string_view kToolVersion = "survtest 1.0.0";

enum class Hypothesis { H0 = 0, H1 = 1 };
std::string_view to_string(Hypothesis h);
Hypothesis parse_hypothesis(std::string_view s);

/// Statistic columns of a dataset row, in feature order: the ten p-value
/// tests followed by the three two-stage tests.
inline constexpr std::array<Method, 13> kDatasetStatistics = {
    Method::peto,   Method::gehan,  Method::logrank,         Method::bn_sce,
    Method::bn_mce, Method::bn_gph, Method::wlr_tarone_ware, Method::wlr_peto_peto_prentice,
    Method::wlr_prentice, Method::wkm, Method::q_test, Method::max_test, Method::min3,
};
inline constexpr std::size_t kPValueColumns = 10;  // the first ten of kDatasetStatistics

struct GridSpec {
    std::vector<std::string> alternatives;
    std::vector<long long> sample_sizes;
    std::vector<double> censoring_rates;
    long long replications = 1000;
    std::uint64_t master_seed = 0;
    Family censor_family = Family::Exp;
    double censor_shape = 1.0;
};

/// Throws ParameterError: sizes >= 2, rates in [0, 0.5], replications >= 1, known ids.
void validate(const GridSpec& grid);

/// All 27 alternatives x {20, 100} x {0, 0.3}.
GridSpec desk_grid(std::uint64_t seed, long long replications);

/// n draws of min(T, C), flag 1 iff C < T; uncensored when the plan has no censor.
CensoredSample draw_censored_sample(const DistSpec& failure, const CensoringPlan& plan, std::size_t n,
                                    RandomStream& rng);

struct FeatureRow {
    std::string alt;
    Hypothesis hyp = Hypothesis::H0;
    long long n1 = 0, n2 = 0;
    double r1 = 0.0, r2 = 0.0;  // observed censored fractions
    long long rep = 0;
    std::uint64_t seed = 0;
    std::array<double, 13> statistics{};
    std::array<double, kPValueColumns> p_values{};
    int target = 0;
    bool degenerate = false;
    std::string reason;  // first degenerate method when degenerate

    double pooled_rate() const { return (n1 * r1 + n2 * r2) / static_cast<double>(n1 + n2); }
};

/// Calibrated censoring plans of one alternative at one rate: plan[0] for s1, plan[1] for s2.
struct CellPlans {
    CensoringPlan first;
    CensoringPlan second;
};

CellPlans plan_cell(const AlternativePair& alt, double rate, Family censor_family, double censor_shape);

/// Seed of one replication in a dataset grid cell.
std::uint64_t replication_seed(std::uint64_t master, const std::string& alt, Hypothesis hyp, long long n,
                               double rate, long long rep);

/// Draws the pair: H0 draws both samples from s1, H1 draws X2 from s2.
std::pair<CensoredSample, CensoredSample> draw_pair(const AlternativePair& alt, const CellPlans& plans,
                                                    Hypothesis hyp, long long n, std::uint64_t seed);

FeatureRow run_replication(const AlternativePair& alt, const CellPlans& plans, Hypothesis hyp, long long n,
                           long long rep, std::uint64_t seed);

/// Fills a row from already computed statistics (or marks it degenerate).
void fill_row(FeatureRow& row, const Battery& battery);

struct CellSummary {
    std::string alt;
    Hypothesis hyp = Hypothesis::H0;
    long long n = 0;
    double rate = 0.0;
    long long first_row = 0;
    long long rows = 0;
    long long degenerate = 0;
    std::map<std::string, long long> degenerate_reasons;
    std::string error;  // calibration failure; the cell then has no rows
};

struct DatasetManifest {
    GridSpec grid;
    std::string tool_version{kToolVersion};
    std::string data_file;
    std::string data_fnv1a;
    long long rows = 0;
    long long degenerate_rows = 0;
    std::vector<CellSummary> cells;
};

std::string dataset_header();
std::string format_row(const FeatureRow& row);

/// Writes `<dir>/dataset.csv` and `<dir>/manifest.json`; rows in cell order
/// alt x hyp x n x rate x rep. Output is independent of `workers`.
DatasetManifest generate_dataset(const GridSpec& grid, const std::string& out_dir, int workers);

std::string to_json_text(const DatasetManifest& m);
DatasetManifest manifest_from_json_text(std::string_view text);
DatasetManifest load_manifest(const std::string& path);

std::vector<FeatureRow> parse_dataset_csv(std::string_view text);
std::vector<FeatureRow> read_dataset_csv(const std::string& path);

/// Null-table construction under H0: both samples of size n from h0_law with
/// censoring calibrated to `rate`.
struct NullTableSpec {
    long long n = 100;
    double rate = 0.0;
    long long replications = 10000;
    std::uint64_t seed = 0;
    DistSpec h0_law{Family::Exp, 0.0, 1.0, 1.0};
    Family censor_family = Family::Exp;
    double censor_shape = 1.0;
};

/// A statistic of a sample pair; throws DegenerateStatistic when undefined.
struct NamedStatistic {
    std::string name;
    std::function<double(const TwoSampleData&)> evaluate;
};

NamedStatistic method_statistic(Method m);

/// One table per statistic, all computed from the same replications. Throws
/// ParameterError below 1000 replications and CalibrationError when more than
/// 1% of replications are degenerate for a statistic.
std::vector<EmpiricalNull> build_null_tables(const std::vector<NamedStatistic>& stats, const NullTableSpec& spec,
                                             int workers);
EmpiricalNull build_null_table(const NamedStatistic& stat, const NullTableSpec& spec, int workers);
EmpiricalNull build_null_table(Method m, const NullTableSpec& spec, int workers);

}  // namespace survtest
