#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace survtest {

/// Sample-size bins on min(n1, n2): <=50, (50,100], (100,500], >500.
enum class SizeBin { Small, Low, Medium, High };
/// Pooled censoring-rate bins: 0, (0,0.15], (0.15,0.35], >0.35.
enum class CensoringBin { None, Low, Medium, High };

SizeBin size_bin(long long min_n);
CensoringBin censoring_bin(double pooled_rate);
std::string_view to_string(SizeBin b);
std::string_view to_string(CensoringBin b);
SizeBin parse_size_bin(std::string_view s);
CensoringBin parse_censoring_bin(std::string_view s);

struct Bins {
    SizeBin n_bin = SizeBin::Small;
    CensoringBin r_bin = CensoringBin::None;

    friend bool operator==(const Bins&, const Bins&) = default;
};

Bins bins_for(long long n1, long long n2, double pooled_rate);
std::string to_string(const Bins& b);

/// Monte-Carlo sample of a statistic under H0, sorted ascending.
struct EmpiricalNull {
    std::string statistic;       // method name or "ml:<model checksum>"
    Bins bins;
    long long n = 0;             // design sample size per group
    double rate = 0.0;           // design censoring rate
    std::uint64_t seed = 0;
    long long replications = 0;
    long long degenerate = 0;
    std::string h0_law;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }

    /// (1 + #{v >= s}) / (N + 1)
    double p_right(double s) const;
    /// (1 + #{v <= s}) / (N + 1)
    double p_left(double s) const;
    /// #{v <= x} / N
    double cdf(double x) const;
};

std::string to_json_text(const EmpiricalNull& table);
EmpiricalNull empirical_null_from_json_text(std::string_view text);

void save_null_table(const EmpiricalNull& table, const std::string& path);
EmpiricalNull load_null_table(const std::string& path);

}  // namespace survtest
