#include "survtest/empirical_null.hpp"

#include "survtest/error.hpp"
#include "survtest/format.hpp"

#include <json.hpp>

#include <algorithm>

namespace survtest {

SizeBin size_bin(long long min_n) {
    if (min_n <= 50) return SizeBin::Small;
    if (min_n <= 100) return SizeBin::Low;
    if (min_n <= 500) return SizeBin::Medium;
    return SizeBin::High;
}

CensoringBin censoring_bin(double pooled_rate) {
    if (pooled_rate <= 0.0) return CensoringBin::None;
    if (pooled_rate <= 0.15) return CensoringBin::Low;
    if (pooled_rate <= 0.35) return CensoringBin::Medium;
    return CensoringBin::High;
}

std::string_view to_string(SizeBin b) {
    switch (b) {
        case SizeBin::Small: return "n<=50";
        case SizeBin::Low: return "50<n<=100";
        case SizeBin::Medium: return "100<n<=500";
        case SizeBin::High: return "n>500";
    }
    return "?";
}

std::string_view to_string(CensoringBin b) {
    switch (b) {
        case CensoringBin::None: return "r=0";
        case CensoringBin::Low: return "0<r<=0.15";
        case CensoringBin::Medium: return "0.15<r<=0.35";
        case CensoringBin::High: return "r>0.35";
    }
    return "?";
}

SizeBin parse_size_bin(std::string_view s) {
    for (auto b : {SizeBin::Small, SizeBin::Low, SizeBin::Medium, SizeBin::High}) {
        if (to_string(b) == s) return b;
    }
    throw ValidationError("unknown sample-size bin '" + std::string(s) + "'");
}

CensoringBin parse_censoring_bin(std::string_view s) {
    for (auto b : {CensoringBin::None, CensoringBin::Low, CensoringBin::Medium, CensoringBin::High}) {
        if (to_string(b) == s) return b;
    }
    throw ValidationError("unknown censoring bin '" + std::string(s) + "'");
}

Bins bins_for(long long n1, long long n2, double pooled_rate) {
    return {size_bin(std::min(n1, n2)), censoring_bin(pooled_rate)};
}

std::string to_string(const Bins& b) {
    return std::string(to_string(b.n_bin)) + "," + std::string(to_string(b.r_bin));
}

double EmpiricalNull::p_right(double s) const {
    const auto first_ge = std::lower_bound(values.begin(), values.end(), s);
    const auto count = static_cast<double>(values.end() - first_ge);
    return (1.0 + count) / (static_cast<double>(values.size()) + 1.0);
}

double EmpiricalNull::p_left(double s) const {
    const auto past_le = std::upper_bound(values.begin(), values.end(), s);
    const auto count = static_cast<double>(past_le - values.begin());
    return (1.0 + count) / (static_cast<double>(values.size()) + 1.0);
}

double EmpiricalNull::cdf(double x) const {
    if (values.empty()) throw CalibrationRequired("empty null table");
    const auto past_le = std::upper_bound(values.begin(), values.end(), x);
    return static_cast<double>(past_le - values.begin()) / static_cast<double>(values.size());
}

std::string to_json_text(const EmpiricalNull& t) {
    nlohmann::ordered_json j;
    j["statistic"] = t.statistic;
    j["n_bin"] = std::string(to_string(t.bins.n_bin));
    j["r_bin"] = std::string(to_string(t.bins.r_bin));
    j["n"] = t.n;
    j["rate"] = t.rate;
    j["seed"] = t.seed;
    j["replications"] = t.replications;
    j["degenerate"] = t.degenerate;
    j["h0_law"] = t.h0_law;
    j["N"] = t.values.size();
    j["values"] = t.values;
    return j.dump(1) + "\n";
}

EmpiricalNull empirical_null_from_json_text(std::string_view text) {
    EmpiricalNull t;
    try {
        const auto j = nlohmann::json::parse(text);
        t.statistic = j.at("statistic").get<std::string>();
        t.bins.n_bin = parse_size_bin(j.at("n_bin").get<std::string>());
        t.bins.r_bin = parse_censoring_bin(j.at("r_bin").get<std::string>());
        t.n = j.at("n").get<long long>();
        t.rate = j.at("rate").get<double>();
        t.seed = j.at("seed").get<std::uint64_t>();
        t.replications = j.at("replications").get<long long>();
        t.degenerate = j.value("degenerate", 0LL);
        t.h0_law = j.value("h0_law", std::string{});
        t.values = j.at("values").get<std::vector<double>>();
        if (j.at("N").get<std::size_t>() != t.values.size()) throw ValidationError("null table: N does not match values");
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("null table JSON: ") + e.what());
    }
    if (!std::is_sorted(t.values.begin(), t.values.end())) throw ValidationError("null table values are not sorted");
    if (t.values.empty()) throw ValidationError("null table has no values");
    return t;
}

void save_null_table(const EmpiricalNull& table, const std::string& path) {
    write_text_file(path, to_json_text(table));
}

EmpiricalNull load_null_table(const std::string& path) { return empirical_null_from_json_text(read_text_file(path)); }

}  // namespace survtest
