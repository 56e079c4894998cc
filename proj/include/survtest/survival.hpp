#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace survtest {

/// Right-censored sample, sorted by time. Flag 0 = failure, 1 = censored.
/// At equal times failures come first, then input order.
class CensoredSample {
public:
    /// Validating constructor: equal lengths >= 1, finite non-negative times,
    /// flags in {0,1}. Throws ValidationError naming the offending index.
    static CensoredSample make(std::span<const double> times, std::span<const int> flags);

    /// Trusted fast path used by the simulator; sorts but does not validate.
    static CensoredSample from_unsorted(std::vector<double> times, std::vector<std::uint8_t> flags);

    std::span<const double> times() const { return times_; }
    std::span<const std::uint8_t> flags() const { return flags_; }
    std::size_t size() const { return times_.size(); }
    std::size_t censored_count() const;
    std::size_t failure_count() const { return size() - censored_count(); }
    double censoring_rate() const;

private:
    CensoredSample(std::vector<double> times, std::vector<std::uint8_t> flags);
    std::vector<double> times_;
    std::vector<std::uint8_t> flags_;
};

/// Both samples merged and sorted. Ties: failures before censorings, then
/// group 1 before group 2, then input order.
struct PooledSample {
    std::vector<double> times;
    std::vector<std::uint8_t> flags;
    std::vector<std::uint8_t> groups;  // 1 or 2
    std::size_t n1 = 0;
    std::size_t n2 = 0;

    std::size_t size() const { return times.size(); }
    double censoring_rate() const;
};

PooledSample pool(const CensoredSample& s1, const CensoredSample& s2);

/// Right-continuous step function with a value before the first breakpoint.
class StepFunction {
public:
    StepFunction(double initial, std::vector<double> breakpoints, std::vector<double> values);

    /// f(t), right-continuous.
    double operator()(double t) const;
    /// f(t-), the left limit.
    double value_at_minus(double t) const;

    double initial() const { return initial_; }
    std::span<const double> breakpoints() const { return breakpoints_; }
    std::span<const double> values() const { return values_; }

private:
    double initial_;
    std::vector<double> breakpoints_;
    std::vector<double> values_;
};

/// Product-limit estimator over sorted (time, flag) arrays. Breakpoints are the
/// distinct observation times; the curve only drops at failures and carries its
/// last value past the largest observation.
StepFunction kaplan_meier(std::span<const double> times, std::span<const std::uint8_t> flags);
StepFunction kaplan_meier(const CensoredSample& s);
StepFunction kaplan_meier(const PooledSample& s);

/// Same times, complemented flags; the KM of the result estimates the
/// censoring survival function.
CensoredSample flip_censoring(const CensoredSample& s);

/// Cumulative hazard: increments 1/Y(t) per failure, Y(t) = #{t_j >= t}.
StepFunction nelson_aalen(const PooledSample& pooled);

struct KmQuantile {
    double time = 0.0;
    bool degenerate = false;  // curve never reached p; time is the largest breakpoint
};

/// Smallest breakpoint t with S(t) <= p, for p in (0,1).
KmQuantile km_quantile(const StepFunction& s, double p);

/// Sample CSV: header `time,censored`, one observation per row.
CensoredSample parse_sample_csv(std::string_view text);
CensoredSample read_sample_csv(const std::string& path);
std::string to_csv_text(const CensoredSample& s);

}  // namespace survtest
