#include "survtest/survival.hpp"

#include "survtest/error.hpp"
#include "survtest/format.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace survtest {

CensoredSample::CensoredSample(std::vector<double> times, std::vector<std::uint8_t> flags)
    : times_(std::move(times)), flags_(std::move(flags)) {}

CensoredSample CensoredSample::make(std::span<const double> times, std::span<const int> flags) {
    if (times.size() != flags.size()) {
        throw ValidationError("sample: " + std::to_string(times.size()) + " times but " +
                              std::to_string(flags.size()) + " flags");
    }
    if (times.empty()) throw ValidationError("sample: at least one observation required");
    std::vector<double> t(times.begin(), times.end());
    std::vector<std::uint8_t> f(flags.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!std::isfinite(times[i])) throw ValidationError("sample: non-finite time", i);
        if (times[i] < 0.0) throw ValidationError("sample: negative time", i);
        if (flags[i] != 0 && flags[i] != 1) throw ValidationError("sample: censoring flag must be 0 or 1", i);
        f[i] = static_cast<std::uint8_t>(flags[i]);
    }
    return from_unsorted(std::move(t), std::move(f));
}

CensoredSample CensoredSample::from_unsorted(std::vector<double> times, std::vector<std::uint8_t> flags) {
    const std::size_t n = times.size();
    bool sorted = true;
    for (std::size_t i = 1; i < n && sorted; ++i) {
        sorted = times[i - 1] < times[i] || (times[i - 1] == times[i] && flags[i - 1] <= flags[i]);
    }
    if (sorted) return CensoredSample(std::move(times), std::move(flags));

    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (times[a] != times[b]) return times[a] < times[b];
        return flags[a] < flags[b];
    });
    std::vector<double> t(n);
    std::vector<std::uint8_t> f(n);
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = times[order[i]];
        f[i] = flags[order[i]];
    }
    return CensoredSample(std::move(t), std::move(f));
}

std::size_t CensoredSample::censored_count() const {
    return static_cast<std::size_t>(std::count(flags_.begin(), flags_.end(), std::uint8_t{1}));
}

double CensoredSample::censoring_rate() const {
    return static_cast<double>(censored_count()) / static_cast<double>(size());
}

double PooledSample::censoring_rate() const {
    const auto c = std::count(flags.begin(), flags.end(), std::uint8_t{1});
    return static_cast<double>(c) / static_cast<double>(size());
}

PooledSample pool(const CensoredSample& s1, const CensoredSample& s2) {
    PooledSample p;
    p.n1 = s1.size();
    p.n2 = s2.size();
    const std::size_t n = p.n1 + p.n2;
    p.times.reserve(n);
    p.flags.reserve(n);
    p.groups.reserve(n);
    const auto t1 = s1.times(), t2 = s2.times();
    const auto f1 = s1.flags(), f2 = s2.flags();
    std::size_t i = 0, j = 0;
    while (i < p.n1 || j < p.n2) {
        bool take_first;
        if (i == p.n1) take_first = false;
        else if (j == p.n2) take_first = true;
        else take_first = t1[i] < t2[j] || (t1[i] == t2[j] && f1[i] <= f2[j]);
        if (take_first) {
            p.times.push_back(t1[i]);
            p.flags.push_back(f1[i]);
            p.groups.push_back(1);
            ++i;
        } else {
            p.times.push_back(t2[j]);
            p.flags.push_back(f2[j]);
            p.groups.push_back(2);
            ++j;
        }
    }
    return p;
}

StepFunction::StepFunction(double initial, std::vector<double> breakpoints, std::vector<double> values)
    : initial_(initial), breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
    if (breakpoints_.size() != values_.size()) throw ValidationError("step function: size mismatch");
    for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
        if (!(breakpoints_[i - 1] < breakpoints_[i])) throw ValidationError("step function: breakpoints not ascending", i);
    }
}

double StepFunction::operator()(double t) const {
    const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
    if (it == breakpoints_.begin()) return initial_;
    return values_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
}

double StepFunction::value_at_minus(double t) const {
    const auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), t);
    if (it == breakpoints_.begin()) return initial_;
    return values_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
}

StepFunction kaplan_meier(std::span<const double> times, std::span<const std::uint8_t> flags) {
    const std::size_t n = times.size();
    std::vector<double> bp, val;
    bp.reserve(n);
    val.reserve(n);
    double s = 1.0;
    std::size_t i = 0;
    while (i < n) {
        const double t = times[i];
        const auto at_risk = static_cast<double>(n - i);
        std::size_t d = 0;
        std::size_t j = i;
        for (; j < n && times[j] == t; ++j) d += flags[j] == 0 ? 1 : 0;
        if (d > 0) s *= 1.0 - static_cast<double>(d) / at_risk;
        bp.push_back(t);
        val.push_back(s);
        i = j;
    }
    return StepFunction(1.0, std::move(bp), std::move(val));
}

StepFunction kaplan_meier(const CensoredSample& s) { return kaplan_meier(s.times(), s.flags()); }

StepFunction kaplan_meier(const PooledSample& s) { return kaplan_meier(s.times, s.flags); }

CensoredSample flip_censoring(const CensoredSample& s) {
    std::vector<double> t(s.times().begin(), s.times().end());
    std::vector<std::uint8_t> f(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) f[i] = static_cast<std::uint8_t>(1 - s.flags()[i]);
    return CensoredSample::from_unsorted(std::move(t), std::move(f));
}

StepFunction nelson_aalen(const PooledSample& pooled) {
    const std::size_t n = pooled.size();
    std::vector<double> bp, val;
    bp.reserve(n);
    val.reserve(n);
    double h = 0.0;
    std::size_t i = 0;
    while (i < n) {
        const double t = pooled.times[i];
        const auto at_risk = static_cast<double>(n - i);
        std::size_t d = 0;
        std::size_t j = i;
        for (; j < n && pooled.times[j] == t; ++j) d += pooled.flags[j] == 0 ? 1 : 0;
        h += static_cast<double>(d) / at_risk;
        bp.push_back(t);
        val.push_back(h);
        i = j;
    }
    return StepFunction(0.0, std::move(bp), std::move(val));
}

KmQuantile km_quantile(const StepFunction& s, double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("km_quantile: p must be in (0,1)");
    const auto bp = s.breakpoints();
    const auto v = s.values();
    if (bp.empty()) throw DomainError("km_quantile: empty step function");
    for (std::size_t i = 0; i < bp.size(); ++i) {
        if (v[i] <= p) return {bp[i], false};
    }
    return {bp.back(), true};
}

CensoredSample parse_sample_csv(std::string_view text) {
    const auto lines = split(text, '\n');
    std::size_t line_no = 0;
    bool header_seen = false;
    std::vector<double> times;
    std::vector<int> flags;
    for (const auto raw : lines) {
        ++line_no;
        const auto line = trim(raw);
        if (line.empty()) continue;
        const auto cols = split(line, ',');
        if (!header_seen) {
            if (cols.size() != 2 || trim(cols[0]) != "time" || trim(cols[1]) != "censored") {
                throw ValidationError("sample CSV: expected header 'time,censored'", line_no);
            }
            header_seen = true;
            continue;
        }
        if (cols.size() != 2) throw ValidationError("sample CSV: expected 2 columns", line_no);
        try {
            times.push_back(parse_double(cols[0]));
            const auto flag = parse_integer(cols[1]);
            if (flag != 0 && flag != 1) throw ValidationError("censored must be 0 or 1");
            flags.push_back(static_cast<int>(flag));
        } catch (const ValidationError& e) {
            throw ValidationError(std::string("sample CSV line ") + std::to_string(line_no) + ": " + e.what(), line_no);
        }
    }
    if (!header_seen) throw ValidationError("sample CSV: missing header 'time,censored'");
    try {
        return CensoredSample::make(times, flags);
    } catch (const ValidationError& e) {
        // Row index i sits on data line i + 2 when the file has no blank lines.
        if (e.index() != static_cast<std::size_t>(-1)) {
            throw ValidationError(std::string("sample CSV: ") + e.what() + ", data row " + std::to_string(e.index() + 1),
                                  e.index() + 2);
        }
        throw;
    }
}

CensoredSample read_sample_csv(const std::string& path) { return parse_sample_csv(read_text_file(path)); }

std::string to_csv_text(const CensoredSample& s) {
    std::string out = "time,censored\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
        out += format_double(s.times()[i]);
        out += s.flags()[i] ? ",1\n" : ",0\n";
    }
    return out;
}

}  // namespace survtest
