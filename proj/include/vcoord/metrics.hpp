#pragma once

#include "common.hpp"

namespace vcoord {

// Geometric mean of average user rates, computed through the mean of logs.
inline double gat(const std::vector<double>& rates) {
    if (rates.empty()) throw DomainError("gat: empty input");
    double acc = 0.0;
    for (double r : rates) {
        if (!(r > 0.0)) throw DomainError("gat: rates must be > 0");
        acc += std::log(r);
    }
    return std::exp(acc / static_cast<double>(rates.size()));
}

// Nearest-rank lower quantile: the ceil(q * n)-th smallest value.
inline double cell_edge(std::vector<double> rates, double q = 0.05) {
    if (rates.empty()) throw DomainError("cell_edge: empty input");
    std::sort(rates.begin(), rates.end());
    const std::size_t n = rates.size();
    std::size_t k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
    if (k < 1) k = 1;
    if (k > n) k = n;
    return rates[k - 1];
}

inline double sum_log_utility(const std::vector<double>& rates) {
    double acc = 0.0;
    for (double r : rates) {
        if (!(r > 0.0)) throw DomainError("sum_log_utility: rates must be > 0");
        acc += std::log(r);
    }
    return acc;
}

// One metrics record per TTI or epoch.
struct TraceRecord {
    long t = 0;
    double gat_value = 0.0;
    double cell_edge_value = 0.0;
    double utility = 0.0;
};

struct RunTrace {
    std::vector<TraceRecord> records;

    void append(long t, const std::vector<double>& rates) {
        if (!records.empty() && t <= records.back().t) throw DomainError("run trace: timestamps must increase");
        records.push_back({t, gat(rates), cell_edge(rates), sum_log_utility(rates)});
    }
};

}  // namespace vcoord
