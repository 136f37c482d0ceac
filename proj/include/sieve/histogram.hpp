#pragma once

#include <unordered_map>

#include "sieve/relation.hpp"

namespace sieve {

// Equi-depth histogram over one attribute's numeric axis. String attributes
// keep only a distinct count (equality estimates only).
struct AttrHistogram {
    ValueKind kind = ValueKind::Int;
    std::vector<double> edges;   // bucket boundaries, size buckets+1 (numeric kinds)
    std::vector<int64_t> counts; // per-bucket tuple counts
    std::vector<double> prefix;  // cumulative counts before bucket k
    int64_t non_null = 0;
    int64_t distinct = 0;

    bool has_buckets() const { return !edges.empty(); }
    // Cumulative count of values <= v (linear interpolation inside a bucket).
    double cdf(double v) const;
};

struct HistogramStats {
    int64_t row_count = 0;
    std::unordered_map<std::string, AttrHistogram> by_attr;

    static HistogramStats build(const Relation &rel, int buckets = 128);

    const AttrHistogram &attr(const std::string &name) const;

    // Estimated cardinality in absolute tuple counts.
    //   equality: non_null / distinct
    //   range:    summed full buckets + interpolation in partial buckets
    //   IN:       sum of equality estimates, capped at non_null
    double estimate(const ObjectCondition &pred) const;
    double estimate_range(const std::string &attr, const ValueRange &r) const;
};

} // namespace sieve
