#include "sieve/histogram.hpp"

#include <algorithm>
#include <cmath>

namespace sieve {

double AttrHistogram::cdf(double v) const {
    if (!has_buckets() || non_null == 0) return 0.0;
    if (v < edges.front()) return 0.0;
    if (v >= edges.back()) return static_cast<double>(non_null);
    // last edge <= v; zero-width heavy-hitter buckets before it are fully counted
    size_t idx = static_cast<size_t>(std::upper_bound(edges.begin(), edges.end(), v) -
                                     edges.begin()) - 1;
    double width = edges[idx + 1] - edges[idx];
    double frac = width > 0 ? (v - edges[idx]) / width : 0.0;
    return prefix[idx] + static_cast<double>(counts[idx]) * frac;
}

HistogramStats HistogramStats::build(const Relation &rel, int buckets) {
    HistogramStats stats;
    stats.row_count = static_cast<int64_t>(rel.row_count());
    for (size_t a = 0; a < rel.schema().size(); ++a) {
        const auto &attr = rel.schema().at(static_cast<int>(a));
        AttrHistogram h;
        h.kind = attr.kind;
        if (attr.kind == ValueKind::String) {
            std::vector<const std::string *> vals;
            vals.reserve(rel.row_count());
            for (const auto &row : rel.rows())
                if (row.values[a]) vals.push_back(&row.values[a]->s);
            std::sort(vals.begin(), vals.end(),
                      [](const std::string *x, const std::string *y) { return *x < *y; });
            h.non_null = static_cast<int64_t>(vals.size());
            h.distinct = 0;
            for (size_t k = 0; k < vals.size(); ++k)
                if (k == 0 || *vals[k] != *vals[k - 1]) ++h.distinct;
        } else {
            std::vector<double> vals;
            vals.reserve(rel.row_count());
            for (const auto &row : rel.rows())
                if (row.values[a]) vals.push_back(row.values[a]->as_double());
            std::sort(vals.begin(), vals.end());
            h.non_null = static_cast<int64_t>(vals.size());
            h.distinct = 0;
            for (size_t k = 0; k < vals.size(); ++k)
                if (k == 0 || vals[k] != vals[k - 1]) ++h.distinct;
            if (!vals.empty()) {
                int b = std::max(1, std::min<int>(buckets, static_cast<int>(vals.size())));
                h.edges.resize(static_cast<size_t>(b) + 1);
                h.counts.assign(static_cast<size_t>(b), 0);
                h.edges[0] = vals.front();
                size_t prev_pos = 0;
                for (int k = 1; k <= b; ++k) {
                    size_t pos = vals.size() * static_cast<size_t>(k) / static_cast<size_t>(b);
                    h.edges[static_cast<size_t>(k)] = vals[pos - 1];
                    h.counts[static_cast<size_t>(k) - 1] = static_cast<int64_t>(pos - prev_pos);
                    prev_pos = pos;
                }
                h.prefix.assign(h.counts.size(), 0.0);
                for (size_t k = 1; k < h.counts.size(); ++k)
                    h.prefix[k] = h.prefix[k - 1] + static_cast<double>(h.counts[k - 1]);
            }
        }
        stats.by_attr.emplace(attr.name, std::move(h));
    }
    return stats;
}

const AttrHistogram &HistogramStats::attr(const std::string &name) const {
    auto it = by_attr.find(name);
    if (it == by_attr.end()) throw Error("no statistics for attribute " + name);
    return it->second;
}

namespace {

// Discrete kinds get half-step bound adjustment so that closed/open endpoints
// and inclusion-exclusion over overlapping ranges behave consistently.
double kind_delta(ValueKind k) { return k == ValueKind::Decimal ? 0.0 : 0.5; }

double equality_estimate(const AttrHistogram &h) {
    if (h.distinct <= 0) return 0.0;
    return static_cast<double>(h.non_null) / static_cast<double>(h.distinct);
}

} // namespace

double HistogramStats::estimate_range(const std::string &attr_name, const ValueRange &r) const {
    const AttrHistogram &h = attr(attr_name);
    if (r.empty()) return 0.0;
    // A degenerate point range is an equality predicate.
    if (r.is_point()) return equality_estimate(h);
    if (!h.has_buckets()) {
        // Strings carry no ordering statistics; a proper range is unbounded
        // from the histogram's point of view.
        return static_cast<double>(h.non_null);
    }
    double d = kind_delta(h.kind);
    double lo_cdf = 0.0;
    if (r.low) lo_cdf = h.cdf(r.low->as_double() + (r.low_closed ? -d : d));
    double hi_cdf = static_cast<double>(h.non_null);
    if (r.high) hi_cdf = h.cdf(r.high->as_double() + (r.high_closed ? d : -d));
    return std::max(0.0, hi_cdf - lo_cdf);
}

double HistogramStats::estimate(const ObjectCondition &pred) const {
    if (pred.derived()) throw Error("cannot estimate a derived condition");
    const AttrHistogram &h = attr(pred.attr);
    switch (pred.op) {
    case CompareOp::Eq:
        return equality_estimate(h);
    case CompareOp::Neq:
        return std::max(0.0, static_cast<double>(h.non_null) - equality_estimate(h));
    case CompareOp::In: {
        double s = equality_estimate(h) * static_cast<double>(pred.values.size());
        return std::min(s, static_cast<double>(h.non_null));
    }
    default: {
        auto r = pred.as_range();
        if (!r) throw Error("condition has no range form");
        return estimate_range(pred.attr, *r);
    }
    }
}

} // namespace sieve
