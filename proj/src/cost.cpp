#include "sieve/plan.hpp"

#include <cmath>
#include <limits>

namespace sieve {

const char *scan_strategy_name(ScanStrategy s) {
    switch (s) {
    case ScanStrategy::LinearScan:
        return "LinearScan";
    case ScanStrategy::IndexQuery:
        return "IndexQuery";
    case ScanStrategy::IndexGuards:
        return "IndexGuards";
    }
    return "?";
}

const char *partition_strategy_name(PartitionStrategy s) {
    return s == PartitionStrategy::Inline ? "Inline" : "Delta";
}

StrategyPlan choose_scan_strategy(const QuerySpec &q, const GuardedPolicyExpression &gpe,
                                  const CostParams &cp, const HistogramStats &stats,
                                  const ExplainInfo &explain_info, double random_access_factor) {
    StrategyPlan plan;
    double rows = static_cast<double>(stats.row_count);

    double guard_reads = 0;
    for (const auto &g : gpe.guards) guard_reads += stats.estimate_range(g.guard.attr, g.guard_range);
    plan.estimated.index_guards = guard_reads * cp.c_r;
    plan.estimated.linear_scan = rows * cp.c_r;

    double query_reads = std::numeric_limits<double>::infinity();
    if (explain_info.index_scan) {
        query_reads = explain_info.selectivity_fraction * rows;
        plan.estimated.index_query = query_reads * cp.c_r;
    } else {
        plan.estimated.index_query = std::numeric_limits<double>::infinity();
    }

    bool guards_win = plan.estimated.index_guards <= plan.estimated.index_query;
    double winner_reads = guards_win ? guard_reads : query_reads;
    if (random_access_factor * winner_reads > rows) {
        plan.scan = ScanStrategy::LinearScan;
    } else if (guards_win) {
        plan.scan = ScanStrategy::IndexGuards;
    } else {
        plan.scan = ScanStrategy::IndexQuery;
        plan.index_query_predicate = explain_info.predicate_index;
    }
    (void)q;

    plan.per_guard.reserve(gpe.guards.size());
    for (const auto &g : gpe.guards) plan.per_guard.push_back(choose_partition_strategy(g, cp));
    return plan;
}

} // namespace sieve
