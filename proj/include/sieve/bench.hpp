#pragma once

#include "sieve/rewrite.hpp"
#include "sieve/store.hpp"

namespace sieve {

enum class BenchStrategy : uint8_t { BaselineP, BaselineI, BaselineU, Sieve };
const char *strategy_name(BenchStrategy s);
std::optional<BenchStrategy> strategy_from_name(const std::string &name);

struct BenchOptions {
    std::vector<BenchStrategy> strategies = {BenchStrategy::BaselineP, BenchStrategy::BaselineI,
                                             BenchStrategy::BaselineU, BenchStrategy::Sieve};
    int repeats = 5;
    double timeout_ms = 30000;
    double random_access_factor = 4.0;
    bool parallel = false; // queries concurrently; strategies stay sequential per query
};

struct BenchRow {
    std::string query_id;
    std::string querier;
    BenchStrategy strategy = BenchStrategy::BaselineP;
    bool timed_out = false;
    double avg_ms = 0;
    int64_t tuples_read = 0;
    int64_t policy_evaluations = 0;
    int64_t delta_invocations = 0;
    size_t result_rows = 0;
    uint64_t result_hash = 0;
    ScanStrategy chosen_scan = ScanStrategy::LinearScan; // Sieve only
};

struct QuerierStats {
    std::string querier;
    std::string purpose;
    size_t policy_count = 0;
    size_t guard_count = 0;
    double mean_partition_size = 0;
    double total_guard_selectivity = 0; // fraction of the relation
    int64_t flat_evaluations = 0;
    int64_t guarded_evaluations = 0;
    double savings = 0; // 1 - guarded/flat
};

struct BenchReport {
    std::vector<BenchRow> rows;
    std::vector<QuerierStats> queriers;
    double overall_savings = 0;
    bool hashes_consistent = true; // every strategy agreed on every query

    std::string human_table() const;
    std::string csv() const;
};

// Runs every query under every requested strategy. All strategies evaluate
// the same metadata-filtered policy set; result hashes must agree.
//   Baseline-P: flat policy disjunction, linear scan
//   Baseline-I: one owner-index probe per policy, results unioned
//   Baseline-U: delta over the full policy set per tuple, linear scan
//   SIEVE:      guarded expression with the plan-chosen strategies
BenchReport run_bench(const Database &db, const std::string &relation,
                      const std::vector<Policy> &all_policies, const GroupDirectory &groups,
                      const std::vector<QuerySpec> &queries, const CostParams &cp,
                      const HistogramStats &stats, const BenchOptions &opts = {});

// Single-strategy execution, shared with the acceptance suite.
QueryResult run_strategy(const Database &db, const QuerySpec &q,
                         const std::vector<Policy> &filtered, const GroupDirectory &groups,
                         const CostParams &cp, const HistogramStats &stats, BenchStrategy s,
                         double random_access_factor = 4.0,
                         const GuardedPolicyExpression *gpe = nullptr,
                         ScanStrategy *chosen_scan = nullptr);

} // namespace sieve
