#pragma once

#include <set>

#include "sieve/eval.hpp"
#include "sieve/plan.hpp"

namespace sieve {

struct ExecMetrics {
    int64_t tuples_read = 0;
    int64_t policy_evaluations = 0; // whole-policy evaluations
    int64_t delta_invocations = 0;
    double wall_time_us = 0;

    void merge(const ExecMetrics &o) {
        tuples_read += o.tuples_read;
        policy_evaluations += o.policy_evaluations;
        delta_invocations += o.delta_invocations;
        wall_time_us += o.wall_time_us;
    }
};

struct QueryResult {
    std::vector<int64_t> row_ids; // policy-compliant, query-matching rows (sorted)
    ExecMetrics metrics;
};

// Guarded expression compiled against a schema: per guard, the partition as a
// compiled policy set plus a delta dispatch table.
class PreparedGpe {
public:
    PreparedGpe() = default;
    PreparedGpe(const GuardedPolicyExpression &gpe, const Schema &schema,
                const GroupDirectory *groups, const std::string &owner_attr = "owner");

    const GuardedPolicyExpression &gpe() const { return *gpe_; }
    size_t guard_count() const { return guards_.size(); }

    // OR over guards of guard(t) AND partition(t), short-circuiting on the
    // first allowing guard. Delta partitions dispatch through the delta
    // operator and bump delta_invocations.
    bool eval_tuple(const TupleRow &t, const QueryMetadata &m, const EvalContext &ctx,
                    const std::vector<PartitionStrategy> &per_guard, ExecMetrics &metrics) const;

    // Index probe ranges realizing guard k. An owner guard naming a group
    // expands to the group id plus every member, so guarded filtering stays
    // equivalent to flat policy evaluation for group-owned policies.
    const std::vector<ValueRange> &probe_ranges(size_t k) const {
        return guards_[k].probe_ranges;
    }
    bool guard_satisfied(size_t k, const TupleRow &t) const;

private:
    struct PreparedGuard {
        int attr_idx = -1;
        ValueRange range;
        bool group_point = false;
        std::set<std::string> member_values;
        std::vector<ValueRange> probe_ranges;
        CompiledPolicySet inline_eval;
        DeltaEvaluator delta_eval;
    };
    const GuardedPolicyExpression *gpe_ = nullptr;
    std::vector<PreparedGuard> guards_;
};

// Runs the query against the policy-compliant projection of its relation.
// The policy filter is applied to the policy-bearing relation before the
// join and any aggregation.
QueryResult execute(const Database &db, const QuerySpec &q, const GuardedPolicyExpression &gpe,
                    const StrategyPlan &plan, const EvalContext &ctx = {});

// Full-scan reference: exactly the rows allowed by the metadata-filtered
// policy set. Strategies are compared against this.
std::vector<int64_t> brute_force_filter(const Relation &rel, const std::vector<Policy> &ps,
                                        const QueryMetadata &m, const EvalContext &ctx = {});

// Rows matching the query's own predicates and join, ignoring policies.
std::vector<int64_t> apply_query_filter(const Database &db, const QuerySpec &q);

// The engine's view of the best single-predicate access path for the query.
ExplainInfo explain(const QuerySpec &q, const HistogramStats &stats, const Relation &rel);

// COUNT/GROUP BY evaluation over the compliant row set (Q3 support).
struct AggregateResult {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};
AggregateResult aggregate(const Database &db, const QuerySpec &q,
                          const std::vector<int64_t> &row_ids);

// Order-insensitive digest of a result (row ids + aggregate output), used to
// compare strategies.
uint64_t result_hash(const std::vector<int64_t> &row_ids, const AggregateResult *agg = nullptr);

} // namespace sieve
