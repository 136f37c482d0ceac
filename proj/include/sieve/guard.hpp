#pragma once

#include <map>
#include <optional>

#include "sieve/cost.hpp"
#include "sieve/histogram.hpp"
#include "sieve/policy.hpp"

namespace sieve {

// A predicate satisfying the guard properties: constant-valued range or
// equality over an indexed attribute, plus the ids of the policies it can
// serve as a filter for (each has a condition implying the predicate).
struct CandidateGuard {
    std::string attr;
    ValueRange range;
    std::vector<int64_t> covered; // sorted policy ids
    double estimated_cardinality = 0;

    ObjectCondition predicate() const { return ObjectCondition::from_range(attr, range); }
};

struct GuardedExpression {
    ObjectCondition guard;
    ValueRange guard_range;
    std::vector<Policy> partition;
    PartitionStrategy strategy = PartitionStrategy::Inline;
    double estimated_cardinality = 0;
};

struct GuardedPolicyExpression {
    std::string querier;
    std::string purpose;
    std::string relation;
    std::vector<GuardedExpression> guards;
    int64_t generated_at = 0;
    bool outdated = false;

    size_t policy_count() const;
};

// Guard regeneration economics (all rates per unit time; the generation cost
// uses the same time unit as CostParams).
struct MaintenanceParams {
    double guard_gen_cost = 0;    // C_G
    double policy_rate = 0;       // r_p, insertions per unit time
    double query_rate = 0;        // r_q, queries per unit time
    double guard_cardinality = 0; // sel(o_G)

    double queries_per_insertion() const { return query_rate / policy_rate; } // r_pq
};

struct GuardScore {
    double cost = 0;
    double benefit = 0;
    double utility = 0;
};

// Step 1: per attribute, the constant-valued conditions on indexed attributes
// (owner conditions always qualify), coalesced per identical predicate and
// sorted ascending by left endpoint.
std::map<std::string, std::vector<CandidateGuard>>
collect_candidates(const std::vector<Policy> &ps, const std::vector<std::string> &indexed_attrs,
                   const HistogramStats &stats, const std::string &owner_attr = "owner");

// Merge test for two sorted candidates on one attribute. Disjoint ranges never
// merge; overlapping ranges merge iff sel(x∩y)/sel(x∪y) > c_e/(c_r+c_e).
std::optional<CandidateGuard> merge_decision(const CandidateGuard &x, const CandidateGuard &y,
                                             const CostParams &cp, const HistogramStats &stats);

// Step 2: all collected candidates plus accepted pairwise/transitive merges.
// Scanning for a candidate stops at the first later candidate with a disjoint
// range (all following ones are disjoint too, as candidates are sorted).
std::vector<CandidateGuard> generate_candidate_guards(const std::vector<Policy> &ps,
                                                      const std::vector<std::string> &indexed_attrs,
                                                      const CostParams &cp,
                                                      const HistogramStats &stats,
                                                      const std::string &owner_attr = "owner");

//   cost    = sel(g) * (c_r + alpha * |partition| * c_e)
//   benefit = c_e * |partition| * (relation_size - sel(g))
//   utility = benefit / (sel(g) * c_r), +inf at zero read cost
GuardScore score_guard(const GuardedExpression &g, double relation_size, const CostParams &cp);
GuardScore score_candidate(double cardinality, size_t partition_size, double relation_size,
                           const CostParams &cp);

// Step 3: greedy extraction by descending utility; extracted policies are
// diffed out of the remaining candidates and utilities recomputed. The result
// partitions the input policy set exactly once.
GuardedPolicyExpression select_guards(std::vector<CandidateGuard> cands,
                                      const std::vector<Policy> &ps, const CostParams &cp,
                                      const HistogramStats &stats, double relation_size);

// The full pipeline for one metadata-filtered policy set.
GuardedPolicyExpression build_guarded_expression(const std::vector<Policy> &ps,
                                                 const QueryMetadata &m,
                                                 const std::string &relation,
                                                 const std::vector<std::string> &indexed_attrs,
                                                 const CostParams &cp, const HistogramStats &stats,
                                                 const std::string &owner_attr = "owner");

// Policy insertions to accumulate before regenerating:
//   k = sqrt(4 * C_G / (sel(o_G) * alpha * c_e * r_pq)), rounded, >= 1.
// Regeneration is recommended immediately after the k-th insertion.
int64_t optimal_regeneration_interval(const MaintenanceParams &mp, const CostParams &cp);

// Delta vs Inline per guard, from the calibrated UDF costs. The expected
// policies checked under the owner filter is |partition| / distinct owners.
PartitionStrategy choose_partition_strategy(const GuardedExpression &g, const CostParams &cp);

void assign_partition_strategies(GuardedPolicyExpression &gpe, const CostParams &cp);

} // namespace sieve
