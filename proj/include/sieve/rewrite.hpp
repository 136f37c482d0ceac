#pragma once

#include "sieve/exec.hpp"
#include "sieve/sql.hpp"

namespace sieve {

enum class Dialect : uint8_t { Generic, Hinted, Unhinted };

const char *dialect_name(Dialect d);
std::optional<Dialect> dialect_from_name(const std::string &name);

// The rewrite decision record: one WITH clause replacing the policy-bearing
// relation, one branch per guard, query predicates folded into each branch.
struct RewrittenQuery {
    QuerySpec main;
    std::string alias;
    ScanStrategy scan = ScanStrategy::LinearScan;
    std::string index_query_attr; // hint target when scan == IndexQuery

    struct Branch {
        int64_t guard_id = 0; // position in the source guarded expression
        ObjectCondition guard;
        std::string index_name;
        bool use_delta = false;
        std::vector<Policy> partition;
        std::string querier, purpose;
    };
    std::vector<Branch> branches;           // ordered by (attr, low, high)
    std::vector<ObjectCondition> folded;    // query predicates on the relation
};

// Builds the WITH-clause rewrite for the query's guarded expression. Guards
// chosen Delta by the plan emit a sieve_delta(...) call in place of their
// inline partition.
RewrittenQuery rewrite(const QuerySpec &q, const GuardedPolicyExpression &gpe,
                       const StrategyPlan &plan);

// Dialect emission:
//   hinted:   one SELECT per guard joined by UNION, FORCE INDEX per guard
//             (IndexGuards); FORCE INDEX on the query predicate (IndexQuery);
//             USE INDEX () (LinearScan)
//   unhinted: single SELECT with OR-ed guard terms
//   generic:  unhinted shape targeting the embedded engine
std::string emit_sql(const RewrittenQuery &rq, Dialect d);

// Same emission as an AST, for direct embedded execution.
SqlQuery to_sql_query(const RewrittenQuery &rq, Dialect d);

} // namespace sieve
