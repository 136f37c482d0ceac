#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sieve/policy.hpp"

namespace sieve {

// One equi-join to a secondary relation, with its own constant predicates
// (evaluated on the joined relation before the join).
struct JoinSpec {
    std::string relation;
    std::string left_attr;  // attribute on the policy-bearing relation
    std::string right_attr; // attribute on the joined relation
    std::vector<ObjectCondition> predicates;
};

struct Aggregation {
    enum Kind : uint8_t { None, CountStar, CountDistinct } kind = None;
    std::string attr; // CountDistinct target
    std::vector<std::string> group_by;
};

// The supported query shape: SELECT cols FROM rel [JOIN rel2 ON a=b]
// WHERE conjunction of constant predicates, with query metadata attached.
struct QuerySpec {
    std::string relation;
    bool select_star = true;
    std::vector<std::string> select_cols;
    Aggregation agg;
    std::vector<ObjectCondition> where; // on the policy-bearing relation
    std::optional<JoinSpec> join;
    QueryMetadata metadata;
};

} // namespace sieve
