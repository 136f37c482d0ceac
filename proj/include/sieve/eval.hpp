#pragma once

#include <cstdint>
#include <unordered_map>

#include "sieve/policy.hpp"
#include "sieve/relation.hpp"

namespace sieve {

// Evaluates the sub-query text of a derived object condition with the current
// tuple's attribute values bound, returning the result set. Implemented by the
// execution engine; policy evaluation only needs this interface.
class DerivedValueEvaluator {
public:
    virtual ~DerivedValueEvaluator() = default;
    virtual std::vector<AttrValue> evaluate(const std::string &subquery, const Schema &schema,
                                            const TupleRow &t) const = 0;
};

struct EvalContext {
    const DerivedValueEvaluator *derived = nullptr;
    const GroupDirectory *groups = nullptr;
};

// Null attribute values evaluate to false (deny-by-default). Derived
// conditions hold when the op is satisfied against any value of the result
// set (all values, for !=); a failed sub-query propagates as EvalError.
bool eval_object_condition(const ObjectCondition &oc, const Schema &schema, const TupleRow &t,
                           const EvalContext &ctx = {});

// As above, but equality on the owner attribute matches group members through
// ctx.groups (the semantics policy bodies use for owner conditions).
bool eval_condition_with_groups(const ObjectCondition &oc, const Schema &schema, const TupleRow &t,
                                const EvalContext &ctx, const std::string &owner_attr = "owner");

// Conjunction over all object conditions, short-circuiting on the first false.
// Owner conditions with a group-valued owner match tuples whose owner belongs
// to the group (resolved through ctx.groups).
bool eval_policy(const Policy &p, const Schema &schema, const TupleRow &t,
                 const EvalContext &ctx = {}, const std::string &owner_attr = "owner");

struct EvalOutcome {
    bool allowed = false;
    int64_t checks_performed = 0; // whole-policy evaluations
};

// Disjunction with short-circuit on the first allowing policy. The policy
// order only affects checks_performed, never the boolean result.
EvalOutcome eval_policy_expression(const std::vector<Policy> &ps, const Schema &schema,
                                   const TupleRow &t, const EvalContext &ctx = {},
                                   const std::string &owner_attr = "owner");

// The per-tuple policy operator: restricts ps to policies whose owner matches
// t.owner (directly or via a group) and whose querier/purpose match m, then
// evaluates the restricted disjunction. Semantically equal to
// eval_policy_expression over the metadata-filtered set.
EvalOutcome delta(const std::vector<Policy> &ps, const QueryMetadata &m, const Schema &schema,
                  const TupleRow &t, const EvalContext &ctx = {},
                  const std::string &owner_attr = "owner");

// ---------------------------------------------------------------------------
// Hot-path evaluators with attribute indices resolved once per policy set.

class CompiledPolicySet {
public:
    CompiledPolicySet() = default;
    CompiledPolicySet(const std::vector<Policy> &ps, const Schema &schema,
                      const std::string &owner_attr = "owner");

    size_t size() const { return policies_.size(); }
    bool eval_policy_at(size_t idx, const TupleRow &t, const EvalContext &ctx = {}) const;
    EvalOutcome eval_expression(const TupleRow &t, const EvalContext &ctx = {}) const;
    const Policy &policy_at(size_t idx) const { return source_[idx]; }
    const std::vector<Policy> &policies() const { return source_; }

private:
    struct Cond {
        int attr_idx;
        const ObjectCondition *oc;
        bool group_owner; // owner condition whose value may name a group
    };
    struct Compiled {
        std::vector<Cond> conds;
    };
    std::vector<Policy> source_;
    std::vector<Compiled> policies_;
    const Schema *schema_ = nullptr;
};

// Dispatch table for the delta operator: policies bucketed by exact owner,
// group-owned policies kept aside and matched through the directory.
class DeltaEvaluator {
public:
    DeltaEvaluator() = default;
    DeltaEvaluator(const std::vector<Policy> &ps, const Schema &schema,
                   const GroupDirectory *groups = nullptr,
                   const std::string &owner_attr = "owner");

    // checks_performed counts only the policies actually evaluated.
    EvalOutcome eval(const QueryMetadata &m, const TupleRow &t, const EvalContext &ctx = {}) const;

private:
    CompiledPolicySet compiled_;
    std::unordered_map<std::string, std::vector<uint32_t>> by_owner_;
    std::vector<uint32_t> group_owned_;
    int owner_idx_ = -1;
};

} // namespace sieve
