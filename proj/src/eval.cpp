#include "sieve/eval.hpp"

namespace sieve {

namespace {

bool eval_constant(const AttrValue &tv, const ObjectCondition &oc) {
    return satisfies_op(tv, oc.op, oc.values, oc.low_closed, oc.high_closed);
}

bool eval_derived(const AttrValue &tv, const ObjectCondition &oc, const Schema &schema,
                  const TupleRow &t, const EvalContext &ctx) {
    if (!ctx.derived) throw EvalError("derived condition on " + oc.attr + " without an evaluator");
    std::vector<AttrValue> results;
    try {
        results = ctx.derived->evaluate(oc.subquery, schema, t);
    } catch (const Error &e) {
        throw EvalError("derived condition on " + oc.attr + " failed: " + e.what());
    }
    if (oc.op == CompareOp::Neq) {
        for (const auto &v : results)
            if (compare_values(tv, v) == 0) return false;
        return true;
    }
    for (const auto &v : results)
        if (satisfies_op(tv, oc.op, {v}, true, true)) return true;
    return false;
}

// Owner conditions may name a group; a tuple owner inside the group matches.
bool owner_matches(const AttrValue &tuple_owner, const AttrValue &policy_owner,
                   const EvalContext &ctx) {
    if (tuple_owner.kind == policy_owner.kind && compare_values(tuple_owner, policy_owner) == 0)
        return true;
    if (ctx.groups && tuple_owner.kind == ValueKind::String &&
        policy_owner.kind == ValueKind::String)
        return ctx.groups->user_in_group(tuple_owner.s, policy_owner.s);
    return false;
}

bool eval_condition_at(const ObjectCondition &oc, int attr_idx, bool group_owner,
                       const Schema &schema, const TupleRow &t, const EvalContext &ctx) {
    const auto &tv = t.values[static_cast<size_t>(attr_idx)];
    if (!tv) return false; // null never satisfies a condition
    if (oc.derived()) return eval_derived(*tv, oc, schema, t, ctx);
    if (group_owner) return owner_matches(*tv, oc.values[0], ctx);
    return eval_constant(*tv, oc);
}

} // namespace

bool eval_object_condition(const ObjectCondition &oc, const Schema &schema, const TupleRow &t,
                           const EvalContext &ctx) {
    int idx = schema.index_of(oc.attr);
    if (idx < 0) throw Error("attribute " + oc.attr + " not in schema");
    return eval_condition_at(oc, idx, false, schema, t, ctx);
}

bool eval_condition_with_groups(const ObjectCondition &oc, const Schema &schema, const TupleRow &t,
                                const EvalContext &ctx, const std::string &owner_attr) {
    int idx = schema.index_of(oc.attr);
    if (idx < 0) throw Error("attribute " + oc.attr + " not in schema");
    bool group_owner = oc.attr == owner_attr && oc.op == CompareOp::Eq && !oc.derived();
    return eval_condition_at(oc, idx, group_owner, schema, t, ctx);
}

bool eval_policy(const Policy &p, const Schema &schema, const TupleRow &t, const EvalContext &ctx,
                 const std::string &owner_attr) {
    for (const auto &oc : p.object_conditions) {
        int idx = schema.index_of(oc.attr);
        if (idx < 0) throw Error("attribute " + oc.attr + " not in schema");
        bool group_owner = oc.attr == owner_attr && oc.op == CompareOp::Eq && !oc.derived();
        if (!eval_condition_at(oc, idx, group_owner, schema, t, ctx)) return false;
    }
    return true;
}

EvalOutcome eval_policy_expression(const std::vector<Policy> &ps, const Schema &schema,
                                   const TupleRow &t, const EvalContext &ctx,
                                   const std::string &owner_attr) {
    EvalOutcome out;
    for (const auto &p : ps) {
        ++out.checks_performed;
        if (eval_policy(p, schema, t, ctx, owner_attr)) {
            out.allowed = true;
            return out;
        }
    }
    return out;
}

EvalOutcome delta(const std::vector<Policy> &ps, const QueryMetadata &m, const Schema &schema,
                  const TupleRow &t, const EvalContext &ctx, const std::string &owner_attr) {
    DeltaEvaluator ev(ps, schema, ctx.groups, owner_attr);
    return ev.eval(m, t, ctx);
}

CompiledPolicySet::CompiledPolicySet(const std::vector<Policy> &ps, const Schema &schema,
                                     const std::string &owner_attr)
    : source_(ps), schema_(&schema) {
    policies_.reserve(source_.size());
    for (const auto &p : source_) {
        Compiled c;
        for (const auto &oc : p.object_conditions) {
            int idx = schema.index_of(oc.attr);
            if (idx < 0) throw Error("attribute " + oc.attr + " not in schema");
            bool group_owner = oc.attr == owner_attr && oc.op == CompareOp::Eq && !oc.derived();
            c.conds.push_back({idx, &oc, group_owner});
        }
        policies_.push_back(std::move(c));
    }
}

bool CompiledPolicySet::eval_policy_at(size_t idx, const TupleRow &t, const EvalContext &ctx) const {
    for (const auto &cond : policies_[idx].conds)
        if (!eval_condition_at(*cond.oc, cond.attr_idx, cond.group_owner, *schema_, t, ctx))
            return false;
    return true;
}

EvalOutcome CompiledPolicySet::eval_expression(const TupleRow &t, const EvalContext &ctx) const {
    EvalOutcome out;
    for (size_t k = 0; k < policies_.size(); ++k) {
        ++out.checks_performed;
        if (eval_policy_at(k, t, ctx)) {
            out.allowed = true;
            return out;
        }
    }
    return out;
}

DeltaEvaluator::DeltaEvaluator(const std::vector<Policy> &ps, const Schema &schema,
                               const GroupDirectory *groups, const std::string &owner_attr)
    : compiled_(ps, schema, owner_attr), owner_idx_(schema.index_of(owner_attr)) {
    if (owner_idx_ < 0) throw Error("schema has no " + owner_attr + " attribute");
    for (uint32_t k = 0; k < ps.size(); ++k) {
        const auto *oc = ps[k].owner_condition(owner_attr);
        bool exact = oc && oc->values[0].kind == ValueKind::String &&
                     !(groups && groups->is_group(oc->values[0].s));
        if (exact)
            by_owner_[oc->values[0].s].push_back(k);
        else
            group_owned_.push_back(k); // group owners and non-string owners, resolved per tuple
    }
}

EvalOutcome DeltaEvaluator::eval(const QueryMetadata &m, const TupleRow &t,
                                 const EvalContext &ctx) const {
    EvalOutcome out;
    const auto &owner = t.values[static_cast<size_t>(owner_idx_)];
    if (!owner) return out;

    auto try_policy = [&](uint32_t k) {
        const Policy &p = compiled_.policy_at(k);
        if (p.purpose != m.purpose) return false;
        if (p.querier != m.querier && !m.groups.count(p.querier)) return false;
        ++out.checks_performed;
        return compiled_.eval_policy_at(k, t, ctx);
    };

    if (owner->kind == ValueKind::String) {
        auto it = by_owner_.find(owner->s);
        if (it != by_owner_.end())
            for (uint32_t k : it->second)
                if (try_policy(k)) {
                    out.allowed = true;
                    return out;
                }
        // group-owned policies: tuple owner may be a member
        if (ctx.groups)
            for (uint32_t k : group_owned_) {
                const auto *oc = compiled_.policy_at(k).owner_condition();
                if (!oc || oc->values[0].kind != ValueKind::String) continue;
                if (!ctx.groups->user_in_group(owner->s, oc->values[0].s)) continue;
                if (try_policy(k)) {
                    out.allowed = true;
                    return out;
                }
            }
    } else {
        for (uint32_t k : group_owned_) {
            const auto *oc = compiled_.policy_at(k).owner_condition();
            if (!oc || oc->values[0].kind != owner->kind ||
                compare_values(oc->values[0], *owner) != 0)
                continue;
            if (try_policy(k)) {
                out.allowed = true;
                return out;
            }
        }
    }
    return out;
}

} // namespace sieve
