#include "sieve/policy.hpp"

#include <algorithm>

namespace sieve {

void GroupDirectory::add_member(const std::string &group, const std::string &user) {
    members_[group].insert(user);
}

void GroupDirectory::add_subsumption(const std::string &parent, const std::string &child) {
    children_[parent].insert(child);
}

bool GroupDirectory::user_in_group(const std::string &user, const std::string &group) const {
    auto it = members_.find(group);
    if (it != members_.end() && it->second.count(user)) return true;
    auto ch = children_.find(group);
    if (ch != children_.end())
        for (const auto &c : ch->second)
            if (user_in_group(user, c)) return true;
    return false;
}

std::set<std::string> GroupDirectory::groups_of(const std::string &user) const {
    std::set<std::string> out;
    for (const auto &[g, users] : members_)
        if (users.count(user)) out.insert(g);
    // close under subsumption: parent contains all members of its children
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto &[parent, kids] : children_) {
            if (out.count(parent)) continue;
            for (const auto &k : kids)
                if (out.count(k)) {
                    out.insert(parent);
                    changed = true;
                    break;
                }
        }
    }
    return out;
}

QueryMetadata QueryMetadata::resolve(std::string querier, std::string purpose,
                                     const GroupDirectory &dir) {
    QueryMetadata m;
    m.groups = dir.groups_of(querier);
    m.querier = std::move(querier);
    m.purpose = std::move(purpose);
    return m;
}

const ObjectCondition *Policy::owner_condition(const std::string &owner_attr) const {
    for (const auto &oc : object_conditions)
        if (oc.attr == owner_attr && oc.op == CompareOp::Eq && !oc.derived()) return &oc;
    return nullptr;
}

void Policy::check_valid(const std::string &owner_attr) const {
    if (querier.empty()) throw Error("policy " + std::to_string(id) + ": empty querier");
    if (object_conditions.empty())
        throw Error("policy " + std::to_string(id) + ": no object conditions");
    int owner_conds = 0;
    for (const auto &oc : object_conditions) {
        oc.check_valid();
        if (oc.attr == owner_attr && oc.op == CompareOp::Eq && !oc.derived()) ++owner_conds;
    }
    if (owner_conds != 1)
        throw Error("policy " + std::to_string(id) + ": needs exactly one owner condition, has " +
                    std::to_string(owner_conds));
}

std::vector<Policy> filter_policies_by_metadata(const std::vector<Policy> &ps,
                                                const QueryMetadata &m) {
    std::vector<Policy> out;
    for (const auto &p : ps)
        if (p.purpose == m.purpose && (p.querier == m.querier || m.groups.count(p.querier)))
            out.push_back(p);
    return out;
}

namespace {

// Conjunction of all range-form conditions the policy places on `attr`;
// nullopt when any of them has no range form (derived / IN / !=).
std::optional<ValueRange> effective_range_on(const Policy &p, const std::string &attr) {
    ValueRange r = ValueRange::all();
    for (const auto &oc : p.object_conditions) {
        if (oc.attr != attr) continue;
        auto sub = oc.as_range();
        if (!sub) return std::nullopt;
        r = range_intersection(r, *sub);
    }
    return r;
}

Policy residual_with_range(const Policy &allow, const std::string &attr, const ValueRange &r) {
    Policy out = allow;
    out.object_conditions.erase(
        std::remove_if(out.object_conditions.begin(), out.object_conditions.end(),
                       [&](const ObjectCondition &oc) { return oc.attr == attr; }),
        out.object_conditions.end());
    out.object_conditions.push_back(ObjectCondition::from_range(attr, r));
    return out;
}

} // namespace

std::vector<Policy> factor_deny(const Policy &allow, const Policy &deny,
                                const std::string &owner_attr) {
    if (allow.relation != deny.relation || allow.owner != deny.owner)
        throw Error("factor_deny: allow and deny must share relation and owner");

    // The deny's scope on non-owner attributes.
    std::string deny_attr;
    for (const auto &oc : deny.object_conditions) {
        if (oc.attr == owner_attr) continue;
        if (!deny_attr.empty() && oc.attr != deny_attr)
            throw UnsupportedDenyError("deny constrains more than one attribute");
        if (!oc.as_range())
            throw UnsupportedDenyError("deny condition on " + oc.attr + " is not a range");
        deny_attr = oc.attr;
    }
    if (deny_attr.empty()) return {}; // deny covers the owner's data entirely

    auto deny_range = effective_range_on(deny, deny_attr);
    auto allow_range = effective_range_on(allow, deny_attr);
    if (!allow_range)
        throw UnsupportedDenyError("allow condition on " + deny_attr + " is not a range");
    if (deny_range->empty()) return {allow};

    std::vector<Policy> out;
    // Left residual: allow ∩ (-inf, deny.low)
    if (deny_range->low) {
        ValueRange left{std::nullopt, true, *deny_range->low, !deny_range->low_closed};
        ValueRange r = range_intersection(*allow_range, left);
        if (!r.empty()) out.push_back(residual_with_range(allow, deny_attr, r));
    }
    // Right residual: allow ∩ (deny.high, +inf)
    if (deny_range->high) {
        ValueRange right{*deny_range->high, !deny_range->high_closed, std::nullopt, true};
        ValueRange r = range_intersection(*allow_range, right);
        if (!r.empty()) out.push_back(residual_with_range(allow, deny_attr, r));
    }
    return out;
}

} // namespace sieve
