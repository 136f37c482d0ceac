#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "sieve/condition.hpp"

namespace sieve {

// Principals (users and groups) are identified by opaque strings. Group
// membership is resolved through a GroupDirectory; the hierarchy is closed
// under subsumption (a group inherits the members of groups it subsumes).
class GroupDirectory {
public:
    void add_member(const std::string &group, const std::string &user);
    // `child` is subsumed by `parent`: every member of child is a member of parent.
    void add_subsumption(const std::string &parent, const std::string &child);

    bool is_group(const std::string &id) const { return members_.count(id) || children_.count(id); }
    bool user_in_group(const std::string &user, const std::string &group) const;
    // All groups the user belongs to, including via subsumption.
    std::set<std::string> groups_of(const std::string &user) const;

    const std::map<std::string, std::set<std::string>> &direct_members() const { return members_; }

private:
    std::map<std::string, std::set<std::string>> members_;  // group -> direct users
    std::map<std::string, std::set<std::string>> children_; // parent -> subsumed groups
};

struct QueryMetadata {
    std::string querier;
    std::string purpose;
    std::set<std::string> groups; // closure of the querier's memberships

    static QueryMetadata resolve(std::string querier, std::string purpose,
                                 const GroupDirectory &dir);
};

// An allow policy: the owner grants (querier, purpose) access to tuples
// matching the conjunctive object conditions. Deny policies are factored away
// before they reach this type (see factor_deny).
struct Policy {
    int64_t id = 0;
    std::string relation;
    std::string owner;   // user or group id
    std::string querier; // user or group id
    std::string purpose;
    std::vector<ObjectCondition> object_conditions;
    int64_t inserted_at = 0;

    // The single mandatory equality condition on the relation's owner attribute.
    const ObjectCondition *owner_condition(const std::string &owner_attr = "owner") const;
    void check_valid(const std::string &owner_attr = "owner") const;
};

// Policies applicable to the query: purpose matches and the querier is named
// directly or through one of the metadata's groups.
std::vector<Policy> filter_policies_by_metadata(const std::vector<Policy> &ps,
                                                const QueryMetadata &m);

// Rewrites (allow, deny) into residual allow policies whose coverage is the
// allow coverage minus the deny coverage. Supported deny shapes constrain at
// most one non-owner attribute with a range or equality.
std::vector<Policy> factor_deny(const Policy &allow, const Policy &deny,
                                const std::string &owner_attr = "owner");

} // namespace sieve
