#pragma once

#include <memory>
#include <mutex>

#include "sieve/guard.hpp"

namespace sieve {

// Persistent home of policies and guarded expressions, in the relational
// layout (policy, object-condition, guarded-expression, guard, guard-policy
// tables) serialized as one JSON document. Guarded expressions are not
// eagerly regenerated: inserts flip their outdated flag and queries rebuild
// lazily once enough insertions accumulated.
class PolicyStore {
public:
    PolicyStore() = default;
    explicit PolicyStore(GroupDirectory groups) : groups_(std::move(groups)) {}

    GroupDirectory &groups() { return groups_; }
    const GroupDirectory &groups() const { return groups_; }

    // Assigns a logical insertion timestamp, flips the outdated flag of every
    // guarded expression the policy's (querier-or-group, purpose, relation)
    // touches. Duplicate ids are rejected.
    int64_t insert_policy(Policy p);

    // Deletion forces an immediate rebuild at the next query.
    void remove_policy(int64_t id);

    const std::map<int64_t, Policy> &policies() const { return policies_; }
    std::vector<Policy> policies_for(const QueryMetadata &m, const std::string &relation) const;

    // Returns the stored expression when fresh. When outdated: rebuilds once
    // insertions-since-build reach the optimal regeneration interval,
    // otherwise serves the stale expression augmented with one owner-guarded
    // singleton per not-yet-covered policy (stale but sound: the effective
    // policy set always equals the store's current metadata-filtered set).
    GuardedPolicyExpression get_or_rebuild(const QueryMetadata &m, const std::string &relation,
                                           const std::vector<std::string> &indexed_attrs,
                                           const CostParams &cp, const HistogramStats &stats,
                                           const MaintenanceParams &mp);

    void save(const std::string &path) const;
    static PolicyStore load(const std::string &path, GroupDirectory groups = {});

    // introspection
    struct GpeState {
        GuardedPolicyExpression gpe;
        bool outdated = false;
        bool force_rebuild = false;
        int64_t insertions_since_build = 0;
        int64_t id = 0;
    };
    const GpeState *find_expression(const std::string &querier, const std::string &purpose,
                                    const std::string &relation) const;
    size_t rebuild_count() const { return rebuilds_; }
    size_t expression_count() const { return expressions_.size(); }

private:
    using Key = std::tuple<std::string, std::string, std::string>; // querier, purpose, relation

    GuardedPolicyExpression build_fresh(const QueryMetadata &m, const std::string &relation,
                                        const std::vector<std::string> &indexed_attrs,
                                        const CostParams &cp, const HistogramStats &stats);

    GroupDirectory groups_;
    std::map<int64_t, Policy> policies_;
    std::map<Key, GpeState> expressions_;
    int64_t event_counter_ = 0;
    int64_t next_gpe_id_ = 1;
    size_t rebuilds_ = 0;
    // single-writer/multi-reader lock; heap-held so the store stays movable
    mutable std::unique_ptr<std::mutex> mu_ = std::make_unique<std::mutex>();
};

} // namespace sieve
