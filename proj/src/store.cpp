#include "sieve/store.hpp"

#include <fstream>

#include "json.hpp"

#include "sieve/jsonio.hpp"

namespace sieve {

using nlohmann::json;

int64_t PolicyStore::insert_policy(Policy p) {
    std::lock_guard<std::mutex> lock(*mu_);
    p.check_valid();
    if (policies_.count(p.id)) throw StoreError("duplicate policy id " + std::to_string(p.id));
    p.inserted_at = ++event_counter_;

    for (auto &[key, state] : expressions_) {
        const auto &[querier, purpose, relation] = key;
        if (purpose != p.purpose || relation != p.relation) continue;
        bool applies = querier == p.querier ||
                       (groups_.is_group(p.querier) && groups_.user_in_group(querier, p.querier));
        if (applies) {
            state.outdated = true;
            state.gpe.outdated = true;
            ++state.insertions_since_build;
        }
    }
    int64_t id = p.id;
    policies_.emplace(id, std::move(p));
    return id;
}

void PolicyStore::remove_policy(int64_t id) {
    std::lock_guard<std::mutex> lock(*mu_);
    auto it = policies_.find(id);
    if (it == policies_.end()) throw StoreError("unknown policy id " + std::to_string(id));
    const Policy &p = it->second;
    ++event_counter_;
    for (auto &[key, state] : expressions_) {
        const auto &[querier, purpose, relation] = key;
        if (purpose != p.purpose || relation != p.relation) continue;
        bool applies = querier == p.querier ||
                       (groups_.is_group(p.querier) && groups_.user_in_group(querier, p.querier));
        if (applies) {
            state.outdated = true;
            state.gpe.outdated = true;
            state.force_rebuild = true; // the interval derivation covers insertions only
        }
    }
    policies_.erase(it);
}

std::vector<Policy> PolicyStore::policies_for(const QueryMetadata &m,
                                              const std::string &relation) const {
    std::vector<Policy> all;
    for (const auto &[id, p] : policies_)
        if (p.relation == relation) all.push_back(p);
    return filter_policies_by_metadata(all, m);
}

GuardedPolicyExpression PolicyStore::build_fresh(const QueryMetadata &m,
                                                 const std::string &relation,
                                                 const std::vector<std::string> &indexed_attrs,
                                                 const CostParams &cp,
                                                 const HistogramStats &stats) {
    auto ps = policies_for(m, relation);
    auto gpe = build_guarded_expression(ps, m, relation, indexed_attrs, cp, stats);
    gpe.generated_at = ++event_counter_;
    gpe.outdated = false;
    return gpe;
}

const PolicyStore::GpeState *PolicyStore::find_expression(const std::string &querier,
                                                          const std::string &purpose,
                                                          const std::string &relation) const {
    auto it = expressions_.find(Key{querier, purpose, relation});
    return it == expressions_.end() ? nullptr : &it->second;
}

GuardedPolicyExpression PolicyStore::get_or_rebuild(const QueryMetadata &m,
                                                    const std::string &relation,
                                                    const std::vector<std::string> &indexed_attrs,
                                                    const CostParams &cp,
                                                    const HistogramStats &stats,
                                                    const MaintenanceParams &mp) {
    std::lock_guard<std::mutex> lock(*mu_);
    Key key{m.querier, m.purpose, relation};
    auto it = expressions_.find(key);
    if (it == expressions_.end()) {
        GpeState state;
        state.gpe = build_fresh(m, relation, indexed_attrs, cp, stats);
        state.id = next_gpe_id_++;
        ++rebuilds_;
        it = expressions_.emplace(key, std::move(state)).first;
        return it->second.gpe;
    }

    GpeState &state = it->second;
    if (!state.outdated) return state.gpe;

    int64_t k = optimal_regeneration_interval(mp, cp);
    if (state.force_rebuild || state.insertions_since_build >= k) {
        state.gpe = build_fresh(m, relation, indexed_attrs, cp, stats);
        state.outdated = false;
        state.force_rebuild = false;
        state.insertions_since_build = 0;
        ++rebuilds_;
        return state.gpe;
    }

    // stale but sound: append one owner-guarded singleton per policy the
    // stored partitions do not cover yet
    GuardedPolicyExpression out = state.gpe;
    std::set<int64_t> covered;
    for (const auto &g : out.guards)
        for (const auto &p : g.partition) covered.insert(p.id);
    for (const auto &p : policies_for(m, relation)) {
        if (covered.count(p.id)) continue;
        const auto *oc = p.owner_condition();
        if (!oc) continue;
        GuardedExpression ge;
        ge.guard = *oc;
        ge.guard_range = *oc->as_range();
        ge.partition = {p};
        ge.estimated_cardinality = stats.estimate_range(oc->attr, ge.guard_range);
        out.guards.push_back(std::move(ge));
    }
    out.outdated = true;
    return out;
}

void PolicyStore::save(const std::string &path) const {
    std::lock_guard<std::mutex> lock(*mu_);
    json doc;
    doc["schema_version"] = 1;
    doc["event_counter"] = event_counter_;
    doc["next_gpe_id"] = next_gpe_id_;

    json r_p = json::array(), r_oc = json::array();
    int64_t oc_id = 0;
    for (const auto &[id, p] : policies_) {
        r_p.push_back(json{{"id", p.id},
                           {"owner", p.owner},
                           {"querier", p.querier},
                           {"associated_table", p.relation},
                           {"purpose", p.purpose},
                           {"action", "allow"},
                           {"ts_inserted_at", p.inserted_at}});
        for (const auto &oc : p.object_conditions)
            r_oc.push_back(json{{"id", ++oc_id},
                                {"policy_id", p.id},
                                {"cond", json::parse(condition_to_json_string(oc))}});
    }

    json r_ge = json::array(), r_gg = json::array(), r_gp = json::array();
    int64_t guard_id = 0;
    for (const auto &[key, state] : expressions_) {
        r_ge.push_back(json{{"id", state.id},
                            {"querier", state.gpe.querier},
                            {"associated_table", state.gpe.relation},
                            {"purpose", state.gpe.purpose},
                            {"action", "allow"},
                            {"outdated", state.outdated},
                            {"force_rebuild", state.force_rebuild},
                            {"insertions_since_build", state.insertions_since_build},
                            {"ts_inserted_at", state.gpe.generated_at}});
        for (const auto &g : state.gpe.guards) {
            ++guard_id;
            r_gg.push_back(json{{"id", guard_id},
                                {"guard_expression_id", state.id},
                                {"cond", json::parse(condition_to_json_string(g.guard))},
                                {"estimated_cardinality", g.estimated_cardinality},
                                {"strategy", partition_strategy_name(g.strategy)}});
            for (const auto &p : g.partition)
                r_gp.push_back(json{{"guard_id", guard_id}, {"policy_id", p.id}});
        }
    }

    doc["policies"] = std::move(r_p);
    doc["object_conditions"] = std::move(r_oc);
    doc["guarded_expressions"] = std::move(r_ge);
    doc["guards"] = std::move(r_gg);
    doc["guard_policies"] = std::move(r_gp);

    std::ofstream out(path);
    if (!out) throw StoreError("cannot write " + path);
    out << doc.dump(2) << '\n';
}

PolicyStore PolicyStore::load(const std::string &path, GroupDirectory groups) {
    std::ifstream in(path);
    if (!in) throw StoreError("cannot open " + path);
    json doc = json::parse(in);
    if (doc.value("schema_version", 0) != 1)
        throw StoreError("unsupported store schema_version");

    PolicyStore store(std::move(groups));
    store.event_counter_ = doc.value("event_counter", int64_t{0});
    store.next_gpe_id_ = doc.value("next_gpe_id", int64_t{1});

    std::map<int64_t, std::vector<ObjectCondition>> conds;
    for (const auto &row : doc.at("object_conditions"))
        conds[row.at("policy_id").get<int64_t>()].push_back(
            condition_from_json_string(row.at("cond").dump()));
    for (const auto &row : doc.at("policies")) {
        Policy p;
        p.id = row.at("id").get<int64_t>();
        p.owner = row.at("owner").get<std::string>();
        p.querier = row.at("querier").get<std::string>();
        p.relation = row.at("associated_table").get<std::string>();
        p.purpose = row.at("purpose").get<std::string>();
        p.inserted_at = row.at("ts_inserted_at").get<int64_t>();
        p.object_conditions = std::move(conds[p.id]);
        p.check_valid();
        store.policies_.emplace(p.id, std::move(p));
    }

    std::map<int64_t, GpeState> by_id;
    for (const auto &row : doc.at("guarded_expressions")) {
        GpeState state;
        state.id = row.at("id").get<int64_t>();
        state.outdated = row.at("outdated").get<bool>();
        state.force_rebuild = row.value("force_rebuild", false);
        state.insertions_since_build = row.at("insertions_since_build").get<int64_t>();
        state.gpe.querier = row.at("querier").get<std::string>();
        state.gpe.relation = row.at("associated_table").get<std::string>();
        state.gpe.purpose = row.at("purpose").get<std::string>();
        state.gpe.generated_at = row.at("ts_inserted_at").get<int64_t>();
        state.gpe.outdated = state.outdated;
        by_id.emplace(state.id, std::move(state));
    }
    std::map<int64_t, GuardedExpression> guards;
    std::map<int64_t, int64_t> guard_to_ge;
    std::vector<int64_t> guard_order;
    for (const auto &row : doc.at("guards")) {
        GuardedExpression g;
        g.guard = condition_from_json_string(row.at("cond").dump());
        auto r = g.guard.as_range();
        if (!r) throw StoreError("stored guard is not a range predicate");
        g.guard_range = *r;
        g.estimated_cardinality = row.value("estimated_cardinality", 0.0);
        g.strategy = row.value("strategy", std::string("Inline")) == "Delta"
                         ? PartitionStrategy::Delta
                         : PartitionStrategy::Inline;
        int64_t gid = row.at("id").get<int64_t>();
        guard_to_ge[gid] = row.at("guard_expression_id").get<int64_t>();
        guards.emplace(gid, std::move(g));
        guard_order.push_back(gid);
    }
    for (const auto &row : doc.at("guard_policies")) {
        int64_t gid = row.at("guard_id").get<int64_t>();
        int64_t pid = row.at("policy_id").get<int64_t>();
        auto pit = store.policies_.find(pid);
        if (pit == store.policies_.end())
            throw StoreError("guard references unknown policy " + std::to_string(pid));
        guards.at(gid).partition.push_back(pit->second);
    }
    for (int64_t gid : guard_order)
        by_id.at(guard_to_ge.at(gid)).gpe.guards.push_back(std::move(guards.at(gid)));
    for (auto &[id, state] : by_id) {
        Key key{state.gpe.querier, state.gpe.purpose, state.gpe.relation};
        store.expressions_.emplace(key, std::move(state));
    }
    return store;
}

} // namespace sieve
