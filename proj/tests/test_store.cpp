#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "sieve/exec.hpp"
#include "sieve/store.hpp"

#include <filesystem>
#include <fstream>
#include <random>

#include "json.hpp"

using namespace sieve;

namespace {

Schema wifi_schema() {
    return Schema({{"wifiAP", ValueKind::Int},
                   {"owner", ValueKind::String},
                   {"ts-time", ValueKind::Time},
                   {"ts-date", ValueKind::Date}});
}

Relation synth_relation(size_t n, uint32_t seed) {
    std::mt19937 rng(seed);
    std::uniform_int_distribution<int> owner_d(0, 39), ap_d(1000, 1031), sec_d(0, 86399),
        day_d(18260, 18290);
    std::vector<TupleRow> rows;
    for (size_t k = 0; k < n; ++k) {
        TupleRow t;
        t.values.resize(4);
        t.values[0] = AttrValue::integer(ap_d(rng));
        t.values[1] = AttrValue::str("u" + std::to_string(owner_d(rng)));
        t.values[2] = AttrValue::time_seconds(sec_d(rng));
        t.values[3] = AttrValue::date_days(day_d(rng));
        rows.push_back(std::move(t));
    }
    return Relation::load("W", wifi_schema(), rows, {"wifiAP", "ts-time", "ts-date"});
}

Policy mk_policy(int64_t id, const std::string &owner, const std::string &querier,
                 const std::string &purpose, int ap = -1) {
    Policy p;
    p.id = id;
    p.relation = "W";
    p.owner = owner;
    p.querier = querier;
    p.purpose = purpose;
    p.object_conditions = {ObjectCondition::eq("owner", AttrValue::str(owner))};
    if (ap >= 0)
        p.object_conditions.push_back(ObjectCondition::eq("wifiAP", AttrValue::integer(ap)));
    return p;
}

Policy johns_classroom(int64_t id) {
    Policy p = mk_policy(id, "John", "Prof.Smith", "Attendance");
    p.object_conditions.push_back(
        ObjectCondition::ge("ts-time", AttrValue::parse_time("09:00")));
    p.object_conditions.push_back(
        ObjectCondition::le("ts-time", AttrValue::parse_time("10:00")));
    p.object_conditions.push_back(ObjectCondition::eq("wifiAP", AttrValue::integer(1200)));
    return p;
}

MaintenanceParams unit_mp() {
    MaintenanceParams mp;
    mp.guard_gen_cost = 1;
    mp.policy_rate = 1;
    mp.query_rate = 1;
    mp.guard_cardinality = 1;
    return mp; // optimal interval = 2
}

} // namespace

TEST_CASE("insert writes the relational rows and flips outdated flags") {
    auto rel = synth_relation(2000, 1);
    auto stats = HistogramStats::build(rel);
    CostParams cp;
    cp.c_e = 1;
    cp.c_r = 2;

    PolicyStore store;
    store.insert_policy(johns_classroom(1));

    auto tmp = std::filesystem::temp_directory_path() / "sieve_store_one.json";
    store.save(tmp.string());
    {
        std::ifstream in(tmp);
        auto doc = nlohmann::json::parse(in);
        CHECK(doc.at("schema_version") == 1);
        CHECK(doc.at("policies").size() == 1);
        CHECK(doc.at("object_conditions").size() == 4); // owner, two time bounds, wifiAP
        CHECK(doc.at("guarded_expressions").empty());
    }
    std::filesystem::remove(tmp);

    // duplicate ids are rejected
    CHECK_THROWS_AS(store.insert_policy(johns_classroom(1)), StoreError);

    // no guarded expression yet: nothing to flip
    store.insert_policy(johns_classroom(2));
    CHECK(store.expression_count() == 0);

    // build one, then inserts for the same metadata mark it outdated
    QueryMetadata m{"Prof.Smith", "Attendance", {}};
    auto mp = unit_mp();
    store.get_or_rebuild(m, "W", rel.indexed_attrs(), cp, stats, mp);
    const auto *state = store.find_expression("Prof.Smith", "Attendance", "W");
    REQUIRE(state);
    CHECK_FALSE(state->outdated);
    CHECK(state->insertions_since_build == 0);

    store.insert_policy(johns_classroom(3));
    CHECK(state->outdated);
    CHECK(state->insertions_since_build == 1);

    // an unrelated purpose does not flip it back... nor increments
    store.insert_policy(mk_policy(4, "John", "Prof.Smith", "Commercial"));
    CHECK(state->insertions_since_build == 1);

    // a group querier containing Prof.Smith also applies
    store.groups().add_member("faculty", "Prof.Smith");
    store.insert_policy(mk_policy(5, "Mary", "faculty", "Attendance"));
    CHECK(state->insertions_since_build == 2);
}

TEST_CASE("store round-trips through save/load") {
    auto rel = synth_relation(3000, 2);
    auto stats = HistogramStats::build(rel);
    CostParams cp;
    GroupDirectory dir;
    for (int u = 0; u < 40; ++u) dir.add_member("g" + std::to_string(u % 5), "u" + std::to_string(u));

    PolicyStore store(dir);
    std::mt19937 rng(3);
    for (int k = 1; k <= 1000; ++k) {
        Policy p = mk_policy(k, "u" + std::to_string(rng() % 40),
                             rng() % 2 ? "u" + std::to_string(rng() % 40)
                                       : "g" + std::to_string(rng() % 5),
                             rng() % 3 ? "analytics" : "safety",
                             rng() % 2 ? 1000 + static_cast<int>(rng() % 32) : -1);
        if (rng() % 3 == 0)
            p.object_conditions.push_back(ObjectCondition::between(
                "ts-time", AttrValue::time_seconds(static_cast<int64_t>(rng() % 40000)), true,
                AttrValue::time_seconds(static_cast<int64_t>(40000 + rng() % 40000)),
                rng() % 2 == 0));
        store.insert_policy(std::move(p));
    }
    auto mp = unit_mp();
    for (const char *u : {"u1", "u7", "u20"}) {
        QueryMetadata m = QueryMetadata::resolve(u, "analytics", dir);
        store.get_or_rebuild(m, "W", rel.indexed_attrs(), cp, stats, mp);
    }

    auto tmp = std::filesystem::temp_directory_path() / "sieve_store_rt.json";
    store.save(tmp.string());
    PolicyStore back = PolicyStore::load(tmp.string(), dir);
    std::filesystem::remove(tmp);

    REQUIRE(back.policies().size() == store.policies().size());
    for (const auto &[id, p] : store.policies()) {
        const Policy &q = back.policies().at(id);
        CHECK(q.owner == p.owner);
        CHECK(q.querier == p.querier);
        CHECK(q.purpose == p.purpose);
        CHECK(q.inserted_at == p.inserted_at);
        CHECK(q.object_conditions.size() == p.object_conditions.size());
    }
    CHECK(back.expression_count() == store.expression_count());
    for (const char *u : {"u1", "u7", "u20"}) {
        const auto *a = store.find_expression(u, "analytics", "W");
        const auto *b = back.find_expression(u, "analytics", "W");
        REQUIRE(a);
        REQUIRE(b);
        CHECK(a->gpe.guards.size() == b->gpe.guards.size());
        CHECK(a->outdated == b->outdated);
        CHECK(a->insertions_since_build == b->insertions_since_build);
        for (size_t k = 0; k < a->gpe.guards.size(); ++k) {
            CHECK(range_equal(a->gpe.guards[k].guard_range, b->gpe.guards[k].guard_range));
            CHECK(a->gpe.guards[k].partition.size() == b->gpe.guards[k].partition.size());
        }
    }
}

TEST_CASE("get_or_rebuild: thresholds, staleness, soundness") {
    auto rel = synth_relation(5000, 4);
    Database db;
    db.put(rel);
    auto stats = HistogramStats::build(rel);
    CostParams cp;
    auto mp = unit_mp(); // interval = 2

    PolicyStore store;
    QueryMetadata m{"q", "p", {}};
    for (int k = 1; k <= 5; ++k)
        store.insert_policy(mk_policy(k, "u" + std::to_string(k), "q", "p"));

    auto g0 = store.get_or_rebuild(m, "W", rel.indexed_attrs(), cp, stats, mp);
    CHECK(store.rebuild_count() == 1);
    CHECK(g0.policy_count() == 5);

    // fresh: returned unchanged, no rebuild
    auto g1 = store.get_or_rebuild(m, "W", rel.indexed_attrs(), cp, stats, mp);
    CHECK(store.rebuild_count() == 1);
    CHECK(g1.guards.size() == g0.guards.size());

    // one insertion: below the interval, stale expression is augmented
    store.insert_policy(mk_policy(6, "u6", "q", "p"));
    auto g2 = store.get_or_rebuild(m, "W", rel.indexed_attrs(), cp, stats, mp);
    CHECK(store.rebuild_count() == 1); // no rebuild yet
    CHECK(g2.outdated);
    CHECK(g2.policy_count() == 6); // augmented with the new policy
    const auto *state = store.find_expression("q", "p", "W");
    REQUIRE(state);
    CHECK(state->outdated);

    // second insertion reaches the interval: rebuild occurs
    store.insert_policy(mk_policy(7, "u7", "q", "p"));
    auto g3 = store.get_or_rebuild(m, "W", rel.indexed_attrs(), cp, stats, mp);
    CHECK(store.rebuild_count() == 2);
    CHECK_FALSE(g3.outdated);
    CHECK(g3.policy_count() == 7);
    CHECK(state->insertions_since_build == 0); // outdated=false implies counter reset

    // removal forces an immediate rebuild
    store.remove_policy(7);
    auto g4 = store.get_or_rebuild(m, "W", rel.indexed_attrs(), cp, stats, mp);
    CHECK(store.rebuild_count() == 3);
    CHECK(g4.policy_count() == 6);
}

TEST_CASE("mixed insert/query stream: effective policy set always current") {
    auto rel = synth_relation(4000, 5);
    Database db;
    db.put(rel);
    auto stats = HistogramStats::build(rel);
    CostParams cp;
    MaintenanceParams mp;
    mp.guard_gen_cost = 400; // interval = 40: plenty of stale serving
    mp.policy_rate = 1;
    mp.query_rate = 1;
    mp.guard_cardinality = 1;

    PolicyStore store;
    QueryMetadata m{"q", "p", {}};
    std::mt19937 rng(6);

    int64_t next_id = 1;
    for (int k = 0; k < 10; ++k)
        store.insert_policy(mk_policy(next_id++, "u" + std::to_string(rng() % 40), "q", "p",
                                      1000 + static_cast<int>(rng() % 32)));

    for (int step = 0; step < 120; ++step) {
        if (rng() % 2 == 0) {
            store.insert_policy(mk_policy(next_id++, "u" + std::to_string(rng() % 40), "q", "p",
                                          rng() % 2 ? 1000 + static_cast<int>(rng() % 32) : -1));
            if (rng() % 20 == 0) {
                int64_t victim = 1 + static_cast<int64_t>(rng() % static_cast<uint64_t>(next_id - 1));
                if (store.policies().count(victim)) store.remove_policy(victim);
            }
        } else {
            auto gpe = store.get_or_rebuild(m, "W", rel.indexed_attrs(), cp, stats, mp);
            // effective policy ids = current metadata-filtered set, exactly once
            std::set<int64_t> effective;
            for (const auto &g : gpe.guards)
                for (const auto &p : g.partition) {
                    CHECK(effective.insert(p.id).second); // disjoint partitions
                }
            std::set<int64_t> expected;
            for (const auto &p : store.policies_for(m, "W")) expected.insert(p.id);
            CHECK(effective == expected);

            // stale-but-sound serving never changes results
            PreparedGpe prepared(gpe, rel.schema(), nullptr);
            std::vector<PartitionStrategy> per_guard(gpe.guards.size(),
                                                     PartitionStrategy::Inline);
            auto expect_rows = brute_force_filter(rel, store.policies_for(m, "W"), m);
            std::vector<int64_t> got;
            ExecMetrics metrics;
            for (const auto &t : rel.rows())
                if (prepared.eval_tuple(t, m, {}, per_guard, metrics)) got.push_back(t.id);
            CHECK(got == expect_rows);
        }
    }
    // removals in the stream may skip ids; ensure at least some rebuilds and
    // some stale serves happened
    CHECK(store.rebuild_count() >= 2);
}
