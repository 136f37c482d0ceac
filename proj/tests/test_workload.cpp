#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "sieve/exec.hpp"
#include "sieve/workload.hpp"

#include <filesystem>
#include <fstream>

using namespace sieve;

namespace {

WorkloadConfig small_cfg() {
    WorkloadConfig cfg;
    cfg.seed = 11;
    cfg.users = 150;
    cfg.aps = 32;
    cfg.days = 12;
    cfg.groups = 6;
    cfg.events_per_user_day = 6.0;
    return cfg;
}

std::string file_bytes(const std::filesystem::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("generation is deterministic under the seed") {
    auto cfg = small_cfg();
    auto w1 = generate_dataset(cfg);
    auto w2 = generate_dataset(cfg);

    auto tmp = std::filesystem::temp_directory_path();
    w1.events.write_csv((tmp / "wl_a.csv").string());
    w2.events.write_csv((tmp / "wl_b.csv").string());
    CHECK(file_bytes(tmp / "wl_a.csv") == file_bytes(tmp / "wl_b.csv"));
    std::filesystem::remove(tmp / "wl_a.csv");
    std::filesystem::remove(tmp / "wl_b.csv");

    auto p1 = generate_policies(cfg, w1);
    auto p2 = generate_policies(cfg, w2);
    REQUIRE(p1.size() == p2.size());
    for (size_t k = 0; k < p1.size(); ++k) {
        CHECK(p1[k].owner == p2[k].owner);
        CHECK(p1[k].querier == p2[k].querier);
        CHECK(p1[k].object_conditions.size() == p2[k].object_conditions.size());
    }

    // different seed changes the data
    auto cfg2 = cfg;
    cfg2.seed = 12;
    auto w3 = generate_dataset(cfg2);
    CHECK(w3.events.row_count() != w1.events.row_count());
}

TEST_CASE("profile mix and event volume") {
    auto cfg = small_cfg();
    cfg.profile_mix = {1, 0, 0, 0, 0};
    auto w = generate_dataset(cfg);
    for (const auto &u : w.users) CHECK(u.profile == Profile::Visitor);

    cfg = small_cfg();
    cfg.users = 400;
    cfg.days = 20;
    auto w2 = generate_dataset(cfg);
    double expected = cfg.users * cfg.days * cfg.events_per_user_day;
    CHECK(static_cast<double>(w2.events.row_count()) > 0.95 * expected);
    CHECK(static_cast<double>(w2.events.row_count()) < 1.05 * expected);
}

TEST_CASE("policy corpus sizes") {
    // 200 users, 60% unconcerned with 2 defaults, 40% advanced with 4 each
    WorkloadConfig cfg = small_cfg();
    cfg.users = 200;
    cfg.unconcerned_fraction = 0.6;
    cfg.default_policies_per_user = 2;
    cfg.advanced_policies_per_user = 4.0;
    cfg.advanced_count_fixed = true;
    auto w = generate_dataset(cfg);
    auto ps = generate_policies(cfg, w);
    CHECK(ps.size() == 560);

    // all unconcerned: exactly two per user
    cfg.unconcerned_fraction = 1.0;
    auto w2 = generate_dataset(cfg);
    CHECK(generate_policies(cfg, w2).size() == 2u * 200u);

    // every policy passes the model invariants
    for (const auto &p : ps) CHECK_NOTHROW(p.check_valid());
    for (const auto &p : ps) {
        for (const auto &oc : p.object_conditions)
            CHECK(w.events.schema().has(oc.attr));
    }

    // poisson mode: empirical mean within 10% over 30 seeds
    cfg.unconcerned_fraction = 0.0;
    cfg.advanced_count_fixed = false;
    cfg.users = 60;
    double total = 0;
    int advanced_users = 0;
    for (uint64_t seed = 1; seed <= 30; ++seed) {
        cfg.seed = seed;
        auto ww = generate_dataset(cfg);
        total += static_cast<double>(generate_policies(cfg, ww).size());
        advanced_users += cfg.users;
    }
    double mean = total / advanced_users;
    CHECK(mean > 0.9 * cfg.advanced_policies_per_user);
    CHECK(mean < 1.1 * cfg.advanced_policies_per_user);
}

TEST_CASE("queries land in their selectivity bands") {
    auto cfg = small_cfg();
    auto w = generate_dataset(cfg);
    Database db = w.database();

    for (auto t : {QueryTemplate::Q1, QueryTemplate::Q2, QueryTemplate::Q3}) {
        for (auto c : {SelectivityClass::Low, SelectivityClass::Mid, SelectivityClass::High}) {
            auto qs = generate_queries(t, c, cfg, w, 3);
            REQUIRE(qs.size() == 3);
            for (const auto &q : qs) {
                double frac = static_cast<double>(apply_query_filter(db, q).size()) /
                              static_cast<double>(w.events.row_count());
                switch (c) {
                case SelectivityClass::Low:
                    CHECK(frac <= kLowBand);
                    CHECK(frac > 0);
                    break;
                case SelectivityClass::Mid:
                    CHECK(frac > kLowBand);
                    CHECK(frac <= kMidBand);
                    break;
                case SelectivityClass::High:
                    CHECK(frac > kMidBand);
                    break;
                }
                // queriers come from non-visitor profiles
                bool found = false;
                for (const auto &u : w.users)
                    if (u.id == q.metadata.querier) {
                        CHECK(u.profile != Profile::Visitor);
                        found = true;
                    }
                CHECK(found);
            }
        }
    }

    // Q1 shape: IN over APs plus two BETWEEN windows
    auto q1 = generate_queries(QueryTemplate::Q1, SelectivityClass::Mid, cfg, w, 1)[0];
    REQUIRE(q1.where.size() == 3);
    CHECK(q1.where[0].attr == "wifiAP");
    CHECK(q1.where[0].op == CompareOp::In);
    CHECK(q1.where[1].op == CompareOp::Between);
    CHECK(q1.where[2].op == CompareOp::Between);
    CHECK_FALSE(q1.join.has_value());

    // Q3 shape: membership join with aggregation
    auto q3 = generate_queries(QueryTemplate::Q3, SelectivityClass::High, cfg, w, 1)[0];
    REQUIRE(q3.join.has_value());
    CHECK(q3.join->relation == "membership");
    CHECK(q3.agg.kind == Aggregation::CountDistinct);
}

TEST_CASE("config file round trip") {
    auto cfg = small_cfg();
    cfg.profile_mix = {0.5, 0.2, 0.15, 0.1, 0.05};
    cfg.mall_preset = true;
    auto tmp = std::filesystem::temp_directory_path() / "sieve_wl.toml";
    cfg.write_file(tmp.string());
    auto back = WorkloadConfig::from_file(tmp.string());
    std::filesystem::remove(tmp);
    CHECK(back.seed == cfg.seed);
    CHECK(back.users == cfg.users);
    CHECK(back.profile_mix == cfg.profile_mix);
    CHECK(back.mall_preset == cfg.mall_preset);
    CHECK(back.advanced_policies_per_user == cfg.advanced_policies_per_user);

    CHECK_THROWS(WorkloadConfig::from_file("/nonexistent/path.toml"));

    WorkloadConfig bad = cfg;
    bad.profile_mix = {0.5, 0.5, 0.5, 0, 0};
    CHECK_THROWS(bad.validate());
}
