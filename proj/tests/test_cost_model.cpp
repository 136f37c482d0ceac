#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "sieve/bench.hpp"
#include "sieve/calibrate.hpp"
#include "sieve/exec.hpp"
#include "sieve/plan.hpp"

#include <chrono>
#include <random>

using namespace sieve;

namespace {

Schema wifi_schema() {
    return Schema({{"wifiAP", ValueKind::Int},
                   {"owner", ValueKind::String},
                   {"ts-time", ValueKind::Time},
                   {"ts-date", ValueKind::Date}});
}

Relation synth_relation(size_t n, uint32_t seed, int owners = 100, int aps = 50) {
    std::mt19937 rng(seed);
    std::uniform_int_distribution<int> owner_d(0, owners - 1), ap_d(1000, 1000 + aps - 1),
        sec_d(0, 86399), day_d(18260, 18350);
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

Policy owner_policy(int64_t id, const std::string &owner, bool with_extras, std::mt19937 &rng) {
    Policy p;
    p.id = id;
    p.relation = "W";
    p.owner = owner;
    p.querier = "q";
    p.purpose = "p";
    p.object_conditions = {ObjectCondition::eq("owner", AttrValue::str(owner))};
    if (with_extras) {
        int h = static_cast<int>(rng() % 18);
        p.object_conditions.push_back(
            ObjectCondition::between("ts-time", AttrValue::time_seconds(h * 3600), true,
                                     AttrValue::time_seconds((h + 3) * 3600), true));
        if (rng() % 2)
            p.object_conditions.push_back(ObjectCondition::eq(
                "wifiAP", AttrValue::integer(1000 + static_cast<int>(rng() % 50))));
    }
    return p;
}

std::vector<Policy> sample_policies(size_t n, uint32_t seed, int owners = 100) {
    std::mt19937 rng(seed);
    std::vector<Policy> out;
    for (size_t k = 0; k < n; ++k)
        out.push_back(owner_policy(static_cast<int64_t>(k + 1),
                                   "u" + std::to_string(rng() % static_cast<uint32_t>(owners)),
                                   true, rng));
    return out;
}

} // namespace

TEST_CASE("calibrate: repeated runs stay within 25% relative spread") {
    auto rel = synth_relation(12000, 1);
    auto ps = sample_policies(64, 2);
    CalibrationOptions opts;
    opts.repeats = 5;
    CostParams a = calibrate(rel, ps, nullptr, opts);
    CostParams b = calibrate(rel, ps, nullptr, opts);

    auto spread = [](double x, double y) { return std::abs(x - y) / std::max(x, y); };
    CHECK(a.c_r > 0);
    CHECK(a.c_e > 0);
    CHECK(a.alpha > 0);
    CHECK(a.alpha <= 1.0);
    CHECK(a.udf_inv > 0);
    CHECK(a.udf_exec > 0);
    CHECK(spread(a.c_r, b.c_r) < 0.25);
    CHECK(spread(a.c_e, b.c_e) < 0.25);
    CHECK(spread(a.alpha, b.alpha) < 0.25);

    // preconditions
    auto small = synth_relation(500, 3);
    CHECK_THROWS_AS(calibrate(small, ps, nullptr, opts), CalibrationError);
    CHECK_THROWS_AS(calibrate(rel, std::vector<Policy>(ps.begin(), ps.begin() + 3), nullptr, opts),
                    CalibrationError);
}

TEST_CASE("alpha instrumentation at the extremes") {
    // all tuples owned by u0
    Schema schema = wifi_schema();
    std::vector<TupleRow> rows;
    for (int k = 0; k < 1000; ++k) {
        TupleRow t;
        t.values = {AttrValue::integer(1000), AttrValue::str("u0"), AttrValue::time_seconds(3600),
                    AttrValue::date_days(18260)};
        rows.push_back(std::move(t));
    }
    auto rel = Relation::load("W", schema, rows, {});

    // first policy matches everything: alpha = 1 / |ps|
    std::mt19937 rng(4);
    std::vector<Policy> first_hits;
    first_hits.push_back(owner_policy(1, "u0", false, rng));
    for (int k = 2; k <= 10; ++k) first_hits.push_back(owner_policy(k, "u_none", false, rng));
    int64_t checks = 0;
    for (const auto &t : rel.rows())
        checks += eval_policy_expression(first_hits, schema, t).checks_performed;
    double alpha = static_cast<double>(checks) /
                   (static_cast<double>(rel.row_count()) * static_cast<double>(first_hits.size()));
    CHECK(alpha == doctest::Approx(1.0 / 10.0));

    // no policy ever matches: alpha = 1
    std::vector<Policy> all_false;
    for (int k = 1; k <= 10; ++k) all_false.push_back(owner_policy(k, "u_nobody", false, rng));
    checks = 0;
    for (const auto &t : rel.rows())
        checks += eval_policy_expression(all_false, schema, t).checks_performed;
    alpha = static_cast<double>(checks) /
            (static_cast<double>(rel.row_count()) * static_cast<double>(all_false.size()));
    CHECK(alpha == doctest::Approx(1.0));
}

TEST_CASE("partition strategy: boundaries and monotonicity") {
    CostParams cp;
    cp.c_e = 0.05;
    cp.alpha = 1.0;
    cp.udf_inv = 0.2;
    cp.udf_exec = 0.3;
    // crossover at (0.2 + 0.3) / 0.05 = 10 policies (one per owner)

    auto partition_of = [](size_t n) {
        GuardedExpression g;
        g.guard = ObjectCondition::eq("wifiAP", AttrValue::integer(1000));
        g.guard_range = *g.guard.as_range();
        std::mt19937 rng(5);
        for (size_t k = 0; k < n; ++k)
            g.partition.push_back(owner_policy(static_cast<int64_t>(k), "u" + std::to_string(k),
                                               false, rng));
        return g;
    };

    CHECK(choose_partition_strategy(partition_of(1), cp) == PartitionStrategy::Inline);
    CHECK(choose_partition_strategy(partition_of(200), cp) == PartitionStrategy::Delta);

    bool seen_delta = false;
    for (size_t n = 1; n <= 64; ++n) {
        auto s = choose_partition_strategy(partition_of(n), cp);
        if (seen_delta) CHECK(s == PartitionStrategy::Delta); // monotone, unique crossover
        if (s == PartitionStrategy::Delta) seen_delta = true;
    }
    CHECK(seen_delta);
}

TEST_CASE("partition strategy matches measured costs away from the crossover") {
    // the model prices a partition for tuples that reached its guard, so the
    // measurement stream holds tuples owned by partition owners (one policy
    // per owner, never allowing: the short-circuit profile matches alpha ~ 1)
    auto rel = synth_relation(20000, 6, 2000);
    auto cal_ps = sample_policies(64, 7, 2000);
    CostParams cp = calibrate(rel, cal_ps);
    QueryMetadata m{"q", "p", {}};
    EvalContext ctx;

    auto make_partition = [&](size_t n) {
        std::mt19937 rng(8);
        std::vector<Policy> ps;
        for (size_t k = 0; k < n; ++k) {
            Policy p = owner_policy(static_cast<int64_t>(k + 1), "u" + std::to_string(k), false,
                                    rng);
            p.object_conditions.push_back(
                ObjectCondition::eq("wifiAP", AttrValue::integer(99999)));
            ps.push_back(std::move(p));
        }
        return ps;
    };
    auto stream_for = [&](size_t n) {
        std::vector<const TupleRow *> rows;
        for (const auto &t : rel.rows()) {
            const std::string &o = t.values[1]->s;
            int idx = std::stoi(o.substr(1));
            if (idx < static_cast<int>(n)) rows.push_back(&t);
        }
        // owners 0..n-1 may be sparse for small n; replicate to stabilize timing
        while (rows.size() < 4000 && !rows.empty())
            rows.insert(rows.end(), rows.begin(),
                        rows.begin() + static_cast<long>(std::min(rows.size(),
                                                                  4000 - rows.size())));
        return rows;
    };

    auto measure = [&](size_t n, bool use_delta) {
        auto ps = make_partition(n);
        auto stream = stream_for(n);
        REQUIRE(!stream.empty());
        double best = 1e300;
        DeltaEvaluator ev(ps, rel.schema());
        CompiledPolicySet flat(ps, rel.schema());
        for (int rep = 0; rep < 5; ++rep) {
            auto t0 = std::chrono::steady_clock::now();
            volatile int64_t acc = 0;
            if (use_delta) {
                for (const TupleRow *t : stream) acc += ev.eval(m, *t, ctx).allowed;
            } else {
                for (const TupleRow *t : stream) acc += flat.eval_expression(*t, ctx).allowed;
            }
            double us = std::chrono::duration<double, std::micro>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
            best = std::min(best, us / static_cast<double>(stream.size()));
        }
        return best;
    };

    // measured crossover: smallest n where delta wins
    std::vector<size_t> sweep = {1, 2, 4, 8, 16, 32, 64, 128, 256};
    double measured_crossover = 0;
    for (size_t n : sweep)
        if (measure(n, true) < measure(n, false)) {
            measured_crossover = static_cast<double>(n);
            break;
        }
    REQUIRE(measured_crossover > 0);
    MESSAGE("measured inline/delta crossover near |partition| = ", measured_crossover);

    for (size_t n : sweep) {
        if (static_cast<double>(n) > 0.8 * measured_crossover &&
            static_cast<double>(n) < 1.2 * measured_crossover)
            continue;
        GuardedExpression g;
        g.guard = ObjectCondition::eq("wifiAP", AttrValue::integer(1000));
        g.guard_range = *g.guard.as_range();
        g.partition = make_partition(n);
        auto chosen = choose_partition_strategy(g, cp);
        double t_delta = measure(n, true), t_inline = measure(n, false);
        // sizes whose measured winner is inside timing noise sit at the
        // crossover for this run; only clear-cut sizes are asserted
        if (std::abs(t_delta - t_inline) < 0.15 * std::max(t_delta, t_inline)) continue;
        bool delta_faster = t_delta < t_inline;
        CHECK(chosen == (delta_faster ? PartitionStrategy::Delta : PartitionStrategy::Inline));
    }
}

TEST_CASE("scan strategy: estimates and boundary picks") {
    auto rel = synth_relation(20000, 10);
    auto stats = HistogramStats::build(rel);
    CostParams cp;
    cp.c_r = 1.0;
    QueryMetadata m{"q", "p", {}};

    auto gpe_with_sel = [&](double frac, size_t guards) {
        GuardedPolicyExpression gpe;
        gpe.querier = "q";
        gpe.purpose = "p";
        gpe.relation = "W";
        std::mt19937 rng(11);
        int span = std::max<int>(1, static_cast<int>(86400.0 * frac / static_cast<double>(guards)));
        for (size_t k = 0; k < guards; ++k) {
            GuardedExpression g;
            int lo = static_cast<int>(rng() % 80000);
            g.guard = ObjectCondition::between("ts-time", AttrValue::time_seconds(lo), true,
                                               AttrValue::time_seconds(std::min(86399, lo + span)),
                                               true);
            g.guard_range = *g.guard.as_range();
            g.estimated_cardinality = stats.estimate_range("ts-time", g.guard_range);
            g.partition.push_back(owner_policy(static_cast<int64_t>(k + 1),
                                               "u" + std::to_string(k), false, rng));
            gpe.guards.push_back(std::move(g));
        }
        return gpe;
    };

    // selective query predicate, bulky guards: IndexQuery
    QuerySpec q;
    q.relation = "W";
    q.metadata = m;
    q.where = {ObjectCondition::eq("wifiAP", AttrValue::integer(1005))};
    auto info = explain(q, stats, rel);
    REQUIRE(info.index_scan);
    auto gpe_fat = gpe_with_sel(0.5, 8);
    auto plan = choose_scan_strategy(q, gpe_fat, cp, stats, info);
    CHECK(plan.scan == ScanStrategy::IndexQuery);
    CHECK(plan.estimated.index_query ==
          doctest::Approx(info.selectivity_fraction * 20000 * cp.c_r));

    // query predicate above the crossover fraction, slim guards: IndexGuards
    QuerySpec q2;
    q2.relation = "W";
    q2.metadata = m;
    q2.where = {ObjectCondition::between("ts-time", AttrValue::parse_time("06:00"), true,
                                         AttrValue::parse_time("21:00"), true)};
    auto info2 = explain(q2, stats, rel);
    auto gpe_slim = gpe_with_sel(0.02, 6);
    auto plan2 = choose_scan_strategy(q2, gpe_slim, cp, stats, info2);
    CHECK(plan2.scan == ScanStrategy::IndexGuards);
    double expect_ig = 0;
    for (const auto &g : gpe_slim.guards)
        expect_ig += stats.estimate_range("ts-time", g.guard_range) * cp.c_r;
    CHECK(plan2.estimated.index_guards == doctest::Approx(expect_ig));

    // nothing indexed on the query and guards cover the relation: LinearScan
    QuerySpec q3;
    q3.relation = "W";
    q3.metadata = m;
    auto info3 = explain(q3, stats, rel);
    CHECK_FALSE(info3.index_scan);
    auto gpe_cover = gpe_with_sel(0.98, 4);
    auto plan3 = choose_scan_strategy(q3, gpe_cover, cp, stats, info3);
    CHECK(plan3.scan == ScanStrategy::LinearScan);

    // estimates are non-negative
    CHECK(plan3.estimated.linear_scan >= 0);
    CHECK(plan3.estimated.index_guards >= 0);
}

TEST_CASE("scan choice matches measured-best in at least 80% of random cases") {
    auto rel = synth_relation(30000, 12, 300);
    Database db;
    db.put(rel);
    auto stats = HistogramStats::build(rel);
    auto cal_ps = sample_policies(64, 13, 300);
    CostParams cp = calibrate(rel, cal_ps);
    std::mt19937 rng(14);

    int matched = 0, total = 0;
    while (total < 50) {
        QueryMetadata m{"q", "p", {}};
        size_t n_pol = 4 + rng() % 40;
        std::vector<Policy> ps;
        for (size_t k = 0; k < n_pol; ++k)
            ps.push_back(owner_policy(static_cast<int64_t>(k + 1),
                                      "u" + std::to_string(rng() % 300), true, rng));
        auto gpe = build_guarded_expression(ps, m, "W", rel.indexed_attrs(), cp, stats);
        if (gpe.guards.empty()) continue;

        QuerySpec q;
        q.relation = "W";
        q.metadata = m;
        int width = 1 + static_cast<int>(rng() % 20);
        int lo = 1000 + static_cast<int>(rng() % 30);
        q.where = {ObjectCondition::between("wifiAP", AttrValue::integer(lo), true,
                                            AttrValue::integer(lo + width), true)};

        auto info = explain(q, stats, rel);
        auto plan = choose_scan_strategy(q, gpe, cp, stats, info);

        // measure all three
        double best_ms = 1e300, chosen_ms = 0;
        for (auto scan :
             {ScanStrategy::LinearScan, ScanStrategy::IndexQuery, ScanStrategy::IndexGuards}) {
            StrategyPlan p;
            p.scan = scan;
            p.index_query_predicate = info.predicate_index;
            p.per_guard.assign(gpe.guards.size(), PartitionStrategy::Inline);
            double ms = 1e300;
            if (scan == ScanStrategy::IndexQuery && !info.index_scan) continue;
            for (int rep = 0; rep < 3; ++rep) {
                auto res = execute(db, q, gpe, p);
                ms = std::min(ms, res.metrics.wall_time_us / 1000.0);
            }
            best_ms = std::min(best_ms, ms);
            if (scan == plan.scan) chosen_ms = ms;
        }
        if (chosen_ms <= 1.25 * best_ms) ++matched;
        ++total;
    }
    CHECK(matched >= 40); // >= 80%
}
