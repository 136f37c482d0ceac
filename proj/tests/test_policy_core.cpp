#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "sieve/eval.hpp"

#include <algorithm>
#include <random>

using namespace sieve;

namespace {

Schema wifi_schema() {
    return Schema({{"wifiAP", ValueKind::Int},
                   {"owner", ValueKind::String},
                   {"ts-time", ValueKind::Time},
                   {"ts-date", ValueKind::Date}});
}

TupleRow make_row(std::optional<int64_t> ap, std::optional<std::string> owner,
                  std::optional<std::string> time, std::optional<std::string> date) {
    TupleRow t;
    t.values.resize(4);
    if (ap) t.values[0] = AttrValue::integer(*ap);
    if (owner) t.values[1] = AttrValue::str(*owner);
    if (time) t.values[2] = AttrValue::parse_time(*time);
    if (date) t.values[3] = AttrValue::parse_date(*date);
    return t;
}

Policy johns_policy() {
    Policy p;
    p.id = 1;
    p.relation = "WiFiDataset";
    p.owner = "John";
    p.querier = "Prof.Smith";
    p.purpose = "Attendance";
    p.object_conditions = {
        ObjectCondition::eq("owner", AttrValue::str("John")),
        ObjectCondition::ge("ts-time", AttrValue::parse_time("09:00")),
        ObjectCondition::le("ts-time", AttrValue::parse_time("10:00")),
        ObjectCondition::eq("wifiAP", AttrValue::integer(1200)),
    };
    return p;
}

// ---------------------------------------------------------------------------
// Independent oracle: a second implementation of the evaluation semantics
// working on name->value maps, with no short-circuiting and its own
// comparison code. Deliberately kept apart from the library's eval path.

bool oracle_cmp(const AttrValue &a, CompareOp op, const std::vector<AttrValue> &vals,
                bool lc, bool hc) {
    auto lt = [](const AttrValue &x, const AttrValue &y) {
        if (x.kind == ValueKind::String) return x.s < y.s;
        if (x.kind == ValueKind::Decimal) return x.d < y.d;
        return x.i < y.i;
    };
    auto eq = [](const AttrValue &x, const AttrValue &y) {
        if (x.kind == ValueKind::String) return x.s == y.s;
        if (x.kind == ValueKind::Decimal) return x.d == y.d;
        return x.i == y.i;
    };
    switch (op) {
    case CompareOp::Eq:
        return eq(a, vals[0]);
    case CompareOp::Neq:
        return !eq(a, vals[0]);
    case CompareOp::Lt:
        return lt(a, vals[0]);
    case CompareOp::Gt:
        return lt(vals[0], a);
    case CompareOp::Ge:
        return !lt(a, vals[0]);
    case CompareOp::Le:
        return !lt(vals[0], a);
    case CompareOp::In:
        for (const auto &v : vals)
            if (eq(a, v)) return true;
        return false;
    case CompareOp::Between: {
        bool lo = lc ? !lt(a, vals[0]) : lt(vals[0], a);
        bool hi = hc ? !lt(vals[1], a) : lt(a, vals[1]);
        return lo && hi;
    }
    }
    return false;
}

bool oracle_policy(const Policy &p, const Schema &schema, const TupleRow &t) {
    bool all = true;
    for (const auto &oc : p.object_conditions) {
        int idx = schema.index_of(oc.attr);
        const auto &v = t.values[static_cast<size_t>(idx)];
        bool ok = v.has_value() && oracle_cmp(*v, oc.op, oc.values, oc.low_closed, oc.high_closed);
        all = all && ok; // no short-circuit
    }
    return all;
}

bool oracle_expression(const std::vector<Policy> &ps, const Schema &schema, const TupleRow &t) {
    bool any = false;
    for (const auto &p : ps) any = oracle_policy(p, schema, t) || any;
    return any;
}

std::vector<Policy> random_policies(std::mt19937 &rng, size_t n, const std::string &querier,
                                    const std::string &purpose) {
    std::vector<Policy> ps;
    std::uniform_int_distribution<int> owner_d(0, 19), ap_d(1000, 1099), hour_d(0, 22);
    for (size_t k = 0; k < n; ++k) {
        Policy p;
        p.id = static_cast<int64_t>(k + 1);
        p.relation = "W";
        p.owner = "u" + std::to_string(owner_d(rng));
        p.querier = querier;
        p.purpose = purpose;
        p.object_conditions.push_back(ObjectCondition::eq("owner", AttrValue::str(p.owner)));
        if (rng() % 2) {
            int h = hour_d(rng);
            p.object_conditions.push_back(ObjectCondition::between(
                "ts-time", AttrValue::time_seconds(h * 3600), true,
                AttrValue::time_seconds((h + 1 + static_cast<int>(rng() % 2)) * 3600), rng() % 2 == 0));
        }
        if (rng() % 2)
            p.object_conditions.push_back(
                ObjectCondition::eq("wifiAP", AttrValue::integer(ap_d(rng))));
        ps.push_back(std::move(p));
    }
    return ps;
}

TupleRow random_row(std::mt19937 &rng) {
    std::uniform_int_distribution<int> owner_d(0, 19), ap_d(1000, 1099), sec_d(0, 86399),
        day_d(18000, 18060);
    TupleRow t;
    t.values.resize(4);
    t.values[0] = AttrValue::integer(ap_d(rng));
    t.values[1] = AttrValue::str("u" + std::to_string(owner_d(rng)));
    t.values[2] = AttrValue::time_seconds(sec_d(rng));
    t.values[3] = AttrValue::date_days(day_d(rng));
    return t;
}

} // namespace

TEST_CASE("object condition evaluation") {
    Schema schema = wifi_schema();
    auto row = make_row(1200, "John", "09:30", "2019-09-25");

    CHECK(eval_object_condition(ObjectCondition::eq("wifiAP", AttrValue::integer(1200)), schema, row));
    CHECK_FALSE(
        eval_object_condition(ObjectCondition::eq("wifiAP", AttrValue::integer(1201)), schema, row));

    // null attribute values deny
    auto null_time = make_row(1200, "John", std::nullopt, "2019-09-25");
    CHECK_FALSE(eval_object_condition(
        ObjectCondition::ge("ts-time", AttrValue::parse_time("09:00")), schema, null_time));
    CHECK_FALSE(eval_object_condition(
        ObjectCondition::neq("ts-time", AttrValue::parse_time("09:00")), schema, null_time));

    // half-open range boundary: [4, 20) excludes 20
    Schema s2({{"a", ValueKind::Int}});
    TupleRow r2;
    r2.values = {AttrValue::integer(20)};
    auto between = ObjectCondition::between("a", AttrValue::integer(4), true,
                                            AttrValue::integer(20), false);
    CHECK_FALSE(eval_object_condition(between, s2, r2));
    r2.values = {AttrValue::integer(19)};
    CHECK(eval_object_condition(between, s2, r2));
    r2.values = {AttrValue::integer(4)};
    CHECK(eval_object_condition(between, s2, r2));

    // cross-kind comparison is a type error
    auto bad = ObjectCondition::eq("owner", AttrValue::integer(5));
    CHECK_THROWS_AS(eval_object_condition(bad, schema, row), TypeError);
}

TEST_CASE("policy evaluation with short-circuit soundness") {
    Schema schema = wifi_schema();
    Policy john = johns_policy();

    CHECK(eval_policy(john, schema, make_row(1200, "John", "09:30", "2019-09-25")));
    CHECK_FALSE(eval_policy(john, schema, make_row(1200, "Mary", "09:30", "2019-09-25")));
    CHECK_FALSE(eval_policy(john, schema, make_row(1200, "John", "11:00", "2019-09-25")));

    // brute-force conjunction oracle over random tuples
    std::mt19937 rng(7);
    auto ps = random_policies(rng, 20, "q", "p");
    for (int k = 0; k < 1000; ++k) {
        auto t = random_row(rng);
        for (const auto &p : ps) CHECK(eval_policy(p, schema, t) == oracle_policy(p, schema, t));
    }
}

TEST_CASE("policy expression disjunction") {
    Schema schema = wifi_schema();
    auto t = make_row(1200, "John", "09:30", "2019-09-25");

    Policy p_false = johns_policy();
    p_false.object_conditions[0] = ObjectCondition::eq("owner", AttrValue::str("Mary"));
    Policy p_true = johns_policy();
    Policy p_x = johns_policy();

    auto out = eval_policy_expression({p_false, p_true, p_x}, schema, t);
    CHECK(out.allowed);
    CHECK(out.checks_performed == 2); // stops at the first allowing policy

    auto empty = eval_policy_expression({}, schema, t);
    CHECK_FALSE(empty.allowed); // deny-by-default
    CHECK(empty.checks_performed == 0);

    // exhaustive disjunction oracle: result matches a non-short-circuit OR,
    // and is independent of policy order
    std::mt19937 rng(11);
    auto ps = random_policies(rng, 50, "q", "p");
    auto shuffled = ps;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (int k = 0; k < 10000; ++k) {
        auto row = random_row(rng);
        bool expect = oracle_expression(ps, schema, row);
        CHECK(eval_policy_expression(ps, schema, row).allowed == expect);
        CHECK(eval_policy_expression(shuffled, schema, row).allowed == expect);
    }
}

TEST_CASE("metadata filtering") {
    std::vector<Policy> ps;
    for (int k = 0; k < 6; ++k) {
        Policy p = johns_policy();
        p.id = k;
        if (k % 3 == 1) p.querier = "faculty";
        if (k % 3 == 2) p.purpose = "Commercial";
        ps.push_back(p);
    }

    QueryMetadata m{"Prof.Smith", "Attendance", {}};
    auto got = filter_policies_by_metadata(ps, m);
    CHECK(got.size() == 2); // direct querier matches only

    m.groups = {"faculty"};
    got = filter_policies_by_metadata(ps, m);
    CHECK(got.size() == 4); // group membership clause adds the faculty policies

    QueryMetadata none{"Prof.Smith", "NoSuchPurpose", {}};
    CHECK(filter_policies_by_metadata(ps, none).empty());
}

TEST_CASE("delta operator") {
    Schema schema = wifi_schema();
    QueryMetadata m{"q", "p", {}};

    // 100 Mary-owned policies plus one John-owned: only John's is evaluated
    std::vector<Policy> ps;
    for (int k = 0; k < 100; ++k) {
        Policy p = johns_policy();
        p.id = k;
        p.owner = "Mary";
        p.querier = "q";
        p.purpose = "p";
        p.object_conditions[0] = ObjectCondition::eq("owner", AttrValue::str("Mary"));
        ps.push_back(p);
    }
    Policy jp = johns_policy();
    jp.id = 1000;
    jp.querier = "q";
    jp.purpose = "p";
    ps.push_back(jp);

    auto t = make_row(1200, "John", "09:30", "2019-09-25");
    auto out = delta(ps, m, schema, t);
    CHECK(out.allowed);
    CHECK(out.checks_performed == 1);

    // owner with no policy: false with zero evaluations
    auto t2 = make_row(1200, "Nobody", "09:30", "2019-09-25");
    auto out2 = delta(ps, m, schema, t2);
    CHECK_FALSE(out2.allowed);
    CHECK(out2.checks_performed == 0);

    // semantic equivalence with the flat expression
    std::mt19937 rng(23);
    auto rand_ps = random_policies(rng, 40, "q", "p");
    for (int k = 0; k < 1000; ++k) {
        auto row = random_row(rng);
        CHECK(delta(rand_ps, m, schema, row).allowed ==
              eval_policy_expression(rand_ps, schema, row).allowed);
    }
}

TEST_CASE("delta with group-owned policies") {
    Schema schema = wifi_schema();
    GroupDirectory dir;
    dir.add_member("g1", "John");
    dir.add_member("g1", "Mary");
    EvalContext ctx{nullptr, &dir};
    QueryMetadata m{"q", "p", {}};

    Policy p;
    p.id = 1;
    p.relation = "W";
    p.owner = "g1";
    p.querier = "q";
    p.purpose = "p";
    p.object_conditions = {ObjectCondition::eq("owner", AttrValue::str("g1"))};

    auto t = make_row(1200, "John", "09:30", "2019-09-25");
    CHECK(delta({p}, m, schema, t, ctx).allowed);
    CHECK(eval_policy(p, schema, t, ctx));
    auto outsider = make_row(1200, "Eve", "09:30", "2019-09-25");
    CHECK_FALSE(delta({p}, m, schema, outsider, ctx).allowed);
}

TEST_CASE("deny factoring") {
    Policy allow;
    allow.id = 1;
    allow.relation = "W";
    allow.owner = "u1";
    allow.querier = "q";
    allow.purpose = "p";
    allow.object_conditions = {
        ObjectCondition::eq("owner", AttrValue::str("u1")),
        ObjectCondition::between("ts-time", AttrValue::parse_time("08:00"), true,
                                 AttrValue::parse_time("18:00"), true),
    };
    Policy deny = allow;
    deny.object_conditions[1] = ObjectCondition::between(
        "ts-time", AttrValue::parse_time("12:00"), true, AttrValue::parse_time("13:00"), true);

    auto residuals = factor_deny(allow, deny);
    REQUIRE(residuals.size() == 2);
    auto r0 = residuals[0].object_conditions.back().as_range();
    auto r1 = residuals[1].object_conditions.back().as_range();
    REQUIRE(r0);
    REQUIRE(r1);
    CHECK(r0->contains(AttrValue::parse_time("08:00")));
    CHECK_FALSE(r0->contains(AttrValue::parse_time("12:00")));
    CHECK_FALSE(r1->contains(AttrValue::parse_time("13:00")));
    CHECK(r1->contains(AttrValue::parse_time("18:00")));

    // deny covering the allow entirely
    Policy wide_deny = allow;
    wide_deny.object_conditions[1] = ObjectCondition::between(
        "ts-time", AttrValue::parse_time("07:00"), true, AttrValue::parse_time("19:00"), true);
    CHECK(factor_deny(allow, wide_deny).empty());

    // multi-attribute deny is unsupported
    Policy multi = deny;
    multi.object_conditions.push_back(ObjectCondition::eq("wifiAP", AttrValue::integer(1)));
    CHECK_THROWS_AS(factor_deny(allow, multi), UnsupportedDenyError);

    // pointwise membership oracle on random interval pairs
    Schema schema = wifi_schema();
    std::mt19937 rng(41);
    std::uniform_int_distribution<int> sec(0, 86399);
    for (int iter = 0; iter < 500; ++iter) {
        int a1 = sec(rng), a2 = sec(rng), d1 = sec(rng), d2 = sec(rng);
        if (a1 > a2) std::swap(a1, a2);
        if (d1 > d2) std::swap(d1, d2);
        Policy al = allow;
        al.object_conditions[1] = ObjectCondition::between(
            "ts-time", AttrValue::time_seconds(a1), true, AttrValue::time_seconds(a2), true);
        Policy dn = allow;
        dn.object_conditions[1] = ObjectCondition::between(
            "ts-time", AttrValue::time_seconds(d1), true, AttrValue::time_seconds(d2), true);
        auto rs = factor_deny(al, dn);

        // probe boundary-adjacent points
        std::vector<int> probes = {a1 - 1, a1, a1 + 1, a2 - 1, a2, a2 + 1,
                                   d1 - 1, d1, d1 + 1, d2 - 1, d2, d2 + 1};
        for (int v : probes) {
            if (v < 0 || v > 86399) continue;
            auto t = make_row(1200, "u1", std::nullopt, "2019-09-25");
            t.values[2] = AttrValue::time_seconds(v);
            bool in_allow = eval_policy(al, schema, t);
            bool in_deny = eval_policy(dn, schema, t);
            bool in_residual = false;
            for (const auto &r : rs) in_residual = in_residual || eval_policy(r, schema, t);
            CHECK(in_residual == (in_allow && !in_deny));
        }
    }
}

TEST_CASE("group directory subsumption closure") {
    GroupDirectory dir;
    dir.add_member("undergrad", "alice");
    dir.add_member("grad", "bob");
    dir.add_subsumption("students", "undergrad");
    dir.add_subsumption("students", "grad");
    dir.add_subsumption("members", "students");

    auto groups = dir.groups_of("alice");
    CHECK(groups.count("undergrad"));
    CHECK(groups.count("students"));
    CHECK(groups.count("members"));
    CHECK_FALSE(groups.count("grad"));
    CHECK(dir.user_in_group("bob", "members"));
}

TEST_CASE("policy validation") {
    Policy p = johns_policy();
    CHECK_NOTHROW(p.check_valid());

    Policy no_owner = p;
    no_owner.object_conditions.erase(no_owner.object_conditions.begin());
    CHECK_THROWS(no_owner.check_valid());

    Policy two_owner = p;
    two_owner.object_conditions.push_back(ObjectCondition::eq("owner", AttrValue::str("x")));
    CHECK_THROWS(two_owner.check_valid());

    CHECK_THROWS(ObjectCondition::between("a", AttrValue::integer(5), true, AttrValue::integer(1),
                                          true)
                     .check_valid());
    ObjectCondition empty_in;
    empty_in.attr = "a";
    empty_in.op = CompareOp::In;
    CHECK_THROWS(empty_in.check_valid());
}
