#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "sieve/histogram.hpp"

#include <numeric>
#include <random>

using namespace sieve;

namespace {

Relation skewed_relation(size_t n, uint32_t seed) {
    Schema schema({{"v", ValueKind::Int}, {"owner", ValueKind::String}});
    std::mt19937 rng(seed);
    std::normal_distribution<double> val(500.0, 180.0);
    std::vector<TupleRow> rows;
    for (size_t k = 0; k < n; ++k) {
        TupleRow t;
        t.values.resize(2);
        t.values[0] = AttrValue::integer(std::clamp<int64_t>(std::llround(val(rng)), 0, 999));
        t.values[1] = AttrValue::str("u" + std::to_string(rng() % 97));
        rows.push_back(std::move(t));
    }
    return Relation::load("R", schema, rows, {"v"});
}

} // namespace

TEST_CASE("histogram invariants and boundary estimates") {
    auto rel = skewed_relation(20000, 1);
    auto stats = HistogramStats::build(rel);

    const auto &h = stats.attr("v");
    CHECK(std::accumulate(h.counts.begin(), h.counts.end(), int64_t{0}) == h.non_null);
    CHECK(h.non_null == stats.row_count);

    // full-domain range
    CHECK(stats.estimate_range("v", ValueRange::all()) == doctest::Approx(20000));
    // empty range
    ValueRange empty{AttrValue::integer(10), false, AttrValue::integer(10), false};
    CHECK(stats.estimate_range("v", empty) == 0.0);
    // equality rule
    CHECK(stats.estimate(ObjectCondition::eq("v", AttrValue::integer(500))) ==
          doctest::Approx(static_cast<double>(h.non_null) / static_cast<double>(h.distinct)));
    // IN is capped
    std::vector<AttrValue> many;
    for (int k = 0; k < 5000; ++k) many.push_back(AttrValue::integer(k));
    CHECK(stats.estimate(ObjectCondition::in_list("v", many)) <= 20000.0);

    CHECK_THROWS(stats.estimate(ObjectCondition::eq("nope", AttrValue::integer(1))));
}

TEST_CASE("range estimates within 2x of exact counts on multi-bucket ranges") {
    auto rel = skewed_relation(30000, 2);
    auto stats = HistogramStats::build(rel);
    const auto &h = stats.attr("v");

    // approximate bucket width on the value axis
    double span = h.edges.back() - h.edges.front();
    double min_width = 4.0 * span / 128.0;

    std::mt19937 rng(3);
    std::uniform_int_distribution<int> vd(0, 999);
    int checked = 0;
    for (int iter = 0; iter < 5000 && checked < 1000; ++iter) {
        int a = vd(rng), b = vd(rng);
        if (a > b) std::swap(a, b);
        if (b - a < min_width) continue;
        ValueRange r{AttrValue::integer(a), true, AttrValue::integer(b), true};
        size_t exact = 0;
        for (const auto &row : rel.rows())
            if (r.contains(*row.values[0])) ++exact;
        if (exact == 0) continue;
        double est = stats.estimate_range("v", r);
        CHECK(est <= 2.0 * static_cast<double>(exact));
        CHECK(est >= 0.5 * static_cast<double>(exact));
        ++checked;
    }
    CHECK(checked == 1000);
}

TEST_CASE("estimate is monotone under range widening") {
    auto rel = skewed_relation(10000, 4);
    auto stats = HistogramStats::build(rel);
    std::mt19937 rng(5);
    std::uniform_int_distribution<int> vd(0, 999), wd(1, 80);
    for (int iter = 0; iter < 2000; ++iter) {
        int a = vd(rng);
        int b = a + wd(rng);
        int a2 = a - wd(rng);
        int b2 = b + wd(rng);
        ValueRange inner{AttrValue::integer(a), true, AttrValue::integer(b), true};
        ValueRange outer{AttrValue::integer(a2), true, AttrValue::integer(b2), true};
        CHECK(stats.estimate_range("v", inner) <= stats.estimate_range("v", outer) + 1e-9);
    }
    // widening to unbounded
    ValueRange half{AttrValue::integer(200), true, std::nullopt, true};
    CHECK(stats.estimate_range("v", half) <=
          stats.estimate_range("v", ValueRange::all()) + 1e-9);
}

TEST_CASE("string attributes: equality only") {
    auto rel = skewed_relation(5000, 6);
    auto stats = HistogramStats::build(rel);
    const auto &h = stats.attr("owner");
    CHECK(h.distinct == 97);
    CHECK_FALSE(h.has_buckets());
    double est = stats.estimate(ObjectCondition::eq("owner", AttrValue::str("u5")));
    CHECK(est == doctest::Approx(5000.0 / 97.0));
}
