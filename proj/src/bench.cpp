#include "sieve/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <set>
#include <sstream>

#include "sieve/exec.hpp"
#include "sieve/plan.hpp"

namespace sieve {

const char *strategy_name(BenchStrategy s) {
    switch (s) {
    case BenchStrategy::BaselineP:
        return "baseline-p";
    case BenchStrategy::BaselineI:
        return "baseline-i";
    case BenchStrategy::BaselineU:
        return "baseline-u";
    case BenchStrategy::Sieve:
        return "sieve";
    }
    return "?";
}

std::optional<BenchStrategy> strategy_from_name(const std::string &name) {
    if (name == "baseline-p") return BenchStrategy::BaselineP;
    if (name == "baseline-i") return BenchStrategy::BaselineI;
    if (name == "baseline-u") return BenchStrategy::BaselineU;
    if (name == "sieve") return BenchStrategy::Sieve;
    return std::nullopt;
}

namespace {

using Clock = std::chrono::steady_clock;

// query predicates + optional semijoin, shared across the baselines
struct QueryTail {
    const Database *db;
    const QuerySpec *q;
    const Relation *rel;
    std::set<std::string> join_keys;
    bool has_join = false;
    int left_idx = -1;

    QueryTail(const Database &database, const QuerySpec &query)
        : db(&database), q(&query), rel(&database.get(query.relation)) {
        if (q->join) {
            has_join = true;
            left_idx = rel->schema().index_of(q->join->left_attr);
            const Relation &jr = db->get(q->join->relation);
            int key_idx = jr.schema().index_of(q->join->right_attr);
            for (const auto &row : jr.rows()) {
                const auto &key = row.values[static_cast<size_t>(key_idx)];
                if (!key) continue;
                bool ok = true;
                for (const auto &oc : q->join->predicates)
                    if (!eval_object_condition(oc, jr.schema(), row)) {
                        ok = false;
                        break;
                    }
                if (ok) join_keys.insert(key->to_string());
            }
        }
    }

    bool passes(const TupleRow &t) const {
        for (const auto &oc : q->where)
            if (!eval_object_condition(oc, rel->schema(), t)) return false;
        if (has_join) {
            const auto &lv = t.values[static_cast<size_t>(left_idx)];
            if (!lv || !join_keys.count(lv->to_string())) return false;
        }
        return true;
    }
};

QueryResult run_baseline_p(const Database &db, const QuerySpec &q,
                           const std::vector<Policy> &filtered, const GroupDirectory &groups) {
    auto t0 = Clock::now();
    QueryResult res;
    const Relation &rel = db.get(q.relation);
    EvalContext ctx{nullptr, &groups};
    CompiledPolicySet flat(filtered, rel.schema());
    QueryTail tail(db, q);
    res.metrics.tuples_read = static_cast<int64_t>(rel.row_count());
    for (const auto &t : rel.rows()) {
        auto out = flat.eval_expression(t, ctx);
        res.metrics.policy_evaluations += out.checks_performed;
        if (!out.allowed) continue;
        if (tail.passes(t)) res.row_ids.push_back(t.id);
    }
    res.metrics.wall_time_us = std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
    return res;
}

QueryResult run_baseline_i(const Database &db, const QuerySpec &q,
                           const std::vector<Policy> &filtered, const GroupDirectory &groups) {
    auto t0 = Clock::now();
    QueryResult res;
    const Relation &rel = db.get(q.relation);
    EvalContext ctx{nullptr, &groups};
    CompiledPolicySet compiled(filtered, rel.schema());
    QueryTail tail(db, q);

    std::vector<uint8_t> allowed(rel.row_count(), 0);
    for (size_t k = 0; k < filtered.size(); ++k) {
        const auto *oc = filtered[k].owner_condition();
        if (!oc) continue;
        // probe the owner index per policy; group owners expand to members
        std::vector<ValueRange> probes;
        const AttrValue &owner = oc->values[0];
        if (owner.kind == ValueKind::String && groups.is_group(owner.s)) {
            probes.push_back(ValueRange::point(owner));
            for (const auto &[grp, members] : groups.direct_members())
                for (const auto &u : members)
                    if (groups.user_in_group(u, owner.s))
                        probes.push_back(ValueRange::point(AttrValue::str(u)));
        } else {
            probes.push_back(ValueRange::point(owner));
        }
        for (const auto &pr : probes) {
            for (int32_t r : rel.range_probe("owner", pr)) {
                ++res.metrics.tuples_read;
                if (allowed[static_cast<size_t>(r)]) continue;
                ++res.metrics.policy_evaluations;
                if (compiled.eval_policy_at(k, rel.rows()[static_cast<size_t>(r)], ctx))
                    allowed[static_cast<size_t>(r)] = 1;
            }
        }
    }
    for (size_t k = 0; k < rel.row_count(); ++k) {
        if (!allowed[k]) continue;
        const TupleRow &t = rel.rows()[k];
        if (tail.passes(t)) res.row_ids.push_back(t.id);
    }
    res.metrics.wall_time_us = std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
    return res;
}

QueryResult run_baseline_u(const Database &db, const QuerySpec &q,
                           const std::vector<Policy> &filtered, const GroupDirectory &groups) {
    auto t0 = Clock::now();
    QueryResult res;
    const Relation &rel = db.get(q.relation);
    EvalContext ctx{nullptr, &groups};
    DeltaEvaluator delta_eval(filtered, rel.schema(), &groups);
    QueryTail tail(db, q);
    res.metrics.tuples_read = static_cast<int64_t>(rel.row_count());
    for (const auto &t : rel.rows()) {
        ++res.metrics.delta_invocations;
        auto out = delta_eval.eval(q.metadata, t, ctx);
        res.metrics.policy_evaluations += out.checks_performed;
        if (!out.allowed) continue;
        if (tail.passes(t)) res.row_ids.push_back(t.id);
    }
    res.metrics.wall_time_us = std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
    return res;
}

QueryResult run_sieve(const Database &db, const QuerySpec &q, const std::vector<Policy> &filtered,
                      const GroupDirectory &groups, const CostParams &cp,
                      const HistogramStats &stats, double random_access_factor,
                      const GuardedPolicyExpression *gpe_in, ScanStrategy *chosen_scan) {
    const Relation &rel = db.get(q.relation);
    EvalContext ctx{nullptr, &groups};
    GuardedPolicyExpression built;
    const GuardedPolicyExpression *gpe = gpe_in;
    if (!gpe) {
        built = build_guarded_expression(filtered, q.metadata, q.relation, rel.indexed_attrs(), cp,
                                         stats);
        gpe = &built;
    }
    ExplainInfo info = explain(q, stats, rel);
    StrategyPlan plan = choose_scan_strategy(q, *gpe, cp, stats, info, random_access_factor);
    if (chosen_scan) *chosen_scan = plan.scan;
    return execute(db, q, *gpe, plan, ctx);
}

} // namespace

QueryResult run_strategy(const Database &db, const QuerySpec &q,
                         const std::vector<Policy> &filtered, const GroupDirectory &groups,
                         const CostParams &cp, const HistogramStats &stats, BenchStrategy s,
                         double random_access_factor, const GuardedPolicyExpression *gpe,
                         ScanStrategy *chosen_scan) {
    switch (s) {
    case BenchStrategy::BaselineP:
        return run_baseline_p(db, q, filtered, groups);
    case BenchStrategy::BaselineI:
        return run_baseline_i(db, q, filtered, groups);
    case BenchStrategy::BaselineU:
        return run_baseline_u(db, q, filtered, groups);
    case BenchStrategy::Sieve:
        return run_sieve(db, q, filtered, groups, cp, stats, random_access_factor, gpe,
                         chosen_scan);
    }
    throw Error("unknown strategy");
}

BenchReport run_bench(const Database &db, const std::string &relation,
                      const std::vector<Policy> &all_policies, const GroupDirectory &groups,
                      const std::vector<QuerySpec> &queries, const CostParams &cp,
                      const HistogramStats &stats, const BenchOptions &opts) {
    BenchReport report;
    const Relation &rel = db.get(relation);

    struct PerQuerier {
        std::vector<Policy> filtered;
        GuardedPolicyExpression gpe;
        int64_t flat_evals = 0, guarded_evals = 0;
    };
    std::map<std::pair<std::string, std::string>, PerQuerier> by_querier;

    auto prepare = [&](const QuerySpec &q) -> PerQuerier & {
        auto key = std::make_pair(q.metadata.querier, q.metadata.purpose);
        auto it = by_querier.find(key);
        if (it == by_querier.end()) {
            PerQuerier pq;
            std::vector<Policy> rel_policies;
            for (const auto &p : all_policies)
                if (p.relation == relation) rel_policies.push_back(p);
            pq.filtered = filter_policies_by_metadata(rel_policies, q.metadata);
            pq.gpe = build_guarded_expression(pq.filtered, q.metadata, relation,
                                              rel.indexed_attrs(), cp, stats);
            assign_partition_strategies(pq.gpe, cp);
            it = by_querier.emplace(key, std::move(pq)).first;
        }
        return it->second;
    };

    auto bench_one = [&](size_t qi) {
        const QuerySpec &q = queries[qi];
        PerQuerier &pq = prepare(q);
        std::vector<BenchRow> rows;
        for (BenchStrategy s : opts.strategies) {
            BenchRow row;
            row.query_id = "q" + std::to_string(qi);
            row.querier = q.metadata.querier;
            row.strategy = s;

            // warm-up doubles as the timeout probe
            auto warm_start = Clock::now();
            QueryResult first = run_strategy(db, q, pq.filtered, groups, cp, stats, s,
                                             opts.random_access_factor, &pq.gpe,
                                             &row.chosen_scan);
            double warm_ms =
                std::chrono::duration<double, std::milli>(Clock::now() - warm_start).count();
            auto agg = aggregate(db, q, first.row_ids);
            row.result_rows = first.row_ids.size();
            row.result_hash = result_hash(first.row_ids, &agg);
            row.tuples_read = first.metrics.tuples_read;
            row.policy_evaluations = first.metrics.policy_evaluations;
            row.delta_invocations = first.metrics.delta_invocations;
            if (warm_ms > opts.timeout_ms) {
                row.timed_out = true;
                row.avg_ms = warm_ms;
            } else {
                double total = 0;
                for (int r = 0; r < opts.repeats; ++r) {
                    auto res = run_strategy(db, q, pq.filtered, groups, cp, stats, s,
                                            opts.random_access_factor, &pq.gpe, nullptr);
                    total += res.metrics.wall_time_us / 1000.0;
                }
                row.avg_ms = total / opts.repeats;
            }
            if (s == BenchStrategy::BaselineP) pq.flat_evals += row.policy_evaluations;
            if (s == BenchStrategy::Sieve) pq.guarded_evals += row.policy_evaluations;
            rows.push_back(std::move(row));
        }
        return rows;
    };

    std::vector<std::vector<BenchRow>> results(queries.size());
    if (opts.parallel) {
        // queriers are prepared up front so tasks only read shared state
        for (const auto &q : queries) prepare(q);
        std::vector<std::future<std::vector<BenchRow>>> futs;
        for (size_t qi = 0; qi < queries.size(); ++qi)
            futs.push_back(std::async(std::launch::async, bench_one, qi));
        for (size_t qi = 0; qi < queries.size(); ++qi) results[qi] = futs[qi].get();
    } else {
        for (size_t qi = 0; qi < queries.size(); ++qi) results[qi] = bench_one(qi);
    }

    for (auto &rows : results) {
        uint64_t h = rows.empty() ? 0 : rows[0].result_hash;
        for (const auto &r : rows)
            if (r.result_hash != h) report.hashes_consistent = false;
        report.rows.insert(report.rows.end(), rows.begin(), rows.end());
    }

    int64_t flat_total = 0, guarded_total = 0;
    for (const auto &[key, pq] : by_querier) {
        QuerierStats qs;
        qs.querier = key.first;
        qs.purpose = key.second;
        qs.policy_count = pq.filtered.size();
        qs.guard_count = pq.gpe.guards.size();
        double part_sum = 0, sel_sum = 0;
        for (const auto &g : pq.gpe.guards) {
            part_sum += static_cast<double>(g.partition.size());
            sel_sum += g.estimated_cardinality;
        }
        qs.mean_partition_size = qs.guard_count ? part_sum / static_cast<double>(qs.guard_count) : 0;
        qs.total_guard_selectivity =
            stats.row_count > 0 ? sel_sum / static_cast<double>(stats.row_count) : 0;
        qs.flat_evaluations = pq.flat_evals;
        qs.guarded_evaluations = pq.guarded_evals;
        qs.savings = pq.flat_evals > 0
                         ? 1.0 - static_cast<double>(pq.guarded_evals) /
                                     static_cast<double>(pq.flat_evals)
                         : 0.0;
        flat_total += pq.flat_evals;
        guarded_total += pq.guarded_evals;
        report.queriers.push_back(std::move(qs));
    }
    report.overall_savings =
        flat_total > 0 ? 1.0 - static_cast<double>(guarded_total) / static_cast<double>(flat_total)
                       : 0.0;
    return report;
}

std::string BenchReport::human_table() const {
    std::ostringstream os;
    os << "query      querier      strategy    avg_ms      tuples_read  policy_evals  delta  rows    scan\n";
    for (const auto &r : rows) {
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%-10s %-12s %-11s %-11s %-12lld %-13lld %-6lld %-7zu %s\n",
                      r.query_id.c_str(), r.querier.c_str(), strategy_name(r.strategy),
                      r.timed_out ? "TO" : std::to_string(r.avg_ms).substr(0, 9).c_str(),
                      static_cast<long long>(r.tuples_read),
                      static_cast<long long>(r.policy_evaluations),
                      static_cast<long long>(r.delta_invocations), r.result_rows,
                      r.strategy == BenchStrategy::Sieve ? scan_strategy_name(r.chosen_scan) : "-");
        os << buf;
    }
    os << "\nquerier stats:\n";
    os << "querier      purpose      policies  guards  mean_part  guard_sel  savings\n";
    for (const auto &q : queriers) {
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%-12s %-12s %-9zu %-7zu %-10.2f %-10.4f %.4f\n",
                      q.querier.c_str(), q.purpose.c_str(), q.policy_count, q.guard_count,
                      q.mean_partition_size, q.total_guard_selectivity, q.savings);
        os << buf;
    }
    os << "\noverall savings: " << overall_savings << "\n";
    os << "result hashes consistent: " << (hashes_consistent ? "yes" : "NO") << "\n";
    return os.str();
}

std::string BenchReport::csv() const {
    std::ostringstream os;
    os << "query,querier,strategy,timed_out,avg_ms,tuples_read,policy_evaluations,"
          "delta_invocations,result_rows,result_hash,scan\n";
    for (const auto &r : rows)
        os << r.query_id << ',' << r.querier << ',' << strategy_name(r.strategy) << ','
           << (r.timed_out ? 1 : 0) << ',' << r.avg_ms << ',' << r.tuples_read << ','
           << r.policy_evaluations << ',' << r.delta_invocations << ',' << r.result_rows << ','
           << r.result_hash << ','
           << (r.strategy == BenchStrategy::Sieve ? scan_strategy_name(r.chosen_scan) : "-")
           << '\n';
    return os.str();
}

} // namespace sieve
