#include "sieve/exec.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <set>

namespace sieve {

PreparedGpe::PreparedGpe(const GuardedPolicyExpression &gpe, const Schema &schema,
                         const GroupDirectory *groups, const std::string &owner_attr)
    : gpe_(&gpe) {
    guards_.reserve(gpe.guards.size());
    for (const auto &g : gpe.guards) {
        PreparedGuard pg;
        pg.attr_idx = schema.index_of(g.guard.attr);
        if (pg.attr_idx < 0) throw Error("guard attribute " + g.guard.attr + " not in schema");
        pg.range = g.guard_range;
        if (g.guard.attr == owner_attr && groups && pg.range.is_point() &&
            pg.range.low->kind == ValueKind::String && groups->is_group(pg.range.low->s)) {
            pg.group_point = true;
            pg.member_values.insert(pg.range.low->s);
            // subsumed groups contribute their members transitively
            for (const auto &[grp, users] : groups->direct_members())
                for (const auto &u : users)
                    if (groups->user_in_group(u, pg.range.low->s)) pg.member_values.insert(u);
            for (const auto &v : pg.member_values)
                pg.probe_ranges.push_back(ValueRange::point(AttrValue::str(v)));
        } else {
            pg.probe_ranges.push_back(pg.range);
        }
        pg.inline_eval = CompiledPolicySet(g.partition, schema, owner_attr);
        pg.delta_eval = DeltaEvaluator(g.partition, schema, groups, owner_attr);
        guards_.push_back(std::move(pg));
    }
}

bool PreparedGpe::guard_satisfied(size_t k, const TupleRow &t) const {
    const auto &pg = guards_[k];
    const auto &v = t.values[static_cast<size_t>(pg.attr_idx)];
    if (!v) return false;
    if (pg.group_point)
        return v->kind == ValueKind::String && pg.member_values.count(v->s) != 0;
    return pg.range.contains(*v);
}

bool PreparedGpe::eval_tuple(const TupleRow &t, const QueryMetadata &m, const EvalContext &ctx,
                             const std::vector<PartitionStrategy> &per_guard,
                             ExecMetrics &metrics) const {
    for (size_t k = 0; k < guards_.size(); ++k) {
        const auto &pg = guards_[k];
        if (!guard_satisfied(k, t)) continue;
        if (per_guard[k] == PartitionStrategy::Delta) {
            ++metrics.delta_invocations;
            EvalOutcome out = pg.delta_eval.eval(m, t, ctx);
            metrics.policy_evaluations += out.checks_performed;
            if (out.allowed) return true;
        } else {
            EvalOutcome out = pg.inline_eval.eval_expression(t, ctx);
            metrics.policy_evaluations += out.checks_performed;
            if (out.allowed) return true;
        }
    }
    return false;
}

namespace {

using Clock = std::chrono::steady_clock;

// Bitmap union of index probes, mirroring a bitmap-OR over index scans.
struct RowBitmap {
    std::vector<uint8_t> bits;
    explicit RowBitmap(size_t n) : bits(n, 0) {}
    void set(int32_t k) { bits[static_cast<size_t>(k)] = 1; }
    bool get(size_t k) const { return bits[k] != 0; }
    int64_t count() const {
        int64_t c = 0;
        for (uint8_t b : bits) c += b;
        return c;
    }
};

void probe_condition(const Relation &rel, const ObjectCondition &pred, RowBitmap &bm) {
    if (pred.op == CompareOp::In) {
        for (const auto &v : pred.values)
            for (int32_t r : rel.range_probe(pred.attr, ValueRange::point(v))) bm.set(r);
        return;
    }
    auto range = pred.as_range();
    if (!range) throw PlanError("predicate on " + pred.attr + " is not probeable");
    for (int32_t r : rel.range_probe(pred.attr, *range)) bm.set(r);
}

bool row_matches_conditions(const std::vector<ObjectCondition> &conds, const Schema &schema,
                            const TupleRow &t, const EvalContext &ctx) {
    for (const auto &oc : conds)
        if (!eval_object_condition(oc, schema, t, ctx)) return false;
    return true;
}

// Semijoin against the secondary relation: t passes when some joined row
// matches the join predicates. Index-nested-loop when the join key is
// indexed, otherwise a one-off key set.
class SemiJoin {
public:
    SemiJoin(const Database &db, const JoinSpec &join, const EvalContext &ctx)
        : join_(&join), ctx_(&ctx), rel_(&db.get(join.relation)) {
        if (!rel_->has_index(join.right_attr)) {
            for (const auto &row : rel_->rows()) {
                const auto &v = row.values[static_cast<size_t>(
                    rel_->schema().index_of(join.right_attr))];
                if (!v) continue;
                if (row_matches_conditions(join.predicates, rel_->schema(), row, *ctx_))
                    keys_.insert(v->to_string());
            }
            use_keys_ = true;
        }
    }

    bool passes(const AttrValue &left_value) const {
        if (use_keys_) return keys_.count(left_value.to_string()) != 0;
        for (int32_t r : rel_->range_probe(join_->right_attr, ValueRange::point(left_value)))
            if (row_matches_conditions(join_->predicates, rel_->schema(), rel_->rows()[static_cast<size_t>(r)],
                                       *ctx_))
                return true;
        return false;
    }

private:
    const JoinSpec *join_;
    const EvalContext *ctx_;
    const Relation *rel_;
    bool use_keys_ = false;
    std::set<std::string> keys_;
};

} // namespace

QueryResult execute(const Database &db, const QuerySpec &q, const GuardedPolicyExpression &gpe,
                    const StrategyPlan &plan, const EvalContext &ctx) {
    auto t0 = Clock::now();
    const Relation &rel = db.get(q.relation);
    if (plan.per_guard.size() != gpe.guards.size())
        throw PlanError("plan covers " + std::to_string(plan.per_guard.size()) + " guards, gpe has " +
                        std::to_string(gpe.guards.size()));

    QueryResult res;
    PreparedGpe prepared(gpe, rel.schema(), ctx.groups);

    // access path
    RowBitmap bm(rel.row_count());
    bool full_scan = false;
    switch (plan.scan) {
    case ScanStrategy::LinearScan:
        full_scan = true;
        res.metrics.tuples_read += static_cast<int64_t>(rel.row_count());
        break;
    case ScanStrategy::IndexQuery: {
        if (plan.index_query_predicate >= q.where.size())
            throw PlanError("IndexQuery predicate index out of range");
        const auto &pred = q.where[plan.index_query_predicate];
        if (!rel.has_index(pred.attr))
            throw PlanError("IndexQuery predicate attribute " + pred.attr + " is not indexed");
        probe_condition(rel, pred, bm);
        res.metrics.tuples_read += bm.count();
        break;
    }
    case ScanStrategy::IndexGuards: {
        for (size_t k = 0; k < gpe.guards.size(); ++k)
            for (const auto &pr : prepared.probe_ranges(k))
                for (int32_t r : rel.range_probe(gpe.guards[k].guard.attr, pr)) bm.set(r);
        res.metrics.tuples_read += bm.count();
        break;
    }
    }

    std::optional<SemiJoin> semi;
    int left_idx = -1;
    if (q.join) {
        semi.emplace(db, *q.join, ctx);
        left_idx = rel.schema().index_of(q.join->left_attr);
        if (left_idx < 0) throw Error("join attribute " + q.join->left_attr + " not in schema");
    }

    for (size_t k = 0; k < rel.row_count(); ++k) {
        if (!full_scan && !bm.get(k)) continue;
        const TupleRow &t = rel.rows()[k];
        // policy filter first, then the query's own operators
        if (!prepared.eval_tuple(t, q.metadata, ctx, plan.per_guard, res.metrics)) continue;
        if (!row_matches_conditions(q.where, rel.schema(), t, ctx)) continue;
        if (semi) {
            const auto &lv = t.values[static_cast<size_t>(left_idx)];
            if (!lv || !semi->passes(*lv)) continue;
        }
        res.row_ids.push_back(t.id);
    }

    res.metrics.wall_time_us =
        std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
    return res;
}

std::vector<int64_t> brute_force_filter(const Relation &rel, const std::vector<Policy> &ps,
                                        const QueryMetadata &m, const EvalContext &ctx) {
    auto filtered = filter_policies_by_metadata(ps, m);
    CompiledPolicySet compiled(filtered, rel.schema());
    std::vector<int64_t> out;
    for (const auto &t : rel.rows())
        if (compiled.eval_expression(t, ctx).allowed) out.push_back(t.id);
    return out;
}

std::vector<int64_t> apply_query_filter(const Database &db, const QuerySpec &q) {
    const Relation &rel = db.get(q.relation);
    EvalContext ctx;
    std::optional<SemiJoin> semi;
    int left_idx = -1;
    if (q.join) {
        semi.emplace(db, *q.join, ctx);
        left_idx = rel.schema().index_of(q.join->left_attr);
    }
    std::vector<int64_t> out;
    for (const auto &t : rel.rows()) {
        if (!row_matches_conditions(q.where, rel.schema(), t, ctx)) continue;
        if (semi) {
            const auto &lv = t.values[static_cast<size_t>(left_idx)];
            if (!lv || !semi->passes(*lv)) continue;
        }
        out.push_back(t.id);
    }
    return out;
}

ExplainInfo explain(const QuerySpec &q, const HistogramStats &stats, const Relation &rel) {
    ExplainInfo info;
    double rows = static_cast<double>(stats.row_count);
    double best = rows + 1;
    for (size_t k = 0; k < q.where.size(); ++k) {
        const auto &pred = q.where[k];
        if (pred.derived() || !rel.has_index(pred.attr)) continue;
        double est = stats.estimate(pred);
        if (est < best) {
            best = est;
            info.index_scan = true;
            info.predicate_index = k;
            info.attr = pred.attr;
            info.selectivity_fraction = rows > 0 ? est / rows : 0.0;
        }
    }
    return info;
}

AggregateResult aggregate(const Database &db, const QuerySpec &q,
                          const std::vector<int64_t> &row_ids) {
    const Relation &rel = db.get(q.relation);
    AggregateResult out;
    auto value_at = [&](int64_t id, const std::string &attr) -> std::string {
        int idx = rel.schema().index_of(attr);
        if (idx < 0) throw Error("unknown attribute " + attr);
        const auto &v = rel.rows()[static_cast<size_t>(id)].values[static_cast<size_t>(idx)];
        return v ? v->to_string() : "";
    };

    if (q.agg.kind == Aggregation::None) {
        std::vector<std::string> cols = q.select_cols;
        if (q.select_star) {
            cols.clear();
            for (const auto &a : rel.schema().attributes()) cols.push_back(a.name);
        }
        out.header = cols;
        for (int64_t id : row_ids) {
            std::vector<std::string> row;
            for (const auto &c : cols) row.push_back(value_at(id, c));
            out.rows.push_back(std::move(row));
        }
        return out;
    }

    // COUNT(*) / COUNT(DISTINCT attr), optionally grouped
    std::map<std::vector<std::string>, std::set<std::string>> distinct_groups;
    std::map<std::vector<std::string>, int64_t> counts;
    for (int64_t id : row_ids) {
        std::vector<std::string> key;
        for (const auto &g : q.agg.group_by) key.push_back(value_at(id, g));
        if (q.agg.kind == Aggregation::CountDistinct)
            distinct_groups[key].insert(value_at(id, q.agg.attr));
        else
            counts[key]++;
    }
    out.header = q.agg.group_by;
    out.header.push_back(q.agg.kind == Aggregation::CountDistinct
                             ? "count_distinct_" + q.agg.attr
                             : "count");
    if (q.agg.kind == Aggregation::CountDistinct) {
        if (distinct_groups.empty() && q.agg.group_by.empty())
            out.rows.push_back({"0"});
        for (const auto &[key, vals] : distinct_groups) {
            auto row = key;
            row.push_back(std::to_string(vals.size()));
            out.rows.push_back(std::move(row));
        }
    } else {
        if (counts.empty() && q.agg.group_by.empty()) out.rows.push_back({"0"});
        for (const auto &[key, n] : counts) {
            auto row = key;
            row.push_back(std::to_string(n));
            out.rows.push_back(std::move(row));
        }
    }
    return out;
}

uint64_t result_hash(const std::vector<int64_t> &row_ids, const AggregateResult *agg) {
    uint64_t h = 1469598103934665603ull; // FNV-1a
    auto mix = [&](uint64_t v) {
        h ^= v;
        h *= 1099511628211ull;
    };
    for (int64_t id : row_ids) mix(static_cast<uint64_t>(id) + 0x9e3779b97f4a7c15ull);
    if (agg) {
        for (const auto &row : agg->rows)
            for (const auto &cell : row)
                for (char c : cell) mix(static_cast<uint64_t>(static_cast<unsigned char>(c)));
    }
    return h;
}

} // namespace sieve
