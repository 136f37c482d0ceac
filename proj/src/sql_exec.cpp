#include "sieve/sql_exec.hpp"

#include <algorithm>
#include <chrono>
#include <functional>

namespace sieve {

namespace {

using Clock = std::chrono::steady_clock;

// Coerce predicate constants to the column kinds of the schema.
void bind_expr(BoolExpr &e, const Schema &schema) {
    switch (e.kind) {
    case BoolExpr::And:
    case BoolExpr::Or:
        for (auto &c : e.children) bind_expr(c, schema);
        return;
    case BoolExpr::Pred: {
        auto &cond = e.pred.cond;
        int idx = schema.index_of(cond.attr);
        if (idx < 0) throw Error("attribute " + cond.attr + " not in schema");
        ValueKind want = schema.at(idx).kind;
        for (auto &v : cond.values) {
            if (v.kind == want) continue;
            auto coerced = v.coerce_to(want);
            if (!coerced)
                throw TypeError("cannot bind " + std::string(kind_name(v.kind)) + " literal to " +
                                cond.attr);
            v = *coerced;
        }
        return;
    }
    default:
        return;
    }
}

struct DeltaBinding {
    DeltaEvaluator eval;
    QueryMetadata metadata;
};

struct WithEvalContext {
    EvalContext eval;
    const std::map<int64_t, DeltaBinding> *deltas = nullptr;
    ExecMetrics *metrics = nullptr;
};

bool eval_expr(const BoolExpr &e, const Schema &schema, const TupleRow &t,
               const WithEvalContext &wc) {
    switch (e.kind) {
    case BoolExpr::True:
        return true;
    case BoolExpr::False:
        return false;
    case BoolExpr::And:
        for (const auto &c : e.children)
            if (!eval_expr(c, schema, t, wc)) return false;
        return true;
    case BoolExpr::Or:
        for (const auto &c : e.children)
            if (eval_expr(c, schema, t, wc)) return true;
        return false;
    case BoolExpr::Pred:
        if (!e.pred.outer_attr.empty())
            throw Error("unbound outer reference on " + e.pred.cond.attr);
        return eval_condition_with_groups(e.pred.cond, schema, t, wc.eval);
    case BoolExpr::Delta: {
        if (!wc.deltas) throw Error("sieve_delta call without a guarded expression");
        auto it = wc.deltas->find(e.delta.guard_id);
        if (it == wc.deltas->end())
            throw Error("sieve_delta references unknown guard " +
                        std::to_string(e.delta.guard_id));
        if (wc.metrics) ++wc.metrics->delta_invocations;
        auto out = it->second.eval.eval(it->second.metadata, t, wc.eval);
        if (wc.metrics) wc.metrics->policy_evaluations += out.checks_performed;
        return out.allowed;
    }
    }
    return false;
}

// top-level conjuncts of the main statement's WHERE, split by table alias
struct MainPredicates {
    std::vector<BoolExpr> base;  // on the FROM table (alias-qualified or bare)
    std::vector<SqlPred> joined; // on the JOIN table
};

void split_main_where(const BoolExpr &e, const SelectStmt &st, MainPredicates &out) {
    if (e.kind == BoolExpr::And) {
        for (const auto &c : e.children) split_main_where(c, st, out);
        return;
    }
    if (e.kind == BoolExpr::Pred && st.join) {
        const auto &q = e.pred.qualifier;
        if (!q.empty() && (q == st.join->table.alias || q == st.join->table.name)) {
            out.joined.push_back(e.pred);
            return;
        }
    }
    out.base.push_back(e);
}

} // namespace

QueryResult execute_sql(const Database &db, const SqlQuery &sq, const SqlExecOptions &opts) {
    auto t0 = Clock::now();
    QueryResult res;

    EvalContext ectx{opts.derived, opts.groups};

    const SelectStmt &main = sq.main;
    const Relation *base = nullptr;
    std::vector<uint8_t> compliant; // restriction produced by the WITH clause

    if (sq.with) {
        if (main.from.name != sq.with->alias)
            throw Error("main query does not read the WITH alias " + sq.with->alias);
        if (sq.with->branches.empty()) throw Error("empty WITH clause");
        base = &db.get(sq.with->branches[0].from.name);

        // delta dispatch tables, one per referenced guard
        std::map<int64_t, DeltaBinding> deltas;
        if (opts.gpe) {
            for (size_t k = 0; k < opts.gpe->guards.size(); ++k) {
                DeltaBinding b;
                b.eval = DeltaEvaluator(opts.gpe->guards[k].partition, base->schema(), opts.groups);
                deltas.emplace(static_cast<int64_t>(k), std::move(b));
            }
        }
        WithEvalContext wc{ectx, &deltas, &res.metrics};

        compliant.assign(base->row_count(), 0);
        for (const auto &branch : sq.with->branches) {
            if (branch.from.name != base->name())
                throw Error("WITH branches must read one relation");
            if (!branch.where) throw Error("WITH branch without WHERE");
            BoolExpr body = *branch.where;
            bind_expr(body, base->schema());
            // bind delta metadata lazily from the call site
            std::function<void(const BoolExpr &)> bind_delta = [&](const BoolExpr &e) {
                if (e.kind == BoolExpr::Delta) {
                    auto it = deltas.find(e.delta.guard_id);
                    if (it != deltas.end()) {
                        it->second.metadata = QueryMetadata{e.delta.querier, e.delta.purpose, {}};
                        if (opts.groups)
                            it->second.metadata.groups = opts.groups->groups_of(e.delta.querier);
                    }
                }
                for (const auto &c : e.children) bind_delta(c);
            };
            bind_delta(body);
            for (size_t k = 0; k < base->row_count(); ++k) {
                if (compliant[k]) continue; // UNION keyed on row id
                if (eval_expr(body, base->schema(), base->rows()[k], wc)) compliant[k] = 1;
            }
            res.metrics.tuples_read += static_cast<int64_t>(base->row_count());
        }
    } else {
        base = &db.get(main.from.name);
    }

    MainPredicates preds;
    if (main.where) {
        split_main_where(*main.where, main, preds);
        for (auto &e : preds.base) bind_expr(e, base->schema());
    }

    const Relation *join_rel = nullptr;
    int base_join_idx = -1, join_key_idx = -1;
    std::vector<ObjectCondition> join_conds;
    if (main.join) {
        join_rel = &db.get(main.join->table.name);
        // orient the equi-join
        auto on_base = [&](const std::string &q) {
            return q.empty() || q == main.from.alias || q == main.from.name;
        };
        std::string base_attr =
            on_base(main.join->left_qualifier) ? main.join->left_attr : main.join->right_attr;
        std::string join_attr =
            on_base(main.join->left_qualifier) ? main.join->right_attr : main.join->left_attr;
        base_join_idx = base->schema().index_of(base_attr);
        join_key_idx = join_rel->schema().index_of(join_attr);
        if (base_join_idx < 0 || join_key_idx < 0) throw Error("join attributes not in schema");
        for (const SqlPred &p : preds.joined) {
            ObjectCondition oc = p.cond;
            int idx = join_rel->schema().index_of(oc.attr);
            if (idx < 0) throw Error("attribute " + oc.attr + " not in join schema");
            ValueKind want = join_rel->schema().at(idx).kind;
            for (auto &v : oc.values) {
                if (v.kind != want) {
                    auto c = v.coerce_to(want);
                    if (!c) throw TypeError("cannot bind join predicate on " + oc.attr);
                    v = *c;
                }
            }
            join_conds.push_back(std::move(oc));
        }
    }

    auto join_passes = [&](const AttrValue &key) {
        if (join_rel->has_index(join_rel->schema().at(join_key_idx).name)) {
            for (int32_t r :
                 join_rel->range_probe(join_rel->schema().at(join_key_idx).name,
                                       ValueRange::point(key))) {
                const TupleRow &jt = join_rel->rows()[static_cast<size_t>(r)];
                bool ok = true;
                for (const auto &oc : join_conds)
                    if (!eval_object_condition(oc, join_rel->schema(), jt)) {
                        ok = false;
                        break;
                    }
                if (ok) return true;
            }
            return false;
        }
        for (const auto &jt : join_rel->rows()) {
            const auto &kv = jt.values[static_cast<size_t>(join_key_idx)];
            if (!kv || compare_values(*kv, key) != 0) continue;
            bool ok = true;
            for (const auto &oc : join_conds)
                if (!eval_object_condition(oc, join_rel->schema(), jt)) {
                    ok = false;
                    break;
                }
            if (ok) return true;
        }
        return false;
    };

    WithEvalContext main_wc{ectx, nullptr, &res.metrics};
    for (size_t k = 0; k < base->row_count(); ++k) {
        if (sq.with && !compliant[k]) continue;
        const TupleRow &t = base->rows()[k];
        bool ok = true;
        for (const BoolExpr &e : preds.base)
            if (!eval_expr(e, base->schema(), t, main_wc)) {
                ok = false;
                break;
            }
        if (!ok) continue;
        if (join_rel) {
            const auto &key = t.values[static_cast<size_t>(base_join_idx)];
            if (!key || !join_passes(*key)) continue;
        }
        res.row_ids.push_back(t.id);
    }
    if (!sq.with) res.metrics.tuples_read += static_cast<int64_t>(base->row_count());

    res.metrics.wall_time_us =
        std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
    return res;
}

QueryResult execute_sql_text(const Database &db, const std::string &text,
                             const SqlExecOptions &opts) {
    return execute_sql(db, parse_sql(text), opts);
}

std::vector<AttrValue> EngineDerivedEvaluator::evaluate(const std::string &subquery,
                                                        const Schema &outer_schema,
                                                        const TupleRow &t) const {
    SqlQuery parsed;
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = cache_.find(subquery);
        if (it == cache_.end()) it = cache_.emplace(subquery, parse_sql(subquery)).first;
        parsed = it->second;
    }
    if (parsed.with) throw Error("sub-query cannot use WITH");
    if (parsed.main.items.size() != 1 || parsed.main.items[0].kind != SelectItem::Column)
        throw Error("sub-query must select exactly one column");

    // bind outer.attr references to the current tuple
    bool null_binding = false;
    std::function<void(BoolExpr &)> bind = [&](BoolExpr &e) {
        for (auto &c : e.children) bind(c);
        if (e.kind != BoolExpr::Pred || e.pred.outer_attr.empty()) return;
        int idx = outer_schema.index_of(e.pred.outer_attr);
        if (idx < 0) throw Error("outer attribute " + e.pred.outer_attr + " not in schema");
        const auto &v = t.values[static_cast<size_t>(idx)];
        if (!v) {
            null_binding = true;
            return;
        }
        e.pred.cond.values = {*v};
        e.pred.outer_attr.clear();
    };
    if (parsed.main.where) bind(*parsed.main.where);
    if (null_binding) return {}; // null bindings select nothing

    SqlExecOptions opts;
    auto res = execute_sql(*db_, parsed, opts);

    const Relation &rel = db_->get(parsed.main.from.name);
    int col = rel.schema().index_of(parsed.main.items[0].name);
    if (col < 0) throw Error("sub-query column " + parsed.main.items[0].name + " not in schema");
    std::vector<AttrValue> out;
    for (int64_t id : res.row_ids) {
        const auto &v = rel.rows()[static_cast<size_t>(id)].values[static_cast<size_t>(col)];
        if (v) out.push_back(*v);
    }
    return out;
}

} // namespace sieve
