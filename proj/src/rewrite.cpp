#include "sieve/rewrite.hpp"

#include <algorithm>
#include <set>

namespace sieve {

const char *dialect_name(Dialect d) {
    switch (d) {
    case Dialect::Generic:
        return "generic";
    case Dialect::Hinted:
        return "hinted";
    case Dialect::Unhinted:
        return "unhinted";
    }
    return "?";
}

std::optional<Dialect> dialect_from_name(const std::string &name) {
    if (name == "generic") return Dialect::Generic;
    if (name == "hinted") return Dialect::Hinted;
    if (name == "unhinted") return Dialect::Unhinted;
    return std::nullopt;
}

namespace {

std::string index_name_for(const std::string &attr) {
    std::string out = "idx_";
    for (char c : attr) out += c == '-' ? '_' : c;
    return out;
}

} // namespace

RewrittenQuery rewrite(const QuerySpec &q, const GuardedPolicyExpression &gpe,
                       const StrategyPlan &plan) {
    if (!gpe.querier.empty() &&
        (gpe.querier != q.metadata.querier || gpe.purpose != q.metadata.purpose))
        throw PlanError("guarded expression built for (" + gpe.querier + ", " + gpe.purpose +
                        ") does not match query metadata (" + q.metadata.querier + ", " +
                        q.metadata.purpose + ")");
    if (plan.per_guard.size() != gpe.guards.size())
        throw PlanError("plan does not cover the guarded expression");

    RewrittenQuery rq;
    rq.main = q;
    rq.alias = q.relation + "_pol";
    rq.scan = plan.scan;
    if (plan.scan == ScanStrategy::IndexQuery) {
        if (plan.index_query_predicate >= q.where.size())
            throw PlanError("IndexQuery predicate index out of range");
        rq.index_query_attr = q.where[plan.index_query_predicate].attr;
    }
    rq.folded = q.where; // only predicates on the policy-bearing relation

    for (size_t k = 0; k < gpe.guards.size(); ++k) {
        RewrittenQuery::Branch b;
        b.guard_id = static_cast<int64_t>(k);
        b.guard = gpe.guards[k].guard;
        b.index_name = index_name_for(b.guard.attr);
        b.use_delta = plan.per_guard[k] == PartitionStrategy::Delta;
        b.partition = gpe.guards[k].partition;
        b.querier = q.metadata.querier;
        b.purpose = q.metadata.purpose;
        rq.branches.push_back(std::move(b));
    }
    std::stable_sort(rq.branches.begin(), rq.branches.end(),
                     [](const RewrittenQuery::Branch &a, const RewrittenQuery::Branch &b) {
                         if (a.guard.attr != b.guard.attr) return a.guard.attr < b.guard.attr;
                         auto ra = a.guard.as_range(), rb = b.guard.as_range();
                         if (ra && rb) return range_order(*ra, *rb) < 0;
                         return a.guard_id < b.guard_id;
                     });
    return rq;
}

namespace {

BoolExpr condition_expr(const ObjectCondition &oc) {
    SqlPred p;
    p.cond = oc;
    return BoolExpr::make_pred(std::move(p));
}

BoolExpr partition_expr(const RewrittenQuery::Branch &b) {
    if (b.use_delta) {
        BoolExpr e;
        e.kind = BoolExpr::Delta;
        e.delta.guard_id = b.guard_id;
        e.delta.querier = b.querier;
        e.delta.purpose = b.purpose;
        std::set<std::string> attrs;
        for (const auto &p : b.partition)
            for (const auto &oc : p.object_conditions) attrs.insert(oc.attr);
        e.delta.attrs.assign(attrs.begin(), attrs.end());
        return e;
    }
    std::vector<BoolExpr> policies;
    for (const auto &p : b.partition) {
        std::vector<BoolExpr> conds;
        for (const auto &oc : p.object_conditions) conds.push_back(condition_expr(oc));
        policies.push_back(BoolExpr::make_and(std::move(conds)));
    }
    return BoolExpr::make_or(std::move(policies));
}

// guard AND folded query predicates AND (partition | delta call)
BoolExpr branch_expr(const RewrittenQuery &rq, const RewrittenQuery::Branch &b) {
    std::vector<BoolExpr> conj;
    conj.push_back(condition_expr(b.guard));
    for (const auto &oc : rq.folded) conj.push_back(condition_expr(oc));
    conj.push_back(partition_expr(b));
    return BoolExpr::make_and(std::move(conj));
}

SelectStmt with_branch(const RewrittenQuery &rq, BoolExpr where, TableRef::Hint hint,
                       const std::string &hint_index) {
    SelectStmt st;
    st.items.push_back(SelectItem{SelectItem::Star, "", ""});
    st.from.name = rq.main.relation;
    st.from.alias = rq.main.relation;
    st.from.hint = hint;
    st.from.hint_index = hint_index;
    st.where = std::move(where);
    return st;
}

SelectStmt main_stmt(const RewrittenQuery &rq) {
    // the original query with the relation substituted by the WITH alias;
    // the original name is kept as the alias so qualified predicates and the
    // join stay valid
    QuerySpec q = rq.main;
    SelectStmt st;
    if (q.select_star) st.items.push_back(SelectItem{SelectItem::Star, "", ""});
    for (const auto &c : q.select_cols) st.items.push_back(SelectItem{SelectItem::Column, "", c});
    if (q.agg.kind == Aggregation::CountStar)
        st.items.push_back(SelectItem{SelectItem::CountStar, "", ""});
    if (q.agg.kind == Aggregation::CountDistinct)
        st.items.push_back(SelectItem{SelectItem::CountDistinct, "", q.agg.attr});
    if (st.items.empty()) st.items.push_back(SelectItem{SelectItem::Star, "", ""});
    st.from.name = rq.alias;
    st.from.alias = q.relation;
    if (q.join) {
        JoinClause jc;
        jc.table.name = q.join->relation;
        jc.table.alias = q.join->relation;
        jc.left_qualifier = q.relation;
        jc.left_attr = q.join->left_attr;
        jc.right_qualifier = q.join->relation;
        jc.right_attr = q.join->right_attr;
        st.join = std::move(jc);
    }
    std::vector<BoolExpr> conj;
    for (const auto &oc : q.where) {
        SqlPred p;
        p.qualifier = q.relation;
        p.cond = oc;
        conj.push_back(BoolExpr::make_pred(std::move(p)));
    }
    if (q.join)
        for (const auto &oc : q.join->predicates) {
            SqlPred p;
            p.qualifier = q.join->relation;
            p.cond = oc;
            conj.push_back(BoolExpr::make_pred(std::move(p)));
        }
    if (!conj.empty()) st.where = BoolExpr::make_and(std::move(conj));
    for (const auto &g : q.agg.group_by) st.group_by.emplace_back("", g);
    return st;
}

} // namespace

SqlQuery to_sql_query(const RewrittenQuery &rq, Dialect d) {
    SqlQuery out;
    if (!rq.main.metadata.querier.empty())
        out.metadata = std::make_pair(rq.main.metadata.querier, rq.main.metadata.purpose);

    SqlQuery::WithClause wc;
    wc.alias = rq.alias;

    bool hinted = d == Dialect::Hinted;
    if (rq.branches.empty()) {
        BoolExpr none;
        none.kind = BoolExpr::False;
        wc.branches.push_back(with_branch(rq, std::move(none),
                                          hinted ? TableRef::IgnoreIndexes : TableRef::NoHint, ""));
    } else if (hinted && rq.scan == ScanStrategy::IndexGuards) {
        // one UNION branch per guard, each forcing its guard's index
        for (const auto &b : rq.branches)
            wc.branches.push_back(
                with_branch(rq, branch_expr(rq, b), TableRef::ForceIndex, b.index_name));
    } else {
        std::vector<BoolExpr> ors;
        for (const auto &b : rq.branches) ors.push_back(branch_expr(rq, b));
        BoolExpr body = BoolExpr::make_or(std::move(ors));
        TableRef::Hint hint = TableRef::NoHint;
        std::string hint_index;
        if (hinted && rq.scan == ScanStrategy::IndexQuery) {
            hint = TableRef::ForceIndex;
            hint_index = index_name_for(rq.index_query_attr);
        } else if (hinted) {
            hint = TableRef::IgnoreIndexes;
        }
        wc.branches.push_back(with_branch(rq, std::move(body), hint, hint_index));
    }
    out.with = std::move(wc);
    out.main = main_stmt(rq);
    return out;
}

std::string emit_sql(const RewrittenQuery &rq, Dialect d) {
    return emit_sql_query(to_sql_query(rq, d));
}

} // namespace sieve
