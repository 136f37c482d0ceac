#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sieve/query.hpp"

namespace sieve {

// Boolean expression tree for WHERE clauses and rewritten policy bodies.
// Plain queries are conjunctive; OR trees and delta calls appear only in
// rewritten text.
struct SqlPred {
    std::string qualifier; // table alias, may be empty
    ObjectCondition cond;
    // set when the comparison value is an outer-tuple reference
    // (`outer.attr`) inside a policy sub-query
    std::string outer_attr;
};

struct DeltaCall {
    int64_t guard_id = 0;
    std::string querier;
    std::string purpose;
    std::vector<std::string> attrs;
};

struct BoolExpr {
    enum Kind : uint8_t { True, False, Pred, Delta, And, Or } kind = True;
    std::vector<BoolExpr> children; // And / Or
    SqlPred pred;                   // Pred
    DeltaCall delta;                // Delta

    static BoolExpr make_and(std::vector<BoolExpr> cs);
    static BoolExpr make_or(std::vector<BoolExpr> cs);
    static BoolExpr make_pred(SqlPred p);
};

struct TableRef {
    std::string name;
    std::string alias; // defaults to name
    enum Hint : uint8_t { NoHint, ForceIndex, IgnoreIndexes } hint = NoHint;
    std::string hint_index;
};

struct SelectItem {
    enum Kind : uint8_t { Star, Column, CountStar, CountDistinct } kind = Star;
    std::string qualifier;
    std::string name;
};

struct JoinClause {
    TableRef table;
    std::string left_qualifier, left_attr;
    std::string right_qualifier, right_attr;
};

struct SelectStmt {
    std::vector<SelectItem> items;
    TableRef from;
    std::optional<JoinClause> join;
    std::optional<BoolExpr> where;
    std::vector<std::pair<std::string, std::string>> group_by; // (qualifier, attr)
};

struct SqlQuery {
    std::optional<std::pair<std::string, std::string>> metadata; // querier, purpose
    struct WithClause {
        std::string alias;
        std::vector<SelectStmt> branches; // UNION of selects
    };
    std::optional<WithClause> with;
    SelectStmt main;
};

// Full grammar, including WITH/UNION/OR/hints/delta calls from rewrites.
SqlQuery parse_sql(const std::string &text);

// The plain supported query shape. Constructs outside it (OR, WITH, hints,
// delta) raise ParseError naming the construct. Metadata comes from a leading
// `/* querier=...; purpose=... */` comment when present; groups are resolved
// by the caller.
QuerySpec parse_query(const std::string &text);

// Canonical re-emission. parse(emit(parse(s))) is semantically identical.
std::string emit_queryspec(const QuerySpec &q, bool with_metadata_comment = true);
std::string emit_sql_query(const SqlQuery &q);
std::string sql_literal(const AttrValue &v);
std::string emit_condition(const ObjectCondition &oc, const std::string &qualifier = "");

} // namespace sieve
