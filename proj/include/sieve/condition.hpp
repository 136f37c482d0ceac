#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sieve/value.hpp"

namespace sieve {

enum class CompareOp : uint8_t { Eq, Neq, Lt, Gt, Ge, Le, In, Between };

const char *op_name(CompareOp op);
std::optional<CompareOp> op_from_name(const std::string &name);

// One-dimensional interval with optionally open/unbounded endpoints.
// A missing bound value means -inf (low) or +inf (high).
struct ValueRange {
    std::optional<AttrValue> low;
    bool low_closed = true;
    std::optional<AttrValue> high;
    bool high_closed = true;

    bool contains(const AttrValue &v) const;
    bool empty() const;
    bool is_point() const;

    static ValueRange point(const AttrValue &v) { return {v, true, v, true}; }
    static ValueRange all() { return {}; }
};

bool ranges_intersect(const ValueRange &a, const ValueRange &b);
ValueRange range_intersection(const ValueRange &a, const ValueRange &b);
// Smallest range covering both (ranges are merged pairwise only when they
// intersect, so the hull equals the union).
ValueRange range_hull(const ValueRange &a, const ValueRange &b);
bool range_subset(const ValueRange &inner, const ValueRange &outer);
bool range_equal(const ValueRange &a, const ValueRange &b);
// Ordering by (low endpoint, high endpoint), -inf first. Used to sort
// candidate guards and to emit SQL deterministically.
int range_order(const ValueRange &a, const ValueRange &b);

// A single attribute comparison inside a policy body.
//   Eq/Neq/Lt/Gt/Ge/Le: values[0] is the constant.
//   In:                 values is the (non-empty, deduplicated) list.
//   Between:            values[0]=low, values[1]=high with *_closed flags.
// A non-empty `subquery` marks a derived value: the text is evaluated per
// tuple and its result set replaces the constant.
struct ObjectCondition {
    std::string attr;
    CompareOp op = CompareOp::Eq;
    std::vector<AttrValue> values;
    bool low_closed = true;
    bool high_closed = true;
    std::string subquery;

    bool derived() const { return !subquery.empty(); }

    // Range view for guard machinery: Eq becomes the degenerate [v, v].
    // Neq, In and derived conditions have no contiguous range.
    std::optional<ValueRange> as_range() const;

    void check_valid() const; // throws on malformed ranges / empty IN lists

    static ObjectCondition eq(std::string attr, AttrValue v);
    static ObjectCondition neq(std::string attr, AttrValue v);
    static ObjectCondition lt(std::string attr, AttrValue v);
    static ObjectCondition gt(std::string attr, AttrValue v);
    static ObjectCondition ge(std::string attr, AttrValue v);
    static ObjectCondition le(std::string attr, AttrValue v);
    static ObjectCondition in_list(std::string attr, std::vector<AttrValue> vs);
    static ObjectCondition between(std::string attr, AttrValue low, bool low_closed, AttrValue high,
                                   bool high_closed);
    static ObjectCondition from_range(std::string attr, const ValueRange &r);
    static ObjectCondition derived_cmp(std::string attr, CompareOp op, std::string subquery);
};

// True when the tuple value satisfies (op, constant values). Null handling and
// derived values live in eval.cpp; this is the pure constant comparison.
bool satisfies_op(const AttrValue &tuple_value, CompareOp op, const std::vector<AttrValue> &values,
                  bool low_closed, bool high_closed);

} // namespace sieve
