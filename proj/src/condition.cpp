#include "sieve/condition.hpp"

#include <algorithm>

namespace sieve {

const char *op_name(CompareOp op) {
    switch (op) {
    case CompareOp::Eq:
        return "=";
    case CompareOp::Neq:
        return "!=";
    case CompareOp::Lt:
        return "<";
    case CompareOp::Gt:
        return ">";
    case CompareOp::Ge:
        return ">=";
    case CompareOp::Le:
        return "<=";
    case CompareOp::In:
        return "IN";
    case CompareOp::Between:
        return "BETWEEN";
    }
    return "?";
}

std::optional<CompareOp> op_from_name(const std::string &name) {
    if (name == "=" || name == "==") return CompareOp::Eq;
    if (name == "!=" || name == "<>") return CompareOp::Neq;
    if (name == "<") return CompareOp::Lt;
    if (name == ">") return CompareOp::Gt;
    if (name == ">=") return CompareOp::Ge;
    if (name == "<=") return CompareOp::Le;
    if (name == "IN" || name == "in") return CompareOp::In;
    if (name == "BETWEEN" || name == "between") return CompareOp::Between;
    return std::nullopt;
}

bool ValueRange::contains(const AttrValue &v) const {
    if (low) {
        int c = compare_values(v, *low);
        if (c < 0 || (c == 0 && !low_closed)) return false;
    }
    if (high) {
        int c = compare_values(v, *high);
        if (c > 0 || (c == 0 && !high_closed)) return false;
    }
    return true;
}

bool ValueRange::empty() const {
    if (!low || !high) return false;
    int c = compare_values(*low, *high);
    if (c > 0) return true;
    if (c == 0) return !(low_closed && high_closed);
    return false;
}

bool ValueRange::is_point() const {
    return low && high && low_closed && high_closed && compare_values(*low, *high) == 0;
}

ValueRange range_intersection(const ValueRange &a, const ValueRange &b) {
    ValueRange r;
    // max of lows
    if (!a.low) {
        r.low = b.low;
        r.low_closed = b.low_closed;
    } else if (!b.low) {
        r.low = a.low;
        r.low_closed = a.low_closed;
    } else {
        int c = compare_values(*a.low, *b.low);
        if (c > 0 || (c == 0 && !a.low_closed)) {
            r.low = a.low;
            r.low_closed = a.low_closed;
        } else {
            r.low = b.low;
            r.low_closed = b.low_closed;
        }
    }
    // min of highs
    if (!a.high) {
        r.high = b.high;
        r.high_closed = b.high_closed;
    } else if (!b.high) {
        r.high = a.high;
        r.high_closed = a.high_closed;
    } else {
        int c = compare_values(*a.high, *b.high);
        if (c < 0 || (c == 0 && !a.high_closed)) {
            r.high = a.high;
            r.high_closed = a.high_closed;
        } else {
            r.high = b.high;
            r.high_closed = b.high_closed;
        }
    }
    return r;
}

bool ranges_intersect(const ValueRange &a, const ValueRange &b) {
    return !range_intersection(a, b).empty();
}

ValueRange range_hull(const ValueRange &a, const ValueRange &b) {
    ValueRange r;
    if (a.low && b.low) {
        int c = compare_values(*a.low, *b.low);
        if (c < 0 || (c == 0 && a.low_closed)) {
            r.low = a.low;
            r.low_closed = a.low_closed;
        } else {
            r.low = b.low;
            r.low_closed = b.low_closed;
        }
    } // else keep -inf
    if (a.high && b.high) {
        int c = compare_values(*a.high, *b.high);
        if (c > 0 || (c == 0 && a.high_closed)) {
            r.high = a.high;
            r.high_closed = a.high_closed;
        } else {
            r.high = b.high;
            r.high_closed = b.high_closed;
        }
    }
    return r;
}

bool range_subset(const ValueRange &inner, const ValueRange &outer) {
    if (inner.empty()) return true;
    if (outer.low) {
        if (!inner.low) return false;
        int c = compare_values(*inner.low, *outer.low);
        if (c < 0) return false;
        if (c == 0 && inner.low_closed && !outer.low_closed) return false;
    }
    if (outer.high) {
        if (!inner.high) return false;
        int c = compare_values(*inner.high, *outer.high);
        if (c > 0) return false;
        if (c == 0 && inner.high_closed && !outer.high_closed) return false;
    }
    return true;
}

bool range_equal(const ValueRange &a, const ValueRange &b) {
    return range_subset(a, b) && range_subset(b, a);
}

int range_order(const ValueRange &a, const ValueRange &b) {
    auto cmp_bound = [](const std::optional<AttrValue> &x, const std::optional<AttrValue> &y,
                        bool missing_is_low) {
        if (!x && !y) return 0;
        if (!x) return missing_is_low ? -1 : 1;
        if (!y) return missing_is_low ? 1 : -1;
        return compare_values(*x, *y);
    };
    int c = cmp_bound(a.low, b.low, true);
    if (c != 0) return c;
    // closed low sorts before open low at the same endpoint
    if (a.low && a.low_closed != b.low_closed) return a.low_closed ? -1 : 1;
    c = cmp_bound(a.high, b.high, false);
    if (c != 0) return c;
    if (a.high && a.high_closed != b.high_closed) return a.high_closed ? 1 : -1;
    return 0;
}

std::optional<ValueRange> ObjectCondition::as_range() const {
    if (derived()) return std::nullopt;
    switch (op) {
    case CompareOp::Eq:
        return ValueRange::point(values[0]);
    case CompareOp::Lt:
        return ValueRange{std::nullopt, true, values[0], false};
    case CompareOp::Le:
        return ValueRange{std::nullopt, true, values[0], true};
    case CompareOp::Gt:
        return ValueRange{values[0], false, std::nullopt, true};
    case CompareOp::Ge:
        return ValueRange{values[0], true, std::nullopt, true};
    case CompareOp::Between:
        return ValueRange{values[0], low_closed, values[1], high_closed};
    case CompareOp::Neq:
    case CompareOp::In:
        return std::nullopt;
    }
    return std::nullopt;
}

void ObjectCondition::check_valid() const {
    if (attr.empty()) throw Error("object condition without attribute");
    if (derived()) return;
    switch (op) {
    case CompareOp::In: {
        if (values.empty()) throw Error("IN list must be non-empty");
        for (size_t a = 0; a < values.size(); ++a)
            for (size_t b = a + 1; b < values.size(); ++b)
                if (values[a] == values[b]) throw Error("IN list contains duplicates");
        break;
    }
    case CompareOp::Between:
        if (values.size() != 2) throw Error("BETWEEN needs two bounds");
        if (compare_values(values[0], values[1]) > 0) throw Error("range low > high");
        break;
    default:
        if (values.size() != 1) throw Error("comparison needs one constant");
    }
}

namespace {
ObjectCondition simple_cond(std::string attr, CompareOp op, AttrValue v) {
    ObjectCondition oc;
    oc.attr = std::move(attr);
    oc.op = op;
    oc.values.push_back(std::move(v));
    return oc;
}
} // namespace

ObjectCondition ObjectCondition::eq(std::string attr, AttrValue v) {
    return simple_cond(std::move(attr), CompareOp::Eq, std::move(v));
}
ObjectCondition ObjectCondition::neq(std::string attr, AttrValue v) {
    return simple_cond(std::move(attr), CompareOp::Neq, std::move(v));
}
ObjectCondition ObjectCondition::lt(std::string attr, AttrValue v) {
    return simple_cond(std::move(attr), CompareOp::Lt, std::move(v));
}
ObjectCondition ObjectCondition::gt(std::string attr, AttrValue v) {
    return simple_cond(std::move(attr), CompareOp::Gt, std::move(v));
}
ObjectCondition ObjectCondition::ge(std::string attr, AttrValue v) {
    return simple_cond(std::move(attr), CompareOp::Ge, std::move(v));
}
ObjectCondition ObjectCondition::le(std::string attr, AttrValue v) {
    return simple_cond(std::move(attr), CompareOp::Le, std::move(v));
}
ObjectCondition ObjectCondition::in_list(std::string attr, std::vector<AttrValue> vs) {
    ObjectCondition oc;
    oc.attr = std::move(attr);
    oc.op = CompareOp::In;
    oc.values = std::move(vs);
    // dedup, preserving first occurrence order
    std::vector<AttrValue> out;
    for (auto &v : oc.values) {
        bool seen = false;
        for (auto &o : out)
            if (o == v) {
                seen = true;
                break;
            }
        if (!seen) out.push_back(v);
    }
    oc.values = std::move(out);
    return oc;
}
ObjectCondition ObjectCondition::between(std::string attr, AttrValue low, bool low_closed,
                                         AttrValue high, bool high_closed) {
    ObjectCondition oc;
    oc.attr = std::move(attr);
    oc.op = CompareOp::Between;
    oc.values = {std::move(low), std::move(high)};
    oc.low_closed = low_closed;
    oc.high_closed = high_closed;
    return oc;
}
ObjectCondition ObjectCondition::from_range(std::string attr, const ValueRange &r) {
    if (r.low && r.high) {
        if (r.is_point()) return eq(std::move(attr), *r.low);
        return between(std::move(attr), *r.low, r.low_closed, *r.high, r.high_closed);
    }
    if (r.low) return r.low_closed ? ge(std::move(attr), *r.low) : gt(std::move(attr), *r.low);
    if (r.high) return r.high_closed ? le(std::move(attr), *r.high) : lt(std::move(attr), *r.high);
    throw Error("unbounded range has no condition form");
}
ObjectCondition ObjectCondition::derived_cmp(std::string attr, CompareOp op, std::string subquery) {
    ObjectCondition oc;
    oc.attr = std::move(attr);
    oc.op = op;
    oc.subquery = std::move(subquery);
    return oc;
}

bool satisfies_op(const AttrValue &tv, CompareOp op, const std::vector<AttrValue> &values,
                  bool low_closed, bool high_closed) {
    switch (op) {
    case CompareOp::Eq:
        return compare_values(tv, values[0]) == 0;
    case CompareOp::Neq:
        return compare_values(tv, values[0]) != 0;
    case CompareOp::Lt:
        return compare_values(tv, values[0]) < 0;
    case CompareOp::Gt:
        return compare_values(tv, values[0]) > 0;
    case CompareOp::Ge:
        return compare_values(tv, values[0]) >= 0;
    case CompareOp::Le:
        return compare_values(tv, values[0]) <= 0;
    case CompareOp::In:
        return std::any_of(values.begin(), values.end(),
                           [&](const AttrValue &v) { return compare_values(tv, v) == 0; });
    case CompareOp::Between: {
        int cl = compare_values(tv, values[0]);
        if (cl < 0 || (cl == 0 && !low_closed)) return false;
        int ch = compare_values(tv, values[1]);
        if (ch > 0 || (ch == 0 && !high_closed)) return false;
        return true;
    }
    }
    return false;
}

} // namespace sieve
