#include "sieve/value.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace sieve {

const char *kind_name(ValueKind k) {
    switch (k) {
    case ValueKind::Int:
        return "int";
    case ValueKind::Decimal:
        return "decimal";
    case ValueKind::Date:
        return "date";
    case ValueKind::Time:
        return "time";
    case ValueKind::String:
        return "string";
    }
    return "?";
}

AttrValue AttrValue::integer(int64_t v) {
    AttrValue a;
    a.kind = ValueKind::Int;
    a.i = v;
    return a;
}

AttrValue AttrValue::decimal(double v) {
    AttrValue a;
    a.kind = ValueKind::Decimal;
    a.d = v;
    return a;
}

AttrValue AttrValue::date_days(int64_t days) {
    AttrValue a;
    a.kind = ValueKind::Date;
    a.i = days;
    return a;
}

AttrValue AttrValue::time_seconds(int64_t secs) {
    AttrValue a;
    a.kind = ValueKind::Time;
    a.i = secs;
    return a;
}

AttrValue AttrValue::str(std::string v) {
    AttrValue a;
    a.kind = ValueKind::String;
    a.s = std::move(v);
    return a;
}

namespace {

// Days since 1970-01-01 for a civil date (Howard Hinnant's algorithm).
int64_t days_from_civil(int y, unsigned m, unsigned day) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + day - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<int64_t>(era) * 146097 + static_cast<int64_t>(doe) - 719468;
}

void civil_from_days(int64_t z, int &y, unsigned &m, unsigned &day) {
    z += 719468;
    const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int64_t yr = static_cast<int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    day = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y = static_cast<int>(yr + (m <= 2));
}

bool all_digits(const std::string &s, size_t from, size_t to) {
    if (from >= to || to > s.size()) return false;
    for (size_t k = from; k < to; ++k)
        if (s[k] < '0' || s[k] > '9') return false;
    return true;
}

int to_int(const std::string &s, size_t from, size_t to) {
    int v = 0;
    for (size_t k = from; k < to; ++k) v = v * 10 + (s[k] - '0');
    return v;
}

} // namespace

AttrValue AttrValue::parse_date(const std::string &text) {
    // YYYY-MM-DD
    if (text.size() != 10 || text[4] != '-' || text[7] != '-' || !all_digits(text, 0, 4) ||
        !all_digits(text, 5, 7) || !all_digits(text, 8, 10))
        throw TypeError("invalid date literal: " + text);
    int y = to_int(text, 0, 4);
    unsigned m = static_cast<unsigned>(to_int(text, 5, 7));
    unsigned d = static_cast<unsigned>(to_int(text, 8, 10));
    if (m < 1 || m > 12 || d < 1 || d > 31) throw TypeError("invalid date literal: " + text);
    return date_days(days_from_civil(y, m, d));
}

AttrValue AttrValue::parse_time(const std::string &text) {
    // HH:MM or HH:MM:SS
    if (!(text.size() == 5 || text.size() == 8) || text[2] != ':' || !all_digits(text, 0, 2) ||
        !all_digits(text, 3, 5))
        throw TypeError("invalid time literal: " + text);
    int h = to_int(text, 0, 2);
    int m = to_int(text, 3, 5);
    int s = 0;
    if (text.size() == 8) {
        if (text[5] != ':' || !all_digits(text, 6, 8)) throw TypeError("invalid time literal: " + text);
        s = to_int(text, 6, 8);
    }
    if (h > 23 || m > 59 || s > 59) throw TypeError("invalid time literal: " + text);
    return time_seconds(h * 3600 + m * 60 + s);
}

AttrValue AttrValue::parse_as(ValueKind kind, const std::string &text) {
    switch (kind) {
    case ValueKind::Int: {
        int64_t v = 0;
        auto res = std::from_chars(text.data(), text.data() + text.size(), v);
        if (res.ec != std::errc() || res.ptr != text.data() + text.size())
            throw TypeError("invalid int literal: " + text);
        return integer(v);
    }
    case ValueKind::Decimal: {
        size_t used = 0;
        double v = std::stod(text, &used);
        if (used != text.size()) throw TypeError("invalid decimal literal: " + text);
        return decimal(v);
    }
    case ValueKind::Date:
        return parse_date(text);
    case ValueKind::Time:
        return parse_time(text);
    case ValueKind::String:
        return str(text);
    }
    throw TypeError("unknown kind");
}

double AttrValue::as_double() const {
    switch (kind) {
    case ValueKind::Int:
    case ValueKind::Date:
    case ValueKind::Time:
        return static_cast<double>(i);
    case ValueKind::Decimal:
        return d;
    case ValueKind::String:
        throw TypeError("string value has no numeric position");
    }
    return 0;
}

std::string format_date(int64_t days) {
    int y;
    unsigned m, d;
    civil_from_days(days, y, m, d);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", y, m, d);
    return buf;
}

std::string format_time(int64_t secs) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%02d:%02d:%02d", static_cast<int>(secs / 3600),
                  static_cast<int>((secs / 60) % 60), static_cast<int>(secs % 60));
    return buf;
}

std::string AttrValue::to_string() const {
    switch (kind) {
    case ValueKind::Int:
        return std::to_string(i);
    case ValueKind::Decimal: {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", d);
        return buf;
    }
    case ValueKind::Date:
        return format_date(i);
    case ValueKind::Time:
        return format_time(i);
    case ValueKind::String:
        return s;
    }
    return {};
}

std::optional<AttrValue> AttrValue::coerce_to(ValueKind target) const {
    if (kind == target) return *this;
    try {
        if (kind == ValueKind::String) return parse_as(target, s);
        if (kind == ValueKind::Int && target == ValueKind::Decimal)
            return decimal(static_cast<double>(i));
        if (kind == ValueKind::Decimal && target == ValueKind::Int && d == std::floor(d))
            return integer(static_cast<int64_t>(d));
    } catch (const Error &) {
        return std::nullopt;
    }
    return std::nullopt;
}

int compare_values(const AttrValue &a, const AttrValue &b) {
    if (a.kind != b.kind)
        throw TypeError(std::string("cannot compare ") + kind_name(a.kind) + " with " +
                        kind_name(b.kind));
    switch (a.kind) {
    case ValueKind::Int:
    case ValueKind::Date:
    case ValueKind::Time:
        return a.i < b.i ? -1 : (a.i > b.i ? 1 : 0);
    case ValueKind::Decimal:
        return a.d < b.d ? -1 : (a.d > b.d ? 1 : 0);
    case ValueKind::String:
        return a.s < b.s ? -1 : (a.s > b.s ? 1 : 0);
    }
    return 0;
}

} // namespace sieve
