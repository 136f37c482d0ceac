#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "sieve/error.hpp"

namespace sieve {

enum class ValueKind : uint8_t { Int, Decimal, Date, Time, String };

const char *kind_name(ValueKind k);

// A typed constant. Date is stored as days since 1970-01-01, Time as seconds
// since midnight. Values of different kinds are not comparable.
struct AttrValue {
    ValueKind kind = ValueKind::Int;
    int64_t i = 0;   // Int, Date, Time
    double d = 0.0;  // Decimal
    std::string s;   // String

    static AttrValue integer(int64_t v);
    static AttrValue decimal(double v);
    static AttrValue date_days(int64_t days);
    static AttrValue time_seconds(int64_t secs); // caller keeps secs in [0, 86400)
    static AttrValue str(std::string v);

    // Lexical forms: "2020-03-01" -> Date, "09:30" / "09:30:15" -> Time.
    static AttrValue parse_date(const std::string &text);
    static AttrValue parse_time(const std::string &text);

    // Parses a CSV/JSON cell into the requested kind.
    static AttrValue parse_as(ValueKind kind, const std::string &text);

    bool numeric() const { return kind != ValueKind::String; }

    // Position on the numeric axis used by histograms. String values have none.
    double as_double() const;

    std::string to_string() const;

    // Best-effort conversion, used to bind query literals to typed columns
    // (e.g. a quoted '09:30' literal against a Time column).
    std::optional<AttrValue> coerce_to(ValueKind target) const;
};

// Total order within one kind; throws TypeError across kinds.
int compare_values(const AttrValue &a, const AttrValue &b);

inline bool operator==(const AttrValue &a, const AttrValue &b) {
    return a.kind == b.kind && compare_values(a, b) == 0;
}

std::string format_date(int64_t days);
std::string format_time(int64_t secs);

} // namespace sieve
