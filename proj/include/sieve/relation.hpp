#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sieve/condition.hpp"

namespace sieve {

struct Attribute {
    std::string name;
    ValueKind kind;
};

class Schema {
public:
    Schema() = default;
    explicit Schema(std::vector<Attribute> attrs);

    int index_of(const std::string &name) const; // -1 when absent
    const Attribute &at(int idx) const { return attrs_[static_cast<size_t>(idx)]; }
    size_t size() const { return attrs_.size(); }
    const std::vector<Attribute> &attributes() const { return attrs_; }
    bool has(const std::string &name) const { return index_of(name) >= 0; }

private:
    std::vector<Attribute> attrs_;
    std::unordered_map<std::string, int> by_name_;
};

// Values aligned with the schema's attribute order; nullopt is SQL null.
using Row = std::vector<std::optional<AttrValue>>;

struct TupleRow {
    int64_t id = 0;
    Row values;
};

// Ordered secondary index: (value, row position) pairs sorted by value.
// Null values are not indexed (no condition matches them).
class SortedIndex {
public:
    void build(const std::vector<TupleRow> &rows, int attr_idx);
    // Row positions whose value falls in the range, in index order.
    std::vector<int32_t> probe(const ValueRange &r) const;
    size_t entry_count() const { return entries_.size(); }

private:
    std::vector<std::pair<AttrValue, int32_t>> entries_;
};

class Relation {
public:
    Relation() = default;
    Relation(std::string name, Schema schema) : name_(std::move(name)), schema_(std::move(schema)) {}

    const std::string &name() const { return name_; }
    const Schema &schema() const { return schema_; }
    const std::vector<TupleRow> &rows() const { return rows_; }
    size_t row_count() const { return rows_.size(); }

    bool has_index(const std::string &attr) const { return indexes_.count(attr) != 0; }
    const SortedIndex &index(const std::string &attr) const;
    std::vector<std::string> indexed_attrs() const;

    std::vector<int32_t> range_probe(const std::string &attr, const ValueRange &r) const;

    // Validates kinds, assigns stable row ids (positions), builds indexes on
    // `owner` plus the requested attributes. Throws LoadError on a kind
    // mismatch, reporting the offending row.
    static Relation load(std::string name, Schema schema, std::vector<TupleRow> rows,
                         const std::vector<std::string> &indexed_attrs);

    static Relation load_csv(std::string name, Schema schema, const std::string &csv_path,
                             const std::vector<std::string> &indexed_attrs);
    void write_csv(const std::string &csv_path) const;

private:
    std::string name_;
    Schema schema_;
    std::vector<TupleRow> rows_;
    std::map<std::string, SortedIndex> indexes_;
};

// The embedded engine's catalog: relations by name.
struct Database {
    std::map<std::string, Relation> relations;

    const Relation &get(const std::string &name) const;
    Relation &put(Relation r);
};

} // namespace sieve
