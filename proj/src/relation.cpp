#include "sieve/relation.hpp"

#include <algorithm>
#include <fstream>

namespace sieve {

Schema::Schema(std::vector<Attribute> attrs) : attrs_(std::move(attrs)) {
    for (size_t k = 0; k < attrs_.size(); ++k) by_name_[attrs_[k].name] = static_cast<int>(k);
}

int Schema::index_of(const std::string &name) const {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? -1 : it->second;
}

void SortedIndex::build(const std::vector<TupleRow> &rows, int attr_idx) {
    entries_.clear();
    entries_.reserve(rows.size());
    for (size_t k = 0; k < rows.size(); ++k) {
        const auto &v = rows[k].values[static_cast<size_t>(attr_idx)];
        if (v) entries_.emplace_back(*v, static_cast<int32_t>(k));
    }
    std::sort(entries_.begin(), entries_.end(), [](const auto &a, const auto &b) {
        int c = compare_values(a.first, b.first);
        return c != 0 ? c < 0 : a.second < b.second;
    });
}

std::vector<int32_t> SortedIndex::probe(const ValueRange &r) const {
    if (r.empty()) return {};
    auto lo = entries_.begin();
    if (r.low) {
        lo = std::lower_bound(entries_.begin(), entries_.end(), *r.low,
                              [](const auto &e, const AttrValue &v) {
                                  return compare_values(e.first, v) < 0;
                              });
        if (!r.low_closed)
            while (lo != entries_.end() && compare_values(lo->first, *r.low) == 0) ++lo;
    }
    auto hi = entries_.end();
    if (r.high) {
        hi = std::upper_bound(lo, entries_.end(), *r.high,
                              [](const AttrValue &v, const auto &e) {
                                  return compare_values(v, e.first) < 0;
                              });
        if (!r.high_closed)
            while (hi != lo && compare_values(std::prev(hi)->first, *r.high) == 0) --hi;
    }
    std::vector<int32_t> out;
    out.reserve(static_cast<size_t>(hi - lo));
    for (auto it = lo; it != hi; ++it) out.push_back(it->second);
    return out;
}

const SortedIndex &Relation::index(const std::string &attr) const {
    auto it = indexes_.find(attr);
    if (it == indexes_.end()) throw Error("no index on " + name_ + "." + attr);
    return it->second;
}

std::vector<std::string> Relation::indexed_attrs() const {
    std::vector<std::string> out;
    for (const auto &[a, _] : indexes_) out.push_back(a);
    return out;
}

std::vector<int32_t> Relation::range_probe(const std::string &attr, const ValueRange &r) const {
    return index(attr).probe(r);
}

Relation Relation::load(std::string name, Schema schema, std::vector<TupleRow> rows,
                        const std::vector<std::string> &indexed_attrs) {
    Relation rel(std::move(name), std::move(schema));
    for (size_t k = 0; k < rows.size(); ++k) {
        auto &row = rows[k];
        if (row.values.size() != rel.schema_.size())
            throw LoadError("row width " + std::to_string(row.values.size()) + " != schema width " +
                                std::to_string(rel.schema_.size()),
                            static_cast<int64_t>(k));
        for (size_t a = 0; a < row.values.size(); ++a) {
            const auto &v = row.values[a];
            if (v && v->kind != rel.schema_.at(static_cast<int>(a)).kind)
                throw LoadError("value kind " + std::string(kind_name(v->kind)) + " for attribute " +
                                    rel.schema_.at(static_cast<int>(a)).name + " (expected " +
                                    kind_name(rel.schema_.at(static_cast<int>(a)).kind) + ")",
                                static_cast<int64_t>(k));
        }
        row.id = static_cast<int64_t>(k);
    }
    rel.rows_ = std::move(rows);

    std::vector<std::string> to_index = indexed_attrs;
    if (rel.schema_.has("owner")) to_index.push_back("owner"); // always indexed
    std::sort(to_index.begin(), to_index.end());
    to_index.erase(std::unique(to_index.begin(), to_index.end()), to_index.end());
    for (const auto &attr : to_index) {
        int idx = rel.schema_.index_of(attr);
        if (idx < 0) throw Error("cannot index unknown attribute " + attr);
        rel.indexes_[attr].build(rel.rows_, idx);
    }
    return rel;
}

namespace {

std::vector<std::string> split_csv_line(const std::string &line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (size_t k = 0; k < line.size(); ++k) {
        char c = line[k];
        if (quoted) {
            if (c == '"') {
                if (k + 1 < line.size() && line[k + 1] == '"') {
                    cur += '"';
                    ++k;
                } else
                    quoted = false;
            } else
                cur += c;
        } else if (c == '"')
            quoted = true;
        else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else
            cur += c;
    }
    out.push_back(std::move(cur));
    return out;
}

std::string csv_escape(const std::string &v) {
    if (v.find_first_of(",\"\n") == std::string::npos) return v;
    std::string out = "\"";
    for (char c : v) {
        if (c == '"') out += "\"\"";
        out += c;
    }
    out += '"';
    return out;
}

} // namespace

Relation Relation::load_csv(std::string name, Schema schema, const std::string &csv_path,
                            const std::vector<std::string> &indexed_attrs) {
    std::ifstream in(csv_path);
    if (!in) throw Error("cannot open " + csv_path);
    std::string line;
    if (!std::getline(in, line)) throw Error("empty CSV " + csv_path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split_csv_line(line);
    std::vector<int> col_to_attr(header.size());
    for (size_t c = 0; c < header.size(); ++c) {
        col_to_attr[c] = schema.index_of(header[c]);
        if (col_to_attr[c] < 0) throw Error("CSV column " + header[c] + " not in schema");
    }
    std::vector<TupleRow> rows;
    int64_t lineno = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw LoadError("CSV row has " + std::to_string(cells.size()) + " cells", lineno);
        TupleRow row;
        row.values.assign(schema.size(), std::nullopt);
        for (size_t c = 0; c < cells.size(); ++c) {
            if (cells[c].empty()) continue; // null
            try {
                row.values[static_cast<size_t>(col_to_attr[c])] =
                    AttrValue::parse_as(schema.at(col_to_attr[c]).kind, cells[c]);
            } catch (const Error &e) {
                throw LoadError(std::string(e.what()) + " in column " + header[c], lineno);
            }
        }
        rows.push_back(std::move(row));
        ++lineno;
    }
    return load(std::move(name), std::move(schema), std::move(rows), indexed_attrs);
}

void Relation::write_csv(const std::string &csv_path) const {
    std::ofstream out(csv_path);
    if (!out) throw Error("cannot write " + csv_path);
    for (size_t a = 0; a < schema_.size(); ++a)
        out << (a ? "," : "") << schema_.at(static_cast<int>(a)).name;
    out << '\n';
    for (const auto &row : rows_) {
        for (size_t a = 0; a < row.values.size(); ++a) {
            if (a) out << ',';
            if (row.values[a]) out << csv_escape(row.values[a]->to_string());
        }
        out << '\n';
    }
}

const Relation &Database::get(const std::string &name) const {
    auto it = relations.find(name);
    if (it == relations.end()) throw Error("unknown relation " + name);
    return it->second;
}

Relation &Database::put(Relation r) {
    auto name = r.name();
    return relations.insert_or_assign(name, std::move(r)).first->second;
}

} // namespace sieve
