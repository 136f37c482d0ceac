#include "sieve/jsonio.hpp"

#include <fstream>

#include "json.hpp"

namespace sieve {

using nlohmann::json;

namespace {

json value_to_json(const AttrValue &v) {
    switch (v.kind) {
    case ValueKind::Int:
        return json{{"t", "int"}, {"v", v.i}};
    case ValueKind::Decimal:
        return json{{"t", "decimal"}, {"v", v.d}};
    case ValueKind::Date:
        return json{{"t", "date"}, {"v", format_date(v.i)}};
    case ValueKind::Time:
        return json{{"t", "time"}, {"v", format_time(v.i)}};
    case ValueKind::String:
        return json{{"t", "string"}, {"v", v.s}};
    }
    return {};
}

AttrValue value_from_json(const json &j) {
    const std::string t = j.at("t").get<std::string>();
    if (t == "int") return AttrValue::integer(j.at("v").get<int64_t>());
    if (t == "decimal") return AttrValue::decimal(j.at("v").get<double>());
    if (t == "date") return AttrValue::parse_date(j.at("v").get<std::string>());
    if (t == "time") return AttrValue::parse_time(j.at("v").get<std::string>());
    if (t == "string") return AttrValue::str(j.at("v").get<std::string>());
    throw Error("unknown value tag " + t);
}

json condition_to_json(const ObjectCondition &oc) {
    json j;
    j["attr"] = oc.attr;
    j["op"] = op_name(oc.op);
    if (oc.derived()) {
        j["subquery"] = oc.subquery;
        return j;
    }
    switch (oc.op) {
    case CompareOp::In: {
        json vals = json::array();
        for (const auto &v : oc.values) vals.push_back(value_to_json(v));
        j["vals"] = std::move(vals);
        break;
    }
    case CompareOp::Between:
        j["low"] = value_to_json(oc.values[0]);
        j["high"] = value_to_json(oc.values[1]);
        j["low_closed"] = oc.low_closed;
        j["high_closed"] = oc.high_closed;
        break;
    default:
        j["val"] = value_to_json(oc.values[0]);
    }
    return j;
}

ObjectCondition condition_from_json(const json &j) {
    auto op = op_from_name(j.at("op").get<std::string>());
    if (!op) throw Error("unknown op " + j.at("op").get<std::string>());
    std::string attr = j.at("attr").get<std::string>();
    if (j.contains("subquery"))
        return ObjectCondition::derived_cmp(attr, *op, j.at("subquery").get<std::string>());
    ObjectCondition oc;
    oc.attr = std::move(attr);
    oc.op = *op;
    switch (*op) {
    case CompareOp::In:
        for (const auto &v : j.at("vals")) oc.values.push_back(value_from_json(v));
        break;
    case CompareOp::Between:
        oc.values.push_back(value_from_json(j.at("low")));
        oc.values.push_back(value_from_json(j.at("high")));
        oc.low_closed = j.value("low_closed", true);
        oc.high_closed = j.value("high_closed", true);
        break;
    default:
        oc.values.push_back(value_from_json(j.at("val")));
    }
    oc.check_valid();
    return oc;
}

} // namespace

std::string value_to_json_string(const AttrValue &v) { return value_to_json(v).dump(); }

std::string condition_to_json_string(const ObjectCondition &oc) {
    return condition_to_json(oc).dump();
}

ObjectCondition condition_from_json_string(const std::string &s) {
    return condition_from_json(json::parse(s));
}

std::string policy_to_jsonl(const Policy &p) {
    json j;
    j["id"] = p.id;
    j["relation"] = p.relation;
    j["owner"] = p.owner;
    j["querier"] = p.querier;
    j["purpose"] = p.purpose;
    j["action"] = "allow";
    j["inserted_at"] = p.inserted_at;
    json ocs = json::array();
    for (const auto &oc : p.object_conditions) ocs.push_back(condition_to_json(oc));
    j["object_conditions"] = std::move(ocs);
    return j.dump();
}

Policy policy_from_jsonl(const std::string &line) {
    json j = json::parse(line);
    Policy p;
    p.id = j.at("id").get<int64_t>();
    p.relation = j.at("relation").get<std::string>();
    p.owner = j.at("owner").get<std::string>();
    p.querier = j.at("querier").get<std::string>();
    p.purpose = j.at("purpose").get<std::string>();
    if (j.value("action", "allow") != "allow")
        throw Error("policy " + std::to_string(p.id) + ": only allow policies are stored");
    p.inserted_at = j.value("inserted_at", int64_t{0});
    for (const auto &oc : j.at("object_conditions")) p.object_conditions.push_back(condition_from_json(oc));
    return p;
}

void write_policies_jsonl(const std::string &path, const std::vector<Policy> &ps) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    for (const auto &p : ps) out << policy_to_jsonl(p) << '\n';
}

std::vector<Policy> read_policies_jsonl(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::vector<Policy> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(policy_from_jsonl(line));
    }
    return out;
}

void write_schema_json(const std::string &path, const std::string &relation, const Schema &schema,
                       const std::vector<std::string> &indexed) {
    json j;
    j["relation"] = relation;
    json attrs = json::array();
    for (const auto &a : schema.attributes())
        attrs.push_back(json{{"name", a.name}, {"kind", kind_name(a.kind)}});
    j["attributes"] = std::move(attrs);
    j["indexed"] = indexed;
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << j.dump(2) << '\n';
}

namespace {

ValueKind kind_from_name(const std::string &n) {
    if (n == "int") return ValueKind::Int;
    if (n == "decimal") return ValueKind::Decimal;
    if (n == "date") return ValueKind::Date;
    if (n == "time") return ValueKind::Time;
    if (n == "string") return ValueKind::String;
    throw Error("unknown kind " + n);
}

} // namespace

SchemaFile read_schema_json(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    json j = json::parse(in);
    SchemaFile f;
    f.relation = j.at("relation").get<std::string>();
    std::vector<Attribute> attrs;
    for (const auto &a : j.at("attributes"))
        attrs.push_back({a.at("name").get<std::string>(),
                         kind_from_name(a.at("kind").get<std::string>())});
    f.schema = Schema(std::move(attrs));
    for (const auto &i : j.at("indexed")) f.indexed.push_back(i.get<std::string>());
    return f;
}

Relation load_relation_with_sidecar(const std::string &csv_path, const std::string &schema_path) {
    SchemaFile f = read_schema_json(schema_path);
    return Relation::load_csv(f.relation, f.schema, csv_path, f.indexed);
}

void write_cost_params(const std::string &path, const CostParams &cp) {
    json j;
    j["c_e_us"] = cp.c_e;
    j["c_r_us"] = cp.c_r;
    j["alpha"] = cp.alpha;
    j["udf_inv_us"] = cp.udf_inv;
    j["udf_exec_us"] = cp.udf_exec;
    j["sample_rows"] = cp.sample_rows;
    j["sample_policies"] = cp.sample_policies;
    j["calibrated_at"] = cp.calibrated_at;
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << j.dump(2) << '\n';
}

CostParams read_cost_params(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    json j = json::parse(in);
    CostParams cp;
    cp.c_e = j.at("c_e_us").get<double>();
    cp.c_r = j.at("c_r_us").get<double>();
    cp.alpha = j.at("alpha").get<double>();
    cp.udf_inv = j.at("udf_inv_us").get<double>();
    cp.udf_exec = j.at("udf_exec_us").get<double>();
    cp.sample_rows = j.value("sample_rows", int64_t{0});
    cp.sample_policies = j.value("sample_policies", int64_t{0});
    cp.calibrated_at = j.value("calibrated_at", int64_t{0});
    return cp;
}

void write_queries_jsonl(const std::string &path, const std::vector<std::string> &sql_texts) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    for (const auto &s : sql_texts) out << json{{"sql", s}}.dump() << '\n';
}

std::vector<std::string> read_queries_jsonl(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(json::parse(line).at("sql").get<std::string>());
    }
    return out;
}

} // namespace sieve
