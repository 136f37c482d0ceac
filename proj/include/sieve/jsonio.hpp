#pragma once

#include <string>
#include <vector>

#include "sieve/cost.hpp"
#include "sieve/policy.hpp"
#include "sieve/relation.hpp"

namespace sieve {

// Tagged value encoding: {"t": "int|decimal|date|time|string", "v": ...}
std::string value_to_json_string(const AttrValue &v);

std::string condition_to_json_string(const ObjectCondition &oc);
ObjectCondition condition_from_json_string(const std::string &s);

// One JSON object per policy per line, mirroring the policy/object-condition
// table columns: {id, relation, owner, querier, purpose, action, inserted_at,
// object_conditions: [...]}.
std::string policy_to_jsonl(const Policy &p);
Policy policy_from_jsonl(const std::string &line);
void write_policies_jsonl(const std::string &path, const std::vector<Policy> &ps);
std::vector<Policy> read_policies_jsonl(const std::string &path);

// CSV schema sidecar: attribute kinds and indexed attributes.
struct SchemaFile {
    std::string relation;
    Schema schema;
    std::vector<std::string> indexed;
};
void write_schema_json(const std::string &path, const std::string &relation, const Schema &schema,
                       const std::vector<std::string> &indexed);
SchemaFile read_schema_json(const std::string &path);
Relation load_relation_with_sidecar(const std::string &csv_path, const std::string &schema_path);

// cost_params.json sidecar: the five constants plus calibration metadata.
void write_cost_params(const std::string &path, const CostParams &cp);
CostParams read_cost_params(const std::string &path);

// Queries as JSON-lines of {"sql": ...} (metadata rides in the SQL comment).
void write_queries_jsonl(const std::string &path, const std::vector<std::string> &sql_texts);
std::vector<std::string> read_queries_jsonl(const std::string &path);

} // namespace sieve
