#pragma once

#include <mutex>

#include "sieve/exec.hpp"
#include "sieve/sql.hpp"

namespace sieve {

struct SqlExecOptions {
    const GuardedPolicyExpression *gpe = nullptr; // resolves sieve_delta guard ids
    const GroupDirectory *groups = nullptr;
    const DerivedValueEvaluator *derived = nullptr;
};

// Runs a (possibly rewritten) query on the embedded engine. WITH bodies are
// evaluated per tuple; UNION branches deduplicate on row id; sieve_delta calls
// dispatch into the guarded expression's partitions. Index hints are accepted
// and ignored: they direct external engines, not this one.
QueryResult execute_sql(const Database &db, const SqlQuery &sq, const SqlExecOptions &opts = {});
QueryResult execute_sql_text(const Database &db, const std::string &text,
                             const SqlExecOptions &opts = {});

// Evaluates derived object-condition sub-queries against the engine.
// `outer.attr` references are bound to the current tuple's values; the result
// set is the projection of the sub-query's first select column.
class EngineDerivedEvaluator : public DerivedValueEvaluator {
public:
    explicit EngineDerivedEvaluator(const Database &db) : db_(&db) {}

    std::vector<AttrValue> evaluate(const std::string &subquery, const Schema &outer_schema,
                                    const TupleRow &t) const override;

private:
    const Database *db_;
    mutable std::mutex mu_;
    mutable std::map<std::string, SqlQuery> cache_;
};

} // namespace sieve
