#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sieve {

// Calibrated evaluation constants, all in microseconds (alpha dimensionless).
// alpha defaults to 1.0 before calibration: the conservative upper bound that
// never underestimates evaluation cost.
struct CostParams {
    double c_e = 1.0;     // per-tuple, per-policy evaluation cost
    double c_r = 4.0;     // per-tuple read cost
    double alpha = 1.0;   // fraction of a disjunction checked before short-circuit, (0, 1]
    double udf_inv = 0.0; // delta invocation overhead per tuple
    double udf_exec = 0.0; // delta execution cost per policy checked

    // Calibration metadata for the JSON sidecar.
    int64_t sample_rows = 0;
    int64_t sample_policies = 0;
    int64_t calibrated_at = 0; // unix seconds, 0 = defaults

    // Eq. threshold for merging overlapping candidate ranges.
    double merge_threshold() const { return c_e / (c_r + c_e); }
};

enum class PartitionStrategy : uint8_t { Inline, Delta };
enum class ScanStrategy : uint8_t { LinearScan, IndexQuery, IndexGuards };

const char *scan_strategy_name(ScanStrategy s);
const char *partition_strategy_name(PartitionStrategy s);

// Output of the engine's EXPLAIN: the access path it would pick for the query
// predicates alone, and that predicate's selectivity fraction.
struct ExplainInfo {
    bool index_scan = false;
    size_t predicate_index = 0; // position in QuerySpec.where
    std::string attr;
    double selectivity_fraction = 1.0;
};

// The rewrite decision record for one (query, guarded expression) pair.
struct StrategyPlan {
    ScanStrategy scan = ScanStrategy::LinearScan;
    size_t index_query_predicate = 0; // valid when scan == IndexQuery
    std::vector<PartitionStrategy> per_guard;

    struct Costs {
        double linear_scan = 0;
        double index_query = 0;
        double index_guards = 0;
    } estimated;
};

} // namespace sieve
