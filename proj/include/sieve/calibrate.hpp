#pragma once

#include "sieve/eval.hpp"
#include "sieve/cost.hpp"

namespace sieve {

struct CalibrationOptions {
    int repeats = 5; // median-of-5 timings after one warm-up
    bool verbose = false;
};

// Measures the cost constants on the live engine:
//   c_r    from a timed table scan
//   c_e    from (per-tuple time with policies - c_r) / policies, swept over
//          at least 3 policy-set sizes and 3 selectivity tiers
//   alpha  from short-circuit instrumentation
//   udf_*  from a least-squares fit of delta run time against the
//          policies checked per invocation
// Requires >= 10k sample rows and enough policies to sweep. A fit with
// non-positive coefficients raises CalibrationError with the data points.
CostParams calibrate(const Relation &sample, const std::vector<Policy> &sample_policies,
                     const GroupDirectory *groups = nullptr, const CalibrationOptions &opts = {});

} // namespace sieve
