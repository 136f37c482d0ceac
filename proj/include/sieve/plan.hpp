#pragma once

#include "sieve/guard.hpp"
#include "sieve/query.hpp"

namespace sieve {

// Picks the access strategy from estimated read costs:
//   cost(IndexGuards) = sum over guards of sel(guard) * c_r
//   cost(IndexQuery)  = sel(p) * c_r when the engine would index-scan p, else inf
// The cheaper of the two loses to LinearScan when its random-access reads
// exceed the sequential equivalent (random_access_factor * reads > rows).
StrategyPlan choose_scan_strategy(const QuerySpec &q, const GuardedPolicyExpression &gpe,
                                  const CostParams &cp, const HistogramStats &stats,
                                  const ExplainInfo &explain_info,
                                  double random_access_factor = 4.0);

} // namespace sieve
