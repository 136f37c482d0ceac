#include "sieve/guard.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sieve {

size_t GuardedPolicyExpression::policy_count() const {
    size_t n = 0;
    for (const auto &g : guards) n += g.partition.size();
    return n;
}

namespace {

bool covered_union(std::vector<int64_t> &dst, const std::vector<int64_t> &src) {
    std::vector<int64_t> out;
    out.reserve(dst.size() + src.size());
    std::set_union(dst.begin(), dst.end(), src.begin(), src.end(), std::back_inserter(out));
    bool changed = out.size() != dst.size();
    dst = std::move(out);
    return changed;
}

} // namespace

std::map<std::string, std::vector<CandidateGuard>>
collect_candidates(const std::vector<Policy> &ps, const std::vector<std::string> &indexed_attrs,
                   const HistogramStats &stats, const std::string &owner_attr) {
    std::map<std::string, std::vector<CandidateGuard>> by_attr;
    auto indexed = [&](const std::string &a) {
        return std::find(indexed_attrs.begin(), indexed_attrs.end(), a) != indexed_attrs.end();
    };

    for (const auto &p : ps) {
        for (const auto &oc : p.object_conditions) {
            bool is_owner = oc.attr == owner_attr && oc.op == CompareOp::Eq && !oc.derived();
            if (!is_owner) {
                if (oc.derived() || !indexed(oc.attr)) continue;
                if (!oc.as_range()) continue; // != and IN are not guard material
            }
            CandidateGuard cg;
            cg.attr = oc.attr;
            cg.range = *oc.as_range();
            cg.covered = {p.id};
            by_attr[oc.attr].push_back(std::move(cg));
        }
    }

    for (auto &[attr, cands] : by_attr) {
        std::sort(cands.begin(), cands.end(), [](const CandidateGuard &a, const CandidateGuard &b) {
            int c = range_order(a.range, b.range);
            if (c != 0) return c < 0;
            return a.covered < b.covered;
        });
        // identical predicates become one candidate covering all their policies
        std::vector<CandidateGuard> coalesced;
        for (auto &c : cands) {
            if (!coalesced.empty() && range_equal(coalesced.back().range, c.range))
                covered_union(coalesced.back().covered, c.covered);
            else
                coalesced.push_back(std::move(c));
        }
        for (auto &c : coalesced) c.estimated_cardinality = stats.estimate_range(attr, c.range);
        cands = std::move(coalesced);
    }
    return by_attr;
}

std::optional<CandidateGuard> merge_decision(const CandidateGuard &x, const CandidateGuard &y,
                                             const CostParams &cp, const HistogramStats &stats) {
    if (x.attr != y.attr) return std::nullopt;
    ValueRange inter = range_intersection(x.range, y.range);
    if (inter.empty()) return std::nullopt; // disjoint ranges never merge
    ValueRange hull = range_hull(x.range, y.range);
    double sel_inter = stats.estimate_range(x.attr, inter);
    double sel_union = stats.estimate_range(x.attr, hull);
    // sel_inter / sel_union > c_e / (c_r + c_e), cross-multiplied
    if (!(sel_inter * (cp.c_r + cp.c_e) > cp.c_e * sel_union)) return std::nullopt;

    CandidateGuard merged;
    merged.attr = x.attr;
    merged.range = hull;
    merged.covered = x.covered;
    covered_union(merged.covered, y.covered);
    merged.estimated_cardinality = sel_union;
    return merged;
}

std::vector<CandidateGuard> generate_candidate_guards(const std::vector<Policy> &ps,
                                                      const std::vector<std::string> &indexed_attrs,
                                                      const CostParams &cp,
                                                      const HistogramStats &stats,
                                                      const std::string &owner_attr) {
    auto by_attr = collect_candidates(ps, indexed_attrs, stats, owner_attr);
    std::vector<CandidateGuard> out;
    for (auto &[attr, cands] : by_attr) {
        for (const auto &c : cands) out.push_back(c);
        std::vector<CandidateGuard> merges;
        for (size_t i = 0; i < cands.size(); ++i) {
            CandidateGuard cur = cands[i];
            for (size_t j = i + 1; j < cands.size(); ++j) {
                // candidates are sorted by left endpoint: once the original
                // candidate is disjoint from cands[j], it is disjoint from all
                // that follow, and no transitive merge can be beneficial
                if (!ranges_intersect(cands[i].range, cands[j].range)) break;
                auto m = merge_decision(cur, cands[j], cp, stats);
                if (m) {
                    cur = std::move(*m);
                    merges.push_back(cur);
                }
            }
        }
        // keep only merges that are not duplicates of existing candidates
        for (auto &m : merges) {
            bool dup = false;
            for (const auto &e : out)
                if (e.attr == m.attr && range_equal(e.range, m.range) && e.covered == m.covered) {
                    dup = true;
                    break;
                }
            if (!dup) out.push_back(std::move(m));
        }
    }
    return out;
}

GuardScore score_candidate(double cardinality, size_t partition_size, double relation_size,
                           const CostParams &cp) {
    GuardScore s;
    double n = static_cast<double>(partition_size);
    s.cost = cardinality * (cp.c_r + cp.alpha * n * cp.c_e);
    s.benefit = cp.c_e * n * (relation_size - cardinality);
    double read_cost = cardinality * cp.c_r;
    s.utility = read_cost > 0 ? s.benefit / read_cost : std::numeric_limits<double>::infinity();
    return s;
}

GuardScore score_guard(const GuardedExpression &g, double relation_size, const CostParams &cp) {
    if (g.partition.empty()) throw Error("score_guard: empty partition");
    return score_candidate(g.estimated_cardinality, g.partition.size(), relation_size, cp);
}

namespace {

// Deterministic extraction order: utility desc, then smaller cardinality,
// then (attr, low, high).
bool better_candidate(const CandidateGuard &a, GuardScore sa, const CandidateGuard &b,
                      GuardScore sb) {
    if (sa.utility != sb.utility) return sa.utility > sb.utility;
    if (a.estimated_cardinality != b.estimated_cardinality)
        return a.estimated_cardinality < b.estimated_cardinality;
    if (a.attr != b.attr) return a.attr < b.attr;
    int c = range_order(a.range, b.range);
    if (c != 0) return c < 0;
    return a.covered < b.covered;
}

} // namespace

GuardedPolicyExpression select_guards(std::vector<CandidateGuard> cands,
                                      const std::vector<Policy> &ps, const CostParams &cp,
                                      const HistogramStats &stats, double relation_size) {
    (void)stats;
    std::map<int64_t, const Policy *> by_id;
    for (const auto &p : ps) by_id[p.id] = &p;

    GuardedPolicyExpression gpe;
    size_t covered_total = 0;
    std::vector<bool> dead(cands.size(), false);
    size_t alive = cands.size();

    while (covered_total < ps.size() && alive > 0) {
        size_t best = cands.size();
        GuardScore best_score;
        for (size_t k = 0; k < cands.size(); ++k) {
            if (dead[k]) continue;
            GuardScore s =
                score_candidate(cands[k].estimated_cardinality, cands[k].covered.size(),
                                relation_size, cp);
            if (best == cands.size() || better_candidate(cands[k], s, cands[best], best_score)) {
                best = k;
                best_score = s;
            }
        }
        if (best == cands.size()) break;

        CandidateGuard &g = cands[best];
        GuardedExpression ge;
        ge.guard = g.predicate();
        ge.guard_range = g.range;
        ge.estimated_cardinality = g.estimated_cardinality;
        for (int64_t id : g.covered) {
            auto it = by_id.find(id);
            if (it != by_id.end()) ge.partition.push_back(*it->second);
        }
        covered_total += g.covered.size();
        gpe.guards.push_back(std::move(ge));
        dead[best] = true;
        --alive;

        for (size_t k = 0; k < cands.size(); ++k) {
            if (dead[k]) continue;
            std::vector<int64_t> rest;
            std::set_difference(cands[k].covered.begin(), cands[k].covered.end(),
                                g.covered.begin(), g.covered.end(), std::back_inserter(rest));
            if (rest.size() != cands[k].covered.size()) cands[k].covered = std::move(rest);
            if (cands[k].covered.empty()) {
                dead[k] = true;
                --alive;
            }
        }
    }
    return gpe;
}

GuardedPolicyExpression build_guarded_expression(const std::vector<Policy> &ps,
                                                 const QueryMetadata &m,
                                                 const std::string &relation,
                                                 const std::vector<std::string> &indexed_attrs,
                                                 const CostParams &cp, const HistogramStats &stats,
                                                 const std::string &owner_attr) {
    GuardedPolicyExpression gpe;
    if (!ps.empty()) {
        auto cands = generate_candidate_guards(ps, indexed_attrs, cp, stats, owner_attr);
        gpe = select_guards(std::move(cands), ps, cp, stats,
                            static_cast<double>(stats.row_count));
    }
    gpe.querier = m.querier;
    gpe.purpose = m.purpose;
    gpe.relation = relation;
    return gpe;
}

int64_t optimal_regeneration_interval(const MaintenanceParams &mp, const CostParams &cp) {
    if (!(mp.guard_gen_cost > 0) || !(mp.policy_rate > 0) || !(mp.query_rate > 0) ||
        !(mp.guard_cardinality > 0))
        throw ParameterError("maintenance parameters must be strictly positive");
    if (!(cp.alpha > 0) || !(cp.c_e > 0))
        throw ParameterError("alpha and c_e must be strictly positive");
    double k = std::sqrt(4.0 * mp.guard_gen_cost /
                         (mp.guard_cardinality * cp.alpha * cp.c_e * mp.queries_per_insertion()));
    return std::max<int64_t>(1, std::llround(k));
}

PartitionStrategy choose_partition_strategy(const GuardedExpression &g, const CostParams &cp) {
    std::set<std::string> owners;
    for (const auto &p : g.partition) owners.insert(p.owner);
    double n = static_cast<double>(g.partition.size());
    double expected_checked = owners.empty() ? n : n / static_cast<double>(owners.size());
    double delta_cost = cp.udf_inv + cp.udf_exec * expected_checked;
    double inline_cost = cp.alpha * n * cp.c_e;
    return delta_cost < inline_cost ? PartitionStrategy::Delta : PartitionStrategy::Inline;
}

void assign_partition_strategies(GuardedPolicyExpression &gpe, const CostParams &cp) {
    for (auto &g : gpe.guards) g.strategy = choose_partition_strategy(g, cp);
}

} // namespace sieve
