#include "sieve/calibrate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

namespace sieve {

namespace {

using Clock = std::chrono::steady_clock;

double median_of(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    return xs[xs.size() / 2];
}

// timed_us runs fn once as warm-up, then repeats times, returning the median
template <typename F> double timed_us(F &&fn, int repeats) {
    fn();
    std::vector<double> times;
    for (int k = 0; k < repeats; ++k) {
        auto t0 = Clock::now();
        fn();
        times.push_back(std::chrono::duration<double, std::micro>(Clock::now() - t0).count());
    }
    return median_of(std::move(times));
}

volatile int64_t g_sink = 0;

} // namespace

CostParams calibrate(const Relation &sample, const std::vector<Policy> &sample_policies,
                     const GroupDirectory *groups, const CalibrationOptions &opts) {
    if (sample.row_count() < 10000)
        throw CalibrationError("sample relation needs >= 10k tuples, has " +
                               std::to_string(sample.row_count()));
    if (sample_policies.size() < 12)
        throw CalibrationError("need >= 12 sample policies for the sweep");

    CostParams cp;
    const auto &rows = sample.rows();
    const double n_rows = static_cast<double>(rows.size());
    EvalContext ctx{nullptr, groups};

    // ---- c_r: table scan time per tuple
    double scan_us = timed_us(
        [&] {
            int64_t acc = 0;
            for (const auto &t : rows)
                for (const auto &v : t.values)
                    if (v) acc += static_cast<int64_t>(v->kind);
            g_sink = acc;
        },
        opts.repeats);
    cp.c_r = scan_us / n_rows;

    // ---- c_e and alpha: sweep policy-set sizes x selectivity tiers
    size_t max_size = std::min<size_t>(sample_policies.size(), 96);
    std::vector<size_t> sizes = {std::max<size_t>(4, max_size / 4),
                                 std::max<size_t>(6, max_size / 2), max_size};
    auto tier_policies = [&](int tier, size_t size) {
        std::vector<Policy> ps(sample_policies.begin(),
                               sample_policies.begin() + static_cast<long>(size));
        for (auto &p : ps) {
            if (tier == 0) {
                // no tuple matches: every policy is checked in full
                for (auto &oc : p.object_conditions)
                    if (oc.attr == "owner" && oc.op == CompareOp::Eq)
                        oc.values[0] = AttrValue::str("__nobody__");
            } else if (tier == 2) {
                // owner-only policies: frequent early matches
                p.object_conditions.erase(
                    std::remove_if(p.object_conditions.begin(), p.object_conditions.end(),
                                   [](const ObjectCondition &oc) { return oc.attr != "owner"; }),
                    p.object_conditions.end());
            }
        }
        return ps;
    };

    std::vector<double> ce_samples;
    double alpha_sum = 0;
    int64_t alpha_points = 0;
    for (int tier = 0; tier < 3; ++tier) {
        for (size_t size : sizes) {
            auto ps = tier_policies(tier, size);
            CompiledPolicySet compiled(ps, sample.schema());
            double eval_us = timed_us(
                [&] {
                    int64_t acc = 0;
                    for (const auto &t : rows) acc += compiled.eval_expression(t, ctx).allowed;
                    g_sink = acc;
                },
                opts.repeats);
            double per_tuple = eval_us / n_rows;
            ce_samples.push_back((per_tuple - cp.c_r) / static_cast<double>(size));
            if (tier == 1) {
                int64_t checks = 0;
                for (const auto &t : rows) checks += compiled.eval_expression(t, ctx).checks_performed;
                alpha_sum += static_cast<double>(checks) /
                             (n_rows * static_cast<double>(size));
                ++alpha_points;
            }
        }
    }
    cp.c_e = 0;
    for (double s : ce_samples) cp.c_e += s;
    cp.c_e /= static_cast<double>(ce_samples.size());
    cp.alpha = std::clamp(alpha_sum / static_cast<double>(alpha_points), 1e-6, 1.0);

    // ---- delta costs: least-squares fit of per-tuple time against the
    // policies checked per invocation (varied via policies per owner).
    // Queriers and purposes are normalized to one pair so the metadata filter
    // passes everything and the regressor spans a real range.
    std::vector<std::pair<double, double>> points; // (checks per call, us per call)
    for (int mult : {1, 4, 16}) {
        std::vector<Policy> ps;
        int64_t next_id = 1;
        size_t base = std::min<size_t>(sample_policies.size(), 32);
        for (size_t k = 0; k < base; ++k)
            for (int r = 0; r < mult; ++r) {
                Policy p = sample_policies[k];
                p.id = next_id++;
                p.querier = "__calibration__";
                p.purpose = "__calibration__";
                ps.push_back(std::move(p));
            }
        DeltaEvaluator ev(ps, sample.schema(), groups);
        QueryMetadata m{"__calibration__", "__calibration__", {}};

        int64_t checks = 0;
        for (const auto &t : rows) checks += ev.eval(m, t, ctx).checks_performed;
        double delta_us = timed_us(
            [&] {
                int64_t acc = 0;
                for (const auto &t : rows) acc += ev.eval(m, t, ctx).allowed;
                g_sink = acc;
            },
            opts.repeats);
        points.emplace_back(static_cast<double>(checks) / n_rows, delta_us / n_rows);
    }

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    double np = static_cast<double>(points.size());
    for (auto [x, y] : points) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double denom = np * sxx - sx * sx;
    if (std::abs(denom) < 1e-12) throw CalibrationError("delta fit is degenerate (no spread)");
    double slope = (np * sxy - sx * sy) / denom;
    double intercept = (sy - slope * sx) / np;
    cp.udf_exec = slope;
    cp.udf_inv = intercept;

    if (!(cp.c_r > 0) || !(cp.c_e > 0) || !(cp.udf_inv > 0) || !(cp.udf_exec > 0)) {
        std::ostringstream os;
        os << "calibration produced non-positive coefficients: c_r=" << cp.c_r
           << " c_e=" << cp.c_e << " udf_inv=" << cp.udf_inv << " udf_exec=" << cp.udf_exec
           << "; delta points:";
        for (auto [x, y] : points) os << " (" << x << ", " << y << ")";
        throw CalibrationError(os.str());
    }

    cp.sample_rows = static_cast<int64_t>(rows.size());
    cp.sample_policies = static_cast<int64_t>(sample_policies.size());
    cp.calibrated_at = static_cast<int64_t>(
        std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count());
    return cp;
}

} // namespace sieve
