#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "sieve/bench.hpp"
#include "sieve/calibrate.hpp"
#include "sieve/jsonio.hpp"
#include "sieve/plan.hpp"
#include "sieve/sql_exec.hpp"
#include "sieve/workload.hpp"

namespace fs = std::filesystem;
using namespace sieve;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitTimeout = 4;

uint64_t fnv_file(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    uint64_t h = 1469598103934665603ull;
    char c;
    while (in.get(c)) {
        h ^= static_cast<uint64_t>(static_cast<unsigned char>(c));
        h *= 1099511628211ull;
    }
    return h;
}

struct LoadedData {
    Workload workload;
    Database db;
    std::vector<Policy> policies;
    HistogramStats stats;
};

LoadedData load_data_dir(const std::string &dir) {
    LoadedData d;
    fs::path root(dir);
    d.workload.config = WorkloadConfig::from_file((root / "workload.toml").string());
    d.workload.events = load_relation_with_sidecar((root / "events.csv").string(),
                                                   (root / "events.schema.json").string());
    d.workload.membership = load_relation_with_sidecar(
        (root / "membership.csv").string(), (root / "membership.schema.json").string());
    // directory rebuilt from the membership relation
    const auto &ms = d.workload.membership;
    int gi = ms.schema().index_of("user_group_id");
    int ui = ms.schema().index_of("user_id");
    for (const auto &row : ms.rows())
        d.workload.groups.add_member(row.values[static_cast<size_t>(gi)]->s,
                                     row.values[static_cast<size_t>(ui)]->s);
    for (const char *p : {"staff", "undergrad", "grad", "faculty"})
        d.workload.groups.add_subsumption("nonvisitors", std::string("prof_") + p);
    d.db = d.workload.database();
    d.policies = read_policies_jsonl((root / "policies.jsonl").string());
    d.stats = HistogramStats::build(d.db.get(d.workload.events.name()));
    return d;
}

std::vector<QuerySpec> load_queries(const LoadedData &d, const std::string &path) {
    std::vector<QuerySpec> out;
    for (const auto &sql : read_queries_jsonl(path)) {
        QuerySpec q = parse_query(sql);
        q.metadata.groups = d.workload.groups.groups_of(q.metadata.querier);
        out.push_back(std::move(q));
    }
    return out;
}

std::string read_sql_arg(const std::string &sql_path) {
    if (sql_path == "-") {
        std::ostringstream ss;
        ss << std::cin.rdbuf();
        return ss.str();
    }
    std::ifstream in(sql_path);
    if (!in) throw Error("cannot open " + sql_path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cmd_generate(const std::string &config_path, const std::string &out_dir, uint64_t seed_override,
                 bool has_seed, int queries_per_combo) {
    WorkloadConfig cfg = WorkloadConfig::from_file(config_path);
    if (has_seed) cfg.seed = seed_override;
    fs::create_directories(out_dir);
    fs::path root(out_dir);

    Workload w = generate_dataset(cfg);
    auto policies = generate_policies(cfg, w);

    cfg.write_file((root / "workload.toml").string());
    w.events.write_csv((root / "events.csv").string());
    write_schema_json((root / "events.schema.json").string(), w.events.name(), w.events.schema(),
                      {"wifiAP", "ts-time", "ts-date"});
    w.membership.write_csv((root / "membership.csv").string());
    write_schema_json((root / "membership.schema.json").string(), w.membership.name(),
                      w.membership.schema(), {"user_id"});
    write_policies_jsonl((root / "policies.jsonl").string(), policies);

    std::vector<std::string> sqls;
    for (auto t : {QueryTemplate::Q1, QueryTemplate::Q2, QueryTemplate::Q3})
        for (auto c : {SelectivityClass::Low, SelectivityClass::Mid, SelectivityClass::High})
            for (auto &q : generate_queries(t, c, cfg, w, static_cast<size_t>(queries_per_combo)))
                sqls.push_back(emit_queryspec(q));
    write_queries_jsonl((root / "queries.jsonl").string(), sqls);

    std::ostringstream manifest;
    manifest << "{\n  \"seed\": " << cfg.seed << ",\n  \"events\": " << w.events.row_count()
             << ",\n  \"users\": " << cfg.users << ",\n  \"policies\": " << policies.size()
             << ",\n  \"queries\": " << sqls.size() << ",\n  \"events_hash\": "
             << fnv_file(root / "events.csv") << ",\n  \"policies_hash\": "
             << fnv_file(root / "policies.jsonl") << "\n}\n";
    std::ofstream mf(root / "manifest.json");
    mf << manifest.str();

    std::cout << "generated " << w.events.row_count() << " events, " << policies.size()
              << " policies, " << sqls.size() << " queries in " << out_dir << "\n";
    return 0;
}

int cmd_calibrate(const std::string &data_dir, const std::string &out_path, int repeats) {
    LoadedData d = load_data_dir(data_dir);
    // sample policies: spread across queriers, capped for the sweep
    std::vector<Policy> sample;
    for (const auto &p : d.policies) {
        sample.push_back(p);
        if (sample.size() >= 96) break;
    }
    CalibrationOptions opts;
    opts.repeats = repeats;
    CostParams cp = calibrate(d.db.get(d.workload.events.name()), sample, &d.workload.groups, opts);
    write_cost_params(out_path, cp);
    std::cout << "calibrated: c_r=" << cp.c_r << "us c_e=" << cp.c_e << "us alpha=" << cp.alpha
              << " udf_inv=" << cp.udf_inv << "us udf_exec=" << cp.udf_exec << "us -> " << out_path
              << "\n";
    double crossover = (cp.udf_inv + cp.udf_exec) / (cp.alpha * cp.c_e);
    std::cout << "inline/delta crossover at ~" << static_cast<int64_t>(crossover)
              << " policies per partition (one policy per owner)\n";
    return 0;
}

CostParams load_params_or_default(const std::string &path) {
    if (!path.empty() && fs::exists(path)) return read_cost_params(path);
    return CostParams{};
}

int cmd_build_guards(const std::string &data_dir, const std::string &params_path,
                     const std::string &store_path, const std::string &querier,
                     const std::string &purpose, bool from_queries) {
    LoadedData d = load_data_dir(data_dir);
    CostParams cp = load_params_or_default(params_path);

    PolicyStore store(d.workload.groups);
    for (const auto &p : d.policies) store.insert_policy(p);

    std::vector<QueryMetadata> targets;
    if (from_queries) {
        std::set<std::pair<std::string, std::string>> seen;
        for (const auto &q : load_queries(d, (fs::path(data_dir) / "queries.jsonl").string()))
            if (seen.emplace(q.metadata.querier, q.metadata.purpose).second)
                targets.push_back(q.metadata);
    } else {
        if (querier.empty() || purpose.empty())
            throw Error("build-guards needs --querier and --purpose (or --from-queries)");
        targets.push_back(QueryMetadata::resolve(querier, purpose, d.workload.groups));
    }

    MaintenanceParams mp{10000.0, 1.0, 10.0, 100.0};
    const std::string rel = d.workload.events.name();
    auto indexed = d.db.get(rel).indexed_attrs();
    std::cout << "querier      purpose      policies  guards  mean_part  guard_sel\n";
    for (const auto &m : targets) {
        auto gpe = store.get_or_rebuild(m, rel, indexed, cp, d.stats, mp);
        double part = 0, sel = 0;
        for (const auto &g : gpe.guards) {
            part += static_cast<double>(g.partition.size());
            sel += g.estimated_cardinality;
        }
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%-12s %-12s %-9zu %-7zu %-10.2f %.4f\n", m.querier.c_str(),
                      m.purpose.c_str(), gpe.policy_count(), gpe.guards.size(),
                      gpe.guards.empty() ? 0.0 : part / static_cast<double>(gpe.guards.size()),
                      d.stats.row_count ? sel / static_cast<double>(d.stats.row_count) : 0.0);
        std::cout << buf;
    }
    store.save(store_path);
    std::cout << "store written to " << store_path << "\n";
    return 0;
}

int cmd_rewrite(const std::string &data_dir, const std::string &params_path,
                const std::string &store_path, const std::string &sql_path,
                const std::string &dialect_name_s, bool run, bool permissive) {
    LoadedData d = load_data_dir(data_dir);
    CostParams cp = load_params_or_default(params_path);
    auto dialect = dialect_from_name(dialect_name_s);
    if (!dialect) throw Error("unknown dialect " + dialect_name_s);

    QuerySpec q = parse_query(read_sql_arg(sql_path));
    q.metadata.groups = d.workload.groups.groups_of(q.metadata.querier);
    const std::string rel = q.relation;
    auto indexed = d.db.get(rel).indexed_attrs();

    PolicyStore store = fs::exists(store_path) ? PolicyStore::load(store_path, d.workload.groups)
                                               : PolicyStore(d.workload.groups);
    if (store.policies().empty())
        for (const auto &p : d.policies) store.insert_policy(p);

    auto filtered = store.policies_for(q.metadata, rel);
    if (filtered.empty() && permissive) {
        std::cout << emit_queryspec(q) << "\n";
        return 0;
    }
    if (filtered.empty() && !permissive)
        throw Error("no policies for (" + q.metadata.querier + ", " + q.metadata.purpose +
                    "); deny-by-default forbids emitting the query unchanged (use --permissive)");

    MaintenanceParams mp{10000.0, 1.0, 10.0, 100.0};
    auto gpe = store.get_or_rebuild(q.metadata, rel, indexed, cp, d.stats, mp);
    ExplainInfo info = explain(q, d.stats, d.db.get(rel));
    StrategyPlan plan = choose_scan_strategy(q, gpe, cp, d.stats, info);
    auto rq = rewrite(q, gpe, plan);
    std::string text = emit_sql(rq, *dialect);
    std::cout << text << "\n";

    if (run) {
        EngineDerivedEvaluator derived(d.db);
        SqlExecOptions opts;
        opts.gpe = &gpe;
        opts.groups = &d.workload.groups;
        opts.derived = &derived;
        auto res = execute_sql_text(d.db, text, opts);
        auto spec_for_agg = q;
        auto agg = aggregate(d.db, spec_for_agg, res.row_ids);
        std::cout << "-- rows: " << res.row_ids.size() << ", tuples read: "
                  << res.metrics.tuples_read << ", delta calls: " << res.metrics.delta_invocations
                  << "\n";
        if (!agg.rows.empty() && q.agg.kind != Aggregation::None) {
            for (const auto &h : agg.header) std::cout << h << " ";
            std::cout << "\n";
            for (const auto &row : agg.rows) {
                for (const auto &cell : row) std::cout << cell << " ";
                std::cout << "\n";
            }
        }
    }
    return 0;
}

int cmd_explain(const std::string &data_dir, const std::string &params_path,
                const std::string &sql_path) {
    LoadedData d = load_data_dir(data_dir);
    CostParams cp = load_params_or_default(params_path);
    QuerySpec q = parse_query(read_sql_arg(sql_path));
    q.metadata.groups = d.workload.groups.groups_of(q.metadata.querier);

    const std::string rel = q.relation;
    std::vector<Policy> rel_policies;
    for (const auto &p : d.policies)
        if (p.relation == rel) rel_policies.push_back(p);
    auto filtered = filter_policies_by_metadata(rel_policies, q.metadata);
    auto gpe = build_guarded_expression(filtered, q.metadata, rel, d.db.get(rel).indexed_attrs(),
                                        cp, d.stats);
    assign_partition_strategies(gpe, cp);
    ExplainInfo info = explain(q, d.stats, d.db.get(rel));
    StrategyPlan plan = choose_scan_strategy(q, gpe, cp, d.stats, info);

    std::cout << "policies (filtered): " << filtered.size() << "\n";
    std::cout << "guards: " << gpe.guards.size() << "\n";
    std::cout << "engine access path: "
              << (info.index_scan ? "index on " + info.attr : "table scan")
              << " (fraction " << info.selectivity_fraction << ")\n";
    std::cout << "estimated costs (us): linear_scan=" << plan.estimated.linear_scan
              << " index_query=" << plan.estimated.index_query
              << " index_guards=" << plan.estimated.index_guards << "\n";
    std::cout << "chosen scan: " << scan_strategy_name(plan.scan) << "\n";
    size_t delta_guards = 0;
    for (auto s : plan.per_guard)
        if (s == PartitionStrategy::Delta) ++delta_guards;
    std::cout << "partitions: " << plan.per_guard.size() - delta_guards << " inline, "
              << delta_guards << " delta\n";
    return 0;
}

int cmd_bench(const std::string &data_dir, const std::string &params_path,
              const std::string &queries_path, const std::string &strategies_csv,
              const std::string &out_path, int repeats, double timeout_ms, bool parallel) {
    LoadedData d = load_data_dir(data_dir);
    CostParams cp = load_params_or_default(params_path);

    std::string qpath = queries_path.empty()
                            ? (fs::path(data_dir) / "queries.jsonl").string()
                            : queries_path;
    auto queries = load_queries(d, qpath);

    BenchOptions opts;
    opts.repeats = repeats;
    opts.timeout_ms = timeout_ms;
    opts.parallel = parallel;
    if (!strategies_csv.empty()) {
        opts.strategies.clear();
        std::stringstream ss(strategies_csv);
        std::string item;
        while (std::getline(ss, item, ',')) {
            auto s = strategy_from_name(item);
            if (!s) throw Error("unknown strategy " + item);
            opts.strategies.push_back(*s);
        }
    }

    auto report = run_bench(d.db, d.workload.events.name(), d.policies, d.workload.groups, queries,
                            cp, d.stats, opts);
    std::cout << report.human_table();
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        out << report.csv();
        std::cout << "csv written to " << out_path << "\n";
    }
    if (!report.hashes_consistent) {
        std::cerr << "error: strategies disagreed on result sets\n";
        return kExitData;
    }
    for (const auto &r : report.rows)
        if (r.timed_out) return kExitTimeout;
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"policy-guarded query middleware"};
    app.require_subcommand(1);

    uint64_t seed = 0;
    bool has_seed = false;
    std::string store_path = "store.json";
    std::string dialect = "generic";
    double timeout_ms = 30000;
    app.add_option("--seed", seed, "override the workload seed")->each([&](const std::string &) {
        has_seed = true;
    });
    app.add_option("--store", store_path, "guard store path");
    app.add_option("--dialect", dialect, "generic|hinted|unhinted");
    app.add_option("--timeout-ms", timeout_ms, "per-query timeout");

    auto *gen = app.add_subcommand("generate", "generate a synthetic workload");
    std::string config_path, out_dir = "data";
    int queries_per_combo = 3;
    gen->add_option("--config", config_path, "workload config file")->required();
    gen->add_option("--out", out_dir, "output directory");
    gen->add_option("--queries-per-combo", queries_per_combo,
                    "queries per (template, selectivity) pair");

    auto *cal = app.add_subcommand("calibrate", "measure cost constants on the engine");
    std::string data_dir = "data", params_out = "cost_params.json";
    int repeats = 5;
    cal->add_option("--data", data_dir, "data directory")->required();
    cal->add_option("--out", params_out, "cost params output");
    cal->add_option("--repeats", repeats, "timing repetitions");

    auto *bg = app.add_subcommand("build-guards", "compile guarded expressions into the store");
    std::string bg_data, bg_params, bg_querier, bg_purpose;
    bool bg_from_queries = false;
    bg->add_option("--data", bg_data, "data directory")->required();
    bg->add_option("--params", bg_params, "cost params file");
    bg->add_option("--querier", bg_querier, "querier id");
    bg->add_option("--purpose", bg_purpose, "purpose");
    bg->add_flag("--from-queries", bg_from_queries, "build for every querier in queries.jsonl");

    auto *rw = app.add_subcommand("rewrite", "rewrite a query for a dialect");
    std::string rw_data, rw_params, rw_sql = "-";
    bool rw_run = false, rw_permissive = false;
    rw->add_option("--data", rw_data, "data directory")->required();
    rw->add_option("--params", rw_params, "cost params file");
    rw->add_option("--sql", rw_sql, "SQL file or - for stdin");
    rw->add_flag("--run", rw_run, "execute the rewritten query on the embedded engine");
    rw->add_flag("--permissive", rw_permissive, "emit unchanged when no policies exist");

    auto *ex = app.add_subcommand("explain", "print the strategy plan for a query");
    std::string ex_data, ex_params, ex_sql = "-";
    ex->add_option("--data", ex_data, "data directory")->required();
    ex->add_option("--params", ex_params, "cost params file");
    ex->add_option("--sql", ex_sql, "SQL file or - for stdin");

    auto *be = app.add_subcommand("bench", "run the benchmark strategies");
    std::string be_data, be_params, be_queries, be_strategies, be_out;
    int be_repeats = 5;
    bool be_parallel = false;
    be->add_option("--data", be_data, "data directory")->required();
    be->add_option("--params", be_params, "cost params file");
    be->add_option("--queries", be_queries, "queries jsonl (defaults to data dir)");
    be->add_option("--strategies", be_strategies,
                   "comma list of baseline-p,baseline-i,baseline-u,sieve");
    be->add_option("--out", be_out, "CSV report path");
    be->add_option("--repeat", be_repeats, "runs per query per strategy");
    be->add_flag("--parallel", be_parallel, "run queries concurrently");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage; // --help exits 0, usage errors exit 2
    }

    try {
        if (gen->parsed())
            return cmd_generate(config_path, out_dir, seed, has_seed, queries_per_combo);
        if (cal->parsed()) return cmd_calibrate(data_dir, params_out, repeats);
        if (bg->parsed())
            return cmd_build_guards(bg_data, bg_params, store_path, bg_querier, bg_purpose,
                                    bg_from_queries);
        if (rw->parsed())
            return cmd_rewrite(rw_data, rw_params, store_path, rw_sql, dialect, rw_run,
                               rw_permissive);
        if (ex->parsed()) return cmd_explain(ex_data, ex_params, ex_sql);
        if (be->parsed())
            return cmd_bench(be_data, be_params, be_queries, be_strategies, be_out, be_repeats,
                             timeout_ms, be_parallel);
    } catch (const ParseError &e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
