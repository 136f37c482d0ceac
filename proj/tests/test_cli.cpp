#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "sieve/jsonio.hpp"
#include "sieve/sql.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "json.hpp"

using namespace sieve;
namespace fs = std::filesystem;

namespace {

// ctest runs in the build directory, next to the binary
const char *kBin = "./sieve";

int run(const std::string &args) {
    int rc = std::system((std::string(kBin) + " " + args + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(rc);
}

std::string run_capture(const std::string &args) {
    std::string out_path = (fs::temp_directory_path() / "sieve_cli_out.txt").string();
    std::system((std::string(kBin) + " " + args + " >" + out_path + " 2>&1").c_str());
    std::ifstream in(out_path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_config(const fs::path &dir, uint64_t seed) {
    fs::create_directories(dir);
    fs::path cfg = dir / "wl.toml";
    std::ofstream out(cfg);
    out << "seed = " << seed << "\n"
        << "users = 80\naps = 24\ndays = 10\ngroups = 5\n"
        << "events_per_user_day = 14.0\n"
        << "profile_mix = [0.4, 0.2, 0.2, 0.1, 0.1]\n"
        << "unconcerned_fraction = 0.6\n"
        << "advanced_policies_per_user = 4.0\n";
    return cfg;
}

} // namespace

TEST_CASE("generate is idempotent and its outputs load cleanly") {
    fs::path root = fs::temp_directory_path() / "sieve_cli_test";
    fs::remove_all(root);
    auto cfg = write_config(root, 21);

    CHECK(run("generate --config " + cfg.string() + " --out " + (root / "d1").string() +
              " --queries-per-combo 1") == 0);
    CHECK(run("generate --config " + cfg.string() + " --out " + (root / "d2").string() +
              " --queries-per-combo 1") == 0);

    auto manifest = [&](const fs::path &d) {
        std::ifstream in(d / "manifest.json");
        return nlohmann::json::parse(in);
    };
    auto m1 = manifest(root / "d1"), m2 = manifest(root / "d2");
    CHECK(m1.at("events_hash") == m2.at("events_hash"));
    CHECK(m1.at("policies_hash") == m2.at("policies_hash"));

    // generated files load through the engine and policy model
    auto rel = load_relation_with_sidecar((root / "d1" / "events.csv").string(),
                                          (root / "d1" / "events.schema.json").string());
    CHECK(rel.row_count() == m1.at("events").get<size_t>());
    CHECK(rel.has_index("owner"));
    auto ps = read_policies_jsonl((root / "d1" / "policies.jsonl").string());
    CHECK(ps.size() == m1.at("policies").get<size_t>());
    for (const auto &p : ps) CHECK_NOTHROW(p.check_valid());
    for (const auto &sql : read_queries_jsonl((root / "d1" / "queries.jsonl").string()))
        CHECK_NOTHROW(parse_query(sql));

    // missing config: usage error
    CHECK(run("generate --config /nonexistent.toml --out " + (root / "d3").string()) == 3);
    CHECK(run("generate") == 2); // missing required option

    fs::remove_all(root);
}

TEST_CASE("full pipeline: calibrate, build-guards, rewrite, explain, bench") {
    fs::path root = fs::temp_directory_path() / "sieve_cli_pipe";
    fs::remove_all(root);
    auto cfg = write_config(root, 33);
    std::string data = (root / "data").string();
    REQUIRE(run("generate --config " + cfg.string() + " --out " + data +
                " --queries-per-combo 1") == 0);

    std::string params = (root / "cost_params.json").string();
    REQUIRE(run("calibrate --data " + data + " --out " + params + " --repeats 3") == 0);
    auto cp = read_cost_params(params);
    CHECK(cp.c_r > 0);
    CHECK(cp.c_e > 0);

    std::string store = (root / "store.json").string();
    REQUIRE(run("--store " + store + " build-guards --data " + data + " --params " + params +
                " --from-queries") == 0);
    CHECK(fs::exists(store));

    // rewrite one of the generated queries for each dialect and run it
    auto sqls = read_queries_jsonl(data + "/queries.jsonl");
    REQUIRE(!sqls.empty());
    fs::path qfile = root / "q.sql";
    std::ofstream(qfile) << sqls[0];
    for (const char *d : {"generic", "hinted", "unhinted"}) {
        auto out = run_capture("--store " + store + " --dialect " + d + " rewrite --data " + data +
                               " --params " + params + " --sql " + qfile.string() + " --run");
        CHECK(out.find("WITH") != std::string::npos);
        CHECK(out.find("-- rows:") != std::string::npos);
    }

    auto explain_out = run_capture("explain --data " + data + " --params " + params + " --sql " +
                                   qfile.string());
    CHECK(explain_out.find("chosen scan:") != std::string::npos);

    std::string report = (root / "report.csv").string();
    int rc = run("bench --data " + data + " --params " + params +
                 " --strategies baseline-p,sieve --repeat 1 --out " + report);
    CHECK(rc == 0);
    CHECK(fs::exists(report));
    std::ifstream rep(report);
    std::string header;
    std::getline(rep, header);
    CHECK(header.find("policy_evaluations") != std::string::npos);

    fs::remove_all(root);
}
