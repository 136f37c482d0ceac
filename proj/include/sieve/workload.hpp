#pragma once

#include "sieve/query.hpp"
#include "sieve/relation.hpp"

namespace sieve {

// Profile-based synthetic workload: connectivity events, group assignment by
// affinity, default + advanced policy corpora, and the three query templates
// at three selectivity classes. Fully deterministic under (config, seed).
struct WorkloadConfig {
    uint64_t seed = 42;
    int users = 200;
    int aps = 64;
    int days = 30;
    int groups = 8;
    double events_per_user_day = 6.0; // poisson mean

    // visitor, staff, undergrad, grad, faculty; must sum to 1
    std::array<double, 5> profile_mix = {0.45, 0.15, 0.18, 0.12, 0.10};
    double unconcerned_fraction = 0.6;
    int default_policies_per_user = 2;
    double advanced_policies_per_user = 4.0;
    bool advanced_count_fixed = true; // false draws per-user counts ~ Poisson(mean)

    // probability that an advanced policy constrains each attribute
    double w_time = 0.7;
    double w_date = 0.35;
    double w_ap = 0.5;

    bool mall_preset = false; // shops as queriers, regular/irregular customers

    void validate() const;
    static WorkloadConfig from_file(const std::string &path);
    void write_file(const std::string &path) const;
};

enum class Profile : uint8_t { Visitor, Staff, Undergrad, Grad, Faculty };
const char *profile_name(Profile p);

struct UserInfo {
    int index = 0;
    std::string id;
    Profile profile = Profile::Visitor;
    std::string primary_group;
    int home_ap = 0;
    bool unconcerned = true;
};

struct Workload {
    WorkloadConfig config;
    Relation events;     // id, wifiAP, owner, ts-time, ts-date
    Relation membership; // user_group_id, user_id
    GroupDirectory groups;
    std::vector<UserInfo> users;

    Database database() const;
};

enum class QueryTemplate : uint8_t { Q1, Q2, Q3 };
enum class SelectivityClass : uint8_t { Low, Mid, High };
const char *template_name(QueryTemplate t);
const char *selectivity_class_name(SelectivityClass c);

// class bands on the exact query-match fraction (policies not considered)
inline constexpr double kLowBand = 0.01;
inline constexpr double kMidBand = 0.10;

Workload generate_dataset(const WorkloadConfig &cfg);
std::vector<Policy> generate_policies(const WorkloadConfig &cfg, const Workload &w);

// Parameters are tuned against exact match counts until the fraction falls in
// the class band: low <= 1%, mid in (1%, 10%], high > 10%.
std::vector<QuerySpec> generate_queries(QueryTemplate t, SelectivityClass c,
                                        const WorkloadConfig &cfg, const Workload &w,
                                        size_t count);

} // namespace sieve
