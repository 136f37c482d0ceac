#include "sieve/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "sieve/exec.hpp"

namespace sieve {

const char *profile_name(Profile p) {
    switch (p) {
    case Profile::Visitor:
        return "visitor";
    case Profile::Staff:
        return "staff";
    case Profile::Undergrad:
        return "undergrad";
    case Profile::Grad:
        return "grad";
    case Profile::Faculty:
        return "faculty";
    }
    return "?";
}

const char *template_name(QueryTemplate t) {
    switch (t) {
    case QueryTemplate::Q1:
        return "Q1";
    case QueryTemplate::Q2:
        return "Q2";
    case QueryTemplate::Q3:
        return "Q3";
    }
    return "?";
}

const char *selectivity_class_name(SelectivityClass c) {
    switch (c) {
    case SelectivityClass::Low:
        return "low";
    case SelectivityClass::Mid:
        return "mid";
    case SelectivityClass::High:
        return "high";
    }
    return "?";
}

void WorkloadConfig::validate() const {
    double sum = 0;
    for (double f : profile_mix) {
        if (f < 0) throw Error("profile_mix fractions must be non-negative");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw Error("profile_mix must sum to 1");
    if (users <= 0 || aps <= 0 || days <= 0 || groups <= 0)
        throw Error("users, aps, days, groups must be positive");
    if (events_per_user_day <= 0 || advanced_policies_per_user <= 0)
        throw Error("rates must be positive");
    if (unconcerned_fraction < 0 || unconcerned_fraction > 1)
        throw Error("unconcerned_fraction must be in [0,1]");
}

namespace {

std::string trim(const std::string &s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    size_t b = s.find_last_not_of(" \t\r\n");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

} // namespace

WorkloadConfig WorkloadConfig::from_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config " + path);
    WorkloadConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#' || s[0] == '[') continue;
        size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw Error("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(s.substr(0, eq));
        std::string val = trim(s.substr(eq + 1));
        size_t hash = val.find('#');
        if (hash != std::string::npos) val = trim(val.substr(0, hash));
        try {
            if (key == "seed") cfg.seed = std::stoull(val);
            else if (key == "users") cfg.users = std::stoi(val);
            else if (key == "aps") cfg.aps = std::stoi(val);
            else if (key == "days") cfg.days = std::stoi(val);
            else if (key == "groups") cfg.groups = std::stoi(val);
            else if (key == "events_per_user_day") cfg.events_per_user_day = std::stod(val);
            else if (key == "unconcerned_fraction") cfg.unconcerned_fraction = std::stod(val);
            else if (key == "default_policies_per_user") cfg.default_policies_per_user = std::stoi(val);
            else if (key == "advanced_policies_per_user") cfg.advanced_policies_per_user = std::stod(val);
            else if (key == "advanced_count_fixed") cfg.advanced_count_fixed = val == "true";
            else if (key == "w_time") cfg.w_time = std::stod(val);
            else if (key == "w_date") cfg.w_date = std::stod(val);
            else if (key == "w_ap") cfg.w_ap = std::stod(val);
            else if (key == "mall_preset") cfg.mall_preset = val == "true";
            else if (key == "profile_mix") {
                if (val.front() != '[' || val.back() != ']')
                    throw Error("profile_mix expects [v,s,u,g,f]");
                std::stringstream ss(val.substr(1, val.size() - 2));
                std::string item;
                size_t k = 0;
                while (std::getline(ss, item, ',') && k < 5) cfg.profile_mix[k++] = std::stod(trim(item));
                if (k != 5) throw Error("profile_mix expects five fractions");
            } else {
                throw Error("unknown config key " + key);
            }
        } catch (const std::invalid_argument &) {
            throw Error("config line " + std::to_string(lineno) + ": bad value for " + key);
        }
    }
    cfg.validate();
    return cfg;
}

void WorkloadConfig::write_file(const std::string &path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << "seed = " << seed << "\n"
        << "users = " << users << "\n"
        << "aps = " << aps << "\n"
        << "days = " << days << "\n"
        << "groups = " << groups << "\n"
        << "events_per_user_day = " << events_per_user_day << "\n"
        << "profile_mix = [" << profile_mix[0] << ", " << profile_mix[1] << ", " << profile_mix[2]
        << ", " << profile_mix[3] << ", " << profile_mix[4] << "]\n"
        << "unconcerned_fraction = " << unconcerned_fraction << "\n"
        << "default_policies_per_user = " << default_policies_per_user << "\n"
        << "advanced_policies_per_user = " << advanced_policies_per_user << "\n"
        << "advanced_count_fixed = " << (advanced_count_fixed ? "true" : "false") << "\n"
        << "w_time = " << w_time << "\n"
        << "w_date = " << w_date << "\n"
        << "w_ap = " << w_ap << "\n"
        << "mall_preset = " << (mall_preset ? "true" : "false") << "\n";
}

namespace {

constexpr int64_t kBaseDay = 18262; // 2020-01-01
const char *kPurposes[] = {"analytics", "attendance", "social", "safety", "commercial"};
constexpr size_t kPurposeCount = 5;

uint64_t mix64(uint64_t x) {
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdull;
    x ^= x >> 33;
    x *= 0xc4ceb9fe1a85ec53ull;
    x ^= x >> 33;
    return x;
}

uint64_t sub_seed(uint64_t seed, const char *what, uint64_t k) {
    uint64_t h = seed;
    for (const char *c = what; *c; ++c) h = mix64(h ^ static_cast<uint64_t>(*c));
    return mix64(h ^ k);
}

Profile profile_for_index(const WorkloadConfig &cfg, int u) {
    // deterministic proportional assignment over a pseudo-shuffled order
    double rank = (static_cast<double>(mix64(sub_seed(cfg.seed, "profile", static_cast<uint64_t>(u)))) /
                   static_cast<double>(UINT64_MAX));
    double cum = 0;
    for (int p = 0; p < 5; ++p) {
        cum += cfg.profile_mix[static_cast<size_t>(p)];
        if (rank < cum || p == 4) return static_cast<Profile>(p);
    }
    return Profile::Visitor;
}

int64_t working_biased_time(std::mt19937_64 &rng) {
    std::normal_distribution<double> d(13.0 * 3600, 3.0 * 3600);
    double t = d(rng);
    if (t < 0) t += 86400;
    if (t >= 86400) t -= 86400;
    return std::clamp<int64_t>(static_cast<int64_t>(t), 0, 86399);
}

} // namespace

Database Workload::database() const {
    Database db;
    db.relations.emplace(events.name(), events);
    db.relations.emplace(membership.name(), membership);
    return db;
}

Workload generate_dataset(const WorkloadConfig &cfg) {
    cfg.validate();
    Workload w;
    w.config = cfg;

    // users: profile by mix, unconcerned by exact-count rank, home AP and
    // primary group by affinity
    int unconcerned_target = static_cast<int>(std::llround(cfg.users * cfg.unconcerned_fraction));
    std::vector<std::pair<uint64_t, int>> concern_rank;
    for (int u = 0; u < cfg.users; ++u)
        concern_rank.emplace_back(sub_seed(cfg.seed, "concern", static_cast<uint64_t>(u)), u);
    std::sort(concern_rank.begin(), concern_rank.end());
    std::vector<bool> unconcerned(static_cast<size_t>(cfg.users), false);
    for (int k = 0; k < unconcerned_target && k < cfg.users; ++k)
        unconcerned[static_cast<size_t>(concern_rank[static_cast<size_t>(k)].second)] = true;

    for (int u = 0; u < cfg.users; ++u) {
        UserInfo info;
        info.index = u;
        info.id = "u" + std::to_string(u);
        info.profile = profile_for_index(cfg, u);
        info.home_ap = static_cast<int>(sub_seed(cfg.seed, "home", static_cast<uint64_t>(u)) %
                                        static_cast<uint64_t>(cfg.aps));
        info.primary_group = "g" + std::to_string(info.home_ap % cfg.groups);
        info.unconcerned = unconcerned[static_cast<size_t>(u)];
        w.users.push_back(std::move(info));
    }

    // groups: primary by affinity, profile groups, and the composite
    // group-with-profile overlap used by the second default policy
    for (const auto &user : w.users) {
        w.groups.add_member(user.primary_group, user.id);
        w.groups.add_member(std::string("prof_") + profile_name(user.profile), user.id);
        w.groups.add_member(user.primary_group + "&" + profile_name(user.profile), user.id);
    }
    for (const char *p : {"staff", "undergrad", "grad", "faculty"})
        w.groups.add_subsumption("nonvisitors", std::string("prof_") + p);

    // connectivity events
    Schema event_schema({{"id", ValueKind::Int},
                         {"wifiAP", ValueKind::Int},
                         {"owner", ValueKind::String},
                         {"ts-time", ValueKind::Time},
                         {"ts-date", ValueKind::Date}});
    std::vector<TupleRow> rows;
    int64_t next_id = 0;
    for (const auto &user : w.users) {
        std::mt19937_64 rng(sub_seed(cfg.seed, "events", static_cast<uint64_t>(user.index)));
        std::poisson_distribution<int> per_day(cfg.events_per_user_day);
        std::uniform_int_distribution<int> ap_d(0, cfg.aps - 1);
        std::bernoulli_distribution at_home(0.6);
        for (int d = 0; d < cfg.days; ++d) {
            int n = per_day(rng);
            for (int e = 0; e < n; ++e) {
                TupleRow t;
                t.values.resize(5);
                t.values[0] = AttrValue::integer(next_id);
                t.values[1] =
                    AttrValue::integer(1000 + (at_home(rng) ? user.home_ap : ap_d(rng)));
                t.values[2] = AttrValue::str(user.id);
                t.values[3] = AttrValue::time_seconds(working_biased_time(rng));
                t.values[4] = AttrValue::date_days(kBaseDay + d);
                rows.push_back(std::move(t));
                ++next_id;
            }
        }
    }
    w.events = Relation::load("events", event_schema, std::move(rows),
                              {"wifiAP", "ts-time", "ts-date"});

    // membership relation mirrors the directory's direct memberships
    Schema member_schema({{"user_group_id", ValueKind::String}, {"user_id", ValueKind::String}});
    std::vector<TupleRow> mrows;
    for (const auto &[group, members] : w.groups.direct_members())
        for (const auto &user : members) {
            TupleRow t;
            t.values = {AttrValue::str(group), AttrValue::str(user)};
            mrows.push_back(std::move(t));
        }
    w.membership = Relation::load("membership", member_schema, std::move(mrows), {"user_id"});
    return w;
}

namespace {

Policy make_policy(int64_t id, const std::string &relation, const std::string &owner,
                   const std::string &querier, const std::string &purpose) {
    Policy p;
    p.id = id;
    p.relation = relation;
    p.owner = owner;
    p.querier = querier;
    p.purpose = purpose;
    p.object_conditions.push_back(ObjectCondition::eq("owner", AttrValue::str(owner)));
    return p;
}

} // namespace

std::vector<Policy> generate_policies(const WorkloadConfig &cfg, const Workload &w) {
    std::vector<Policy> out;
    int64_t next_id = 1;
    const std::string rel = w.events.name();

    for (const auto &user : w.users) {
        std::mt19937_64 rng(sub_seed(cfg.seed, "policies", static_cast<uint64_t>(user.index)));
        if (user.unconcerned) {
            // working hours for the primary group
            Policy p1 = make_policy(next_id++, rel, user.id, user.primary_group, kPurposes[0]);
            p1.object_conditions.push_back(
                ObjectCondition::between("ts-time", AttrValue::parse_time("08:00"), true,
                                         AttrValue::parse_time("18:00"), true));
            out.push_back(std::move(p1));
            // any time for the overlap of group and profile
            if (cfg.default_policies_per_user >= 2) {
                out.push_back(make_policy(next_id++, rel, user.id,
                                          user.primary_group + "&" + profile_name(user.profile),
                                          kPurposes[0]));
            }
            for (int k = 2; k < cfg.default_policies_per_user; ++k) {
                Policy extra = make_policy(next_id++, rel, user.id, user.primary_group,
                                           kPurposes[k % kPurposeCount]);
                out.push_back(std::move(extra));
            }
            continue;
        }

        int count = cfg.advanced_count_fixed
                        ? static_cast<int>(std::llround(cfg.advanced_policies_per_user))
                        : std::max<int>(1, std::poisson_distribution<int>(
                                               cfg.advanced_policies_per_user)(rng));
        std::uniform_int_distribution<int> ap_d(0, cfg.aps - 1), day_d(0, cfg.days - 1),
            width_h(1, 6), width_d(2, 21), user_d(0, cfg.users - 1);
        std::bernoulli_distribution with_time(cfg.w_time), with_date(cfg.w_date),
            with_ap(cfg.w_ap), ap_range(0.3), home_ap(0.5);
        std::uniform_int_distribution<size_t> purpose_d(0, kPurposeCount - 1);
        std::uniform_int_distribution<int> querier_kind(0, 9);

        for (int k = 0; k < count; ++k) {
            std::string querier;
            int kind = querier_kind(rng);
            if (kind < 4) {
                // a specific non-visitor user
                for (int tries = 0; tries < 64; ++tries) {
                    const auto &cand = w.users[static_cast<size_t>(user_d(rng))];
                    if (cand.profile != Profile::Visitor) {
                        querier = cand.id;
                        break;
                    }
                }
                if (querier.empty()) querier = w.users[0].id;
            } else if (kind < 7) {
                querier = "g" + std::to_string(rng() % static_cast<uint64_t>(cfg.groups));
            } else {
                const char *profs[] = {"staff", "undergrad", "grad", "faculty"};
                querier = std::string("prof_") + profs[rng() % 4];
            }

            Policy p = make_policy(next_id++, rel, user.id, querier,
                                   kPurposes[purpose_d(rng)]);
            if (with_time(rng)) {
                int start_h = 6 + static_cast<int>(rng() % 12);
                int end_h = std::min(23, start_h + width_h(rng));
                p.object_conditions.push_back(ObjectCondition::between(
                    "ts-time", AttrValue::time_seconds(start_h * 3600), true,
                    AttrValue::time_seconds(end_h * 3600), rng() % 2 == 0));
            }
            if (with_date(rng)) {
                int start = day_d(rng);
                int end = std::min(cfg.days - 1, start + width_d(rng));
                p.object_conditions.push_back(ObjectCondition::between(
                    "ts-date", AttrValue::date_days(kBaseDay + start), true,
                    AttrValue::date_days(kBaseDay + end), true));
            }
            if (with_ap(rng)) {
                int ap = 1000 + (home_ap(rng) ? user.home_ap : ap_d(rng));
                if (ap_range(rng)) {
                    int hi = std::min(1000 + cfg.aps - 1, ap + 1 + static_cast<int>(rng() % 4));
                    p.object_conditions.push_back(ObjectCondition::between(
                        "wifiAP", AttrValue::integer(ap), true, AttrValue::integer(hi), true));
                } else {
                    p.object_conditions.push_back(
                        ObjectCondition::eq("wifiAP", AttrValue::integer(ap)));
                }
            }
            out.push_back(std::move(p));
        }
    }
    return out;
}

namespace {

struct QueryDraft {
    QuerySpec spec;
    double fraction = 0;
};

double exact_fraction(const Database &db, const QuerySpec &q) {
    double n = static_cast<double>(db.get(q.relation).row_count());
    if (n == 0) return 0;
    return static_cast<double>(apply_query_filter(db, q).size()) / n;
}

bool in_band(double f, SelectivityClass c) {
    switch (c) {
    case SelectivityClass::Low:
        return f > 0 && f <= kLowBand;
    case SelectivityClass::Mid:
        return f > kLowBand && f <= kMidBand;
    case SelectivityClass::High:
        return f > kMidBand;
    }
    return false;
}

} // namespace

std::vector<QuerySpec> generate_queries(QueryTemplate t, SelectivityClass c,
                                        const WorkloadConfig &cfg, const Workload &w,
                                        size_t count) {
    Database db = w.database();
    std::vector<QuerySpec> out;
    uint64_t qseed = sub_seed(cfg.seed, "queries", (static_cast<uint64_t>(t) << 8) |
                                                       static_cast<uint64_t>(c));
    std::mt19937_64 rng(qseed);

    // queriers come from the four non-visitor profiles
    std::vector<const UserInfo *> queriers;
    for (const auto &u : w.users)
        if (u.profile != Profile::Visitor) queriers.push_back(&u);
    if (queriers.empty()) throw Error("no non-visitor users to pose queries");

    // initial window scale per class, adapted against exact counts
    auto initial_scale = [&](SelectivityClass cls) {
        switch (cls) {
        case SelectivityClass::Low:
            return 0.02;
        case SelectivityClass::Mid:
            return 0.2;
        case SelectivityClass::High:
            return 0.8;
        }
        return 0.5;
    };

    std::vector<std::string> group_ids;
    for (int g = 0; g < cfg.groups; ++g) group_ids.push_back("g" + std::to_string(g));

    for (size_t k = 0; k < count; ++k) {
        const UserInfo &querier = *queriers[rng() % queriers.size()];
        QueryMetadata m = QueryMetadata::resolve(
            querier.id, kPurposes[rng() % 10 < 7 ? 0 : rng() % kPurposeCount], w.groups);

        double scale = initial_scale(c);
        QuerySpec best;
        double best_dist = 1e9;
        bool found = false;
        for (int attempt = 0; attempt < 48 && !found; ++attempt) {
            QuerySpec q;
            q.relation = w.events.name();
            q.metadata = m;

            double span_days = std::max(1.0, scale * cfg.days);
            double span_secs = std::clamp(scale * 86400.0 * 2, 1800.0, 86399.0);
            int d0 = static_cast<int>(rng() % static_cast<uint64_t>(std::max(
                                          1, cfg.days - static_cast<int>(span_days) + 1)));
            int d1 = std::min(cfg.days - 1, d0 + static_cast<int>(span_days));
            int s0 = static_cast<int>(rng() % 50000);
            int s1 = std::min(86399, s0 + static_cast<int>(span_secs));

            switch (t) {
            case QueryTemplate::Q1: {
                size_t n_aps = std::clamp<size_t>(
                    static_cast<size_t>(std::ceil(scale * cfg.aps)), 1,
                    static_cast<size_t>(cfg.aps));
                std::vector<AttrValue> aps;
                std::set<int> chosen;
                while (chosen.size() < n_aps)
                    chosen.insert(1000 + static_cast<int>(rng() % static_cast<uint64_t>(cfg.aps)));
                for (int ap : chosen) aps.push_back(AttrValue::integer(ap));
                q.where.push_back(ObjectCondition::in_list("wifiAP", std::move(aps)));
                q.where.push_back(ObjectCondition::between(
                    "ts-time", AttrValue::time_seconds(s0), true, AttrValue::time_seconds(s1),
                    true));
                q.where.push_back(ObjectCondition::between(
                    "ts-date", AttrValue::date_days(kBaseDay + d0), true,
                    AttrValue::date_days(kBaseDay + d1), true));
                break;
            }
            case QueryTemplate::Q2: {
                size_t n_dev = std::clamp<size_t>(
                    static_cast<size_t>(std::ceil(scale * cfg.users)), 1,
                    static_cast<size_t>(cfg.users));
                std::vector<AttrValue> devs;
                std::set<int> chosen;
                while (chosen.size() < n_dev)
                    chosen.insert(static_cast<int>(rng() % static_cast<uint64_t>(cfg.users)));
                for (int u : chosen) devs.push_back(AttrValue::str("u" + std::to_string(u)));
                q.where.push_back(ObjectCondition::in_list("owner", std::move(devs)));
                q.where.push_back(ObjectCondition::between(
                    "ts-time", AttrValue::time_seconds(s0), true, AttrValue::time_seconds(s1),
                    true));
                q.where.push_back(ObjectCondition::between(
                    "ts-date", AttrValue::date_days(kBaseDay + d0), true,
                    AttrValue::date_days(kBaseDay + d1), true));
                break;
            }
            case QueryTemplate::Q3: {
                q.join = JoinSpec{w.membership.name(), "owner", "user_id",
                                  {ObjectCondition::eq(
                                      "user_group_id",
                                      AttrValue::str(group_ids[rng() % group_ids.size()]))}};
                q.agg.kind = Aggregation::CountDistinct;
                q.agg.attr = "owner";
                q.where.push_back(ObjectCondition::between(
                    "ts-time", AttrValue::time_seconds(s0), true, AttrValue::time_seconds(s1),
                    true));
                q.where.push_back(ObjectCondition::between(
                    "ts-date", AttrValue::date_days(kBaseDay + d0), true,
                    AttrValue::date_days(kBaseDay + d1), true));
                break;
            }
            }

            double f = exact_fraction(db, q);
            if (in_band(f, c)) {
                best = std::move(q);
                found = true;
                break;
            }
            double target = c == SelectivityClass::Low    ? kLowBand * 0.5
                            : c == SelectivityClass::Mid  ? (kLowBand + kMidBand) * 0.5
                                                          : kMidBand * 2.5;
            double dist = std::abs(std::log((f + 1e-9) / target));
            if (dist < best_dist) {
                best_dist = dist;
                best = q;
            }
            // adapt the window scale toward the band
            if (f > target)
                scale = std::max(scale * 0.55, 1e-4);
            else
                scale = std::min(scale * 1.8, 1.0);
        }
        if (!found && !in_band(exact_fraction(db, best), c))
            throw Error(std::string("could not calibrate a ") + template_name(t) + "/" +
                        selectivity_class_name(c) + " query into its selectivity band");
        out.push_back(std::move(best));
    }
    return out;
}

} // namespace sieve
