// SPDX-License-Identifier: Apache-2.0
//
// fdsi - link-level simulator for far-field self-interference mitigation
// in full-duplex MIMO OFDM
// Copyright (C) 2026 the fdsi contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include <catch2/catch_amalgamated.hpp>

#include "fdsi/policy.hpp"
#include "fdsi/rng.hpp"

#include <armadillo>
#include <cmath>
#include <vector>

using namespace fdsi;

namespace
{

double deg_of_sin(double s) { return std::asin(s) * 180.0 / pi; }

// four uplink users on exact beam nulls of a scatterer at 0 degrees
UserSet null_aligned_users()
{
    UserSet u;
    u.ul_angles = {AngleDeg{0.0}, AngleDeg{deg_of_sin(1.0 / 16.0)},
                   AngleDeg{deg_of_sin(2.0 / 16.0)}, AngleDeg{deg_of_sin(3.0 / 16.0)}};
    u.dl_angles = {AngleDeg{deg_of_sin(-1.0 / 16.0)}, AngleDeg{deg_of_sin(-2.0 / 16.0)},
                   AngleDeg{deg_of_sin(-3.0 / 16.0)}, AngleDeg{deg_of_sin(-4.0 / 16.0)}};
    u.ul_powers = arma::vec(4, arma::fill::value(10.0));
    u.dl_powers = arma::vec(4, arma::fill::value(10.0));
    return u;
}

int pref_rank(Action a)
{
    switch (a)
    {
        case Action::NA: return 0;
        case Action::TX: return 1;
        case Action::RX: return 2;
        case Action::DSIC: return 3;
        default: return 4;
    }
}

// Exhaustive reference: over every capacity-feasible action tuple, pick the
// lexicographic maximum along the severity order, scoring each position by
// (metric descending, tie preference ascending). The greedy walk must agree.
ActionAssignment brute_force(const ActionMetricTable& t, const RfcLimits& lim)
{
    const arma::uword k = t.k_s();
    const Action acts[] = {Action::NA, Action::TX, Action::RX, Action::DSIC};

    std::vector<arma::uword> order(k);
    std::iota(order.begin(), order.end(), arma::uword(0));
    std::sort(order.begin(), order.end(), [&](arma::uword a, arma::uword b) {
        if (t.na_mean(a) != t.na_mean(b))
            return t.na_mean(a) < t.na_mean(b);
        return a < b;
    });

    std::vector<Action> best;
    arma::uword total = 1;
    for (arma::uword i = 0; i < k; ++i)
        total *= 4;
    for (arma::uword code = 0; code < total; ++code)
    {
        std::vector<Action> cur(k);
        arma::uword rem = code;
        std::map<Action, arma::uword> used;
        for (arma::uword i = 0; i < k; ++i)
        {
            cur[i] = acts[rem % 4];
            rem /= 4;
            ++used[cur[i]];
        }
        bool feasible = true;
        for (const auto& [a, n] : used)
            feasible = feasible && n <= lim.of(a);
        if (!feasible)
            continue;
        if (best.empty())
        {
            best = cur;
            continue;
        }
        for (arma::uword i : order)
        {
            const double vc = t.means[i].at(cur[i]), vb = t.means[i].at(best[i]);
            if (vc != vb)
            {
                if (vc > vb)
                    best = cur;
                break;
            }
            if (pref_rank(cur[i]) != pref_rank(best[i]))
            {
                if (pref_rank(cur[i]) < pref_rank(best[i]))
                    best = cur;
                break;
            }
        }
    }

    ActionAssignment out;
    for (Action a : acts)
        out.sets[a] = {};
    for (arma::uword i = 0; i < k; ++i)
        out.sets[best[i]].push_back(i);
    return out;
}

ActionMetricTable table_from(const std::vector<std::map<Action, double>>& means)
{
    ActionMetricTable t;
    t.means = means;
    t.rows.resize(means.size());
    return t;
}

} // namespace

TEST_CASE("digital-subtraction prediction is the frozen training-length penalty", "[policy]")
{
    SystemConstants c; // 4 DL streams against 64 training tones
    UserSet users = null_aligned_users();
    ScattererRecord rec{AngleDeg{50.0}, 7, db_to_linear(24.0), Action::UNASSIGNED};
    auto m = prior_metrics(users, rec, c);
    const double dsic = m.at(Action::DSIC).ul(0);
    REQUIRE(dsic == Catch::Approx(16.0 / 17.0).margin(1e-12));
    REQUIRE(dsic == Catch::Approx(0.94118).margin(5e-6));
    for (arma::uword k = 0; k < users.k_u(); ++k)
        REQUIRE(m.at(Action::DSIC).ul(k) == dsic);
    REQUIRE(arma::all(m.at(Action::DSIC).dl == 1.0));
}

TEST_CASE("receive-nulling prediction reproduces the hand-computed mean", "[policy]")
{
    SystemConstants c;
    UserSet users = null_aligned_users();
    // scatterer exactly on user 0; every other user sits on a beam null
    ScattererRecord rec{AngleDeg{0.0}, 7, db_to_linear(24.0), Action::UNASSIGNED};
    auto m = prior_metrics(users, rec, c);
    REQUIRE(m.at(Action::RX).ul(0) == Catch::Approx(0.0).margin(1e-9));
    for (arma::uword k = 1; k < 4; ++k)
        REQUIRE(m.at(Action::RX).ul(k) == Catch::Approx(1.0).margin(1e-9));
    REQUIRE(mean_metric(m.at(Action::RX)) == Catch::Approx(0.875).margin(1e-9));
}

TEST_CASE("a powerless echo is predicted harmless when ignored", "[policy]")
{
    SystemConstants c;
    UserSet users = null_aligned_users();
    ScattererRecord rec{AngleDeg{33.0}, 7, 0.0, Action::UNASSIGNED};
    auto m = prior_metrics(users, rec, c);
    REQUIRE(arma::all(m.at(Action::NA).ul == 1.0));
    REQUIRE(arma::all(m.at(Action::NA).dl == 1.0));
}

TEST_CASE("predictions reject unsensed records and stay in the unit interval", "[policy]")
{
    SystemConstants c;
    UserSet users = null_aligned_users();
    ScattererRecord nan_angle{AngleDeg{std::nan("")}, 7, 1.0, Action::UNASSIGNED};
    REQUIRE_THROWS_AS(prior_metrics(users, nan_angle, c), std::invalid_argument);
    ScattererRecord nan_power{AngleDeg{10.0}, 7, std::numeric_limits<double>::quiet_NaN(),
                              Action::UNASSIGNED};
    REQUIRE_THROWS_AS(prior_metrics(users, nan_power, c), std::invalid_argument);

    Rng rng(5150);
    for (int trial = 0; trial < 50; ++trial)
    {
        ScattererRecord rec{AngleDeg{rng.uniform(-80.0, 80.0)}, 3,
                            db_to_linear(rng.uniform(0.0, 40.0)), Action::UNASSIGNED};
        for (const auto& [a, pm] : prior_metrics(users, rec, c))
        {
            REQUIRE(arma::all(pm.ul >= 0.0));
            REQUIRE(arma::all(pm.ul <= 1.0));
            REQUIRE(arma::all(pm.dl >= 0.0));
            REQUIRE(arma::all(pm.dl <= 1.0));
            if (a == Action::NA)
                REQUIRE(arma::all(pm.ul > 0.0));
        }
    }
}

TEST_CASE("two-user mean splits evenly", "[policy]")
{
    PriorMetrics m;
    m.ul = arma::vec{0.0};
    m.dl = arma::vec{1.0};
    REQUIRE(mean_metric(m) == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("a harmless echo resolves exact ties toward inaction", "[policy]")
{
    SystemConstants c;
    UserSet users = null_aligned_users();
    // 30 degrees = asin(8/16): a beam null of every user above
    ScattererMap map;
    map.records.push_back({AngleDeg{30.0}, 7, db_to_linear(24.0), Action::UNASSIGNED});
    ActionMetricTable t = build_metric_table(users, map, c);
    REQUIRE(t.na_mean(0) == Catch::Approx(1.0).margin(1e-9));
    ActionAssignment asg = assign_actions(t, RfcLimits{});
    REQUIRE(asg.sets.at(Action::NA) == std::vector<arma::uword>{0});
}

TEST_CASE("an echo on a co-located duplex pair is routed to subtraction", "[policy]")
{
    SystemConstants c;
    UserSet users;
    users.ul_angles = {AngleDeg{0.0}, AngleDeg{2.5}, AngleDeg{7.5}, AngleDeg{12.5}};
    users.dl_angles = {AngleDeg{0.0}, AngleDeg{-2.5}, AngleDeg{-7.5}, AngleDeg{-12.5}};
    users.ul_powers = arma::vec(4, arma::fill::value(10.0));
    users.dl_powers = arma::vec(4, arma::fill::value(10.0));
    ScattererMap map;
    map.records.push_back({AngleDeg{0.0}, 7, db_to_linear(24.0), Action::UNASSIGNED});

    ScattererMap planned = plan_actions(users, map, c, RfcLimits{});
    REQUIRE(planned.records[0].action == Action::DSIC);
}

TEST_CASE("greedy assignment matches the exhaustive reference", "[policy]")
{
    Rng rng(777);
    const Action acts[] = {Action::NA, Action::TX, Action::RX, Action::DSIC};
    int checked = 0;
    for (int trial = 0; trial < 300; ++trial)
    {
        const arma::uword k_s = 1 + rng.index(4);
        std::vector<std::map<Action, double>> means(k_s);
        for (auto& row : means)
            for (Action a : acts)
            {
                // coarse values provoke exact ties across rows and actions
                row[a] = (1.0 + double(rng.index(8))) / 8.0;
            }
        RfcLimits lim;
        auto draw_limit = [&]() -> arma::uword {
            const arma::uword opts[] = {0, 1, 2, RfcLimits::unlimited};
            return opts[rng.index(4)];
        };
        lim.na = draw_limit();
        lim.rx = draw_limit();
        lim.tx = draw_limit();
        lim.dsic = draw_limit();

        double cap = 0.0;
        for (Action a : acts)
            cap += std::min<double>(double(lim.of(a)), double(k_s));
        ActionMetricTable t = table_from(means);
        if (cap < double(k_s))
        {
            REQUIRE_THROWS_AS(assign_actions(t, lim), std::invalid_argument);
            continue;
        }
        ActionAssignment greedy = assign_actions(t, lim);
        ActionAssignment oracle = brute_force(t, lim);
        for (Action a : acts)
            REQUIRE(greedy.sets.at(a) == oracle.sets.at(a));
        ++checked;
    }
    REQUIRE(checked > 150);
}

TEST_CASE("assignment is equivariant under record relabeling", "[policy]")
{
    std::vector<std::map<Action, double>> means = {
        {{Action::NA, 0.20}, {Action::TX, 0.55}, {Action::RX, 0.90}, {Action::DSIC, 0.80}},
        {{Action::NA, 0.35}, {Action::TX, 0.65}, {Action::RX, 0.85}, {Action::DSIC, 0.80}},
        {{Action::NA, 0.50}, {Action::TX, 0.95}, {Action::RX, 0.40}, {Action::DSIC, 0.80}},
    };
    RfcLimits lim;
    lim.rx = 1;
    ActionAssignment base = assign_actions(table_from(means), lim);

    const arma::uword perm[] = {2, 0, 1}; // new index of old record i
    std::vector<std::map<Action, double>> shuffled(3);
    for (arma::uword i = 0; i < 3; ++i)
        shuffled[perm[i]] = means[i];
    ActionAssignment moved = assign_actions(table_from(shuffled), lim);

    for (Action a : {Action::NA, Action::TX, Action::RX, Action::DSIC})
    {
        std::vector<arma::uword> expect;
        for (arma::uword i : base.sets.at(a))
            expect.push_back(perm[i]);
        std::sort(expect.begin(), expect.end());
        REQUIRE(moved.sets.at(a) == expect);
    }
}

TEST_CASE("capacity pressure sends the most severe record to the scarce action", "[policy]")
{
    // all three rows prefer receive nulling but only one chain is available
    std::vector<std::map<Action, double>> means = {
        {{Action::NA, 0.20}, {Action::TX, 0.50}, {Action::RX, 0.90}, {Action::DSIC, 0.80}},
        {{Action::NA, 0.30}, {Action::TX, 0.60}, {Action::RX, 0.90}, {Action::DSIC, 0.80}},
        {{Action::NA, 0.40}, {Action::TX, 0.70}, {Action::RX, 0.90}, {Action::DSIC, 0.80}},
    };
    RfcLimits lim;
    lim.rx = 1;
    ActionAssignment asg = assign_actions(table_from(means), lim);
    REQUIRE(asg.sets.at(Action::RX) == std::vector<arma::uword>{0});
    REQUIRE(asg.sets.at(Action::DSIC) == std::vector<arma::uword>{1, 2});
    REQUIRE(asg.sets.at(Action::NA).empty());
    REQUIRE(asg.sets.at(Action::TX).empty());
}

TEST_CASE("equal severities fall back to record order", "[policy]")
{
    std::vector<std::map<Action, double>> means = {
        {{Action::NA, 0.30}, {Action::TX, 0.50}, {Action::RX, 0.90}, {Action::DSIC, 0.80}},
        {{Action::NA, 0.30}, {Action::TX, 0.50}, {Action::RX, 0.90}, {Action::DSIC, 0.80}},
    };
    RfcLimits lim;
    lim.rx = 1;
    ActionAssignment asg = assign_actions(table_from(means), lim);
    REQUIRE(asg.sets.at(Action::RX) == std::vector<arma::uword>{0});
    REQUIRE(asg.sets.at(Action::DSIC) == std::vector<arma::uword>{1});
}

TEST_CASE("unlimited capacity reduces to a per-record argmax", "[policy]")
{
    Rng rng(888);
    const Action acts[] = {Action::NA, Action::TX, Action::RX, Action::DSIC};
    std::vector<std::map<Action, double>> means(5);
    for (auto& row : means)
        for (Action a : acts)
            row[a] = rng.uniform(0.05, 1.0);
    ActionAssignment asg = assign_actions(table_from(means), RfcLimits{});
    for (arma::uword i = 0; i < 5; ++i)
    {
        Action best = Action::UNASSIGNED;
        double v = -1.0;
        for (Action a : acts)
            if (means[i].at(a) > v)
            {
                v = means[i].at(a);
                best = a;
            }
        const auto& got = asg.sets.at(best);
        REQUIRE(std::find(got.begin(), got.end(), i) != got.end());
    }
}

TEST_CASE("applying an assignment marks every record", "[policy]")
{
    SystemConstants c;
    UserSet users = null_aligned_users();
    ScattererMap map;
    map.records.push_back({AngleDeg{0.0}, 3, db_to_linear(30.0), Action::UNASSIGNED});
    map.records.push_back({AngleDeg{30.0}, 9, db_to_linear(20.0), Action::UNASSIGNED});
    ScattererMap planned = plan_actions(users, map, c, RfcLimits{});
    REQUIRE(planned.all_assigned());
    validate(planned, c);
}
