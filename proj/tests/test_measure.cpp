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

#include "fdsi/measure.hpp"

#include <armadillo>
#include <cmath>
#include <vector>

using namespace fdsi;

namespace
{

UserSet reference_users()
{
    UserSet u;
    u.ul_angles = {AngleDeg{0.0}, AngleDeg{2.5}, AngleDeg{7.5}, AngleDeg{12.5}};
    u.dl_angles = {AngleDeg{0.0}, AngleDeg{-2.5}, AngleDeg{-7.5}, AngleDeg{-12.5}};
    u.ul_powers = arma::vec(4, arma::fill::value(10.0));
    u.dl_powers = arma::vec(4, arma::fill::value(10.0));
    return u;
}

Scenario single_scatterer(const UserSet& u, double angle_deg, double inr_db)
{
    Scenario s;
    s.users = u;
    s.map.records.push_back({AngleDeg{angle_deg}, 13, db_to_linear(inr_db), Action::UNASSIGNED});
    return s;
}

// one uplink user far from everything; keeps equalizer noise boost at the
// single-channel floor so absolute SINR levels are predictable
Scenario separated_layout()
{
    UserSet u;
    u.ul_angles = {AngleDeg{15.0}};
    u.dl_angles = {AngleDeg{-35.0}, AngleDeg{-5.0}, AngleDeg{25.0}, AngleDeg{60.0}};
    u.ul_powers = arma::vec(1, arma::fill::value(10.0));
    u.dl_powers = arma::vec(4, arma::fill::value(10.0));
    return single_scatterer(u, 45.0, 34.0);
}

} // namespace

TEST_CASE("method names round-trip through the parser", "[measure]")
{
    for (Method m : {Method::SiFree, Method::NoSic, Method::OnlyDsic, Method::OnlyRx,
                     Method::OnlyTx, Method::Switching, Method::Proposed,
                     Method::ProposedLimited})
    {
        auto back = parse_method(method_name(m));
        REQUIRE(back.has_value());
        CHECK(*back == m);
    }
    CHECK(parse_method("Proposed") == Method::Proposed);
    CHECK(parse_method("switching-rx/tx") == Method::Switching);
    CHECK(parse_method("SI-FREE") == Method::SiFree);
    CHECK_FALSE(parse_method("bogus").has_value());
    CHECK_FALSE(parse_method("").has_value());
}

TEST_CASE("fixed-action methods route every scatterer to their action", "[measure]")
{
    SystemConstants c;
    UserSet u = reference_users();
    ScattererMap map;
    map.records.push_back({AngleDeg{-20.0}, 3, db_to_linear(34.0), Action::UNASSIGNED});
    map.records.push_back({AngleDeg{30.0}, 7, db_to_linear(20.0), Action::UNASSIGNED});

    auto all_are = [](const ScattererMap& m, Action a) {
        for (const auto& r : m.records)
            if (r.action != a)
                return false;
        return true;
    };
    CHECK(all_are(route_for_method(Method::SiFree, u, map, c, RfcLimits{}), Action::NA));
    CHECK(all_are(route_for_method(Method::NoSic, u, map, c, RfcLimits{}), Action::NA));
    CHECK(all_are(route_for_method(Method::OnlyDsic, u, map, c, RfcLimits{}), Action::DSIC));
    CHECK(all_are(route_for_method(Method::OnlyRx, u, map, c, RfcLimits{}), Action::RX));
    CHECK(all_are(route_for_method(Method::OnlyTx, u, map, c, RfcLimits{}), Action::TX));
}

TEST_CASE("switching routes by nearest user in beam coordinates", "[measure]")
{
    SystemConstants c;
    UserSet u = reference_users();

    auto routed_action = [&](double angle) {
        ScattererMap map;
        map.records.push_back({AngleDeg{angle}, 5, db_to_linear(34.0), Action::UNASSIGNED});
        return route_for_method(Method::Switching, u, map, c, RfcLimits{}).records[0].action;
    };
    // 2 deg: uplink user at 2.5 is nearest, suppress at the transmitter
    CHECK(routed_action(2.0) == Action::TX);
    // -2 deg: downlink user at -2.5 is nearest, suppress at the receiver
    CHECK(routed_action(-2.0) == Action::RX);
    // 0 deg: the full-duplex pair ties, resolved to the transmit side
    CHECK(routed_action(0.0) == Action::TX);
    CHECK(routed_action(11.0) == Action::TX);
    CHECK(routed_action(-9.0) == Action::RX);
}

TEST_CASE("limited routing honours the action budget", "[measure]")
{
    SystemConstants c;
    UserSet u = reference_users();
    ScattererMap map;
    for (double a : {-20.0, -10.0, 20.0, 30.0})
        map.records.push_back({AngleDeg{a}, 3, db_to_linear(34.0), Action::UNASSIGNED});

    RfcLimits none;
    none.rx = 0;
    none.tx = 0;
    ScattererMap routed = route_for_method(Method::ProposedLimited, u, map, c, none);
    for (const auto& r : routed.records)
    {
        CHECK(r.action != Action::RX);
        CHECK(r.action != Action::TX);
    }
    CHECK(routed.all_assigned());
}

TEST_CASE("measure is deterministic in the seed", "[measure]")
{
    SystemConstants c;
    Scenario s = single_scatterer(reference_users(), -20.0, 34.0);

    MeasuredPerformance a = measure(3, fixed_scenario(s), Method::Proposed, c, 7);
    MeasuredPerformance b = measure(3, fixed_scenario(s), Method::Proposed, c, 7);
    REQUIRE(a.trials_run() == 3);
    CHECK(arma::all(arma::vectorise(a.ul_gamma) == arma::vectorise(b.ul_gamma)));
    CHECK(arma::all(arma::vectorise(a.dl_gamma) == arma::vectorise(b.dl_gamma)));

    MeasuredPerformance d = measure(3, fixed_scenario(s), Method::Proposed, c, 8);
    CHECK_FALSE(arma::all(arma::vectorise(a.ul_gamma) == arma::vectorise(d.ul_gamma)));
}

TEST_CASE("downlink is untouched by receive-side mitigation", "[measure]")
{
    SystemConstants c;
    Scenario s = single_scatterer(reference_users(), -20.0, 34.0);

    MeasuredPerformance sf = measure(5, fixed_scenario(s), Method::SiFree, c, 11);
    for (Method m : {Method::NoSic, Method::OnlyRx, Method::OnlyDsic})
    {
        MeasuredPerformance mp = measure(5, fixed_scenario(s), m, c, 11);
        // conventional transmit beams and paired substreams: bitwise equal
        CHECK(arma::all(arma::vectorise(mp.dl_gamma) == arma::vectorise(sf.dl_gamma)));
    }
    MeasuredPerformance tx = measure(5, fixed_scenario(s), Method::OnlyTx, c, 11);
    CHECK_FALSE(arma::all(arma::vectorise(tx.dl_gamma) == arma::vectorise(sf.dl_gamma)));
}

TEST_CASE("interference-free and cancelled levels match the noise budget", "[measure]")
{
    SystemConstants c;
    Scenario s = separated_layout();

    MeasuredPerformance sf = measure(2000, fixed_scenario(s), Method::SiFree, c, 42);
    MeasuredPerformance ds = measure(2000, fixed_scenario(s), Method::OnlyDsic, c, 42);
    REQUIRE(sf.trials_skipped == 0);
    REQUIRE(ds.trials_skipped == 0);

    // input SNR 10 dB minus the channel-estimation noise share
    CHECK(sf.worst_ul_db == Catch::Approx(10.0).margin(0.3));
    CHECK(ds.worst_ul_db == Catch::Approx(10.0 - 0.26).margin(0.3));

    // cancellation cost: estimated columns grow from k_u to k_u + k_d
    double k_u = 1.0, k_d = 4.0, n_tr = 64.0;
    double law = 10.0 * std::log10((1.0 + (k_u + k_d) / n_tr) / (1.0 + k_u / n_tr));
    CHECK(sf.worst_ul_db - ds.worst_ul_db == Catch::Approx(law).margin(0.05));
}

TEST_CASE("selection beats single-action mitigation at the pinch point", "[measure]")
{
    SystemConstants c;
    // scatterer on the full-duplex user: both pure spatial methods collapse
    Scenario s = single_scatterer(reference_users(), 0.0, 34.0);

    MeasuredPerformance pr = measure(300, fixed_scenario(s), Method::Proposed, c, 42);
    MeasuredPerformance rx = measure(300, fixed_scenario(s), Method::OnlyRx, c, 42);
    MeasuredPerformance sw = measure(300, fixed_scenario(s), Method::Switching, c, 42);
    CHECK(pr.worst_ul_db > rx.worst_ul_db + 10.0);
    CHECK(pr.worst_ul_db > sw.worst_ul_db + 10.0);
}

TEST_CASE("singular trials are counted and skipped", "[measure]")
{
    SystemConstants c;
    UserSet u = reference_users();
    u.dl_angles[1] = u.dl_angles[0]; // coincident downlink users: no precoder
    Scenario s = single_scatterer(u, -20.0, 34.0);

    MeasuredPerformance mp = measure(4, fixed_scenario(s), Method::SiFree, c, 3);
    CHECK(mp.trials_requested == 4);
    CHECK(mp.trials_skipped == 4);
    CHECK(mp.trials_run() == 0);
    CHECK(std::isnan(mp.worst_ul_db));
    CHECK(mp.ul_air.is_empty());
}

TEST_CASE("measure rejects an empty trial budget", "[measure]")
{
    SystemConstants c;
    Scenario s = single_scatterer(reference_users(), -20.0, 34.0);
    CHECK_THROWS_AS(measure(0, fixed_scenario(s), Method::SiFree, c, 1), std::invalid_argument);
}

TEST_CASE("bootstrap intervals bracket the point estimate", "[measure]")
{
    SystemConstants c;
    Scenario s = single_scatterer(reference_users(), -20.0, 34.0);
    MeasuredPerformance mp = measure(200, fixed_scenario(s), Method::SiFree, c, 42);

    BootstrapCis ci = bootstrap_cis(mp, 400, 42);
    CHECK(ci.worst_ul_db.lo <= mp.worst_ul_db);
    CHECK(ci.worst_ul_db.hi >= mp.worst_ul_db);
    CHECK(ci.worst_ul_db.hi - ci.worst_ul_db.lo < 2.0);
    CHECK(ci.dl_air.lo <= ci.dl_air.hi);

    BootstrapCis again = bootstrap_cis(mp, 400, 42);
    CHECK(ci.worst_ul_db.lo == again.worst_ul_db.lo);
    CHECK(ci.worst_ul_db.hi == again.worst_ul_db.hi);
}

TEST_CASE("compensated mean matches the exact sum", "[measure]")
{
    arma::vec v = {1.0, 2.0, 3.0, 4.0};
    CHECK(compensated_mean(v) == Catch::Approx(2.5).epsilon(1e-15));
    CHECK(std::isnan(compensated_mean(arma::vec{})));
}
