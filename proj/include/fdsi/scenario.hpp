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

#pragma once

#include "fdsi/array.hpp"
#include "fdsi/rng.hpp"

#include <armadillo>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace fdsi
{

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

// Per-scatterer mitigation action. A scatterer is NA (tolerated), nulled at
// the receive or transmit array, or cancelled digitally (DSIC).
enum class Action
{
    NA,
    RX,
    TX,
    DSIC,
    UNASSIGNED
};

inline const char* action_name(Action a)
{
    switch (a)
    {
    case Action::NA:
        return "na";
    case Action::RX:
        return "rx";
    case Action::TX:
        return "tx";
    case Action::DSIC:
        return "dsic";
    default:
        return "unassigned";
    }
}

// Capacity of each action class. RX/TX capacities model the analog RF-chain
// budget of the hybrid arrays; NA and DSIC are unconstrained by default.
struct RfcLimits
{
    static constexpr arma::uword unlimited = std::numeric_limits<arma::uword>::max();

    arma::uword na = unlimited;
    arma::uword rx = unlimited;
    arma::uword tx = unlimited;
    arma::uword dsic = unlimited;

    arma::uword of(Action a) const
    {
        switch (a)
        {
        case Action::NA:
            return na;
        case Action::RX:
            return rx;
        case Action::TX:
            return tx;
        case Action::DSIC:
            return dsic;
        default:
            throw std::invalid_argument("RfcLimits::of: no capacity for UNASSIGNED");
        }
    }
};

// Dimensions and noise floor of the OFDM full-duplex link. Training tones
// are the n_training uniformly decimated subcarriers.
struct SystemConstants
{
    arma::uword n_antennas = 32;
    arma::uword n_subcarriers = 1024;
    arma::uword n_training = 64;
    double noise_power = 1.0;
    RfcLimits rfc_limits;
};

inline void validate(const SystemConstants& c)
{
    if (c.n_antennas == 0)
        throw std::invalid_argument("SystemConstants: n_antennas must be positive");
    if (c.n_training == 0 || c.n_subcarriers == 0)
        throw std::invalid_argument("SystemConstants: subcarrier counts must be positive");
    if (c.n_training > c.n_subcarriers || c.n_subcarriers % c.n_training != 0)
        throw std::invalid_argument(
            "SystemConstants: n_training must uniformly decimate n_subcarriers");
    if (!(c.noise_power > 0.0) || !std::isfinite(c.noise_power))
        throw std::invalid_argument("SystemConstants: noise_power must be positive");
}

// Uplink and downlink user directions with per-user transmit-side powers
// (variance of the per-user channel gain).
struct UserSet
{
    std::vector<AngleDeg> ul_angles;
    std::vector<AngleDeg> dl_angles;
    arma::vec ul_powers;
    arma::vec dl_powers;

    arma::uword k_u() const { return ul_angles.size(); }
    arma::uword k_d() const { return dl_angles.size(); }
};

inline void validate(const UserSet& u)
{
    if (u.ul_angles.empty() || u.dl_angles.empty())
        throw std::invalid_argument("UserSet: need at least one user per direction");
    if (u.ul_powers.n_elem != u.k_u() || u.dl_powers.n_elem != u.k_d())
        throw std::invalid_argument("UserSet: power vector sizes must match angle lists");
    for (const auto& a : u.ul_angles)
        if (!(a.value >= -90.0 && a.value <= 90.0))
            throw std::domain_error("UserSet: uplink angle outside [-90, 90]");
    for (const auto& a : u.dl_angles)
        if (!(a.value >= -90.0 && a.value <= 90.0))
            throw std::domain_error("UserSet: downlink angle outside [-90, 90]");
    if (u.ul_powers.min() <= 0.0 || u.dl_powers.min() <= 0.0)
        throw std::invalid_argument("UserSet: powers must be positive");
}

// One far-field scatterer: direction, integer excess delay (in samples, a
// member of {0..n_training-1}), echo power and assigned action. Records
// created by emergence recovery before sensing carry NaN angle/power.
struct ScattererRecord
{
    AngleDeg angle;
    arma::uword delay = 0;
    double power = 0.0;
    Action action = Action::UNASSIGNED;
};

struct ScattererMap
{
    std::vector<ScattererRecord> records;

    arma::uword k_s() const { return records.size(); }

    // indices of records carrying action a, ascending
    arma::uvec set_for(Action a) const
    {
        std::vector<arma::uword> idx;
        for (arma::uword i = 0; i < records.size(); ++i)
            if (records[i].action == a)
                idx.push_back(i);
        return arma::uvec(idx);
    }

    arma::uword count(Action a) const { return set_for(a).n_elem; }

    bool all_assigned() const
    {
        for (const auto& r : records)
            if (r.action == Action::UNASSIGNED)
                return false;
        return true;
    }
};

inline void validate(const ScattererMap& m, const SystemConstants& c)
{
    for (const auto& r : m.records)
    {
        if (r.delay >= c.n_training)
            throw std::invalid_argument("ScattererMap: delay outside the resolvable set");
        if (!std::isnan(r.angle.value) && !(r.angle.value >= -90.0 && r.angle.value <= 90.0))
            throw std::domain_error("ScattererMap: angle outside [-90, 90]");
        if (!std::isnan(r.power) && !(r.power > 0.0))
            throw std::invalid_argument("ScattererMap: power must be positive");
    }
}

// Free-space link budget of the cell. Distances in meters, wavelength in
// meters, radar cross section in square meters, powers linear.
struct LinkBudget
{
    double wavelength = 0.1;
    double ue_power = 1.0;
    double bs_power = 100.0;
    double radar_cross_section = 100.0;
    double user_distance = 80.0;
    double scatterer_distance = 20.0;
};

struct ChannelVariances
{
    double ul_power; // variance of a direct user path gain after array gain
    double si_power; // variance of one scatterer echo gain after array gains
};

// One-way user link vs two-way (backscatter) echo budget. The echo carries
// the squared array factor and the fourth-power distance law.
inline ChannelVariances channel_variances(const LinkBudget& lb, arma::uword n_antennas,
                                          arma::uword k_d)
{
    if (!(lb.wavelength > 0) || !(lb.ue_power > 0) || !(lb.bs_power > 0) ||
        !(lb.radar_cross_section > 0) || !(lb.user_distance > 0) || !(lb.scatterer_distance > 0))
        throw std::invalid_argument("channel_variances: all link-budget entries must be positive");
    if (n_antennas == 0 || k_d == 0)
        throw std::invalid_argument("channel_variances: n_antennas and k_d must be positive");

    const double na = double(n_antennas);
    const double four_pi = 4.0 * pi;
    ChannelVariances v{};
    v.ul_power = lb.ue_power * na * lb.wavelength * lb.wavelength /
                 (four_pi * four_pi * lb.user_distance * lb.user_distance);
    v.si_power = lb.bs_power * na * na * lb.wavelength * lb.wavelength * lb.radar_cross_section /
                 (double(k_d) * four_pi * four_pi * four_pi * std::pow(lb.scatterer_distance, 4));
    return v;
}

// Knobs for drawing a random cell layout. Powers are linear channel-gain
// variances shared by all users of a side and by all scatterers.
struct RandomScenarioSpec
{
    arma::uword k_u = 4;
    arma::uword k_d = 4;
    arma::uword k_s = 13;
    double angle_min = -60.0;
    double angle_max = 60.0;
    bool fd_user_at_zero = true;
    double ul_power = 10.0;
    double dl_power = 10.0;
    double si_power = db_to_linear(34.0);
};

struct Scenario
{
    UserSet users;
    ScattererMap map;
};

// Draw user and scatterer directions uniformly over the angular sector and
// scatterer delays without replacement from the resolvable set, so a seeded
// call is reproducible and the stacked estimation matrix stays full rank.
inline Scenario random_scenario(Rng& rng, const RandomScenarioSpec& spec,
                                const SystemConstants& consts)
{
    if (spec.k_u == 0 || spec.k_d == 0)
        throw std::invalid_argument("random_scenario: need at least one user per direction");
    if (spec.k_s > consts.n_training)
        throw std::invalid_argument("random_scenario: more scatterers than resolvable delays");
    if (!(spec.angle_min >= -90.0 && spec.angle_max <= 90.0 && spec.angle_min < spec.angle_max))
        throw std::domain_error("random_scenario: bad angular sector");

    Scenario s;
    s.users.ul_powers = arma::vec(spec.k_u, arma::fill::value(spec.ul_power));
    s.users.dl_powers = arma::vec(spec.k_d, arma::fill::value(spec.dl_power));
    for (arma::uword k = 0; k < spec.k_u; ++k)
    {
        const bool pin = spec.fd_user_at_zero && k == 0;
        s.users.ul_angles.push_back({pin ? 0.0 : rng.uniform(spec.angle_min, spec.angle_max)});
    }
    for (arma::uword k = 0; k < spec.k_d; ++k)
    {
        const bool pin = spec.fd_user_at_zero && k == 0;
        s.users.dl_angles.push_back({pin ? 0.0 : rng.uniform(spec.angle_min, spec.angle_max)});
    }

    arma::uvec delays = rng.sample_without_replacement(consts.n_training, spec.k_s);
    for (arma::uword k = 0; k < spec.k_s; ++k)
    {
        ScattererRecord r;
        r.angle = {rng.uniform(spec.angle_min, spec.angle_max)};
        r.delay = delays(k);
        r.power = spec.si_power;
        s.map.records.push_back(r);
    }

    validate(s.users);
    validate(s.map, consts);
    return s;
}

} // namespace fdsi
