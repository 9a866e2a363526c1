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
#include "fdsi/scenario.hpp"

#include <armadillo>
#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace fdsi
{

// Closed-form per-user performance predictions for one scatterer and one
// action, each normalized by the echo-free value (1 = unharmed). Uplink
// entries predict SINR, downlink entries SNR.
struct PriorMetrics
{
    arma::vec ul;
    arma::vec dl;
};

// Single-scatterer predictions under conventional beams. Leaving the echo
// alone costs uplink SINR through the beam overlaps; receive or transmit
// nulling costs exactly the overlap with the sacrificed beam; digital
// subtraction costs a fixed training-length penalty on the uplink.
inline std::map<Action, PriorMetrics> prior_metrics(const UserSet& users,
                                                    const ScattererRecord& rec,
                                                    const SystemConstants& c)
{
    validate(users);
    if (std::isnan(rec.angle.value) || std::isnan(rec.power))
        throw std::invalid_argument("prior_metrics: record lacks a sensed angle or power");

    const arma::uword k_u = users.k_u(), k_d = users.k_d();
    arma::vec q_us(k_u), q_ds(k_d);
    for (arma::uword k = 0; k < k_u; ++k)
        q_us(k) = beam_correlation(users.ul_angles[k], rec.angle, c.n_antennas);
    for (arma::uword k = 0; k < k_d; ++k)
        q_ds(k) = beam_correlation(users.dl_angles[k], rec.angle, c.n_antennas);
    const double ds_sum = arma::accu(q_ds);
    const double inr = rec.power / c.noise_power;

    std::map<Action, PriorMetrics> out;
    PriorMetrics na;
    na.ul = 1.0 / (1.0 + inr * ds_sum * q_us);
    na.dl = arma::vec(k_d, arma::fill::ones);
    out[Action::NA] = na;

    PriorMetrics rx;
    rx.ul = 1.0 - q_us;
    rx.dl = arma::vec(k_d, arma::fill::ones);
    out[Action::RX] = rx;

    PriorMetrics tx;
    tx.ul = arma::vec(k_u, arma::fill::ones);
    tx.dl = 1.0 - q_ds;
    out[Action::TX] = tx;

    PriorMetrics dsic;
    dsic.ul = arma::vec(k_u);
    dsic.ul.fill(1.0 / (1.0 + double(k_d) / double(c.n_training)));
    dsic.dl = arma::vec(k_d, arma::fill::ones);
    out[Action::DSIC] = dsic;
    return out;
}

// Arithmetic mean over all served users, the scalar the policy ranks by.
inline double mean_metric(const PriorMetrics& m)
{
    const arma::uword n = m.ul.n_elem + m.dl.n_elem;
    if (n == 0)
        throw std::invalid_argument("mean_metric: no users");
    return (arma::accu(m.ul) + arma::accu(m.dl)) / double(n);
}

struct ActionMetricTable
{
    std::vector<std::map<Action, PriorMetrics>> rows;
    std::vector<std::map<Action, double>> means;

    arma::uword k_s() const { return arma::uword(means.size()); }
    double na_mean(arma::uword i) const { return means[i].at(Action::NA); }
};

inline ActionMetricTable build_metric_table(const UserSet& users, const ScattererMap& map,
                                            const SystemConstants& c)
{
    ActionMetricTable t;
    for (const ScattererRecord& rec : map.records)
    {
        t.rows.push_back(prior_metrics(users, rec, c));
        std::map<Action, double> m;
        for (const auto& [a, pm] : t.rows.back())
            m[a] = mean_metric(pm);
        t.means.push_back(std::move(m));
    }
    return t;
}

struct ActionAssignment
{
    std::map<Action, std::vector<arma::uword>> sets; // disjoint, union = all records
};

namespace detail
{
// argmax tie preference: prefer inaction, then the action that spares
// receive RF chains
constexpr Action kPreference[] = {Action::NA, Action::TX, Action::RX, Action::DSIC};
} // namespace detail

// Greedy assignment: walk scatterers from most to least severe (ascending
// echo-ignored metric, lowest index on ties) and give each the best-scoring
// action that still has capacity.
inline ActionAssignment assign_actions(const ActionMetricTable& t, const RfcLimits& limits)
{
    const arma::uword k_s = t.k_s();
    double capacity = 0.0; // saturating: unlimited dwarfs any k_s
    for (Action a : detail::kPreference)
        capacity += std::min<double>(double(limits.of(a)), double(k_s));
    if (capacity < double(k_s))
        throw std::invalid_argument("assign_actions: action capacities cannot cover the map");

    std::vector<arma::uword> order(k_s);
    std::iota(order.begin(), order.end(), arma::uword(0));
    std::sort(order.begin(), order.end(), [&](arma::uword a, arma::uword b) {
        if (t.na_mean(a) != t.na_mean(b))
            return t.na_mean(a) < t.na_mean(b);
        return a < b;
    });

    ActionAssignment out;
    std::map<Action, arma::uword> used;
    for (Action a : detail::kPreference)
    {
        out.sets[a] = {};
        used[a] = 0;
    }
    for (arma::uword i : order)
    {
        double best = -1.0;
        Action chosen = Action::UNASSIGNED;
        for (Action a : detail::kPreference)
        {
            if (used[a] >= limits.of(a))
                continue;
            const double v = t.means[i].at(a);
            if (v > best)
            {
                best = v;
                chosen = a;
            }
        }
        if (chosen == Action::UNASSIGNED)
            throw std::invalid_argument("assign_actions: ran out of capacity");
        out.sets[chosen].push_back(i);
        ++used[chosen];
    }
    for (auto& [a, v] : out.sets)
        std::sort(v.begin(), v.end());
    return out;
}

inline ScattererMap apply_assignment(const ScattererMap& map, const ActionAssignment& asg)
{
    ScattererMap out = map;
    for (const auto& [a, indices] : asg.sets)
        for (arma::uword i : indices)
            out.records[i].action = a;
    return out;
}

// Full policy pass: predict, rank, assign, return the updated map.
inline ScattererMap plan_actions(const UserSet& users, const ScattererMap& map,
                                 const SystemConstants& c, const RfcLimits& limits)
{
    return apply_assignment(map, assign_actions(build_metric_table(users, map, c), limits));
}

} // namespace fdsi
