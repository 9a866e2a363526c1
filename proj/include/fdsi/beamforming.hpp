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
#include <cmath>
#include <stdexcept>

namespace fdsi
{

// Receive combiner columns (n_antennas x k_u) and transmit beamformer
// columns (n_antennas x k_d); every column has unit norm.
struct BeamformerPair
{
    arma::cx_mat rx;
    arma::cx_mat tx;
};

inline arma::cx_mat steering_matrix(const std::vector<AngleDeg>& angles, arma::uword n_antennas)
{
    arma::cx_mat q(n_antennas, angles.size());
    for (arma::uword k = 0; k < angles.size(); ++k)
        q.col(k) = steering(angles[k], n_antennas);
    return q;
}

// Matched (conventional) beams: each column is the steering vector of its
// user; no interference awareness.
inline BeamformerPair conventional_beamformers(const UserSet& users, const SystemConstants& c)
{
    validate(users);
    return {steering_matrix(users.ul_angles, c.n_antennas),
            steering_matrix(users.dl_angles, c.n_antennas)};
}

namespace detail
{
inline arma::cx_vec scatterer_steering(const ScattererRecord& r, arma::uword n_antennas)
{
    if (std::isnan(r.angle.value))
        throw std::domain_error("beamforming: scatterer direction unknown (unsensed record)");
    return steering(r.angle, n_antennas);
}
} // namespace detail

// Echo power seen through the conventional transmit beams; the load that the
// receive-side design suppresses. The two designs are decoupled on purpose:
// each assumes the other side conventional, so neither depends on the
// other's output.
inline double rho_rx_load(const UserSet& users, const ScattererRecord& r, const SystemConstants& c)
{
    if (std::isnan(r.angle.value))
        throw std::domain_error("rho_rx_load: scatterer direction unknown");
    if (!(r.power > 0.0))
        throw std::domain_error("rho_rx_load: scatterer power must be positive");
    double q_sum = 0.0;
    for (const auto& a : users.dl_angles)
        q_sum += beam_correlation(a, r.angle, c.n_antennas);
    return r.power * q_sum;
}

// Echo power radiated toward the conventional receive beams; the load the
// transmit-side design suppresses.
inline double rho_tx_load(const UserSet& users, const ScattererRecord& r, const SystemConstants& c)
{
    if (std::isnan(r.angle.value))
        throw std::domain_error("rho_tx_load: scatterer direction unknown");
    if (!(r.power > 0.0))
        throw std::domain_error("rho_tx_load: scatterer power must be positive");
    double q_sum = 0.0;
    for (const auto& a : users.ul_angles)
        q_sum += beam_correlation(a, r.angle, c.n_antennas);
    return r.power * q_sum;
}

namespace detail
{
// Shared max-SINR/max-SLNR core: unit-norm columns of
// (noise_load I + sum_i rho_i q_i q_i^H)^-1 Q_users.
inline arma::cx_mat loaded_inverse_beams(const arma::cx_mat& q_users, const arma::cx_mat& q_si,
                                         const arma::vec& rho, double noise_load)
{
    const arma::uword na = q_users.n_rows;
    arma::cx_mat sigma = noise_load * arma::eye<arma::cx_mat>(na, na);
    for (arma::uword i = 0; i < q_si.n_cols; ++i)
        sigma += rho(i) * q_si.col(i) * q_si.col(i).t();
    arma::cx_mat u = arma::solve(sigma, q_users, arma::solve_opts::likely_sympd);
    for (arma::uword k = 0; k < u.n_cols; ++k)
        u.col(k) /= arma::norm(u.col(k));
    return u;
}

struct SidePick
{
    arma::cx_mat q_users;
    arma::cx_mat q_si;
    arma::vec rho;
    double noise_load;
};

inline SidePick pick_side(const UserSet& users, const ScattererMap& map, const SystemConstants& c,
                          bool rx_side)
{
    validate(users);
    SidePick p;
    p.q_users = steering_matrix(rx_side ? users.ul_angles : users.dl_angles, c.n_antennas);
    arma::uvec s = map.set_for(rx_side ? Action::RX : Action::TX);
    p.q_si.set_size(c.n_antennas, s.n_elem);
    p.rho.set_size(s.n_elem);
    for (arma::uword i = 0; i < s.n_elem; ++i)
    {
        const ScattererRecord& r = map.records[s(i)];
        p.q_si.col(i) = scatterer_steering(r, c.n_antennas);
        p.rho(i) = rx_side ? rho_rx_load(users, r, c) : rho_tx_load(users, r, c);
    }
    // the transmit design carries the uplink/downlink stream ratio on its
    // noise load so both sides trade beam gain against leakage consistently
    p.noise_load = rx_side ? c.noise_power
                           : c.noise_power * double(users.k_u()) / double(users.k_d());
    return p;
}
} // namespace detail

// Receive combiner that maximizes per-user SINR against the echoes assigned
// for receive nulling; reduces to the conventional beams when none are.
inline arma::cx_mat max_sinr_rx(const UserSet& users, const ScattererMap& map,
                                const SystemConstants& c)
{
    detail::SidePick p = detail::pick_side(users, map, c, true);
    return detail::loaded_inverse_beams(p.q_users, p.q_si, p.rho, p.noise_load);
}

// Transmit beamformer that maximizes per-user signal-to-leakage ratio
// against the echoes assigned for transmit nulling.
inline arma::cx_mat max_slnr_tx(const UserSet& users, const ScattererMap& map,
                                const SystemConstants& c)
{
    detail::SidePick p = detail::pick_side(users, map, c, false);
    return detail::loaded_inverse_beams(p.q_users, p.q_si, p.rho, p.noise_load);
}

enum class BeamformerSide
{
    Rx,
    Tx
};

// Hybrid (analog/digital) realization of the loaded-inverse beamformer.
// analog carries one RF chain per user beam plus one per nulled echo;
// digital is the small mixing stage; scale * analog * digital reproduces
// the full-array matrix exactly.
struct HybridFactorization
{
    arma::cx_mat analog;   // n_antennas x (k_users + |S|)
    arma::cx_mat digital;  // (k_users + |S|) x k_users
    double scale;          // 1 / noise_load
    arma::uword rf_chains; // number of analog columns
};

inline HybridFactorization hybrid_factorize(const UserSet& users, const ScattererMap& map,
                                            const SystemConstants& c, BeamformerSide side)
{
    detail::SidePick p = detail::pick_side(users, map, c, side == BeamformerSide::Rx);
    const arma::uword k_users = p.q_users.n_cols;
    const arma::uword n_si = p.q_si.n_cols;
    for (arma::uword i = 0; i < n_si; ++i)
        if (!(p.rho(i) > 0.0) || !std::isfinite(p.rho(i)))
            throw std::domain_error("hybrid_factorize: echo load matrix is singular");

    HybridFactorization h;
    h.analog = arma::join_rows(p.q_users, p.q_si);
    h.scale = 1.0 / p.noise_load;
    h.rf_chains = k_users + n_si;

    // Matrix-inversion-lemma form: the unnormalized solution of
    // (nu I + Q_S P Q_S^H)^-1 Q_U is (1/nu) (Q_U - Q_S X) with
    // X = (nu P^-1 + Q_S^H Q_S)^-1 Q_S^H Q_U; only |S|-sized solves appear.
    arma::cx_mat x;
    if (n_si > 0)
    {
        arma::cx_mat m = p.q_si.t() * p.q_si;
        m.diag() += arma::cx_vec(p.noise_load / p.rho, arma::vec(n_si, arma::fill::zeros));
        x = arma::solve(m, p.q_si.t() * p.q_users, arma::solve_opts::likely_sympd);
    }
    else
        x.set_size(0, k_users);

    arma::cx_mat unnormalized = h.scale * (p.q_users - (n_si ? arma::cx_mat(p.q_si * x) :
                                                               arma::cx_mat(p.q_users * 0.0)));
    arma::cx_vec beta(k_users);
    for (arma::uword k = 0; k < k_users; ++k)
        beta(k) = 1.0 / arma::norm(unnormalized.col(k));

    arma::cx_mat b = arma::diagmat(beta);
    h.digital = arma::join_cols(b, n_si ? arma::cx_mat(-x * b) : arma::cx_mat(0, k_users));
    return h;
}

// Full-array matrix a factorization stands for.
inline arma::cx_mat reconstruct(const HybridFactorization& h)
{
    return h.scale * h.analog * h.digital;
}

} // namespace fdsi
