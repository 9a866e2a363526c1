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

#include "fdsi/beamforming.hpp"
#include "fdsi/scenario.hpp"
#include "fdsi/symbols.hpp"

#include <armadillo>
#include <stdexcept>
#include <vector>

namespace fdsi
{

// Estimation and equalization failures that a Monte-Carlo driver counts and
// skips rather than aborting a run.
struct estimation_error : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

// Per-subcarrier phase of an integer excess delay over the full carrier
// grid, exp(-j 2 pi m l / n_subcarriers); restricted to the training tones
// it coincides with the n_training-point ramp.
inline arma::cx_rowvec delay_phase(const SystemConstants& c, arma::uword delay)
{
    if (delay >= c.n_training)
        throw std::invalid_argument("delay_phase: delay outside the resolvable set");
    arma::cx_rowvec r(c.n_subcarriers);
    const double w = -2.0 * pi * double(delay) / double(c.n_subcarriers);
    for (arma::uword m = 0; m < c.n_subcarriers; ++m)
        r(m) = std::polar(1.0, w * double(m));
    return r;
}

// Zero-forcing precoder T = G (G^H G)^-1 for the effective downlink channel
// (columns are per-user effective channels). G^H T = I when G is the true
// channel.
inline arma::cx_mat zf_precoder(const arma::cx_mat& g_dl)
{
    if (g_dl.n_rows < g_dl.n_cols || g_dl.n_cols == 0)
        throw std::invalid_argument("zf_precoder: channel matrix must be tall");
    arma::cx_mat gram = g_dl.t() * g_dl;
    if (arma::rcond(gram) < 1e-12)
        throw estimation_error("zf_precoder: effective downlink channel is rank deficient");
    return arma::solve(gram, g_dl.t(), arma::solve_opts::likely_sympd).t();
}

// Transmit power budget: scale T so that with unit-power symbols the total
// radiated power matches the conventional precoder, ||T||_F^2 = k_d. Raw
// zero forcing would otherwise buy its exact channel inversion with an
// unbounded average power.
struct ScaledPrecoder
{
    arma::cx_mat t;
    double scale; // multiplier applied to the raw precoder
};

inline ScaledPrecoder normalize_tx_power(const arma::cx_mat& t_raw)
{
    const double f = arma::norm(t_raw, "fro");
    if (!(f > 0.0) || !std::isfinite(f))
        throw std::invalid_argument("normalize_tx_power: degenerate precoder");
    const double s = std::sqrt(double(t_raw.n_cols)) / f;
    return {s * t_raw, s};
}

// One OFDM frame as seen by the base-station receive combiner, with the
// ground truth retained for scoring and for the decomposition checks.
struct FrameObservation
{
    arma::cx_mat z;    // k_u x n_subcarriers combined observation
    arma::cx_mat d_ul; // uplink symbols (training tones carry pilots)
    arma::cx_mat f_dl; // transmitted downlink spectrum (pilots / precoded data)
    arma::cx_mat d_dl; // downlink data symbols (as precoded on data tones)

    arma::cx_mat g_ul;              // true effective uplink channel, k_u x k_u
    std::vector<arma::cx_mat> g_si; // true effective echo channels, k_u x k_d each
    arma::cx_mat g_dl;              // true effective downlink channel, k_d x k_d
    arma::cx_mat t_scaled;          // precoder in effect on data tones
    double tx_scale = 1.0;          // budget scale applied to raw zero forcing
    arma::cx_mat noise;             // additive receive noise actually drawn

    arma::cx_vec alpha_ul, alpha_dl, alpha_si;
    arma::uvec training_cols;
    arma::uvec data_cols;
    bool training_exact = true;
};

struct FrameOptions
{
    bool with_si = true; // false: echoes drawn but not injected (SI-free reference)
    const ScattererRecord* emergent = nullptr; // in the channel, unknown to the map
};

// Frame synthesis. Draws fading, builds beam-domain effective channels,
// composes observation = SoI + echoes + correlated noise. All randomness
// comes from purpose-split substreams of frame_seed, so runs with the same
// seed and scenario but different mitigation maps still share fading, data
// and noise realizations (paired comparisons across methods).
inline FrameObservation simulate_frame(std::uint64_t frame_seed, const UserSet& users,
                                       const ScattererMap& map, const SystemConstants& c,
                                       const BeamformerPair& bf, const FrameOptions& opt = {})
{
    validate(users);
    validate(map, c);
    const arma::uword k_u = users.k_u(), k_d = users.k_d(), n = c.n_subcarriers;
    if (bf.rx.n_rows != c.n_antennas || bf.rx.n_cols != k_u || bf.tx.n_cols != k_d)
        throw std::invalid_argument("simulate_frame: beamformer shapes do not match the scenario");

    Rng ch_rng = Rng::substream(frame_seed, 1);
    Rng tr_rng = Rng::substream(frame_seed, 2);
    Rng ud_rng = Rng::substream(frame_seed, 3);
    Rng dd_rng = Rng::substream(frame_seed, 4);
    Rng nz_rng = Rng::substream(frame_seed, 5);
    Rng em_rng = Rng::substream(frame_seed, 7);

    FrameObservation obs;
    obs.training_cols = training_tone_indices(c);
    obs.data_cols = arma::uvec(n - obs.training_cols.n_elem);
    {
        arma::uword j = 0;
        const arma::uword step = n / c.n_training;
        for (arma::uword m = 0; m < n; ++m)
            if (m % step != 0)
                obs.data_cols(j++) = m;
    }

    // fading: one complex normal gain per user and per echo
    obs.alpha_ul.set_size(k_u);
    for (arma::uword k = 0; k < k_u; ++k)
        obs.alpha_ul(k) = ch_rng.normal(users.ul_powers(k));
    obs.alpha_dl.set_size(k_d);
    for (arma::uword k = 0; k < k_d; ++k)
        obs.alpha_dl(k) = ch_rng.normal(users.dl_powers(k));
    obs.alpha_si.set_size(map.k_s());
    for (arma::uword k = 0; k < map.k_s(); ++k)
        obs.alpha_si(k) = ch_rng.normal(std::isnan(map.records[k].power) ? 1.0
                                                                         : map.records[k].power);

    // effective channels in beam space
    arma::cx_mat q_ul = steering_matrix(users.ul_angles, c.n_antennas);
    arma::cx_mat q_dl = steering_matrix(users.dl_angles, c.n_antennas);
    obs.g_ul = (bf.rx.t() * q_ul) * arma::diagmat(obs.alpha_ul);
    obs.g_dl = (bf.tx.t() * q_dl) * arma::diagmat(obs.alpha_dl);
    obs.g_si.resize(map.k_s());
    for (arma::uword k = 0; k < map.k_s(); ++k)
    {
        const ScattererRecord& r = map.records[k];
        if (std::isnan(r.angle.value))
        {
            // unsensed placeholder record: it contributes no physical echo
            obs.g_si[k].zeros(k_u, k_d);
            continue;
        }
        arma::cx_vec qs = steering(r.angle, c.n_antennas);
        obs.g_si[k] = obs.alpha_si(k) * (bf.rx.t() * qs) * (qs.t() * bf.tx);
    }

    // downlink precoder from the true effective channel, under the BS budget
    ScaledPrecoder sp = normalize_tx_power(zf_precoder(obs.g_dl));
    obs.t_scaled = sp.t;
    obs.tx_scale = sp.scale;

    // symbols: pilots on the training tones, QPSK payload elsewhere
    std::vector<arma::uword> dsic_delays;
    for (arma::uword i : map.set_for(Action::DSIC))
        dsic_delays.push_back(map.records[i].delay);
    TrainingDesign td = design_training(k_u, k_d, dsic_delays, c, tr_rng);
    obs.training_exact = td.exact;

    obs.d_ul = generate_symbols(ud_rng, k_u, c, SymbolKind::Data);
    obs.d_ul.cols(obs.training_cols) = td.ul;
    obs.d_dl = generate_symbols(dd_rng, k_d, c, SymbolKind::Data);

    obs.f_dl.set_size(k_d, n);
    obs.f_dl.cols(obs.training_cols) = td.dl;
    obs.f_dl.cols(obs.data_cols) = obs.t_scaled * obs.d_dl.cols(obs.data_cols);

    // observation: SoI + echoes + noise with per-column covariance
    // noise_power * C^H C
    obs.z = obs.g_ul * obs.d_ul;
    if (opt.with_si)
    {
        for (arma::uword k = 0; k < map.k_s(); ++k)
        {
            const ScattererRecord& r = map.records[k];
            if (std::isnan(r.angle.value))
                continue;
            arma::cx_vec qs = steering(r.angle, c.n_antennas);
            arma::cx_rowvec row = (qs.t() * bf.tx) * obs.f_dl;
            row %= delay_phase(c, r.delay);
            obs.z += obs.alpha_si(k) * (bf.rx.t() * qs) * row;
        }
        if (opt.emergent != nullptr)
        {
            const ScattererRecord& r = *opt.emergent;
            arma::cx_double alpha = em_rng.normal(r.power);
            arma::cx_vec qs = steering(r.angle, c.n_antennas);
            arma::cx_rowvec row = (qs.t() * bf.tx) * obs.f_dl;
            row %= delay_phase(c, r.delay);
            obs.z += alpha * (bf.rx.t() * qs) * row;
        }
    }

    arma::cx_mat white(k_u, n);
    nz_rng.fill_cn(white, c.noise_power);
    arma::cx_mat lchol = arma::chol(bf.rx.t() * bf.rx, "lower");
    obs.noise = lchol * white;
    obs.z += obs.noise;
    return obs;
}

// Uplink symbol estimates after SI subtraction and least-squares (channel-
// inverting) equalization. m is the end-to-end gain matrix the equalizer
// realizes on the true channel; its diagonal scales the intended symbols.
struct EqualizedUl
{
    arma::cx_mat d_hat; // k_u x n_subcarriers
    arma::cx_mat m;     // k_u x k_u
};

inline EqualizedUl ls_equalize(const FrameObservation& obs, const arma::cx_mat& g_hat_ul,
                               const arma::cx_mat& z_si_hat)
{
    if (g_hat_ul.n_rows != obs.z.n_rows || g_hat_ul.n_cols != obs.z.n_rows)
        throw std::invalid_argument("ls_equalize: channel estimate has the wrong shape");
    arma::cx_mat gram = g_hat_ul.t() * g_hat_ul;
    if (arma::rcond(gram) < 1e-12)
        throw estimation_error("ls_equalize: estimated uplink channel is rank deficient");

    EqualizedUl eq;
    arma::cx_mat rhs = z_si_hat.n_elem ? arma::cx_mat(obs.z - z_si_hat) : obs.z;
    eq.d_hat = arma::solve(gram, g_hat_ul.t() * rhs, arma::solve_opts::likely_sympd);
    eq.m = arma::solve(gram, g_hat_ul.t() * obs.g_ul, arma::solve_opts::likely_sympd);
    return eq;
}

// Downlink user-side reception on the data tones: each user applies no
// equalizer beyond the network's precoding, so the end-to-end gain is
// g_dl^H t_scaled (identity times the budget scale under perfect CSI).
struct DlFrame
{
    arma::cx_mat d_hat; // k_d x n_data
    arma::cx_mat m;     // k_d x k_d
};

inline DlFrame dl_receive(std::uint64_t frame_seed, const FrameObservation& obs,
                          const SystemConstants& c)
{
    Rng rng = Rng::substream(frame_seed, 6);
    DlFrame dl;
    dl.m = obs.g_dl.t() * obs.t_scaled;
    arma::cx_mat noise(obs.g_dl.n_cols, obs.data_cols.n_elem);
    rng.fill_cn(noise, c.noise_power);
    dl.d_hat = dl.m * obs.d_dl.cols(obs.data_cols) + noise;
    return dl;
}

} // namespace fdsi
