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

#include "fdsi/link.hpp"

#include <armadillo>
#include <map>
#include <stdexcept>
#include <vector>

namespace fdsi
{

// Joint least-squares estimates of the effective uplink channel and of the
// effective echo channel of every scatterer routed to digital subtraction.
struct TrainingMeta
{
    arma::uvec cols;                   // training tone indices used
    std::vector<arma::uword> delays;   // stacked echo delays, estimation order
    double gram_condition = 1.0;       // condition number of the regressor Gram
};

struct ChannelEstimateSet
{
    arma::cx_mat g_hat_ul;                        // k_u x k_u
    std::map<arma::uword, arma::cx_mat> si_estimates; // record index -> k_u x k_d
    TrainingMeta training_meta;
};

struct RegeneratedSI
{
    arma::cx_mat z_si_hat; // k_u x n_subcarriers, zero when nothing is routed
};

// Stacks the known uplink pilots with a delay-ramped copy of the transmitted
// downlink spectrum per routed echo and solves one least-squares fit on the
// training tones. Solved through a QR factorization of the regressor for
// conditioning; the result is the classic Gram-inverse estimator.
inline ChannelEstimateSet joint_ls_estimate(const FrameObservation& obs,
                                            const ScattererMap& map, const SystemConstants& c)
{
    const arma::uword k_u = obs.d_ul.n_rows;
    const arma::uword k_d = obs.f_dl.n_rows;
    const arma::uvec routed = map.set_for(Action::DSIC);
    const arma::uword k_tot = k_u + k_d * routed.n_elem;
    if (!(c.n_training > k_tot))
        throw estimation_error("joint_ls_estimate: more unknowns than training tones");

    ChannelEstimateSet est;
    est.training_meta.cols = obs.training_cols;

    arma::cx_mat dbar(k_tot, c.n_training);
    dbar.rows(0, k_u - 1) = obs.d_ul.cols(obs.training_cols);
    arma::cx_mat f_tr = obs.f_dl.cols(obs.training_cols);
    for (arma::uword i = 0; i < routed.n_elem; ++i)
    {
        const arma::uword delay = map.records[routed(i)].delay;
        est.training_meta.delays.push_back(delay);
        arma::cx_rowvec full = delay_phase(c, delay);
        arma::cx_rowvec ramp_tr(obs.training_cols.n_elem);
        for (arma::uword t = 0; t < obs.training_cols.n_elem; ++t)
            ramp_tr(t) = full(obs.training_cols(t));
        dbar.rows(k_u + i * k_d, k_u + (i + 1) * k_d - 1) = f_tr.each_row() % ramp_tr;
    }

    arma::cx_mat q, r;
    if (!arma::qr_econ(q, r, arma::cx_mat(dbar.t())))
        throw estimation_error("joint_ls_estimate: QR factorization failed");
    const double kappa = arma::cond(r);
    est.training_meta.gram_condition = kappa * kappa;
    if (!(est.training_meta.gram_condition <= 1e12))
        throw estimation_error("joint_ls_estimate: regressor Gram is ill conditioned");

    // Z_tr = G_stack dbar + N  =>  G_stack = Z_tr dbar^+ = Z_tr q r^-H
    arma::cx_mat a = obs.z.cols(obs.training_cols) * q;
    arma::cx_mat g_stack = arma::solve(arma::trimatu(r), a.t()).t();

    est.g_hat_ul = g_stack.cols(0, k_u - 1);
    for (arma::uword i = 0; i < routed.n_elem; ++i)
        est.si_estimates[routed(i)] =
            g_stack.cols(k_u + i * k_d, k_u + (i + 1) * k_d - 1);
    return est;
}

// Echo regeneration from the estimates and the known transmitted downlink
// spectrum, over every subcarrier (training and payload alike).
inline RegeneratedSI regenerate_si(const ChannelEstimateSet& est, const arma::cx_mat& f_dl,
                                   const ScattererMap& map, const SystemConstants& c)
{
    RegeneratedSI out;
    const arma::uvec routed = map.set_for(Action::DSIC);
    for (arma::uword i : routed)
        if (!est.si_estimates.count(i))
            throw std::invalid_argument("regenerate_si: no estimate for a routed scatterer");

    if (routed.is_empty())
    {
        out.z_si_hat.zeros(est.g_hat_ul.n_rows, f_dl.n_cols);
        return out;
    }
    out.z_si_hat.zeros(est.si_estimates.begin()->second.n_rows, f_dl.n_cols);
    for (arma::uword i : routed)
        out.z_si_hat += est.si_estimates.at(i) *
                        (f_dl.each_row() % delay_phase(c, map.records[i].delay));
    return out;
}

} // namespace fdsi
