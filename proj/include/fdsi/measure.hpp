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

#include "fdsi/dsic.hpp"
#include "fdsi/policy.hpp"

#include <armadillo>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fdsi
{

// Mitigation strategy under test. The first six force one fixed treatment,
// the last two run the metric-ranked assignment (with or without RF-chain
// limits). SiFree is the reference link where echoes are never injected.
enum class Method
{
    SiFree,
    NoSic,
    OnlyDsic,
    OnlyRx,
    OnlyTx,
    Switching,
    Proposed,
    ProposedLimited
};

inline const char* method_name(Method m)
{
    switch (m)
    {
    case Method::SiFree:
        return "si-free";
    case Method::NoSic:
        return "no-sic";
    case Method::OnlyDsic:
        return "only-dsic";
    case Method::OnlyRx:
        return "only-rx";
    case Method::OnlyTx:
        return "only-tx";
    case Method::Switching:
        return "switching";
    case Method::Proposed:
        return "proposed";
    default:
        return "proposed-limited";
    }
}

// Accepts the canonical names above plus common capitalizations and the
// long form "switching-rx/tx"; empty optional on anything else.
inline std::optional<Method> parse_method(std::string name)
{
    for (char& ch : name)
        ch = char(std::tolower(static_cast<unsigned char>(ch)));
    if (name == "si-free")
        return Method::SiFree;
    if (name == "no-sic")
        return Method::NoSic;
    if (name == "only-dsic")
        return Method::OnlyDsic;
    if (name == "only-rx")
        return Method::OnlyRx;
    if (name == "only-tx")
        return Method::OnlyTx;
    if (name == "switching" || name == "switching-rx/tx")
        return Method::Switching;
    if (name == "proposed")
        return Method::Proposed;
    if (name == "proposed-limited")
        return Method::ProposedLimited;
    return std::nullopt;
}

// Per-scatterer treatment each method implies. Switching gives a scatterer
// to the side opposite its nearest user (nearest in |sin theta|, the beam
// coordinate): transmit nulling when an uplink user is nearest, receive
// nulling when a downlink user is. Exact ties go to the transmit side,
// matching the planner's preference for sparing receive RF chains.
inline ScattererMap route_for_method(Method m, const UserSet& users, const ScattererMap& map,
                                     const SystemConstants& c, const RfcLimits& limits)
{
    switch (m)
    {
    case Method::SiFree:
    case Method::NoSic:
    {
        ScattererMap out = map;
        for (auto& r : out.records)
            r.action = Action::NA;
        return out;
    }
    case Method::OnlyDsic:
    {
        ScattererMap out = map;
        for (auto& r : out.records)
            r.action = Action::DSIC;
        return out;
    }
    case Method::OnlyRx:
    {
        ScattererMap out = map;
        for (auto& r : out.records)
            r.action = Action::RX;
        return out;
    }
    case Method::OnlyTx:
    {
        ScattererMap out = map;
        for (auto& r : out.records)
            r.action = Action::TX;
        return out;
    }
    case Method::Switching:
    {
        ScattererMap out = map;
        for (auto& r : out.records)
        {
            if (std::isnan(r.angle.value))
                throw std::invalid_argument("route_for_method: unsensed record");
            const double s = std::sin(r.angle.value * pi / 180.0);
            double d_ul = std::numeric_limits<double>::infinity();
            for (const auto& a : users.ul_angles)
                d_ul = std::min(d_ul, std::abs(s - std::sin(a.value * pi / 180.0)));
            double d_dl = std::numeric_limits<double>::infinity();
            for (const auto& a : users.dl_angles)
                d_dl = std::min(d_dl, std::abs(s - std::sin(a.value * pi / 180.0)));
            r.action = d_ul <= d_dl ? Action::TX : Action::RX;
        }
        return out;
    }
    case Method::Proposed:
        return plan_actions(users, map, c, RfcLimits{});
    default:
        return plan_actions(users, map, c, limits);
    }
}

// Measured per-stream quality on the payload tones: signal power through the
// realized diagonal gain against everything else that lands on the stream.
inline arma::vec ul_gammas(const EqualizedUl& eq, const FrameObservation& obs)
{
    const arma::uword k_u = eq.d_hat.n_rows;
    arma::cx_mat d_hat = eq.d_hat.cols(obs.data_cols);
    arma::cx_mat truth = obs.d_ul.cols(obs.data_cols);
    arma::vec g(k_u);
    for (arma::uword k = 0; k < k_u; ++k)
    {
        const arma::cx_double m_kk = eq.m(k, k);
        const double num = std::norm(m_kk) * std::pow(arma::norm(truth.row(k)), 2);
        const double den = std::pow(arma::norm(d_hat.row(k) - m_kk * truth.row(k)), 2);
        g(k) = den > 0.0 ? num / den : std::numeric_limits<double>::infinity();
    }
    return g;
}

inline arma::vec dl_gammas(const DlFrame& dl, const FrameObservation& obs)
{
    const arma::uword k_d = dl.d_hat.n_rows;
    arma::cx_mat truth = obs.d_dl.cols(obs.data_cols);
    arma::vec g(k_d);
    for (arma::uword k = 0; k < k_d; ++k)
    {
        const arma::cx_double m_kk = dl.m(k, k);
        const double num = std::norm(m_kk) * std::pow(arma::norm(truth.row(k)), 2);
        const double den = std::pow(arma::norm(dl.d_hat.row(k) - m_kk * truth.row(k)), 2);
        g(k) = den > 0.0 ? num / den : std::numeric_limits<double>::infinity();
    }
    return g;
}

struct TrialGammas
{
    arma::vec ul;
    arma::vec dl;
};

// One Monte-Carlo trial: route the map, build both beamformers, synthesize
// the frame, estimate, subtract what is routed digitally, equalize, and
// score both link directions. Throws estimation_error on singular draws.
inline TrialGammas run_trial(std::uint64_t frame_seed, const Scenario& scenario, Method method,
                             const SystemConstants& c, const RfcLimits& limits)
{
    ScattererMap routed = route_for_method(method, scenario.users, scenario.map, c, limits);
    BeamformerPair bf{max_sinr_rx(scenario.users, routed, c),
                      max_slnr_tx(scenario.users, routed, c)};
    FrameOptions opt;
    opt.with_si = method != Method::SiFree;
    FrameObservation obs = simulate_frame(frame_seed, scenario.users, routed, c, bf, opt);
    ChannelEstimateSet est = joint_ls_estimate(obs, routed, c);
    RegeneratedSI regen = regenerate_si(est, obs.f_dl, routed, c);
    EqualizedUl eq = ls_equalize(obs, est.g_hat_ul, regen.z_si_hat);
    DlFrame dl = dl_receive(frame_seed, obs, c);
    return {ul_gammas(eq, obs), dl_gammas(dl, obs)};
}

// Neumaier-compensated mean. Trials are aggregated in a fixed order with
// compensated summation so results do not drift with future reordering.
inline double compensated_mean(const arma::vec& x)
{
    if (x.n_elem == 0)
        return std::numeric_limits<double>::quiet_NaN();
    double sum = 0.0, comp = 0.0;
    for (double v : x)
    {
        const double t = sum + v;
        comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
        sum = t;
    }
    return (sum + comp) / double(x.n_elem);
}

// Aggregated Monte-Carlo outcome. Raw per-trial values are kept so callers
// can bootstrap intervals or read tail statistics without re-running.
struct MeasuredPerformance
{
    arma::mat ul_gamma; // usable trials x k_u, linear per-trial quality
    arma::mat dl_gamma; // usable trials x k_d
    arma::uword trials_requested = 0;
    arma::uword trials_skipped = 0;

    arma::vec ul_mean, dl_mean; // per-user mean over trials, linear
    arma::vec ul_air, dl_air;   // per-user mean of log2(1 + gamma), bits/s/Hz

    double worst_ul_db = std::numeric_limits<double>::quiet_NaN(); // min-user mean
    double worst_dl_db = std::numeric_limits<double>::quiet_NaN();
    // median over trials of the per-trial minimum user; robust companion for
    // randomized layouts where per-user means wash out the layout dependence
    double median_worst_ul_db = std::numeric_limits<double>::quiet_NaN();
    double median_worst_dl_db = std::numeric_limits<double>::quiet_NaN();

    arma::uword trials_run() const { return ul_gamma.n_rows; }
};

// Layout supplier for one trial; called with that trial's scenario substream
// so randomized layouts reproduce per trial index, independent of method.
using ScenarioSource = std::function<Scenario(Rng&)>;

inline ScenarioSource fixed_scenario(Scenario s)
{
    return [s = std::move(s)](Rng&) { return s; };
}

// Independent per-trial frame seed (same whitener family as Rng::substream
// but a distinct tag, so frame substreams never collide with stream ids).
inline std::uint64_t trial_seed(std::uint64_t master_seed, arma::uword trial)
{
    return splitmix64(master_seed ^ splitmix64(std::uint64_t(trial) + 0x7FB5D329ULL));
}

namespace detail
{
constexpr std::uint64_t kScenarioStream = 8; // frame purposes use 1..7

inline void finalize(MeasuredPerformance& mp)
{
    if (mp.trials_run() == 0)
        return;
    const arma::uword k_u = mp.ul_gamma.n_cols, k_d = mp.dl_gamma.n_cols;
    mp.ul_mean.set_size(k_u);
    mp.ul_air.set_size(k_u);
    for (arma::uword k = 0; k < k_u; ++k)
    {
        mp.ul_mean(k) = compensated_mean(mp.ul_gamma.col(k));
        mp.ul_air(k) = compensated_mean(arma::log2(1.0 + mp.ul_gamma.col(k)));
    }
    mp.dl_mean.set_size(k_d);
    mp.dl_air.set_size(k_d);
    for (arma::uword k = 0; k < k_d; ++k)
    {
        mp.dl_mean(k) = compensated_mean(mp.dl_gamma.col(k));
        mp.dl_air(k) = compensated_mean(arma::log2(1.0 + mp.dl_gamma.col(k)));
    }
    mp.worst_ul_db = linear_to_db(mp.ul_mean.min());
    mp.worst_dl_db = linear_to_db(mp.dl_mean.min());
    mp.median_worst_ul_db = linear_to_db(arma::median(arma::min(mp.ul_gamma, 1)));
    mp.median_worst_dl_db = linear_to_db(arma::median(arma::min(mp.dl_gamma, 1)));
}
} // namespace detail

// Seeded Monte-Carlo measurement of one method. Singular draws (rank
// collapses anywhere in the pipeline) are skipped and counted; every
// surviving trial contributes one row of per-user qualities.
inline MeasuredPerformance measure(arma::uword trials, const ScenarioSource& source,
                                   Method method, const SystemConstants& c, std::uint64_t seed,
                                   const RfcLimits& limits = {})
{
    if (trials == 0)
        throw std::invalid_argument("measure: need at least one trial");
    validate(c);

    MeasuredPerformance mp;
    mp.trials_requested = trials;
    std::vector<arma::vec> uls, dls;
    uls.reserve(trials);
    dls.reserve(trials);
    for (arma::uword trial = 0; trial < trials; ++trial)
    {
        const std::uint64_t ts = trial_seed(seed, trial);
        Rng sc_rng = Rng::substream(ts, detail::kScenarioStream);
        Scenario scenario = source(sc_rng);
        try
        {
            TrialGammas t = run_trial(ts, scenario, method, c, limits);
            uls.push_back(std::move(t.ul));
            dls.push_back(std::move(t.dl));
        }
        catch (const estimation_error&)
        {
            ++mp.trials_skipped;
        }
    }

    if (!uls.empty())
    {
        mp.ul_gamma.set_size(uls.size(), uls.front().n_elem);
        mp.dl_gamma.set_size(dls.size(), dls.front().n_elem);
        for (arma::uword i = 0; i < uls.size(); ++i)
        {
            mp.ul_gamma.row(i) = uls[i].t();
            mp.dl_gamma.row(i) = dls[i].t();
        }
    }
    detail::finalize(mp);
    return mp;
}

// Percentile bootstrap over trials. One set of resampled trial indices is
// shared by all four statistics so the intervals are mutually consistent.
struct Interval
{
    double lo = std::numeric_limits<double>::quiet_NaN();
    double hi = std::numeric_limits<double>::quiet_NaN();
};

struct BootstrapCis
{
    Interval worst_ul_db, worst_dl_db, ul_air, dl_air;
};

inline BootstrapCis bootstrap_cis(const MeasuredPerformance& mp, arma::uword resamples,
                                  std::uint64_t seed)
{
    BootstrapCis out;
    const arma::uword n = mp.trials_run();
    if (n < 2 || resamples < 2)
        return out;

    arma::mat ul_log = arma::log2(1.0 + mp.ul_gamma);
    arma::mat dl_log = arma::log2(1.0 + mp.dl_gamma);
    Rng rng = Rng::substream(seed, 9);

    arma::vec s_wul(resamples), s_wdl(resamples), s_uair(resamples), s_dair(resamples);
    arma::uvec idx(n);
    for (arma::uword r = 0; r < resamples; ++r)
    {
        for (arma::uword i = 0; i < n; ++i)
            idx(i) = rng.index(n);
        s_wul(r) = linear_to_db(arma::mean(mp.ul_gamma.rows(idx), 0).min());
        s_wdl(r) = linear_to_db(arma::mean(mp.dl_gamma.rows(idx), 0).min());
        s_uair(r) = arma::mean(arma::vectorise(ul_log.rows(idx)));
        s_dair(r) = arma::mean(arma::vectorise(dl_log.rows(idx)));
    }
    const arma::vec probs{0.025, 0.975};
    auto interval = [&](const arma::vec& s) {
        arma::vec q = arma::quantile(s, probs);
        return Interval{q(0), q(1)};
    };
    out.worst_ul_db = interval(s_wul);
    out.worst_dl_db = interval(s_wdl);
    out.ul_air = interval(s_uair);
    out.dl_air = interval(s_dair);
    return out;
}

// Scalar headline AIR: mean over users of the per-user rates.
inline double mean_air(const arma::vec& per_user_air)
{
    return per_user_air.n_elem ? compensated_mean(per_user_air)
                               : std::numeric_limits<double>::quiet_NaN();
}

} // namespace fdsi
