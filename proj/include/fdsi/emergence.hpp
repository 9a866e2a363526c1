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

#include <armadillo>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace fdsi
{

inline double chi2_quantile(double prob, double dof)
{
    if (!(prob > 0.0 && prob < 1.0) || !(dof > 0.0))
        throw std::invalid_argument("chi2_quantile: arguments out of range");
    boost::math::chi_squared_distribution<double> dist(dof);
    return boost::math::quantile(dist, prob);
}

// Delay profile of an equalized-residual block: for every (receive stream,
// transmit stream) pair, divide the residual by that stream's transmitted
// training row and take a unitary-scaled IDFT over the training tones; the
// profile sums the squared magnitudes over all pairs. An echo at delay l
// concentrates its energy in bin l.
inline arma::vec delay_scan_profile(const arma::cx_mat& residual_tr, const arma::cx_mat& f_tr)
{
    if (residual_tr.n_cols != f_tr.n_cols || residual_tr.n_cols == 0)
        throw std::invalid_argument("delay_scan_profile: block shapes disagree");
    const arma::uword n = residual_tr.n_cols;
    arma::vec rho(n, arma::fill::zeros);
    for (arma::uword r = 0; r < residual_tr.n_rows; ++r)
        for (arma::uword t = 0; t < f_tr.n_rows; ++t)
        {
            arma::cx_vec y(n, arma::fill::zeros);
            arma::uword kept = 0;
            for (arma::uword tau = 0; tau < n; ++tau)
                if (std::abs(f_tr(t, tau)) > 1e-12)
                {
                    y(tau) = residual_tr(r, tau) / f_tr(t, tau);
                    ++kept;
                }
            if (kept == 0)
                continue;
            arma::cx_vec m = arma::ifft(y) * (double(n) / std::sqrt(double(kept)));
            rho += arma::square(arma::abs(m));
        }
    return rho;
}

// Scans the training-tone fit residual: what is left of the observation
// after the estimated uplink and every digitally subtracted echo are
// removed. The residual is whitened across receive streams by the known
// combiner Gram, the exact inverse of the correlation the receive noise
// carries, so under the null every profile bin keeps the nominal
// chi-square law and the cell-averaged threshold holds its design rate.
inline arma::vec per_user_delay_scan(const FrameObservation& obs,
                                     const ChannelEstimateSet& est, const RegeneratedSI& regen,
                                     const arma::cx_mat& rx_beams, const SystemConstants& c)
{
    if (regen.z_si_hat.n_cols != c.n_subcarriers || obs.z.n_cols != c.n_subcarriers)
        throw std::invalid_argument("per_user_delay_scan: frame width mismatch");
    if (rx_beams.n_cols != obs.z.n_rows)
        throw std::invalid_argument("per_user_delay_scan: combiner does not match the frame");
    arma::cx_mat residual = obs.z.cols(obs.training_cols) -
                            est.g_hat_ul * obs.d_ul.cols(obs.training_cols) -
                            regen.z_si_hat.cols(obs.training_cols);
    arma::cx_mat lchol = arma::chol(rx_beams.t() * rx_beams, "lower");
    residual = arma::solve(arma::trimatl(lchol), residual);
    return delay_scan_profile(residual, obs.f_dl.cols(obs.training_cols));
}

struct Detection
{
    arma::uword delay;
    double statistic;
    double threshold;
};

struct DetectionReport
{
    arma::vec rho;
    arma::vec thresholds;
    std::vector<Detection> detections; // every exceedance, ascending delay
    bool detected = false;
    arma::uword delay = 0; // largest exceedance when detected
};

// Cell-averaging constant-false-alarm test. Under the null every profile bin
// is approximately a chi-square with one complex degree of freedom per
// stream pair, so the threshold is the chi-square quantile scaled by the
// mean of all other bins.
inline DetectionReport cfar_test(const arma::vec& rho, double p_fa, arma::uword k_u,
                                 arma::uword k_d)
{
    if (rho.n_elem < 2)
        throw std::invalid_argument("cfar_test: need at least two cells");
    if (!(p_fa > 0.0 && p_fa < 1.0))
        throw std::invalid_argument("cfar_test: false-alarm rate out of range");
    if (k_u == 0 || k_d == 0)
        throw std::invalid_argument("cfar_test: need streams on both sides");

    const double dof = 2.0 * double(k_u) * double(k_d);
    const double g = chi2_quantile(1.0 - p_fa, dof);
    const double total = arma::accu(rho);

    DetectionReport rep;
    rep.rho = rho;
    rep.thresholds.set_size(rho.n_elem);
    double best_ratio = 0.0;
    for (arma::uword l = 0; l < rho.n_elem; ++l)
    {
        const double cell_mean = (total - rho(l)) / double(rho.n_elem - 1);
        const double threshold = g / dof * cell_mean;
        rep.thresholds(l) = threshold;
        if (rho(l) > threshold)
        {
            rep.detections.push_back({l, rho(l), threshold});
            const double ratio = threshold > 0.0
                                     ? rho(l) / threshold
                                     : std::numeric_limits<double>::infinity();
            if (!rep.detected || ratio > best_ratio)
            {
                rep.detected = true;
                rep.delay = l;
                best_ratio = ratio;
            }
        }
    }
    return rep;
}

// Recovery after a detection: append a placeholder record (delay known,
// angle and power not yet sensed) routed to digital subtraction, then
// re-estimate and re-equalize the same stored frame. Refuses when the
// enlarged stack is no longer identifiable.
struct RecoveryResult
{
    ScattererMap map;
    ChannelEstimateSet est;
    EqualizedUl eq;
};

inline RecoveryResult recover(const FrameObservation& obs, const ScattererMap& map,
                              arma::uword detected_delay, const SystemConstants& c)
{
    RecoveryResult out;
    out.map = map;
    out.map.records.push_back({AngleDeg{std::numeric_limits<double>::quiet_NaN()},
                               detected_delay,
                               std::numeric_limits<double>::quiet_NaN(), Action::DSIC});
    out.est = joint_ls_estimate(obs, out.map, c); // throws when unidentifiable
    RegeneratedSI regen = regenerate_si(out.est, obs.f_dl, out.map, c);
    out.eq = ls_equalize(obs, out.est.g_hat_ul, regen.z_si_hat);
    return out;
}

// Nonlinear LS angle estimate for a freshly recovered echo channel: the
// rank-one model g = alpha vec(C^H a(th) a(th)^H W) is fit by maximizing the
// normalized projection |v(th)^H g|^2 / ||v(th)||^2 on a grid, then refined
// by a golden-section search inside the winning grid interval.
struct AngleEstimate
{
    AngleDeg theta_hat{0.0};
    arma::vec grid;      // degrees
    arma::vec objective; // NaN where the model vector vanishes
};

inline arma::vec default_angle_grid() { return arma::regspace(-90.0, 0.1, 90.0); }

inline AngleEstimate estimate_angle(const arma::cx_mat& g_hat_new, const BeamformerPair& bf,
                                    const arma::vec& grid_deg)
{
    if (g_hat_new.n_rows != bf.rx.n_cols || g_hat_new.n_cols != bf.tx.n_cols)
        throw std::invalid_argument("estimate_angle: estimate does not match the beams");
    const arma::uword n_a = bf.rx.n_rows;

    // The objective ratio is scale-free; normalizing up front keeps its
    // floating-point evaluation on one well-conditioned scale regardless.
    const double scale = arma::norm(g_hat_new, "fro");
    if (!(scale > 0.0) || !std::isfinite(scale))
        throw std::invalid_argument("estimate_angle: estimate has no energy");
    const arma::cx_mat g_unit = g_hat_new / scale;

    auto objective = [&](double theta) -> double {
        arma::cx_vec a = steering(AngleDeg{theta}, n_a);
        arma::cx_vec ca = bf.rx.t() * a;       // k_u
        arma::cx_rowvec aw = a.t() * bf.tx;     // 1 x k_d
        const double v2 = arma::accu(arma::square(arma::abs(ca))) *
                          arma::accu(arma::square(arma::abs(aw)));
        if (v2 < 1e-15)
            return std::numeric_limits<double>::quiet_NaN();
        const arma::cx_double proj = arma::as_scalar(ca.t() * g_unit * aw.t());
        return std::norm(proj) / v2;
    };

    AngleEstimate out;
    out.grid = grid_deg;
    out.objective.set_size(grid_deg.n_elem);
    arma::sword best = -1;
    for (arma::uword i = 0; i < grid_deg.n_elem; ++i)
    {
        out.objective(i) = objective(grid_deg(i));
        if (std::isnan(out.objective(i)))
            continue;
        if (best < 0 || out.objective(i) > out.objective(arma::uword(best)))
            best = arma::sword(i);
    }
    if (best < 0)
        throw estimation_error("estimate_angle: model vector vanished on the whole grid");

    double lo = grid_deg(arma::uword(std::max<arma::sword>(best - 1, 0)));
    double hi = grid_deg(
        arma::uword(std::min<arma::sword>(best + 1, arma::sword(grid_deg.n_elem) - 1)));
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = objective(x1), f2 = objective(x2);
    for (int it = 0; it < 80; ++it)
    {
        if (std::isnan(f1) || (!std::isnan(f2) && f2 > f1))
        {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = objective(x2);
        }
        else
        {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = objective(x1);
        }
    }
    const double mid = 0.5 * (lo + hi);
    const double f_mid = objective(mid);
    out.theta_hat =
        AngleDeg{!std::isnan(f_mid) && f_mid >= out.objective(arma::uword(best))
                     ? mid
                     : grid_deg(arma::uword(best))};
    return out;
}

} // namespace fdsi
