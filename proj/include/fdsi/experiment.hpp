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

#include "fdsi/emergence.hpp"
#include "fdsi/measure.hpp"

#include <armadillo>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

// Stamped into CSV metadata so archived results identify their producer.
#ifndef FDSI_BUILD_TAG
#define FDSI_BUILD_TAG "untagged"
#endif

namespace fdsi
{

// A batch experiment maps one swept coordinate to measured link quality.
enum class ExperimentKind
{
    AngleSweep,   // single scatterer angle, fixed users
    FixedScenario, // one explicit layout, no sweep
    RandomMc,     // randomized layouts, one aggregate point per method
    InrSweep,     // echo strength, randomized layouts
    CountSweep,   // scatterer count, randomized layouts
    EmergenceDemo // unmapped scatterer angle: detection and recovery
};

inline const char* kind_name(ExperimentKind k)
{
    switch (k)
    {
    case ExperimentKind::AngleSweep:
        return "angle-sweep";
    case ExperimentKind::FixedScenario:
        return "scenario";
    case ExperimentKind::RandomMc:
        return "random-mc";
    case ExperimentKind::InrSweep:
        return "inr-sweep";
    case ExperimentKind::CountSweep:
        return "count-sweep";
    default:
        return "emergence-demo";
    }
}

inline std::optional<ExperimentKind> parse_kind(std::string name)
{
    for (char& ch : name)
        ch = char(std::tolower(static_cast<unsigned char>(ch)));
    if (name == "angle-sweep")
        return ExperimentKind::AngleSweep;
    if (name == "scenario")
        return ExperimentKind::FixedScenario;
    if (name == "random-mc")
        return ExperimentKind::RandomMc;
    if (name == "inr-sweep")
        return ExperimentKind::InrSweep;
    if (name == "count-sweep")
        return ExperimentKind::CountSweep;
    if (name == "emergence-demo")
        return ExperimentKind::EmergenceDemo;
    return std::nullopt;
}

// Reference cell used throughout: four uplink and four downlink users in two
// mirrored clusters sharing a full-duplex user broadside at 0 degrees.
inline UserSet reference_users(double input_snr_db)
{
    UserSet u;
    u.ul_angles = {AngleDeg{0.0}, AngleDeg{2.5}, AngleDeg{7.5}, AngleDeg{12.5}};
    u.dl_angles = {AngleDeg{0.0}, AngleDeg{-2.5}, AngleDeg{-7.5}, AngleDeg{-12.5}};
    u.ul_powers = arma::vec(4, arma::fill::value(db_to_linear(input_snr_db)));
    u.dl_powers = arma::vec(4, arma::fill::value(db_to_linear(input_snr_db)));
    return u;
}

// Everything one run needs. Empty methods, grid, or users select the
// kind-specific defaults at run time; the map matters only to FixedScenario.
struct ExperimentSpec
{
    ExperimentKind kind = ExperimentKind::AngleSweep;
    SystemConstants consts;
    std::vector<Method> methods;
    arma::vec grid;
    arma::uword trials = 2000;
    std::uint64_t seed = 1;
    double p_fa = 1e-2;
    RfcLimits limits;
    UserSet users;
    ScattererMap map;
    double input_snr_db = 10.0;
    double inr_db = 34.0;
    arma::uword sweep_delay = 13;
    arma::uword k_s = 13;
    arma::uword bootstrap_resamples = 1000;
};

inline arma::vec default_grid(ExperimentKind k)
{
    switch (k)
    {
    case ExperimentKind::AngleSweep:
    case ExperimentKind::EmergenceDemo:
        return arma::regspace(-40.0, 2.0, 40.0);
    case ExperimentKind::InrSweep:
        return arma::regspace(10.0, 2.0, 40.0);
    case ExperimentKind::CountSweep:
        return arma::vec{1.0, 4.0, 8.0, 13.0};
    default:
        return arma::vec{0.0};
    }
}

inline std::vector<Method> default_methods(ExperimentKind k)
{
    switch (k)
    {
    case ExperimentKind::InrSweep:
    case ExperimentKind::CountSweep:
        return {Method::SiFree, Method::OnlyDsic, Method::Proposed};
    case ExperimentKind::EmergenceDemo:
        return {}; // fixed pipeline, methods are not consulted
    default:
        return {Method::SiFree, Method::NoSic,     Method::OnlyDsic, Method::OnlyRx,
                Method::OnlyTx, Method::Switching, Method::Proposed};
    }
}

// One CSV line. The emergence block stays NaN for communication-only kinds.
struct ExperimentRow
{
    double x = 0.0;
    std::string method;
    arma::uword trials = 0;
    arma::uword skipped = 0;

    double worst_ul_db = std::numeric_limits<double>::quiet_NaN();
    double worst_dl_db = std::numeric_limits<double>::quiet_NaN();
    Interval worst_ul_ci, worst_dl_ci;
    double ul_air = std::numeric_limits<double>::quiet_NaN();
    double dl_air = std::numeric_limits<double>::quiet_NaN();
    Interval ul_air_ci, dl_air_ci;
    double median_worst_ul_db = std::numeric_limits<double>::quiet_NaN();
    double median_worst_dl_db = std::numeric_limits<double>::quiet_NaN();

    arma::uword detections = 0;
    double detect_prob = std::numeric_limits<double>::quiet_NaN();
    double post_worst_ul_db = std::numeric_limits<double>::quiet_NaN(); // detected trials
    double base_worst_ul_db = std::numeric_limits<double>::quiet_NaN(); // same trials, no echo
    double pre_worst_ul_db = std::numeric_limits<double>::quiet_NaN();  // all trials, no recovery
    double base_all_worst_ul_db = std::numeric_limits<double>::quiet_NaN();
    double mean_abs_angle_err_deg = std::numeric_limits<double>::quiet_NaN();
    double frac_within_half_deg = std::numeric_limits<double>::quiet_NaN();
};

struct ExperimentResult
{
    std::vector<std::string> metadata; // key=value lines
    std::vector<ExperimentRow> rows;
};

namespace detail
{

inline ExperimentRow make_row(double x, Method m, const MeasuredPerformance& mp,
                              const BootstrapCis& ci)
{
    ExperimentRow r;
    r.x = x;
    r.method = method_name(m);
    r.trials = mp.trials_requested;
    r.skipped = mp.trials_skipped;
    r.worst_ul_db = mp.worst_ul_db;
    r.worst_dl_db = mp.worst_dl_db;
    r.worst_ul_ci = ci.worst_ul_db;
    r.worst_dl_ci = ci.worst_dl_db;
    r.ul_air = mean_air(mp.ul_air);
    r.dl_air = mean_air(mp.dl_air);
    r.ul_air_ci = ci.ul_air;
    r.dl_air_ci = ci.dl_air;
    r.median_worst_ul_db = mp.median_worst_ul_db;
    r.median_worst_dl_db = mp.median_worst_dl_db;
    return r;
}

inline std::string kv(const std::string& key, const std::string& value)
{
    return key + "=" + value;
}

inline std::string kv(const std::string& key, double value)
{
    std::ostringstream os;
    os.precision(10);
    os << key << "=" << value;
    return os.str();
}

inline std::vector<std::string> spec_metadata(const ExperimentSpec& s)
{
    std::vector<std::string> md;
    md.push_back(kv("kind", kind_name(s.kind)));
    md.push_back(kv("build", FDSI_BUILD_TAG));
    md.push_back(kv("seed", std::to_string(s.seed)));
    md.push_back(kv("trials", std::to_string(s.trials)));
    md.push_back(kv("n_antennas", std::to_string(s.consts.n_antennas)));
    md.push_back(kv("n_subcarriers", std::to_string(s.consts.n_subcarriers)));
    md.push_back(kv("n_training", std::to_string(s.consts.n_training)));
    md.push_back(kv("input_snr_db", s.input_snr_db));
    md.push_back(kv("inr_db", s.inr_db));
    md.push_back(kv("bootstrap_resamples", std::to_string(s.bootstrap_resamples)));
    if (s.kind == ExperimentKind::EmergenceDemo)
        md.push_back(kv("p_fa", s.p_fa));
    if (s.kind == ExperimentKind::RandomMc || s.kind == ExperimentKind::InrSweep)
        md.push_back(kv("k_s", std::to_string(s.k_s)));
    if (s.limits.rx != RfcLimits{}.rx || s.limits.tx != RfcLimits{}.tx)
    {
        md.push_back(kv("limit_rx", std::to_string(s.limits.rx)));
        md.push_back(kv("limit_tx", std::to_string(s.limits.tx)));
    }
    return md;
}

// Emergence pipeline for one swept angle. The mapped scatterers are known
// and already treated; the emergent one exists only in the channel. A trial
// counts as a detection when the CFAR decision lands on the true delay, and
// recovery statistics are conditioned on those trials, paired against the
// same trials of an echo-free baseline.
struct EmergencePoint
{
    arma::uword trials_run = 0;
    arma::uword skipped = 0;
    arma::uword detections = 0;
    std::vector<double> post_min, base_min_det, pre_min, base_min_all, abs_err;
};

inline EmergencePoint run_emergence_point(const ExperimentSpec& s, const UserSet& users,
                                          const ScattererMap& routed, const BeamformerPair& bf,
                                          arma::uword free_delay, double angle_deg)
{
    EmergencePoint out;
    ScattererRecord emergent{AngleDeg{angle_deg}, free_delay, db_to_linear(s.inr_db),
                             Action::NA};
    const arma::uword new_idx = routed.records.size();

    for (arma::uword trial = 0; trial < s.trials; ++trial)
    {
        const std::uint64_t ts = trial_seed(s.seed, trial);
        FrameOptions with, without;
        with.emergent = &emergent;
        try
        {
            FrameObservation obs = simulate_frame(ts, users, routed, s.consts, bf, with);
            FrameObservation base = simulate_frame(ts, users, routed, s.consts, bf, without);

            ChannelEstimateSet est = joint_ls_estimate(obs, routed, s.consts);
            RegeneratedSI regen = regenerate_si(est, obs.f_dl, routed, s.consts);
            EqualizedUl eq = ls_equalize(obs, est.g_hat_ul, regen.z_si_hat);

            ChannelEstimateSet est_b = joint_ls_estimate(base, routed, s.consts);
            RegeneratedSI regen_b = regenerate_si(est_b, base.f_dl, routed, s.consts);
            EqualizedUl eq_b = ls_equalize(base, est_b.g_hat_ul, regen_b.z_si_hat);

            arma::vec pre = ul_gammas(eq, obs);
            arma::vec bas = ul_gammas(eq_b, base);
            out.pre_min.push_back(pre.min());
            out.base_min_all.push_back(bas.min());

            arma::vec rho = per_user_delay_scan(obs, est, regen, bf.rx, s.consts);
            DetectionReport rep =
                cfar_test(rho, s.p_fa, users.k_u(), users.k_d());
            if (rep.detected && rep.delay == free_delay)
            {
                RecoveryResult rec = recover(obs, routed, rep.delay, s.consts);
                arma::vec post = ul_gammas(rec.eq, obs);
                out.post_min.push_back(post.min());
                out.base_min_det.push_back(bas.min());
                AngleEstimate ae = estimate_angle(rec.est.si_estimates.at(new_idx), bf,
                                                  default_angle_grid());
                out.abs_err.push_back(std::abs(ae.theta_hat.value - angle_deg));
                ++out.detections;
            }
            ++out.trials_run;
        }
        catch (const estimation_error&)
        {
            ++out.skipped;
        }
    }
    return out;
}

inline double db_of_mean(const std::vector<double>& v)
{
    if (v.empty())
        return std::numeric_limits<double>::quiet_NaN();
    return linear_to_db(compensated_mean(arma::vec(v)));
}

} // namespace detail

// Runs the experiment a spec describes and returns rows ready for CSV.
// Throws std::invalid_argument on unusable configurations.
inline ExperimentResult run_experiment(const ExperimentSpec& spec)
{
    ExperimentSpec s = spec;
    validate(s.consts);
    if (s.trials == 0)
        throw std::invalid_argument("run_experiment: need at least one trial");
    if (s.users.k_u() == 0 && s.users.k_d() == 0)
        s.users = reference_users(s.input_snr_db);
    validate(s.users);
    if (s.grid.is_empty())
        s.grid = default_grid(s.kind);
    if (s.methods.empty() && s.kind != ExperimentKind::EmergenceDemo)
        s.methods = default_methods(s.kind);

    ExperimentResult out;
    out.metadata = detail::spec_metadata(s);

    auto push_measured = [&](double x, Method m, const ScenarioSource& src,
                             const RfcLimits& limits) {
        MeasuredPerformance mp = measure(s.trials, src, m, s.consts, s.seed, limits);
        BootstrapCis ci = bootstrap_cis(mp, s.bootstrap_resamples, s.seed);
        out.rows.push_back(detail::make_row(x, m, mp, ci));
    };

    switch (s.kind)
    {
    case ExperimentKind::AngleSweep:
    {
        for (double a : s.grid)
        {
            Scenario sc;
            sc.users = s.users;
            sc.map.records.push_back(
                {AngleDeg{a}, s.sweep_delay, db_to_linear(s.inr_db), Action::UNASSIGNED});
            for (Method m : s.methods)
                push_measured(a, m, fixed_scenario(sc), s.limits);
        }
        break;
    }
    case ExperimentKind::FixedScenario:
    {
        if (s.map.k_s() == 0)
            throw std::invalid_argument("run_experiment: scenario kind needs a scatterer map");
        Scenario sc{s.users, s.map};
        for (Method m : s.methods)
            push_measured(0.0, m, fixed_scenario(sc), s.limits);
        break;
    }
    case ExperimentKind::RandomMc:
    case ExperimentKind::InrSweep:
    case ExperimentKind::CountSweep:
    {
        RandomScenarioSpec rspec;
        rspec.k_s = s.k_s;
        rspec.ul_power = db_to_linear(s.input_snr_db);
        rspec.dl_power = db_to_linear(s.input_snr_db);
        rspec.si_power = db_to_linear(s.inr_db);
        for (double x : s.grid)
        {
            RandomScenarioSpec r = rspec;
            if (s.kind == ExperimentKind::InrSweep)
                r.si_power = db_to_linear(x);
            if (s.kind == ExperimentKind::CountSweep)
            {
                if (!(x >= 1.0) || x != std::floor(x))
                    throw std::invalid_argument("run_experiment: count grid must be integers");
                r.k_s = arma::uword(x);
            }
            auto src = [r, c = s.consts](Rng& rng) { return random_scenario(rng, r, c); };
            for (Method m : s.methods)
                push_measured(s.kind == ExperimentKind::RandomMc ? 0.0 : x, m, src, s.limits);
        }
        break;
    }
    case ExperimentKind::EmergenceDemo:
    {
        // one seeded mapped environment shared by every swept angle
        Rng map_rng = Rng::substream(s.seed, 10);
        RandomScenarioSpec rspec;
        rspec.k_s = s.k_s;
        rspec.ul_power = db_to_linear(s.input_snr_db);
        rspec.dl_power = db_to_linear(s.input_snr_db);
        rspec.si_power = db_to_linear(s.inr_db);
        Scenario env = random_scenario(map_rng, rspec, s.consts);
        ScattererMap routed = plan_actions(s.users, env.map, s.consts, s.limits);
        BeamformerPair bf{max_sinr_rx(s.users, routed, s.consts),
                          max_slnr_tx(s.users, routed, s.consts)};

        arma::uword free_delay = 0;
        for (bool taken = true; taken; ++free_delay)
        {
            taken = false;
            for (const auto& rec : routed.records)
                taken = taken || rec.delay == free_delay;
            if (!taken)
                break;
        }
        if (free_delay >= s.consts.n_training)
            throw std::invalid_argument("run_experiment: no free delay cell for emergence");

        for (double a : s.grid)
        {
            detail::EmergencePoint p =
                detail::run_emergence_point(s, s.users, routed, bf, free_delay, a);
            ExperimentRow r;
            r.x = a;
            r.method = "emergence";
            r.trials = s.trials;
            r.skipped = p.skipped;
            r.detections = p.detections;
            r.detect_prob =
                p.trials_run ? double(p.detections) / double(p.trials_run)
                             : std::numeric_limits<double>::quiet_NaN();
            r.post_worst_ul_db = detail::db_of_mean(p.post_min);
            r.base_worst_ul_db = detail::db_of_mean(p.base_min_det);
            r.pre_worst_ul_db = detail::db_of_mean(p.pre_min);
            r.base_all_worst_ul_db = detail::db_of_mean(p.base_min_all);
            if (!p.abs_err.empty())
            {
                arma::vec e(p.abs_err);
                r.mean_abs_angle_err_deg = arma::mean(e);
                r.frac_within_half_deg =
                    double(arma::accu(e <= 0.5)) / double(e.n_elem);
            }
            out.rows.push_back(r);
        }
        break;
    }
    }
    return out;
}

// Versioned plot-data CSV: a schema line, commented metadata, one header,
// one row per (x, method). Doubles are printed round-trip exact.
inline void write_csv(const ExperimentResult& res, std::ostream& os)
{
    os << "# fdsi-csv v1\n";
    for (const auto& m : res.metadata)
        os << "# " << m << "\n";
    os << "x,method,trials,skipped,worst_ul_db,worst_ul_lo,worst_ul_hi,"
          "worst_dl_db,worst_dl_lo,worst_dl_hi,ul_air,ul_air_lo,ul_air_hi,"
          "dl_air,dl_air_lo,dl_air_hi,median_worst_ul_db,median_worst_dl_db,"
          "detections,detect_prob,post_worst_ul_db,base_worst_ul_db,"
          "pre_worst_ul_db,base_all_worst_ul_db,mean_abs_angle_err_deg,"
          "frac_within_half_deg\n";
    os.precision(17);
    for (const auto& r : res.rows)
    {
        os << r.x << ',' << r.method << ',' << r.trials << ',' << r.skipped << ','
           << r.worst_ul_db << ',' << r.worst_ul_ci.lo << ',' << r.worst_ul_ci.hi << ','
           << r.worst_dl_db << ',' << r.worst_dl_ci.lo << ',' << r.worst_dl_ci.hi << ','
           << r.ul_air << ',' << r.ul_air_ci.lo << ',' << r.ul_air_ci.hi << ','
           << r.dl_air << ',' << r.dl_air_ci.lo << ',' << r.dl_air_ci.hi << ','
           << r.median_worst_ul_db << ',' << r.median_worst_dl_db << ','
           << r.detections << ',' << r.detect_prob << ',' << r.post_worst_ul_db << ','
           << r.base_worst_ul_db << ',' << r.pre_worst_ul_db << ','
           << r.base_all_worst_ul_db << ',' << r.mean_abs_angle_err_deg << ','
           << r.frac_within_half_deg << '\n';
    }
}

inline std::string to_csv(const ExperimentResult& res)
{
    std::ostringstream os;
    write_csv(res, os);
    return os.str();
}

} // namespace fdsi
