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

#include "fdsi/experiment.hpp"

#include <json.hpp>

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fdsi
{

namespace detail
{

inline void require_known_keys(const nlohmann::json& j, const char* section,
                               std::initializer_list<const char*> known)
{
    for (auto it = j.begin(); it != j.end(); ++it)
    {
        bool ok = false;
        for (const char* k : known)
            ok = ok || it.key() == k;
        if (!ok)
            throw std::runtime_error(std::string("config: unknown key \"") + it.key() +
                                     "\" in section \"" + section + "\"");
    }
}

template <typename T>
inline T get_or(const nlohmann::json& j, const char* key, T fallback)
{
    if (!j.contains(key))
        return fallback;
    try
    {
        return j.at(key).get<T>();
    }
    catch (const nlohmann::json::exception& e)
    {
        throw std::runtime_error(std::string("config: bad value for \"") + key + "\": " +
                                 e.what());
    }
}

inline arma::vec vec_of(const nlohmann::json& j, const char* key)
{
    std::vector<double> v = j.at(key).get<std::vector<double>>();
    return arma::vec(v);
}

} // namespace detail

// Builds a runnable spec from the JSON document. Sections are optional and
// independently overridable; power resolution order is: explicit powers,
// then the link budget (echo-to-user offset applied to the input SNR),
// then the built-in defaults. Throws std::runtime_error with the offending
// key on malformed input.
inline ExperimentSpec spec_from_json(const nlohmann::json& root)
{
    if (!root.is_object())
        throw std::runtime_error("config: top level must be an object");
    detail::require_known_keys(root, "top level",
                               {"system", "powers", "link_budget", "users", "scatterers",
                                "experiment"});

    ExperimentSpec s;

    if (root.contains("system"))
    {
        const auto& j = root.at("system");
        detail::require_known_keys(j, "system",
                                   {"n_antennas", "n_subcarriers", "n_training", "noise_power"});
        s.consts.n_antennas = detail::get_or<arma::uword>(j, "n_antennas", s.consts.n_antennas);
        s.consts.n_subcarriers =
            detail::get_or<arma::uword>(j, "n_subcarriers", s.consts.n_subcarriers);
        s.consts.n_training = detail::get_or<arma::uword>(j, "n_training", s.consts.n_training);
        s.consts.noise_power = detail::get_or<double>(j, "noise_power", s.consts.noise_power);
    }

    if (root.contains("users"))
    {
        const auto& j = root.at("users");
        detail::require_known_keys(j, "users", {"ul_angles_deg", "dl_angles_deg"});
        if (!j.contains("ul_angles_deg") || !j.contains("dl_angles_deg"))
            throw std::runtime_error("config: users needs ul_angles_deg and dl_angles_deg");
        for (double a : j.at("ul_angles_deg").get<std::vector<double>>())
            s.users.ul_angles.push_back({a});
        for (double a : j.at("dl_angles_deg").get<std::vector<double>>())
            s.users.dl_angles.push_back({a});
    }

    bool inr_explicit = false;
    if (root.contains("powers"))
    {
        const auto& j = root.at("powers");
        detail::require_known_keys(j, "powers", {"input_snr_db", "inr_db"});
        inr_explicit = j.contains("inr_db");
        s.input_snr_db = detail::get_or<double>(j, "input_snr_db", s.input_snr_db);
        s.inr_db = detail::get_or<double>(j, "inr_db", s.inr_db);
    }
    if (root.contains("link_budget") && !inr_explicit)
    {
        const auto& j = root.at("link_budget");
        detail::require_known_keys(j, "link_budget",
                                   {"wavelength", "ue_power", "bs_power", "radar_cross_section",
                                    "user_distance", "scatterer_distance"});
        LinkBudget lb;
        lb.wavelength = detail::get_or<double>(j, "wavelength", lb.wavelength);
        lb.ue_power = detail::get_or<double>(j, "ue_power", lb.ue_power);
        lb.bs_power = detail::get_or<double>(j, "bs_power", lb.bs_power);
        lb.radar_cross_section =
            detail::get_or<double>(j, "radar_cross_section", lb.radar_cross_section);
        lb.user_distance = detail::get_or<double>(j, "user_distance", lb.user_distance);
        lb.scatterer_distance =
            detail::get_or<double>(j, "scatterer_distance", lb.scatterer_distance);
        const arma::uword k_d = s.users.k_d() ? s.users.k_d() : 4;
        ChannelVariances v = channel_variances(lb, s.consts.n_antennas, k_d);
        s.inr_db = s.input_snr_db + linear_to_db(v.si_power / v.ul_power);
    }

    if (s.users.k_u() || s.users.k_d())
    {
        s.users.ul_powers =
            arma::vec(s.users.k_u(), arma::fill::value(db_to_linear(s.input_snr_db)));
        s.users.dl_powers =
            arma::vec(s.users.k_d(), arma::fill::value(db_to_linear(s.input_snr_db)));
    }

    if (root.contains("scatterers"))
    {
        const auto& arr = root.at("scatterers");
        if (!arr.is_array())
            throw std::runtime_error("config: scatterers must be an array");
        for (const auto& j : arr)
        {
            detail::require_known_keys(j, "scatterers[]", {"angle_deg", "delay", "inr_db"});
            if (!j.contains("angle_deg") || !j.contains("delay"))
                throw std::runtime_error("config: each scatterer needs angle_deg and delay");
            ScattererRecord r;
            r.angle = {j.at("angle_deg").get<double>()};
            r.delay = j.at("delay").get<arma::uword>();
            r.power = db_to_linear(detail::get_or<double>(j, "inr_db", s.inr_db));
            s.map.records.push_back(r);
        }
    }

    if (root.contains("experiment"))
    {
        const auto& j = root.at("experiment");
        detail::require_known_keys(j, "experiment",
                                   {"kind", "methods", "grid", "trials", "seed", "p_fa", "limits",
                                    "sweep_delay", "k_s", "bootstrap_resamples"});
        if (j.contains("kind"))
        {
            auto k = parse_kind(j.at("kind").get<std::string>());
            if (!k)
                throw std::runtime_error("config: unknown experiment kind \"" +
                                         j.at("kind").get<std::string>() + "\"");
            s.kind = *k;
        }
        if (j.contains("methods"))
        {
            for (const auto& name : j.at("methods").get<std::vector<std::string>>())
            {
                auto m = parse_method(name);
                if (!m)
                    throw std::runtime_error("config: unknown method \"" + name + "\"");
                s.methods.push_back(*m);
            }
        }
        if (j.contains("grid"))
            s.grid = detail::vec_of(j, "grid");
        s.trials = detail::get_or<arma::uword>(j, "trials", s.trials);
        s.seed = detail::get_or<std::uint64_t>(j, "seed", s.seed);
        s.p_fa = detail::get_or<double>(j, "p_fa", s.p_fa);
        if (j.contains("limits"))
        {
            const auto& l = j.at("limits");
            detail::require_known_keys(l, "limits", {"rx", "tx"});
            s.limits.rx = detail::get_or<arma::uword>(l, "rx", s.limits.rx);
            s.limits.tx = detail::get_or<arma::uword>(l, "tx", s.limits.tx);
        }
        s.sweep_delay = detail::get_or<arma::uword>(j, "sweep_delay", s.sweep_delay);
        s.k_s = detail::get_or<arma::uword>(j, "k_s", s.k_s);
        s.bootstrap_resamples =
            detail::get_or<arma::uword>(j, "bootstrap_resamples", s.bootstrap_resamples);
    }

    return s;
}

inline ExperimentSpec load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("config: cannot open \"" + path + "\"");
    nlohmann::json root;
    try
    {
        root = nlohmann::json::parse(in);
    }
    catch (const nlohmann::json::exception& e)
    {
        throw std::runtime_error("config: parse failure in \"" + path + "\": " + e.what());
    }
    return spec_from_json(root);
}

} // namespace fdsi
