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

#include "fdsi/config.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace
{

// Options every subcommand shares; values present only when the user set
// the flag, so config-file values survive unless overridden.
struct CommonArgs
{
    std::string config_path;
    std::vector<std::string> methods;
    std::optional<std::uint64_t> trials;
    std::optional<std::uint64_t> seed;
    std::optional<double> p_fa;
    std::optional<double> inr_db;
    std::optional<double> snr_db;
    std::string limits;
    std::string out_path;
};

void add_common(CLI::App* cmd, CommonArgs& a)
{
    cmd->add_option("--config", a.config_path, "JSON configuration file");
    cmd->add_option("--method", a.methods,
                    "method to evaluate (repeatable); overrides config/defaults");
    cmd->add_option("--trials", a.trials, "Monte-Carlo trials per sweep point");
    cmd->add_option("--seed", a.seed, "master random seed");
    cmd->add_option("--pfa", a.p_fa, "per-cell false-alarm rate for detection");
    cmd->add_option("--inr", a.inr_db, "echo strength per scatterer in dB over noise");
    cmd->add_option("--snr", a.snr_db, "input SNR per user in dB over noise");
    cmd->add_option("--limits", a.limits, "action budgets, e.g. rx=2,tx=2");
    cmd->add_option("--out", a.out_path, "CSV output path (default: stdout)");
}

fdsi::RfcLimits parse_limits(const std::string& text)
{
    fdsi::RfcLimits lim;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
    {
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("limits: expected rx=N or tx=N, got \"" + item + "\"");
        const std::string key = item.substr(0, eq);
        const arma::uword value = arma::uword(std::stoull(item.substr(eq + 1)));
        if (key == "rx")
            lim.rx = value;
        else if (key == "tx")
            lim.tx = value;
        else
            throw std::runtime_error("limits: unknown action \"" + key + "\"");
    }
    return lim;
}

fdsi::ExperimentSpec resolve_spec(fdsi::ExperimentKind kind, const CommonArgs& a)
{
    fdsi::ExperimentSpec spec;
    if (!a.config_path.empty())
        spec = fdsi::load_config(a.config_path);
    spec.kind = kind; // the subcommand wins over any configured kind

    if (!a.methods.empty())
    {
        spec.methods.clear();
        for (const auto& name : a.methods)
        {
            auto m = fdsi::parse_method(name);
            if (!m)
                throw std::runtime_error("unknown method \"" + name + "\"");
            spec.methods.push_back(*m);
        }
    }
    if (a.trials)
        spec.trials = arma::uword(*a.trials);
    if (a.seed)
        spec.seed = *a.seed;
    if (a.p_fa)
        spec.p_fa = *a.p_fa;
    if (a.inr_db)
        spec.inr_db = *a.inr_db;
    if (a.snr_db)
    {
        spec.input_snr_db = *a.snr_db;
        if (spec.users.k_u() || spec.users.k_d())
        {
            spec.users.ul_powers.fill(fdsi::db_to_linear(*a.snr_db));
            spec.users.dl_powers.fill(fdsi::db_to_linear(*a.snr_db));
        }
    }
    if (!a.limits.empty())
        spec.limits = parse_limits(a.limits);
    return spec;
}

// Planner summary for the scenario subcommand, emitted as CSV comment lines
// so the stream stays machine-readable when mixed with the data.
void print_action_table(const fdsi::ExperimentSpec& spec, std::ostream& os)
{
    fdsi::UserSet users = spec.users.k_u() ? spec.users
                                           : fdsi::reference_users(spec.input_snr_db);
    fdsi::ScattererMap planned =
        fdsi::plan_actions(users, spec.map, spec.consts, spec.limits);
    os << "# action-table: index angle_deg delay action\n";
    for (std::size_t i = 0; i < planned.records.size(); ++i)
    {
        const auto& r = planned.records[i];
        os << "# action-table: " << i << ' ' << r.angle.value << ' ' << r.delay << ' '
           << fdsi::action_name(r.action) << '\n';
    }
}

int run(fdsi::ExperimentKind kind, const CommonArgs& a)
{
    fdsi::ExperimentSpec spec = resolve_spec(kind, a);
    fdsi::ExperimentResult result = fdsi::run_experiment(spec);

    std::ofstream file;
    const bool to_file = !a.out_path.empty();
    if (to_file)
    {
        file.open(a.out_path);
        if (!file)
            throw std::runtime_error("cannot write \"" + a.out_path + "\"");
    }
    std::ostream& os = to_file ? static_cast<std::ostream&>(file) : std::cout;

    if (kind == fdsi::ExperimentKind::FixedScenario)
        print_action_table(spec, std::cout);
    fdsi::write_csv(result, os);
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"far-field self-interference mitigation experiments"};
    app.require_subcommand(1);

    struct Entry
    {
        const char* name;
        const char* help;
        fdsi::ExperimentKind kind;
        CommonArgs args;
    };
    std::vector<Entry> entries = {
        {"sweep-angle", "single scatterer angle sweep with fixed users",
         fdsi::ExperimentKind::AngleSweep, {}},
        {"scenario", "one explicit layout from the config file",
         fdsi::ExperimentKind::FixedScenario, {}},
        {"random-mc", "randomized layouts, one aggregate row per method",
         fdsi::ExperimentKind::RandomMc, {}},
        {"sweep-inr", "echo strength sweep over randomized layouts",
         fdsi::ExperimentKind::InrSweep, {}},
        {"sweep-count", "scatterer count sweep over randomized layouts",
         fdsi::ExperimentKind::CountSweep, {}},
        {"emergence", "unmapped scatterer: detection, recovery, angle estimate",
         fdsi::ExperimentKind::EmergenceDemo, {}},
    };
    for (auto& e : entries)
        add_common(app.add_subcommand(e.name, e.help), e.args);

    CLI11_PARSE(app, argc, argv);

    try
    {
        for (auto& e : entries)
            if (app.got_subcommand(e.name))
                return run(e.kind, e.args);
        std::cerr << "fdsi: no subcommand selected\n";
        return 2;
    }
    catch (const std::exception& e)
    {
        std::cerr << "fdsi: " << e.what() << '\n';
        return 2;
    }
}
