// SPDX-License-Identifier: Apache-2.0
//
// robust-mimo: beam domain channel modelling and robust precoding for UPA massive MIMO
// Copyright (C) 2026 The robust-mimo authors
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

// Command line front end: run, sweep, fit-omega, eval, dump-channels

#include "robust_mimo/harness.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <sstream>

using namespace robust_mimo;

namespace
{
    struct CommonFlags
    {
        std::string config;
        std::optional<std::uint64_t> seed;
        std::vector<std::string> methods;
        std::optional<arma::uword> samples;
        std::optional<arma::uword> solver_samples;
        std::optional<arma::uword> drops;
        std::string output;
        std::string traces;
    };

    void add_common(CLI::App *cmd, CommonFlags &f)
    {
        cmd->add_option("-c,--config", f.config, "Scenario file (JSON)")->required()->check(CLI::ExistingFile);
        cmd->add_option("--seed", f.seed, "Override the scenario seed");
        cmd->add_option("--methods", f.methods, "Subset of rzf,slnr,algorithm1,algorithm2")->delimiter(',');
        cmd->add_option("--samples", f.samples, "Evaluation draws per drop");
        cmd->add_option("--solver-samples", f.solver_samples, "Monte-Carlo samples inside algorithm1");
        cmd->add_option("--drops", f.drops, "Independent user geometries");
        cmd->add_option("-o,--output", f.output, "Result file (.csv or .json); CSV to stdout when omitted");
        cmd->add_option("--traces", f.traces, "Convergence traces as CSV");
    }

    ScenarioConfig load_with_overrides(const CommonFlags &f)
    {
        ScenarioConfig cfg = load_config(f.config);
        if (f.seed)
            cfg.seed = *f.seed;
        if (!f.methods.empty())
            cfg.methods = f.methods;
        if (f.samples)
            cfg.evaluation.samples = *f.samples;
        if (f.solver_samples)
            cfg.solver.n_samples = *f.solver_samples;
        if (f.drops)
            cfg.evaluation.drops = *f.drops;
        cfg.validate();
        return cfg;
    }

    bool ends_with(const std::string &s, const std::string &suffix)
    {
        return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
    }

    int write_report(const RunReport &rep, const CommonFlags &f)
    {
        if (f.output.empty())
            std::cout << report_to_csv(rep);
        else
            emit(rep, ends_with(f.output, ".json") ? Format::json : Format::csv, f.output);
        if (!f.traces.empty())
            emit_traces_csv(rep, f.traces);
        for (const auto &c : rep.cells)
            if (c.status != "ok")
                std::cerr << "cell " << c.method << " @ " << c.snr_db << " dB: " << c.status << "\n";
        return rep.any_failed() ? 1 : 0;
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"Beam domain channel modelling and robust precoding simulator"};
    app.require_subcommand(1);

    CommonFlags run_flags;
    auto *run = app.add_subcommand("run", "Run one scenario for every configured SNR and method");
    add_common(run, run_flags);

    CommonFlags sweep_flags;
    std::string axis = "snr";
    std::vector<double> values;
    auto *sw = app.add_subcommand("sweep", "One run per axis value, merged into one report");
    add_common(sw, sweep_flags);
    sw->add_option("--axis", axis, "snr, speed, beta or fine_factor")->check(CLI::IsMember({"snr", "speed", "beta", "fine_factor"}));
    sw->add_option("--values", values, "Axis values")->required()->delimiter(',');

    CommonFlags fit_flags;
    arma::uword fit_drop = 0, fit_user = 0;
    std::string fit_channels;
    auto *fit = app.add_subcommand("fit-omega", "Pilot phase and Omega fit for one user");
    fit->add_option("-c,--config", fit_flags.config, "Scenario file (JSON)")->required()->check(CLI::ExistingFile);
    fit->add_option("--seed", fit_flags.seed, "Override the scenario seed");
    fit->add_option("--drop", fit_drop, "Synthetic drop index");
    fit->add_option("--user", fit_user, "User index");
    fit->add_option("--channels", fit_channels, "Channel dump whose draws replace the synthetic slots")->check(CLI::ExistingFile);
    fit->add_option("-o,--output", fit_flags.output, "Omega file")->required();

    CommonFlags eval_flags;
    std::string eval_channels, save_prefix;
    std::vector<std::string> precoder_files;
    arma::uword eval_drop = 0;
    auto *ev = app.add_subcommand("eval", "Design and evaluate on a channel dump (or a synthetic drop)");
    add_common(ev, eval_flags);
    ev->add_option("--channels", eval_channels, "Channel dump (JSON)")->check(CLI::ExistingFile);
    ev->add_option("--drop", eval_drop, "Synthetic drop used when no dump is given");
    ev->add_option("--precoders", precoder_files, "Evaluate these precoder files instead of designing")->check(CLI::ExistingFile);
    ev->add_option("--save-precoders", save_prefix, "Write designed precoders to <prefix>_<method>_<snr>dB.json");

    CommonFlags dump_flags;
    arma::uword dump_drop = 0;
    auto *dump = app.add_subcommand("dump-channels", "Write the channels of one synthetic drop as a channel dump");
    dump->add_option("-c,--config", dump_flags.config, "Scenario file (JSON)")->required()->check(CLI::ExistingFile);
    dump->add_option("--seed", dump_flags.seed, "Override the scenario seed");
    dump->add_option("--samples", dump_flags.samples, "Draws per user");
    dump->add_option("--drop", dump_drop, "Drop index");
    dump->add_option("-o,--output", dump_flags.output, "Dump file")->required();

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (*run)
            return write_report(run_scenario(load_with_overrides(run_flags)), run_flags);

        if (*sw)
            return write_report(sweep(load_with_overrides(sweep_flags), parse_axis(axis), values), sweep_flags);

        if (*fit)
        {
            ScenarioConfig cfg = load_with_overrides(fit_flags);
            if (fit_user >= cfg.users.count)
                throw std::invalid_argument("--user out of range");
            SamplingGrid grid = build_grids(cfg.array, cfg.fine);
            auto steering = std::make_shared<const SteeringMatrices>(build_steering_matrices(cfg.array, grid));
            std::vector<std::vector<arma::cx_mat>> draws;
            if (!fit_channels.empty())
            {
                ChannelDump d = load_channel_dump(fit_channels);
                cfg.users.count = d.samples.size();
                cfg.users.betas = d.betas;
                cfg.users.weights.clear();
                draws = d.samples;
                if (fit_user >= cfg.users.count)
                    throw std::invalid_argument("--user out of range for the dump");
            }
            else
            {
                // Independent slots of one geometry: a fully aged channel is a fresh draw
                ScenarioConfig slots = cfg;
                slots.users.betas = {0.0};
                slots.evaluation.samples = cfg.pilot.phi_slots;
                draws = make_channel_dump(slots, fit_drop).samples;
            }
            auto fits = fit_omega_from_draws(cfg, draws, steering);
            const FitResult &r = fits[fit_user];
            write_omega(fit_flags.output, r.power, grid);
            std::cerr << "fit: " << r.iterations << " iterations, " << (r.converged ? "converged" : "not converged");
            if (!r.warning.empty())
                std::cerr << " (" << r.warning << ")";
            std::cerr << "\n";
            return 0;
        }

        if (*ev)
        {
            ScenarioConfig cfg = load_with_overrides(eval_flags);
            ChannelDump d = eval_channels.empty() ? make_channel_dump(cfg, eval_drop) : load_channel_dump(eval_channels);
            std::vector<PrecoderFile> given;
            for (const auto &p : precoder_files)
                given.push_back(load_precoders(p));
            std::vector<PrecoderFile> designed;
            RunReport rep = run_on_dump(cfg, d, given, save_prefix.empty() ? nullptr : &designed);
            for (const auto &pf : designed)
            {
                std::ostringstream name;
                name << save_prefix << "_" << pf.method << "_" << pf.snr_db << "dB.json";
                save_precoders(pf, name.str());
            }
            return write_report(rep, eval_flags);
        }

        if (*dump)
        {
            ScenarioConfig cfg = load_config(dump_flags.config);
            if (dump_flags.seed)
                cfg.seed = *dump_flags.seed;
            if (dump_flags.samples)
                cfg.evaluation.samples = *dump_flags.samples;
            save_channel_dump(make_channel_dump(cfg, dump_drop), dump_flags.output);
            return 0;
        }
    }
    catch (const std::exception &e)
    {
        std::cerr << "robust-mimo: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
