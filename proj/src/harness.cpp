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

#include "robust_mimo/harness.hpp"

#include <json.hpp>

#include <chrono>
#include <functional>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace robust_mimo
{
    using nlohmann::json;

    // ---------------------------------------------------------------- config

    namespace
    {
        void reject_unknown(const json &j, const std::set<std::string> &known, const std::string &where)
        {
            if (!j.is_object())
                throw std::invalid_argument("config: '" + where + "' must be an object");
            for (auto it = j.begin(); it != j.end(); ++it)
                if (!known.count(it.key()))
                    throw std::invalid_argument("config: unknown key '" + it.key() + "' in " + where);
        }

        template <typename T>
        void read_opt(const json &j, const char *key, T &out)
        {
            if (j.contains(key))
                out = j.at(key).get<T>();
        }

        std::vector<double> broadcast(const std::vector<double> &v, arma::uword n, const char *what)
        {
            if (v.size() == 1)
                return std::vector<double>(n, v[0]);
            if (v.size() != n)
                throw std::invalid_argument(std::string("config: ") + what + " needs 1 or users.count entries");
            return v;
        }

        Method method_from_name(const std::string &name)
        {
            if (name == "algorithm1")
                return Method::algorithm1;
            if (name == "algorithm2")
                return Method::algorithm2;
            throw std::invalid_argument("unknown solver method '" + name + "'");
        }
    }

    void ScenarioConfig::validate() const
    {
        array.validate();
        if (!(fine.f_k >= 1.0 && fine.f_z >= 1.0 && fine.f_x >= 1.0))
            throw std::invalid_argument("config: fine factors must be >= 1");
        if (users.count < 1 || users.paths < 1)
            throw std::invalid_argument("config: users.count and users.paths must be positive");
        if (!(users.spread >= 0.0))
            throw std::invalid_argument("config: users.spread must be >= 0");
        if (!users.weights.empty())
        {
            auto w = broadcast(users.weights, users.count, "users.weights");
            for (double x : w)
                if (!(x > 0.0))
                    throw std::invalid_argument("config: user weights must be > 0");
        }
        if (snr_db.empty())
            throw std::invalid_argument("config: snr_db list must not be empty");
        for (double s : snr_db)
            if (!std::isfinite(s))
                throw std::invalid_argument("config: snr_db entries must be finite");
        if (slot.n_b < 1 || !(slot.slot_ms > 0.0) || !(slot.carrier_ghz > 0.0))
            throw std::invalid_argument("config: slot parameters must be positive");
        if (pilot.phi_slots < 1 || pilot.fit.max_iters < 1)
            throw std::invalid_argument("config: pilot.phi_slots and pilot.fit.max_iters must be positive");
        if (pilot.length != 0 && pilot.length < users.count * array.m_k)
            throw std::invalid_argument("config: pilot.length must be >= users.count * m_k");
        if (solver.max_iters < 1 || solver.n_samples < 1 || !(solver.tol > 0.0))
            throw std::invalid_argument("config: solver counts and tolerance must be positive");
        if (evaluation.drops < 1 || evaluation.samples < 2)
            throw std::invalid_argument("config: evaluation.drops >= 1 and evaluation.samples >= 2 required");
        if (methods.empty())
            throw std::invalid_argument("config: methods must not be empty");
        for (const auto &m : methods)
            if (m != "rzf" && m != "slnr" && m != "algorithm1" && m != "algorithm2")
                throw std::invalid_argument("config: unknown method '" + m + "'");
        if (omega_source != "fit" && omega_source != "binned")
            throw std::invalid_argument("config: omega_source must be 'fit' or 'binned'");
        if (mean_source != "true" && mean_source != "mmse")
            throw std::invalid_argument("config: mean_source must be 'true' or 'mmse'");
        if (init != "rzf" && init != "slnr")
            throw std::invalid_argument("config: init must be 'rzf' or 'slnr'");
        for (double b : user_betas())
            if (!(b >= 0.0 && b <= 1.0))
                throw std::invalid_argument("config: beta values must lie in [0, 1]");
    }

    std::vector<double> ScenarioConfig::user_betas() const
    {
        if (!users.betas.empty())
            return broadcast(users.betas, users.count, "users.betas");
        if (users.speeds_kmh.empty())
            return std::vector<double>(users.count, 1.0);
        std::vector<double> out;
        for (double v : broadcast(users.speeds_kmh, users.count, "users.speeds_kmh"))
            out.push_back(speed_to_beta(v, slot.carrier_ghz * 1e9, slot.slot_ms * 1e-3, slot.n_b));
        return out;
    }

    double ScenarioConfig::noise_var(double snr) const { return std::pow(10.0, -snr / 10.0); }

    ScenarioConfig parse_config(const std::string &json_text)
    {
        json j;
        try
        {
            j = json::parse(json_text);
        }
        catch (const json::parse_error &e)
        {
            throw std::invalid_argument(std::string("config: malformed JSON: ") + e.what());
        }
        reject_unknown(j, {"array", "fine_factors", "users", "snr_db", "slot", "pilot", "solver", "evaluation", "methods",
                           "omega_source", "mean_source", "init", "seed"},
                       "top level");
        if (!j.contains("seed"))
            throw std::invalid_argument("config: 'seed' is required");

        ScenarioConfig c;
        try
        {
            c.seed = j.at("seed").get<std::uint64_t>();
            if (j.contains("array"))
            {
                const json &a = j["array"];
                reject_unknown(a, {"m_z", "m_x", "m_k", "delta_z", "delta_x", "delta_r"}, "array");
                read_opt(a, "m_z", c.array.m_z);
                read_opt(a, "m_x", c.array.m_x);
                read_opt(a, "m_k", c.array.m_k);
                read_opt(a, "delta_z", c.array.delta_z);
                read_opt(a, "delta_x", c.array.delta_x);
                read_opt(a, "delta_r", c.array.delta_r);
            }
            if (j.contains("fine_factors"))
            {
                const json &f = j["fine_factors"];
                reject_unknown(f, {"f_k", "f_z", "f_x"}, "fine_factors");
                read_opt(f, "f_k", c.fine.f_k);
                read_opt(f, "f_z", c.fine.f_z);
                read_opt(f, "f_x", c.fine.f_x);
            }
            if (j.contains("users"))
            {
                const json &u = j["users"];
                reject_unknown(u, {"count", "speeds_kmh", "betas", "paths", "spread", "weights"}, "users");
                read_opt(u, "count", c.users.count);
                read_opt(u, "speeds_kmh", c.users.speeds_kmh);
                read_opt(u, "betas", c.users.betas);
                read_opt(u, "paths", c.users.paths);
                read_opt(u, "spread", c.users.spread);
                read_opt(u, "weights", c.users.weights);
            }
            read_opt(j, "snr_db", c.snr_db);
            if (j.contains("slot"))
            {
                const json &s = j["slot"];
                reject_unknown(s, {"n_b", "slot_ms", "carrier_ghz"}, "slot");
                read_opt(s, "n_b", c.slot.n_b);
                read_opt(s, "slot_ms", c.slot.slot_ms);
                read_opt(s, "carrier_ghz", c.slot.carrier_ghz);
            }
            if (j.contains("pilot"))
            {
                const json &p = j["pilot"];
                reject_unknown(p, {"length", "phi_slots", "snr_db", "fit_max_iters", "fit_tol"}, "pilot");
                read_opt(p, "length", c.pilot.length);
                read_opt(p, "phi_slots", c.pilot.phi_slots);
                read_opt(p, "snr_db", c.pilot.snr_db);
                read_opt(p, "fit_max_iters", c.pilot.fit.max_iters);
                read_opt(p, "fit_tol", c.pilot.fit.tol);
            }
            if (j.contains("solver"))
            {
                const json &s = j["solver"];
                reject_unknown(s, {"max_iters", "tol", "n_samples"}, "solver");
                read_opt(s, "max_iters", c.solver.max_iters);
                read_opt(s, "tol", c.solver.tol);
                read_opt(s, "n_samples", c.solver.n_samples);
            }
            if (j.contains("evaluation"))
            {
                const json &e = j["evaluation"];
                reject_unknown(e, {"drops", "samples"}, "evaluation");
                read_opt(e, "drops", c.evaluation.drops);
                read_opt(e, "samples", c.evaluation.samples);
            }
            read_opt(j, "methods", c.methods);
            read_opt(j, "omega_source", c.omega_source);
            read_opt(j, "mean_source", c.mean_source);
            read_opt(j, "init", c.init);
        }
        catch (const json::exception &e)
        {
            throw std::invalid_argument(std::string("config: wrong value type: ") + e.what());
        }
        c.validate();
        return c;
    }

    ScenarioConfig load_config(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw std::runtime_error("cannot open config file '" + path + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        try
        {
            return parse_config(ss.str());
        }
        catch (const std::invalid_argument &e)
        {
            throw std::invalid_argument(path + ": " + e.what());
        }
    }

    std::string config_to_json(const ScenarioConfig &c)
    {
        json j;
        j["seed"] = c.seed;
        j["array"] = {{"m_z", c.array.m_z}, {"m_x", c.array.m_x}, {"m_k", c.array.m_k},
                      {"delta_z", c.array.delta_z}, {"delta_x", c.array.delta_x}, {"delta_r", c.array.delta_r}};
        j["fine_factors"] = {{"f_k", c.fine.f_k}, {"f_z", c.fine.f_z}, {"f_x", c.fine.f_x}};
        j["users"] = {{"count", c.users.count}, {"speeds_kmh", c.users.speeds_kmh}, {"betas", c.users.betas},
                      {"paths", c.users.paths}, {"spread", c.users.spread}, {"weights", c.users.weights}};
        j["snr_db"] = c.snr_db;
        j["slot"] = {{"n_b", c.slot.n_b}, {"slot_ms", c.slot.slot_ms}, {"carrier_ghz", c.slot.carrier_ghz}};
        j["pilot"] = {{"length", c.pilot.length}, {"phi_slots", c.pilot.phi_slots}, {"snr_db", c.pilot.snr_db},
                      {"fit_max_iters", c.pilot.fit.max_iters}, {"fit_tol", c.pilot.fit.tol}};
        j["solver"] = {{"max_iters", c.solver.max_iters}, {"tol", c.solver.tol}, {"n_samples", c.solver.n_samples}};
        j["evaluation"] = {{"drops", c.evaluation.drops}, {"samples", c.evaluation.samples}};
        j["methods"] = c.methods;
        j["omega_source"] = c.omega_source;
        j["mean_source"] = c.mean_source;
        j["init"] = c.init;
        return j.dump(2);
    }

    // ---------------------------------------------------------------- streams

    Rng StreamBook::open(const std::string &purpose, std::uint64_t seed, StreamTag tag, std::uint64_t a, std::uint64_t b)
    {
        used[purpose].insert(Entry{tag, a, b});
        return make_stream(seed, tag, a, b);
    }

    bool RunReport::any_failed() const
    {
        for (const auto &c : cells)
            if (c.status != "ok")
                return true;
        return false;
    }

    const CellResult *RunReport::find(const std::string &method, double snr_db, double beta, double fine_factor) const
    {
        for (const auto &c : cells)
            if (c.method == method && std::abs(c.snr_db - snr_db) < 1e-9 && std::abs(c.beta - beta) < 1e-9 &&
                std::abs(c.fine_factor - fine_factor) < 1e-9)
                return &c;
        return nullptr;
    }

    // ---------------------------------------------------------------- evaluation

    std::vector<double> evaluate_sum_rate(const PrecoderSet &precoders, const std::vector<std::vector<arma::cx_mat>> &channels,
                                          double noise_var, const std::vector<double> &weights)
    {
        if (channels.empty())
            throw std::invalid_argument("evaluate_sum_rate: no channel draws");
        const arma::uword n_users = precoders.users();
        const arma::uword n_draws = channels.size();
        if (!weights.empty() && weights.size() != n_users)
            throw std::invalid_argument("evaluate_sum_rate: one weight per user required");
        for (const auto &draw : channels)
            if (draw.size() != n_users)
                throw std::invalid_argument("evaluate_sum_rate: every draw needs one channel per user");

        std::vector<arma::cx_mat> grams(n_users);
        for (arma::uword k = 0; k < n_users; ++k)
            grams[k] = precoders.p[k] * precoders.p[k].t();

        std::vector<double> out(n_draws, 0.0);
        for (arma::uword k = 0; k < n_users; ++k)
        {
            const arma::uword m_k = channels[0][k].n_rows;
            arma::cx_mat r(m_k, m_k, arma::fill::zeros);
            for (const auto &draw : channels)
                for (arma::uword l = 0; l < n_users; ++l)
                    if (l != k)
                        r += draw[k] * grams[l] * draw[k].t();
            r /= double(n_draws);
            r.diag() += noise_var;
            const double ld_r = log_det_hpd(r);
            const double w = weights.empty() ? 1.0 : weights[k];
            for (arma::uword s = 0; s < n_draws; ++s)
            {
                const arma::cx_mat &h = channels[s][k];
                out[s] += w * (log_det_hpd(r + h * grams[k] * h.t()) - ld_r) / std::log(2.0);
            }
        }
        return out;
    }

    RateEstimate mean_and_error(const std::vector<double> &samples)
    {
        RateEstimate e;
        if (samples.empty())
            return e;
        const double n = double(samples.size());
        e.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
        if (samples.size() > 1)
        {
            double ss = 0.0;
            for (double x : samples)
                ss += (x - e.mean) * (x - e.mean);
            e.std_error = std::sqrt(ss / (n - 1.0) / n);
        }
        return e;
    }

    // ---------------------------------------------------------------- pipeline

    namespace
    {
        struct CellAccumulator
        {
            std::vector<double> samples;
            double iterations = 0.0;
            double solve_ms = 0.0;
            arma::uword drops = 0;
            std::string error;
        };

        double nmse(const arma::mat &estimate, const arma::mat &truth)
        {
            double den = arma::accu(arma::square(truth));
            return den > 0.0 ? arma::accu(arma::square(estimate - truth)) / den : 0.0;
        }

        std::string sanitize(std::string s)
        {
            for (char &ch : s)
                if (ch == ',' || ch == '\n' || ch == '\r' || ch == '"')
                    ch = ';';
            return s;
        }

        std::vector<double> config_weights(const ScenarioConfig &cfg)
        {
            return cfg.users.weights.empty() ? std::vector<double>{} : broadcast(cfg.users.weights, cfg.users.count, "users.weights");
        }

        double pilot_noise(const ScenarioConfig &cfg) { return std::pow(10.0, -cfg.pilot.snr_db / 10.0); }

        std::vector<arma::cx_mat> config_pilots(const ScenarioConfig &cfg)
        {
            arma::uword len = cfg.pilot.length ? cfg.pilot.length : cfg.users.count * cfg.array.m_k;
            return orthogonal_pilots(cfg.users.count, cfg.array.m_k, len);
        }

        struct DropChannels
        {
            std::vector<PathSet> paths;
            std::vector<arma::cx_mat> h_prev;
            std::vector<std::vector<arma::cx_mat>> truth; // [draw][user]
        };

        DropChannels generate_drop(const ScenarioConfig &cfg, const std::vector<double> &betas, arma::uword d, StreamBook &book)
        {
            const arma::uword n_users = cfg.users.count;
            const double path_power = double(cfg.array.m_t() * cfg.array.m_k);
            DropChannels dc;
            dc.paths.resize(n_users);
            dc.h_prev.resize(n_users);
            for (arma::uword k = 0; k < n_users; ++k)
            {
                Rng g = book.open("geometry", cfg.seed, StreamTag::geometry, d, k);
                ClusterSpec spec = random_cluster(g, cfg.users.spread, path_power);
                dc.paths[k] = synth_paths(g(), cfg.users.paths, spec);

                Rng r = book.open("previous_slot", cfg.seed, StreamTag::previous_slot, d, k);
                PathSet prev = dc.paths[k];
                redraw_gains(prev, r);
                dc.h_prev[k] = paths_to_channel(prev, cfg.array);
            }

            Rng ev = book.open("evaluation", cfg.seed, StreamTag::evaluation, d, 0);
            dc.truth.assign(cfg.evaluation.samples, std::vector<arma::cx_mat>(n_users));
            for (arma::uword s = 0; s < cfg.evaluation.samples; ++s)
                for (arma::uword k = 0; k < n_users; ++k)
                {
                    PathSet fresh = dc.paths[k];
                    redraw_gains(fresh, ev);
                    dc.truth[s][k] = betas[k] * dc.h_prev[k] + std::sqrt(1.0 - betas[k] * betas[k]) * paths_to_channel(fresh, cfg.array);
                }
            return dc;
        }

        // Omega of every user from received pilots; slot_channels(s) gives the channels of slot s
        std::vector<FitResult> pilot_phase(const ScenarioConfig &cfg, const SteeringMatrices &steering, arma::uword n_slots,
                                           const std::function<std::vector<arma::cx_mat>(arma::uword, Rng &)> &slot_channels,
                                           std::uint64_t drop, StreamBook &book)
        {
            const std::vector<arma::cx_mat> pilots = config_pilots(cfg);
            const double noise = pilot_noise(cfg);
            std::vector<arma::cx_mat> received(n_slots);
            for (arma::uword s = 0; s < n_slots; ++s)
            {
                Rng r = book.open("statistics", cfg.seed, StreamTag::statistics, drop, s);
                std::vector<arma::cx_mat> h = slot_channels(s, r);
                received[s] = received_pilots(h, pilots, noise, r);
            }
            std::vector<FitResult> fits;
            for (arma::uword k = 0; k < cfg.users.count; ++k)
            {
                PilotConfig pc{pilots[k], noise};
                TransformSet ts = build_transforms(pc, steering);
                PhiMatrix phi = compute_phi(received, pc, steering);
                fits.push_back(fixed_point_fit(phi, ts, initial_factor(phi, ts), cfg.pilot.fit));
            }
            return fits;
        }

        std::vector<arma::cx_mat> mmse_means(const ScenarioConfig &cfg, const SteeringMatrices &steering,
                                             const std::vector<arma::cx_mat> &h_prev, const std::vector<ChannelPowerMatrix> &powers,
                                             std::uint64_t drop, StreamBook &book)
        {
            const std::vector<arma::cx_mat> pilots = config_pilots(cfg);
            const double noise = pilot_noise(cfg);
            Rng r = book.open("previous_slot", cfg.seed, StreamTag::previous_slot, drop, cfg.users.count);
            arma::cx_mat y = received_pilots(h_prev, pilots, noise, r);
            std::vector<arma::cx_mat> out(h_prev.size());
            for (arma::uword k = 0; k < h_prev.size(); ++k)
            {
                PilotConfig pc{pilots[k], noise};
                out[k] = assemble_h(mmse_beam_estimate(y, pc, steering, powers[k]).g_tilde, steering);
            }
            return out;
        }

        ConvergenceTrace make_trace(const std::string &name, const SolverReport &report)
        {
            ConvergenceTrace tr;
            tr.method = name;
            for (double v : report.objective)
                tr.objective.push_back(v / std::log(2.0));
            tr.grad_norm = report.grad_norm;
            tr.iterations = report.iterations;
            tr.termination = report.termination;
            return tr;
        }

        std::optional<double> mean_speed(const ScenarioConfig &cfg)
        {
            if (!cfg.users.betas.empty() || cfg.users.speeds_kmh.empty())
                return std::nullopt;
            auto v = broadcast(cfg.users.speeds_kmh, cfg.users.count, "users.speeds_kmh");
            return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
        }

        CellResult finish_cell(CellAccumulator &a, const std::string &method, double snr_db, std::optional<double> speed,
                               double beta, double fine_factor, double fit_nmse)
        {
            CellResult c;
            c.method = method;
            c.snr_db = snr_db;
            c.speed_kmh = speed;
            c.beta = beta;
            c.fine_factor = fine_factor;
            RateEstimate e = mean_and_error(a.samples);
            c.sum_rate = e.mean;
            c.std_error = e.std_error;
            c.fit_nmse = fit_nmse;
            c.iterations = a.drops ? a.iterations / double(a.drops) : 0.0;
            c.solve_ms = a.drops ? a.solve_ms / double(a.drops) : 0.0;
            c.n_samples = a.samples.size();
            if (!a.error.empty())
                c.status = "failed: " + sanitize(a.error);
            c.samples = std::move(a.samples);
            return c;
        }

        // Designs and evaluates every configured method for one drop
        void run_methods(const ScenarioConfig &cfg, const std::vector<PosteriorChannel> &posteriors,
                         const std::vector<std::vector<arma::cx_mat>> &truth, arma::uword d, double snr_db, arma::uword si,
                         std::vector<CellAccumulator> &acc, RunReport &rep, double beta_mean, std::vector<PrecoderFile> *designed)
        {
            const std::vector<double> weights = config_weights(cfg);
            LinkModel link{posteriors, cfg.noise_var(snr_db), weights};
            for (arma::uword mi = 0; mi < cfg.methods.size(); ++mi)
            {
                const std::string &name = cfg.methods[mi];
                CellAccumulator &a = acc[mi];
                try
                {
                    Rng sr = rep.streams.open("optimization", cfg.seed, StreamTag::optimization, d, si * 64 + mi);
                    std::uint64_t solver_seed = sr();
                    SolverReport report;
                    auto t0 = std::chrono::steady_clock::now();
                    PrecoderSet p = design_precoder(name, link, cfg, solver_seed, &report);
                    auto t1 = std::chrono::steady_clock::now();
                    if (name == "algorithm1" || name == "algorithm2")
                    {
                        ConvergenceTrace tr = make_trace(name, report);
                        tr.snr_db = snr_db;
                        tr.beta = beta_mean;
                        tr.fine_factor = cfg.fine.f_z;
                        tr.drop = d;
                        rep.traces.push_back(std::move(tr));
                        a.iterations += double(report.iterations);
                    }
                    if (std::abs(p.power() - 1.0) > 1e-9)
                        throw std::logic_error("precoder violates the unit power budget");

                    std::vector<double> s = evaluate_sum_rate(p, truth, link.noise_var, weights);
                    a.samples.insert(a.samples.end(), s.begin(), s.end());
                    a.solve_ms += std::chrono::duration<double, std::milli>(t1 - t0).count();
                    ++a.drops;
                    if (designed)
                        designed->push_back(PrecoderFile{std::move(p), name, snr_db, cfg.seed});
                }
                catch (const std::exception &e)
                {
                    if (a.error.empty())
                        a.error = "drop " + std::to_string(d) + ": " + e.what();
                }
            }
        }
    }

    PrecoderSet design_precoder(const std::string &method, const LinkModel &link, const ScenarioConfig &config,
                                std::uint64_t solver_seed, SolverReport *report)
    {
        const arma::uword streams = link.users.at(0).m_k();
        if (method == "rzf")
            return rzf_precoder(link, streams);
        if (method == "slnr")
            return slnr_precoder(link, streams);
        PrecoderSet init = config.init == "rzf" ? rzf_precoder(link, streams) : slnr_precoder(link, streams);
        SolverOptions opt = config.solver;
        opt.method = method_from_name(method);
        opt.seed = solver_seed;
        auto [sol, rep] = solve(init, link, opt);
        if (report)
            *report = std::move(rep);
        return sol;
    }

    RunReport run_scenario(const ScenarioConfig &cfg)
    {
        cfg.validate();
        RunReport rep;
        rep.seed = cfg.seed;

        const ArrayGeometry &geom = cfg.array;
        const arma::uword n_users = cfg.users.count;
        const std::vector<double> betas = cfg.user_betas();
        const double beta_mean = std::accumulate(betas.begin(), betas.end(), 0.0) / double(n_users);

        const SamplingGrid grid = build_grids(geom, cfg.fine);
        const auto steering = std::make_shared<const SteeringMatrices>(build_steering_matrices(geom, grid));

        const arma::uword n_snr = cfg.snr_db.size(), n_methods = cfg.methods.size();
        std::vector<std::vector<CellAccumulator>> acc(n_snr, std::vector<CellAccumulator>(n_methods));
        double nmse_sum = 0.0;
        arma::uword nmse_count = 0;

        for (arma::uword d = 0; d < cfg.evaluation.drops; ++d)
        {
            DropChannels dc;
            std::vector<PosteriorChannel> posteriors(n_users);
            try
            {
                dc = generate_drop(cfg, betas, d, rep.streams);

                std::vector<ChannelPowerMatrix> powers(n_users);
                for (arma::uword k = 0; k < n_users; ++k)
                    powers[k] = paths_to_omega(dc.paths[k], grid, geom);
                if (cfg.omega_source == "fit")
                {
                    auto slot_channels = [&](arma::uword, Rng &r) {
                        std::vector<arma::cx_mat> h(n_users);
                        for (arma::uword k = 0; k < n_users; ++k)
                        {
                            PathSet slot_paths = dc.paths[k];
                            redraw_gains(slot_paths, r);
                            h[k] = paths_to_channel(slot_paths, geom);
                        }
                        return h;
                    };
                    auto fits = pilot_phase(cfg, *steering, cfg.pilot.phi_slots, slot_channels, d, rep.streams);
                    for (arma::uword k = 0; k < n_users; ++k)
                    {
                        nmse_sum += nmse(fits[k].power.omega, powers[k].omega);
                        powers[k] = fits[k].power;
                    }
                }
                nmse_count += n_users;

                std::vector<arma::cx_mat> h_mean =
                    cfg.mean_source == "mmse" ? mmse_means(cfg, *steering, dc.h_prev, powers, d, rep.streams) : dc.h_prev;
                for (arma::uword k = 0; k < n_users; ++k)
                    posteriors[k] = posterior_from_channel(h_mean[k], betas[k], powers[k], steering);
            }
            catch (const std::exception &e)
            {
                std::string msg = "drop " + std::to_string(d) + ": " + e.what();
                for (auto &row : acc)
                    for (auto &a : row)
                        if (a.error.empty())
                            a.error = msg;
                continue;
            }

            for (arma::uword si = 0; si < n_snr; ++si)
                run_methods(cfg, posteriors, dc.truth, d, cfg.snr_db[si], si, acc[si], rep, beta_mean, nullptr);
        }

        const double fit_nmse = nmse_count ? nmse_sum / double(nmse_count) : 0.0;
        for (arma::uword si = 0; si < n_snr; ++si)
            for (arma::uword mi = 0; mi < n_methods; ++mi)
                rep.cells.push_back(finish_cell(acc[si][mi], cfg.methods[mi], cfg.snr_db[si], mean_speed(cfg), beta_mean, cfg.fine.f_z, fit_nmse));
        return rep;
    }

    ChannelDump make_channel_dump(const ScenarioConfig &cfg, arma::uword drop)
    {
        cfg.validate();
        StreamBook book;
        const std::vector<double> betas = cfg.user_betas();
        DropChannels dc = generate_drop(cfg, betas, drop, book);
        ChannelDump dump;
        dump.m_k = cfg.array.m_k;
        dump.m_t = cfg.array.m_t();
        dump.betas = betas;
        dump.h_prev = dc.h_prev;
        dump.samples.assign(cfg.users.count, {});
        for (const auto &draw : dc.truth)
            for (arma::uword k = 0; k < cfg.users.count; ++k)
                dump.samples[k].push_back(draw[k]);
        return dump;
    }

    std::vector<FitResult> fit_omega_from_draws(const ScenarioConfig &cfg, const std::vector<std::vector<arma::cx_mat>> &draws,
                                                std::shared_ptr<const SteeringMatrices> steering)
    {
        if (draws.size() != cfg.users.count || draws.empty() || draws[0].empty())
            throw std::invalid_argument("fit_omega_from_draws: need draws for every configured user");
        const arma::uword n_slots = draws[0].size();
        for (const auto &d : draws)
            if (d.size() != n_slots)
                throw std::invalid_argument("fit_omega_from_draws: users need equal draw counts");
        StreamBook book;
        auto slot_channels = [&](arma::uword s, Rng &) {
            std::vector<arma::cx_mat> h;
            for (const auto &d : draws)
                h.push_back(d[s]);
            return h;
        };
        return pilot_phase(cfg, *steering, n_slots, slot_channels, 0, book);
    }

    RunReport run_on_dump(const ScenarioConfig &config, const ChannelDump &dump, const std::vector<PrecoderFile> &precoders,
                          std::vector<PrecoderFile> *designed)
    {
        ScenarioConfig cfg = config;
        cfg.users.count = dump.h_prev.size();
        cfg.users.betas = dump.betas;
        if (!cfg.users.weights.empty() && cfg.users.weights.size() != 1 && cfg.users.weights.size() != cfg.users.count)
            throw std::invalid_argument("run_on_dump: config weights do not match the dump's user count");
        if (dump.m_k != cfg.array.m_k || dump.m_t != cfg.array.m_t())
            throw std::invalid_argument("run_on_dump: dump dimensions do not match the configured arrays");
        cfg.validate();

        RunReport rep;
        rep.seed = cfg.seed;
        const arma::uword n_users = cfg.users.count;
        const SamplingGrid grid = build_grids(cfg.array, cfg.fine);
        const auto steering = std::make_shared<const SteeringMatrices>(build_steering_matrices(cfg.array, grid));

        std::vector<std::vector<arma::cx_mat>> truth(dump.samples[0].size(), std::vector<arma::cx_mat>(n_users));
        for (arma::uword k = 0; k < n_users; ++k)
            for (arma::uword s = 0; s < truth.size(); ++s)
                truth[s][k] = dump.samples[k][s];
        const std::vector<double> weights = config_weights(cfg);
        const double beta_mean = std::accumulate(dump.betas.begin(), dump.betas.end(), 0.0) / double(n_users);

        if (!precoders.empty())
        {
            for (const auto &pf : precoders)
            {
                CellAccumulator a;
                try
                {
                    if (pf.precoders.users() != n_users || pf.precoders.p[0].n_rows != dump.m_t)
                        throw std::invalid_argument("precoder set does not match the dump dimensions");
                    a.samples = evaluate_sum_rate(pf.precoders, truth, cfg.noise_var(pf.snr_db), weights);
                    a.drops = 1;
                }
                catch (const std::exception &e)
                {
                    a.error = e.what();
                }
                rep.cells.push_back(finish_cell(a, pf.method.empty() ? "given" : pf.method, pf.snr_db, std::nullopt, beta_mean, cfg.fine.f_z, 0.0));
            }
            return rep;
        }

        auto fits = fit_omega_from_draws(cfg, dump.samples, steering);
        std::vector<PosteriorChannel> posteriors(n_users);
        for (arma::uword k = 0; k < n_users; ++k)
            posteriors[k] = posterior_from_channel(dump.h_prev[k], dump.betas[k], fits[k].power, steering);

        std::vector<std::vector<CellAccumulator>> acc(cfg.snr_db.size(), std::vector<CellAccumulator>(cfg.methods.size()));
        for (arma::uword si = 0; si < cfg.snr_db.size(); ++si)
            run_methods(cfg, posteriors, truth, 0, cfg.snr_db[si], si, acc[si], rep, beta_mean, designed);
        for (arma::uword si = 0; si < cfg.snr_db.size(); ++si)
            for (arma::uword mi = 0; mi < cfg.methods.size(); ++mi)
                rep.cells.push_back(finish_cell(acc[si][mi], cfg.methods[mi], cfg.snr_db[si], std::nullopt, beta_mean, cfg.fine.f_z, 0.0));
        return rep;
    }

    SweepAxis parse_axis(const std::string &name)
    {
        if (name == "snr")
            return SweepAxis::snr;
        if (name == "speed")
            return SweepAxis::speed;
        if (name == "beta")
            return SweepAxis::beta;
        if (name == "fine_factor")
            return SweepAxis::fine_factor;
        throw std::invalid_argument("unknown sweep axis '" + name + "' (snr, speed, beta, fine_factor)");
    }

    std::string axis_name(SweepAxis axis)
    {
        switch (axis)
        {
        case SweepAxis::snr:
            return "snr";
        case SweepAxis::speed:
            return "speed";
        case SweepAxis::beta:
            return "beta";
        case SweepAxis::fine_factor:
            return "fine_factor";
        }
        return "snr";
    }

    RunReport sweep(const ScenarioConfig &config, SweepAxis axis, const std::vector<double> &values)
    {
        if (values.empty())
            throw std::invalid_argument("sweep: no axis values given");
        std::vector<ScenarioConfig> runs;
        if (axis == SweepAxis::snr)
        {
            runs.push_back(config);
            runs.back().snr_db = values;
        }
        else
            for (double v : values)
            {
                ScenarioConfig c = config;
                if (axis == SweepAxis::speed)
                {
                    c.users.betas.clear();
                    c.users.speeds_kmh = {v};
                }
                else if (axis == SweepAxis::beta)
                    c.users.betas = {v};
                else
                    c.fine.f_z = c.fine.f_x = v;
                runs.push_back(std::move(c));
            }

        RunReport merged;
        merged.seed = config.seed;
        for (const auto &c : runs)
        {
            RunReport r = run_scenario(c);
            for (auto &cell : r.cells)
            {
                cell.axis = axis_name(axis);
                merged.cells.push_back(std::move(cell));
            }
            for (auto &t : r.traces)
                merged.traces.push_back(std::move(t));
            for (auto &[purpose, entries] : r.streams.used)
                merged.streams.used[purpose].insert(entries.begin(), entries.end());
        }
        return merged;
    }
}
