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

#ifndef robust_mimo_harness_H
#define robust_mimo_harness_H

#include "robust_mimo/channel.hpp"
#include "robust_mimo/precoder.hpp"
#include "robust_mimo/stats.hpp"
#include "robust_mimo/steering.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace robust_mimo
{
    struct UsersConfig
    {
        arma::uword count = 4;
        std::vector<double> speeds_kmh; // one per user, or a single value for all
        std::vector<double> betas;      // overrides speeds when non-empty
        arma::uword paths = 20;         // multipath components per user
        double spread = 0.05;           // angular spread of the cluster (cosine units)
        std::vector<double> weights;    // empty: all ones
    };

    struct SlotConfig
    {
        arma::uword n_b = 7;
        double slot_ms = 0.5;
        double carrier_ghz = 4.8;
    };

    struct PilotPhaseConfig
    {
        arma::uword length = 0; // 0: users * m_k
        arma::uword phi_slots = 500;
        double snr_db = 20.0; // uplink pilot SNR
        FitOptions fit;
    };

    struct EvaluationConfig
    {
        arma::uword drops = 4;      // independent user geometries
        arma::uword samples = 1000; // true channel draws per drop
    };

    // Scenario file (JSON). Keys mirror the fields below; "seed" is mandatory.
    struct ScenarioConfig
    {
        ArrayGeometry array{4, 4, 1};
        FineFactors fine{1.0, 2.0, 2.0};
        UsersConfig users;
        std::vector<double> snr_db{20.0};
        SlotConfig slot;
        PilotPhaseConfig pilot;
        SolverOptions solver{Method::algorithm2, 100, 1e-5, 200, 0, true};
        EvaluationConfig evaluation;
        std::vector<std::string> methods{"rzf", "slnr", "algorithm1", "algorithm2"};
        std::string omega_source = "fit"; // "fit" (pilot phase) or "binned" (path powers on the grid)
        std::string mean_source = "true"; // "true" previous-slot channel or its "mmse" estimate
        std::string init = "rzf";         // start of the iterative solvers: "rzf" or "slnr"
        std::uint64_t seed = 0;

        void validate() const; // throws std::invalid_argument
        std::vector<double> user_betas() const;
        double noise_var(double snr_db) const;
    };

    ScenarioConfig load_config(const std::string &path);
    ScenarioConfig parse_config(const std::string &json_text);
    std::string config_to_json(const ScenarioConfig &config);

    struct CellResult
    {
        std::string method;
        std::string axis = "snr";
        double snr_db = 0.0;
        std::optional<double> speed_kmh; // empty when betas are given directly
        double beta = 1.0;               // mean over users
        double fine_factor = 1.0;        // f_z (= f_x in sweeps)
        double sum_rate = 0.0;           // bits/s/Hz, weighted
        double std_error = 0.0;
        double fit_nmse = 0.0;   // mean over drops and users
        double iterations = 0.0; // mean over drops; 0 for closed-form methods
        double solve_ms = 0.0;   // mean over drops
        arma::uword n_samples = 0;
        std::string status = "ok";

        std::vector<double> samples; // per-draw weighted sum-rates, aligned across methods; not emitted
    };

    struct ConvergenceTrace
    {
        std::string method;
        double snr_db = 0.0;
        double beta = 1.0;
        double fine_factor = 1.0;
        arma::uword drop = 0;
        std::vector<double> objective; // bits/s/Hz
        std::vector<double> grad_norm;
        arma::uword iterations = 0;
        std::string termination;
    };

    // Which (tag, index_a, index_b) tuples were opened for which purpose
    struct StreamBook
    {
        struct Entry
        {
            StreamTag tag;
            std::uint64_t a, b;
            auto operator<=>(const Entry &) const = default;
        };
        std::map<std::string, std::set<Entry>> used;

        Rng open(const std::string &purpose, std::uint64_t seed, StreamTag tag, std::uint64_t a = 0, std::uint64_t b = 0);
    };

    struct RunReport
    {
        int schema_version = 1;
        std::uint64_t seed = 0;
        std::vector<CellResult> cells;
        std::vector<ConvergenceTrace> traces;
        StreamBook streams;

        bool any_failed() const;
        const CellResult *find(const std::string &method, double snr_db, double beta, double fine_factor) const;
    };

    RunReport run_scenario(const ScenarioConfig &config);

    enum class SweepAxis
    {
        snr,
        speed,       // every user gets the value in km/h
        beta,        // every user gets the value directly
        fine_factor  // f_z = f_x = value
    };

    SweepAxis parse_axis(const std::string &name);
    std::string axis_name(SweepAxis axis);

    // One run per value, merged into a single report
    RunReport sweep(const ScenarioConfig &config, SweepAxis axis, const std::vector<double> &values);

    // Weighted sum-rate per draw (bits) of a precoder set on true channels,
    // channels[s][k] being user k in draw s. The interference covariance of
    // each user is averaged over the draws, matching the design objective.
    std::vector<double> evaluate_sum_rate(const PrecoderSet &precoders, const std::vector<std::vector<arma::cx_mat>> &channels,
                                          double noise_var, const std::vector<double> &weights);

    RateEstimate mean_and_error(const std::vector<double> &samples);

    // Result files. CSV holds the cells without timing so that identical
    // runs give identical bytes; JSON additionally holds timing and traces.
    enum class Format
    {
        csv,
        json
    };

    void emit(const RunReport &report, Format format, const std::string &path);
    void emit_traces_csv(const RunReport &report, const std::string &path);
    std::string report_to_csv(const RunReport &report);
    std::string report_to_json(const RunReport &report);
    RunReport report_from_csv(const std::string &text);
    RunReport report_from_json(const std::string &text);
    RunReport read_report(const std::string &path); // format from the extension

    extern const char *const csv_header;

    // Externally generated channels (JSON):
    //   {"m_k": int, "m_t": int, "users": [{"beta": num, "h_prev": M, "samples": [M, ...]}]}
    // with M = {"re": [...], "im": [...]} in column-major order, rows = m_k, cols = m_t.
    struct ChannelDump
    {
        arma::uword m_k = 0, m_t = 0;
        std::vector<double> betas;
        std::vector<arma::cx_mat> h_prev;
        std::vector<std::vector<arma::cx_mat>> samples; // [user][draw]
    };

    ChannelDump load_channel_dump(const std::string &path);
    void save_channel_dump(const ChannelDump &dump, const std::string &path);

    // Previous-slot channels and evaluation draws of one synthetic drop, the
    // same ones run_scenario uses
    ChannelDump make_channel_dump(const ScenarioConfig &config, arma::uword drop);

    // Pilot phase on externally supplied realisations: draws[k][s] is user k in
    // slot s; pilot noise comes from the statistics stream of the config seed.
    std::vector<FitResult> fit_omega_from_draws(const ScenarioConfig &config, const std::vector<std::vector<arma::cx_mat>> &draws,
                                                std::shared_ptr<const SteeringMatrices> steering);

    // Precoder files (JSON) carry the scenario metadata they were designed for
    struct PrecoderFile
    {
        PrecoderSet precoders;
        std::string method;
        double snr_db = 0.0;
        std::uint64_t seed = 0;
    };

    void save_precoders(const PrecoderFile &file, const std::string &path);
    PrecoderFile load_precoders(const std::string &path);

    // Replays a channel dump: Omega is fitted from the dump's draws, every
    // configured method is designed and evaluated on the same draws. When
    // precoders is non-empty, only those given sets are evaluated.
    RunReport run_on_dump(const ScenarioConfig &config, const ChannelDump &dump, const std::vector<PrecoderFile> &precoders = {},
                          std::vector<PrecoderFile> *designed = nullptr);

    // Designs one precoder set for a link with the named method
    PrecoderSet design_precoder(const std::string &method, const LinkModel &link, const ScenarioConfig &config,
                                std::uint64_t solver_seed, SolverReport *report = nullptr);
}

#endif
