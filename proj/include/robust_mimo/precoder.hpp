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

#ifndef robust_mimo_precoder_H
#define robust_mimo_precoder_H

#include "robust_mimo/channel.hpp"
#include "robust_mimo/common.hpp"

#include <string>
#include <utility>
#include <vector>

namespace robust_mimo
{
    // K precoders P_k (m_t x d_k) sharing the unit sum-power budget
    //   sum_k tr(P_k P_k^H) = 1.
    // Stacking vec(P_1), ..., vec(P_K) gives a point on the unit sphere.
    struct PrecoderSet
    {
        std::vector<arma::cx_mat> p;

        arma::uword users() const { return p.size(); }
        double power() const;
        void normalize(); // throws std::domain_error on an all-zero set
    };

    // Statistical CSI of all users as seen by the BS
    struct LinkModel
    {
        std::vector<PosteriorChannel> users;
        double noise_var = 1.0;
        std::vector<double> weights; // w_k > 0, empty means all ones

        arma::uword size() const { return users.size(); }
        double weight(arma::uword k) const { return weights.empty() ? 1.0 : weights[k]; }
        void validate() const;
    };

    // E{H_rand C H_rand^H} = (1 - beta^2) U Lambda U^H,  Lambda_ii = sum_j Omega_ij [V^H C V]_jj
    arma::cx_mat eta(const PosteriorChannel &model, const arma::cx_mat &c);

    // E{H_rand^H C H_rand} = (1 - beta^2) V Lambda~ V^H,  Lambda~_ii = sum_j Omega_ji [U^H C U]_jj
    arma::cx_mat eta_tilde(const PosteriorChannel &model, const arma::cx_mat &c);

    // E{H C H^H} and E{H^H C H} for deterministic C
    arma::cx_mat expected_outer(const PosteriorChannel &model, const arma::cx_mat &c);
    arma::cx_mat expected_inner(const PosteriorChannel &model, const arma::cx_mat &c);

    // R_k = sigma^2 I + sum_{l != k} E{H_k P_l P_l^H H_k^H}
    arma::cx_mat interference_cov(arma::uword k, const PrecoderSet &precoders, const LinkModel &link);

    struct RateEstimate
    {
        double mean = 0.0;
        double std_error = 0.0;
    };

    // E{log det(I + R_k^{-1} H_k P_k P_k^H H_k^H)} in nats, with R_k fixed at interference_cov
    RateEstimate expected_rate_mc(arma::uword k, const PrecoderSet &precoders, const LinkModel &link, arma::uword n_samples, Rng &rng);

    // log det(I + R_k^{-1} E{H_k P_k P_k^H H_k^H}) in nats
    double rate_upper_bound(arma::uword k, const PrecoderSet &precoders, const LinkModel &link);

    double weighted_upper_bound(const PrecoderSet &precoders, const LinkModel &link);
    RateEstimate weighted_rate_mc(const PrecoderSet &precoders, const LinkModel &link, arma::uword n_samples, Rng &rng);

    // Euclidean gradient ingredients of user k:
    //   e = w_k E{H^H Rc^{-1} H},  f = E{H^H R^{-1} H} - E{H^H X H}
    // with Rc = R + H P_k P_k^H H^H and X = E{Rc^{-1}} (Monte-Carlo variant) or
    // X = (E{Rc})^{-1} (closed-form variant).
    struct GradientMatrices
    {
        arma::cx_mat e;
        arma::cx_mat f;
    };

    GradientMatrices grad_matrices_mc(arma::uword k, const PrecoderSet &precoders, const LinkModel &link, arma::uword n_samples, Rng &rng);
    GradientMatrices grad_matrices_closed(arma::uword k, const PrecoderSet &precoders, const LinkModel &link);

    // b_k = sum_{l != k} w_l f_l
    std::vector<arma::cx_mat> interference_penalties(const std::vector<GradientMatrices> &grads, const LinkModel &link);

    struct RiemannianGradient
    {
        std::vector<arma::cx_mat> grad; // E_k P_k - B_k P_k - mu P_k
        double mu = 0.0;                // sum_k tr(P_k^H (E_k - B_k) P_k)

        double norm() const;
    };

    RiemannianGradient riemannian_grad(const PrecoderSet &precoders, const std::vector<arma::cx_mat> &e_list,
                                       const std::vector<arma::cx_mat> &b_list);

    struct StepInfo
    {
        double mu = 0.0;
        bool regularized = false;
        double epsilon = 0.0;
        double grad_norm = 0.0;
    };

    // One iteration of the robust design with Monte-Carlo expectations:
    //   A_k = w_k F_k + E_k,  B = sum_k w_k F_k,  P_k <- (B + mu I)^{-1} A_k P_k, normalise.
    // Per-user sample streams are derived from rng as make_stream(rng(), optimization, k).
    PrecoderSet algorithm1_step(const PrecoderSet &precoders, const LinkModel &link, arma::uword n_samples, Rng &rng,
                                StepInfo *info = nullptr);

    // Same iteration with the closed-form (upper-bound) matrices
    PrecoderSet algorithm2_step(const PrecoderSet &precoders, const LinkModel &link, StepInfo *info = nullptr);

    // Stationarity residual max_k ||A_k P_k - B P_k - mu P_k||_F for the closed-form matrices
    double stationarity_residual_closed(const PrecoderSet &precoders, const LinkModel &link);

    enum class Method
    {
        algorithm1,
        algorithm2
    };

    std::string method_name(Method m);

    struct SolverOptions
    {
        Method method = Method::algorithm2;
        arma::uword max_iters = 20;
        double tol = 1e-6; // on the max-entry precoder change
        arma::uword n_samples = 500;
        std::uint64_t seed = 0;
        bool record_objective = true;
    };

    struct SolverReport
    {
        std::string method;
        std::vector<double> objective; // objective[0] at the start, then after each iteration (nats)
        std::vector<double> grad_norm;
        std::vector<double> mu;
        std::vector<double> wall_ms;
        arma::uword iterations = 0;
        arma::uword regularized_steps = 0;
        std::string termination; // "tolerance" or "max_iters"
    };

    // Objective: weighted upper bound (algorithm2) or Monte-Carlo expected
    // weighted sum-rate on the optimization stream (algorithm1).
    std::pair<PrecoderSet, SolverReport> solve(const PrecoderSet &init, const LinkModel &link, const SolverOptions &options);

    // Baselines computed from the channel means h_bar, single- or multi-stream
    PrecoderSet rzf_precoder(const LinkModel &link, arma::uword streams = 1);
    PrecoderSet slnr_precoder(const LinkModel &link, arma::uword streams = 1);

    // Classic iterative WMMSE for known channels (MMSE receivers, MSE weights,
    // bisection on the power multiplier).
    struct WmmseResult
    {
        PrecoderSet precoders;
        std::vector<double> weighted_rate; // per iteration, nats, from log det of the MSE weights
    };

    PrecoderSet wmmse_step(const PrecoderSet &precoders, const std::vector<arma::cx_mat> &channels, double noise_var,
                           const std::vector<double> &weights);
    WmmseResult wmmse_solve(const PrecoderSet &init, const std::vector<arma::cx_mat> &channels, double noise_var,
                            const std::vector<double> &weights, arma::uword iterations);
    double wmmse_weighted_rate(const PrecoderSet &precoders, const std::vector<arma::cx_mat> &channels, double noise_var,
                               const std::vector<double> &weights);
}

#endif
