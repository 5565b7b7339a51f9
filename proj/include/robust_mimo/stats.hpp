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

#ifndef robust_mimo_stats_H
#define robust_mimo_stats_H

#include "robust_mimo/channel.hpp"
#include "robust_mimo/common.hpp"
#include "robust_mimo/steering.hpp"

#include <span>
#include <string>
#include <vector>

namespace robust_mimo
{
    // Uplink pilot of one user: x is m_k x T, Z has variance noise_var per entry
    struct PilotConfig
    {
        arma::cx_mat x;
        double noise_var = 0.0;

        arma::uword length() const { return x.n_cols; }
    };

    // Rows of the unitary T x T DFT matrix split into consecutive blocks of
    // m_k rows, one block per user. X_k X_k^H = I and X_k X_l^H = 0 for k != l.
    std::vector<arma::cx_mat> orthogonal_pilots(arma::uword n_users, arma::uword m_k, arma::uword length);

    // Y = sum_k H_k^T X_k + Z, size m_t x T
    arma::cx_mat received_pilots(std::span<const arma::cx_mat> channels, std::span<const arma::cx_mat> pilots,
                                 double noise_var, Rng &rng);

    // Sample average over slots of (U^H X^* Y^T V) ⊙ conj(.)
    struct PhiMatrix
    {
        arma::mat phi; // n_k x n_t
        arma::uword slots = 0;
    };

    PhiMatrix compute_phi(std::span<const arma::cx_mat> received, const PilotConfig &pilot, const SteeringMatrices &steering);

    // Transforms linking Omega to E{Phi}: E{Phi} = T_kr Omega T_t + O_kr N O_t
    struct TransformSet
    {
        arma::mat t_kr;  // n_k x n_k
        arma::mat t_t;   // n_t x n_t
        arma::mat o_kr;  // n_k x T
        arma::mat n_mat; // T x m_t, every entry noise_var
        arma::mat o_t;   // m_t x n_t

        arma::mat noise_term; // O_kr N O_t
        arma::mat j_term;     // (T_t J T_kr)^T with J the all-ones n_t x n_k matrix
    };

    TransformSet build_transforms(const PilotConfig &pilot, const SteeringMatrices &steering);

    // (C1 ⊙ C1^*) Omega (C2^H ⊙ C2^T), the closed form of E{(C1 G C2^H) ⊙ (C1 G C2^H)^*}
    arma::mat second_moment_transform(const arma::mat &omega, const arma::cx_mat &c1, const arma::cx_mat &c2);

    // T_kr (M ⊙ M) T_t + O_kr N O_t
    arma::mat model_moment(const arma::mat &m_factor, const TransformSet &transforms);

    // g(M) = -sum Phi log(model) + sum T_kr Omega T_t; throws std::domain_error
    // when a model entry is non-positive where Phi > 0
    double kl_objective(const arma::mat &m_factor, const PhiMatrix &phi, const TransformSet &transforms);

    // Full KL divergence f(M) between Phi and the model (zero at a perfect fit)
    double kl_divergence(const arma::mat &m_factor, const PhiMatrix &phi, const TransformSet &transforms);

    // dg/dM = 2 [ (T_t J T_kr)^T - (T_t Q^T T_kr)^T ] ⊙ M,  Q = Phi / model
    arma::mat kl_gradient(const arma::mat &m_factor, const PhiMatrix &phi, const TransformSet &transforms);

    // (T_t Q^T T_kr)^T
    arma::mat q_term(const arma::mat &m_factor, const PhiMatrix &phi, const TransformSet &transforms);

    struct FitOptions
    {
        arma::uword max_iters = 500;
        double tol = 1e-8; // on max |dM| / max M
    };

    struct FitResult
    {
        ChannelPowerMatrix power;
        std::vector<double> g_trace; // g before the first update, then after every update
        arma::uword iterations = 0;
        bool converged = false;
        arma::uword frozen_entries = 0; // cells with a zero denominator, left unchanged
        std::string warning;
    };

    // Strictly positive constant start scaled so that sum(model) matches sum(Phi)
    arma::mat initial_factor(const PhiMatrix &phi, const TransformSet &transforms);

    // Multiplicative fixed-point update
    //   M <- M ⊙ (Q_term + J_term) / (2 J_term)
    // until max |dM| / max M < tol or max_iters.
    FitResult fixed_point_fit(const PhiMatrix &phi, const TransformSet &transforms, const arma::mat &m_init,
                              const FitOptions &options = {});

    // Linear MMSE estimate of the beam domain channel of one user from one
    // received pilot block y (m_t x T), with prior covariance diag(vec(Omega)).
    // The system is dense in (T m_t) x (n_k n_t); intended for desk-scale arrays.
    BeamDomainChannel mmse_beam_estimate(const arma::cx_mat &y, const PilotConfig &pilot, const SteeringMatrices &steering,
                                         const ChannelPowerMatrix &power);

    // Omega file with grid metadata. Format (text):
    //   # robust_mimo omega v1
    //   # n_k=<int> n_z=<int> n_x=<int> f_k=<num> f_z=<num> f_x=<num> ordering=z_major
    //   then n_k lines of n_t comma-separated values, column j * n_x + l
    struct OmegaFile
    {
        ChannelPowerMatrix power;
        arma::uword n_k = 0, n_z = 0, n_x = 0;
        double f_k = 1.0, f_z = 1.0, f_x = 1.0;
    };

    void write_omega(const std::string &path, const ChannelPowerMatrix &power, const SamplingGrid &grid);
    OmegaFile read_omega(const std::string &path);
}

#endif
