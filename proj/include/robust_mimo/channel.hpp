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

#ifndef robust_mimo_channel_H
#define robust_mimo_channel_H

#include "robust_mimo/common.hpp"
#include "robust_mimo/steering.hpp"

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace robust_mimo
{
    // Beam domain channel power matrix Omega (n_k x n_t) and its element-wise
    // square-root factor M, Omega = M ⊙ M. The factor is always the
    // nonnegative root.
    struct ChannelPowerMatrix
    {
        arma::mat omega;
        arma::mat m_factor;

        static ChannelPowerMatrix from_omega(const arma::mat &omega);
        static ChannelPowerMatrix from_factor(const arma::mat &m_factor);
        void validate() const;
    };

    struct BeamDomainChannel
    {
        arma::cx_mat g_tilde; // n_k x n_t
        arma::uword slot = 0;
        arma::uword block = 0;
    };

    // Per-block temporal correlation alpha(n) and the slot aggregate beta
    struct AgingProfile
    {
        std::vector<double> alpha;
        arma::uword n_b = 1;
        double beta = 1.0;

        static AgingProfile from_alpha(std::vector<double> alpha, arma::uword n_b);
    };

    struct Path
    {
        double u_r = 0.0; // receive cosine
        double u_t = 0.0; // BS cosine w.r.t. z axis
        double v_t = 0.0; // BS cosine w.r.t. x axis
        double power = 0.0; // E{|g|^2}
        cx gain = 0.0;    // current fading realisation
    };

    struct PathSet
    {
        std::vector<Path> paths;

        arma::uword size() const { return paths.size(); }
        double total_power() const;
    };

    // One scattering cluster: path cosines are drawn around the centre with
    // Gaussian spread, powers are exponential weights normalised to total_power.
    struct ClusterSpec
    {
        double u_r_center = 0.0;
        double u_t_center = 0.0;
        double v_t_center = 0.0;
        double spread = 0.05;
        double total_power = 1.0;
    };

    // Draws a random cluster centre with the BS cosines inside the visible
    // region u_t^2 + v_t^2 <= max_radius^2.
    ClusterSpec random_cluster(Rng &rng, double spread, double total_power, double max_radius = 0.8);

    PathSet synth_paths(std::uint64_t seed, arma::uword n_paths, const ClusterSpec &spec);

    // New independent gains g ~ CN(0, power) for every path, geometry unchanged
    void redraw_gains(PathSet &paths, Rng &rng);

    // H = sum_p g_p a_r(u_r) a_t(u_t, v_t)^H, size m_k x m_t
    arma::cx_mat paths_to_channel(const PathSet &paths, const ArrayGeometry &geom);

    // Bins path powers into the nearest grid cell (i, j * n_x + l)
    ChannelPowerMatrix paths_to_omega(const PathSet &paths, const SamplingGrid &grid, const ArrayGeometry &geom);

    // G = M ⊙ W with W i.i.d. CN(0, 1)
    BeamDomainChannel sample_beam_channel(const ChannelPowerMatrix &power, Rng &rng);

    // H = U G V^H
    arma::cx_mat assemble_h(const arma::cx_mat &g_tilde, const SteeringMatrices &steering);

    // G_new = alpha G_prev + sqrt(1 - alpha^2) (M ⊙ W)
    BeamDomainChannel evolve_gauss_markov(const BeamDomainChannel &g_prev, const ChannelPowerMatrix &power, double alpha, Rng &rng);

    // beta = sqrt( (1/n_b) sum_{n = n_b}^{2 n_b - 1} |alpha(n)|^2 )
    double aggregate_beta(const std::function<double(arma::uword)> &alpha, arma::uword n_b);
    double aggregate_beta(std::span<const double> alpha, arma::uword n_b);

    // J_0(2 pi f_d t_block n), clipped to [0, 1]
    double jakes_alpha(arma::uword n, double doppler_hz, double block_s);

    // Maps a user speed to beta with the Jakes model; the slot is split into n_b blocks
    double speed_to_beta(double speed_kmh, double carrier_hz, double slot_s, arma::uword n_b);

    // A posteriori channel model of one user:
    //   H = h_bar + sqrt(1 - beta^2) U (M ⊙ W) V^H,  h_bar = beta * H_prev
    struct PosteriorChannel
    {
        arma::cx_mat h_bar; // m_k x m_t
        double beta = 1.0;
        ChannelPowerMatrix power;
        std::shared_ptr<const SteeringMatrices> steering;

        arma::uword m_k() const { return h_bar.n_rows; }
        arma::uword m_t() const { return h_bar.n_cols; }
        void validate() const;
    };

    PosteriorChannel posterior_model(const BeamDomainChannel &g_prev, double beta, const ChannelPowerMatrix &power,
                                     std::shared_ptr<const SteeringMatrices> steering);

    // Same model with the previous-slot channel given in the antenna domain
    PosteriorChannel posterior_from_channel(const arma::cx_mat &h_prev, double beta, const ChannelPowerMatrix &power,
                                            std::shared_ptr<const SteeringMatrices> steering);

    arma::cx_mat sample_posterior(const PosteriorChannel &model, Rng &rng);
}

#endif
