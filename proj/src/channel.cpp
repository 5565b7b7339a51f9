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

#include "robust_mimo/channel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace robust_mimo
{
    ChannelPowerMatrix ChannelPowerMatrix::from_omega(const arma::mat &omega)
    {
        if (!omega.is_finite())
            throw std::invalid_argument("ChannelPowerMatrix: omega has non-finite entries");
        if (omega.n_elem > 0 && omega.min() < 0.0)
            throw std::invalid_argument("ChannelPowerMatrix: omega has negative entries");
        ChannelPowerMatrix p;
        p.omega = omega;
        p.m_factor = arma::sqrt(omega);
        return p;
    }

    ChannelPowerMatrix ChannelPowerMatrix::from_factor(const arma::mat &m_factor)
    {
        if (!m_factor.is_finite())
            throw std::invalid_argument("ChannelPowerMatrix: factor has non-finite entries");
        ChannelPowerMatrix p;
        p.m_factor = arma::abs(m_factor);
        p.omega = p.m_factor % p.m_factor;
        return p;
    }

    void ChannelPowerMatrix::validate() const
    {
        if (omega.n_rows != m_factor.n_rows || omega.n_cols != m_factor.n_cols)
            throw std::invalid_argument("ChannelPowerMatrix: omega and factor dimensions differ");
        if (!omega.is_finite() || !m_factor.is_finite())
            throw std::invalid_argument("ChannelPowerMatrix: non-finite entries");
        if (omega.n_elem > 0 && omega.min() < 0.0)
            throw std::invalid_argument("ChannelPowerMatrix: negative power");
    }

    AgingProfile AgingProfile::from_alpha(std::vector<double> alpha, arma::uword n_b)
    {
        AgingProfile a;
        a.beta = aggregate_beta(std::span<const double>(alpha), n_b);
        a.alpha = std::move(alpha);
        a.n_b = n_b;
        return a;
    }

    double PathSet::total_power() const
    {
        double s = 0.0;
        for (const auto &p : paths)
            s += p.power;
        return s;
    }

    ClusterSpec random_cluster(Rng &rng, double spread, double total_power, double max_radius)
    {
        std::uniform_real_distribution<double> unif(-1.0, 1.0);
        ClusterSpec c;
        c.spread = spread;
        c.total_power = total_power;
        c.u_r_center = unif(rng);
        do
        {
            c.u_t_center = max_radius * unif(rng);
            c.v_t_center = max_radius * unif(rng);
        } while (c.u_t_center * c.u_t_center + c.v_t_center * c.v_t_center > max_radius * max_radius);
        return c;
    }

    PathSet synth_paths(std::uint64_t seed, arma::uword n_paths, const ClusterSpec &spec)
    {
        if (n_paths < 1)
            throw std::invalid_argument("synth_paths: n_paths must be >= 1");
        if (!(spec.spread >= 0.0) || !(spec.total_power >= 0.0))
            throw std::invalid_argument("synth_paths: spread and power must be nonnegative");

        Rng rng = make_stream(seed, StreamTag::geometry, n_paths);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::exponential_distribution<double> expo(1.0);

        PathSet set;
        set.paths.resize(n_paths);
        double weight_sum = 0.0;
        for (auto &p : set.paths)
        {
            p.u_r = std::clamp(spec.u_r_center + spec.spread * normal(rng), -1.0, 1.0);
            p.u_t = spec.u_t_center + spec.spread * normal(rng);
            p.v_t = spec.v_t_center + spec.spread * normal(rng);
            double rad = std::hypot(p.u_t, p.v_t);
            if (rad > 1.0)
            {
                p.u_t /= rad;
                p.v_t /= rad;
            }
            p.power = expo(rng);
            weight_sum += p.power;
        }
        for (auto &p : set.paths)
            p.power *= spec.total_power / weight_sum;
        redraw_gains(set, rng);
        return set;
    }

    void redraw_gains(PathSet &paths, Rng &rng)
    {
        for (auto &p : paths.paths)
            p.gain = std::sqrt(p.power) * complex_gaussian(rng);
    }

    arma::cx_mat paths_to_channel(const PathSet &paths, const ArrayGeometry &geom)
    {
        geom.validate();
        arma::cx_mat H(geom.m_k, geom.m_t(), arma::fill::zeros);
        for (const auto &p : paths.paths)
        {
            arma::cx_vec a_r = ula_steering(p.u_r, geom.m_k, geom.delta_r);
            arma::cx_vec a_t = upa_steering(p.u_t, p.v_t, geom);
            H += p.gain * a_r * a_t.t();
        }
        return H;
    }

    ChannelPowerMatrix paths_to_omega(const PathSet &paths, const SamplingGrid &grid, const ArrayGeometry &geom)
    {
        arma::mat omega(grid.n_k, grid.n_t(), arma::fill::zeros);
        for (const auto &p : paths.paths)
        {
            arma::uword i = nearest_grid_index(p.u_r, geom.delta_r, grid.n_k);
            arma::uword j = nearest_grid_index(p.u_t, geom.delta_z, grid.n_z);
            arma::uword l = nearest_grid_index(p.v_t, geom.delta_x, grid.n_x);
            omega(i, j * grid.n_x + l) += p.power;
        }
        return ChannelPowerMatrix::from_omega(omega);
    }

    BeamDomainChannel sample_beam_channel(const ChannelPowerMatrix &power, Rng &rng)
    {
        BeamDomainChannel g;
        g.g_tilde = arma::cx_mat(power.m_factor, arma::zeros(arma::size(power.m_factor))) %
                    complex_gaussian(power.m_factor.n_rows, power.m_factor.n_cols, rng);
        return g;
    }

    arma::cx_mat assemble_h(const arma::cx_mat &g_tilde, const SteeringMatrices &steering)
    {
        if (g_tilde.n_rows != steering.u_mat.n_cols || g_tilde.n_cols != steering.v_mat.n_cols)
            throw std::invalid_argument("assemble_h: beam domain matrix does not match the steering grid");
        return steering.u_mat * g_tilde * steering.v_mat.t();
    }

    BeamDomainChannel evolve_gauss_markov(const BeamDomainChannel &g_prev, const ChannelPowerMatrix &power, double alpha, Rng &rng)
    {
        if (!(alpha >= 0.0 && alpha <= 1.0))
            throw std::invalid_argument("evolve_gauss_markov: alpha must lie in [0, 1]");
        if (g_prev.g_tilde.n_rows != power.m_factor.n_rows || g_prev.g_tilde.n_cols != power.m_factor.n_cols)
            throw std::invalid_argument("evolve_gauss_markov: dimension mismatch");

        BeamDomainChannel g;
        g.slot = g_prev.slot;
        g.block = g_prev.block + 1;
        if (alpha == 1.0)
        {
            g.g_tilde = g_prev.g_tilde;
            return g;
        }
        BeamDomainChannel fresh = sample_beam_channel(power, rng);
        g.g_tilde = alpha * g_prev.g_tilde + std::sqrt(1.0 - alpha * alpha) * fresh.g_tilde;
        return g;
    }

    double aggregate_beta(const std::function<double(arma::uword)> &alpha, arma::uword n_b)
    {
        if (n_b < 1)
            throw std::invalid_argument("aggregate_beta: empty block range");
        double s = 0.0;
        for (arma::uword n = n_b; n < 2 * n_b; ++n)
        {
            double a = alpha(n);
            if (!(a >= 0.0 && a <= 1.0))
                throw std::invalid_argument("aggregate_beta: alpha values must lie in [0, 1]");
            s += a * a;
        }
        return std::sqrt(s / double(n_b));
    }

    double aggregate_beta(std::span<const double> alpha, arma::uword n_b)
    {
        if (n_b < 1 || alpha.size() < 2 * n_b)
            throw std::invalid_argument("aggregate_beta: alpha must cover blocks n_b .. 2 n_b - 1");
        return aggregate_beta([&](arma::uword n) { return alpha[n]; }, n_b);
    }

    double jakes_alpha(arma::uword n, double doppler_hz, double block_s)
    {
        constexpr double two_pi = 6.283185307179586476925286766559;
        double a = std::cyl_bessel_j(0.0, two_pi * doppler_hz * block_s * double(n));
        return std::clamp(a, 0.0, 1.0);
    }

    double speed_to_beta(double speed_kmh, double carrier_hz, double slot_s, arma::uword n_b)
    {
        if (!(speed_kmh >= 0.0) || !(carrier_hz > 0.0) || !(slot_s > 0.0) || n_b < 1)
            throw std::invalid_argument("speed_to_beta: invalid arguments");
        constexpr double c = 299792458.0;
        double doppler = speed_kmh / 3.6 * carrier_hz / c;
        double block_s = slot_s / double(n_b);
        return aggregate_beta([&](arma::uword n) { return jakes_alpha(n, doppler, block_s); }, n_b);
    }

    void PosteriorChannel::validate() const
    {
        if (!h_bar.is_finite())
            throw std::invalid_argument("PosteriorChannel: non-finite channel mean");
        if (!(beta >= 0.0 && beta <= 1.0))
            throw std::invalid_argument("PosteriorChannel: beta must lie in [0, 1]");
        if (!steering)
            throw std::invalid_argument("PosteriorChannel: missing steering matrices");
        power.validate();
        if (h_bar.n_rows != steering->u_mat.n_rows || h_bar.n_cols != steering->v_mat.n_rows ||
            power.omega.n_rows != steering->u_mat.n_cols || power.omega.n_cols != steering->v_mat.n_cols)
            throw std::invalid_argument("PosteriorChannel: dimension mismatch");
    }

    PosteriorChannel posterior_model(const BeamDomainChannel &g_prev, double beta, const ChannelPowerMatrix &power,
                                     std::shared_ptr<const SteeringMatrices> steering)
    {
        if (!steering)
            throw std::invalid_argument("posterior_model: missing steering matrices");
        return posterior_from_channel(assemble_h(g_prev.g_tilde, *steering), beta, power, std::move(steering));
    }

    PosteriorChannel posterior_from_channel(const arma::cx_mat &h_prev, double beta, const ChannelPowerMatrix &power,
                                            std::shared_ptr<const SteeringMatrices> steering)
    {
        if (!(beta >= 0.0 && beta <= 1.0))
            throw std::invalid_argument("posterior_model: beta must lie in [0, 1]");
        PosteriorChannel m;
        m.h_bar = beta * h_prev;
        m.beta = beta;
        m.power = power;
        m.steering = std::move(steering);
        m.validate();
        return m;
    }

    arma::cx_mat sample_posterior(const PosteriorChannel &model, Rng &rng)
    {
        if (model.beta == 1.0)
            return model.h_bar;
        BeamDomainChannel w = sample_beam_channel(model.power, rng);
        return model.h_bar + std::sqrt(1.0 - model.beta * model.beta) * assemble_h(w.g_tilde, *model.steering);
    }
}
