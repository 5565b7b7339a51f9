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
#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace robust_mimo;

TEST_CASE("Power matrix construction and validation", "[channel]")
{
    arma::mat omega = {{1.0, 0.0}, {4.0, 0.25}};
    auto p = ChannelPowerMatrix::from_omega(omega);
    CHECK(arma::approx_equal(p.m_factor % p.m_factor, omega, "absdiff", 1e-15));
    CHECK(p.m_factor.min() >= 0.0);
    CHECK_THROWS_AS(ChannelPowerMatrix::from_omega(arma::mat{{1.0, -0.1}}), std::invalid_argument);
    auto q = ChannelPowerMatrix::from_factor(arma::mat{{-2.0, 1.0}});
    CHECK(q.omega(0, 0) == 4.0);
    CHECK(q.m_factor(0, 0) == 2.0);
}

TEST_CASE("Beam domain samples have variance Omega", "[channel]")
{
    Rng rng = make_stream(11, StreamTag::test);
    arma::mat omega = {{1.0, 0.0, 0.5}, {2.0, 0.1, 0.0}};
    auto p = ChannelPowerMatrix::from_omega(omega);
    arma::mat acc(2, 3, arma::fill::zeros);
    const int n = 20000;
    for (int s = 0; s < n; ++s)
        acc += abs2(sample_beam_channel(p, rng).g_tilde);
    acc /= double(n);
    for (arma::uword i = 0; i < omega.n_elem; ++i)
    {
        if (omega(i) == 0.0)
            CHECK(acc(i) == 0.0);
        else
            CHECK(std::abs(acc(i) / omega(i) - 1.0) < 0.05);
    }
}

TEST_CASE("Gauss-Markov evolution: alpha = 1 copies, variance is stationary", "[channel]")
{
    Rng rng = make_stream(12, StreamTag::test);
    arma::mat omega = {{1.0, 3.0}};
    auto p = ChannelPowerMatrix::from_omega(omega);
    BeamDomainChannel g0 = sample_beam_channel(p, rng);
    BeamDomainChannel g1 = evolve_gauss_markov(g0, p, 1.0, rng);
    CHECK(arma::norm(g1.g_tilde - g0.g_tilde, "fro") == 0.0);

    arma::mat acc(1, 2, arma::fill::zeros);
    cx corr = 0.0;
    const int n = 20000;
    for (int s = 0; s < n; ++s)
    {
        BeamDomainChannel a = sample_beam_channel(p, rng);
        BeamDomainChannel b = evolve_gauss_markov(a, p, 0.6, rng);
        acc += abs2(b.g_tilde);
        corr += b.g_tilde(0, 1) * std::conj(a.g_tilde(0, 1));
    }
    acc /= double(n);
    CHECK(std::abs(acc(0, 0) - 1.0) < 0.05);
    CHECK(std::abs(acc(0, 1) - 3.0) < 0.15);
    CHECK(std::abs(corr / double(n) - cx(0.6 * 3.0)) < 0.15);
}

TEST_CASE("Slot aggregation of the temporal correlation", "[channel]")
{
    CHECK(std::abs(aggregate_beta([](arma::uword) { return 0.8; }, 5) - 0.8) < 1e-15);
    // blocks n_b .. 2 n_b - 1 with alpha(n) = n / 10, n_b = 2: sqrt((0.04 + 0.09) / 2)
    std::vector<double> alpha = {0.0, 0.1, 0.2, 0.3};
    CHECK(std::abs(aggregate_beta(alpha, 2) - std::sqrt(0.065)) < 1e-15);
    CHECK(jakes_alpha(0, 100.0, 1e-4) == 1.0);
    CHECK(speed_to_beta(0.0, 4.8e9, 5e-4, 7) == 1.0);
    double slow = speed_to_beta(10.0, 4.8e9, 5e-4, 7), fast = speed_to_beta(60.0, 4.8e9, 5e-4, 7);
    CHECK(slow > fast);
    CHECK(fast >= 0.0);
    CHECK(slow <= 1.0);
}

TEST_CASE("Posterior model: exact mean at beta = 1, moments otherwise", "[channel]")
{
    Rng rng = make_stream(13, StreamTag::test);
    ArrayGeometry g{2, 2, 2};
    PosteriorChannel m = oracle::random_posterior(g, FineFactors{1.0, 1.0, 2.0}, 1.0, rng);
    CHECK(arma::norm(sample_posterior(m, rng) - m.h_bar, "fro") == 0.0);

    PosteriorChannel m2 = oracle::random_posterior(g, FineFactors{1.0, 1.0, 2.0}, 0.6, rng);
    arma::cx_mat mean(arma::size(m2.h_bar), arma::fill::zeros);
    const int n = 20000;
    for (int s = 0; s < n; ++s)
        mean += sample_posterior(m2, rng);
    mean /= double(n);
    CHECK(oracle::rel_fro(mean, m2.h_bar) < 0.05);
    CHECK_THROWS_AS(posterior_from_channel(m2.h_bar, 1.2, m2.power, m2.steering), std::invalid_argument);
}

TEST_CASE("Synthetic paths are reproducible and power preserving", "[channel]")
{
    ClusterSpec spec;
    spec.u_t_center = 0.2;
    spec.v_t_center = -0.3;
    spec.total_power = 16.0;
    PathSet a = synth_paths(5, 12, spec), b = synth_paths(5, 12, spec);
    REQUIRE(a.size() == 12);
    CHECK(std::abs(a.total_power() - 16.0) < 1e-12);
    for (arma::uword i = 0; i < a.size(); ++i)
    {
        CHECK(a.paths[i].u_t == b.paths[i].u_t);
        CHECK(a.paths[i].gain == b.paths[i].gain);
        CHECK(a.paths[i].u_t * a.paths[i].u_t + a.paths[i].v_t * a.paths[i].v_t <= 1.0 + 1e-12);
    }

    ArrayGeometry g{2, 2, 1};
    SamplingGrid grid = build_grids(g, FineFactors{1.0, 2.0, 2.0});
    ChannelPowerMatrix om = paths_to_omega(a, grid, g);
    CHECK(std::abs(arma::accu(om.omega) - 16.0) < 1e-12);
}

TEST_CASE("Single on-grid path maps to one beam", "[channel]")
{
    ArrayGeometry g{2, 4, 2};
    SamplingGrid grid = build_grids(g, FineFactors{1.0, 1.0, 1.0});
    SteeringMatrices s = build_steering_matrices(g, grid);
    PathSet ps;
    Path p;
    p.u_r = grid.u_r(1);
    p.u_t = grid.u_t(0);
    p.v_t = grid.v_t(3);
    p.power = 2.0;
    p.gain = cx(1.0, -1.0);
    ps.paths.push_back(p);
    arma::cx_mat h = paths_to_channel(ps, g);
    arma::cx_mat gt = s.u_mat.t() * h * s.v_mat; // unitary bases
    arma::uword col = 0 * grid.n_x + 3;
    CHECK(std::abs(gt(1, col) - p.gain) < 1e-12);
    CHECK(std::abs(arma::accu(abs2(gt)) - 2.0) < 1e-12);
    CHECK(paths_to_omega(ps, grid, g).omega(1, col) == 2.0);
}
