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

#include "robust_mimo/steering.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>

using namespace robust_mimo;

TEST_CASE("ULA steering vector matches the element-wise definition", "[steering]")
{
    const double u = 0.3183, delta = 0.5;
    const arma::uword m = 7;
    arma::cx_vec a = ula_steering(u, m, delta);
    REQUIRE(a.n_elem == m);
    for (arma::uword i = 0; i < m; ++i)
    {
        std::complex<double> ref = std::polar(1.0 / std::sqrt(7.0), -2.0 * M_PI * delta * u * double(i));
        CHECK(std::abs(a(i) - ref) < 1e-14);
    }
    CHECK(std::abs(arma::norm(a) - 1.0) < 1e-14);
}

TEST_CASE("UPA steering vector is the z-major Kronecker product", "[steering]")
{
    ArrayGeometry g{3, 4, 1};
    arma::cx_vec a = upa_steering(0.2, -0.45, g);
    arma::cx_vec vz = ula_steering(0.2, 3, 0.5), vx = ula_steering(-0.45, 4, 0.5);
    for (arma::uword iz = 0; iz < 3; ++iz)
        for (arma::uword ix = 0; ix < 4; ++ix)
            CHECK(std::abs(a(iz * 4 + ix) - vz(iz) * vx(ix)) < 1e-14);
}

TEST_CASE("Grids are left-closed and have n = f m points", "[steering]")
{
    ArrayGeometry g{2, 4, 3};
    SamplingGrid grid = build_grids(g, FineFactors{2.0, 1.5, 2.0});
    CHECK(grid.n_k == 6);
    CHECK(grid.n_z == 3);
    CHECK(grid.n_x == 8);
    CHECK(grid.n_t() == 24);
    for (arma::uword i = 0; i < grid.n_x; ++i)
        CHECK(std::abs(0.5 * grid.v_t(i) - (-0.5 + double(i) / 8.0)) < 1e-15);
}

TEST_CASE("Grid construction rejects invalid fine factors", "[steering]")
{
    ArrayGeometry g{2, 4, 3};
    CHECK_THROWS_AS(build_grids(g, FineFactors{0.5, 1.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(build_grids(g, FineFactors{1.0, 1.0, 1.3}), std::invalid_argument);
    CHECK_THROWS_AS(ArrayGeometry({0, 4, 1}).validate(), std::invalid_argument);
}

TEST_CASE("Unit fine factors give unitary DFT steering matrices", "[steering]")
{
    ArrayGeometry g{4, 2, 3};
    SamplingGrid grid = build_grids(g, FineFactors{1.0, 1.0, 1.0});
    SteeringMatrices s = build_steering_matrices(g, grid);
    CHECK(arma::norm(s.u_mat.t() * s.u_mat - arma::eye<arma::cx_mat>(3, 3), "fro") < 1e-12);
    CHECK(arma::norm(s.v_mat.t() * s.v_mat - arma::eye<arma::cx_mat>(8, 8), "fro") < 1e-12);
}

TEST_CASE("V columns are UPA steering vectors in j * n_x + l order", "[steering]")
{
    ArrayGeometry g{2, 3, 1};
    SamplingGrid grid = build_grids(g, FineFactors{1.0, 2.0, 2.0});
    SteeringMatrices s = build_steering_matrices(g, grid);
    REQUIRE(s.v_mat.n_cols == grid.n_z * grid.n_x);
    for (arma::uword j = 0; j < grid.n_z; ++j)
        for (arma::uword l = 0; l < grid.n_x; ++l)
        {
            arma::cx_vec ref = upa_steering(grid.u_t(j), grid.v_t(l), g);
            CHECK(arma::norm(s.v_mat.col(j * grid.n_x + l) - ref) < 1e-13);
        }
    CHECK(arma::norm(s.v_mat - arma::kron(s.v_z, s.v_x), "fro") < 1e-13);
}

TEST_CASE("Nearest grid index wraps around the period", "[steering]")
{
    // delta*u in units of the grid spacing 1/n with n = 8, delta = 0.5
    CHECK(nearest_grid_index(0.0, 0.5, 8) == 4);
    CHECK(nearest_grid_index(-1.0, 0.5, 8) == 0);
    CHECK(nearest_grid_index(0.99, 0.5, 8) == 0); // 0.495 is closest to -0.5 + 1
    CHECK(nearest_grid_index(0.7, 0.5, 8) == 7);  // 0.35 -> -0.5 + 7/8 = 0.375
}
