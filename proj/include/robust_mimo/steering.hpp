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

#ifndef robust_mimo_steering_H
#define robust_mimo_steering_H

#include "robust_mimo/common.hpp"

namespace robust_mimo
{
    // Physical antenna layout. The BS is an m_z x m_x UPA in the xz-plane,
    // each user a ULA with m_k elements. Spacings are in wavelengths.
    struct ArrayGeometry
    {
        arma::uword m_z = 1;
        arma::uword m_x = 1;
        arma::uword m_k = 1;
        double delta_z = 0.5;
        double delta_x = 0.5;
        double delta_r = 0.5;

        arma::uword m_t() const { return m_z * m_x; }
        void validate() const; // throws std::invalid_argument
    };

    // Oversampling ratios N/M of the sampled steering-vector grids
    struct FineFactors
    {
        double f_k = 1.0;
        double f_z = 1.0;
        double f_x = 1.0;
    };

    // Sampled directional cosines.
    //
    // Grid convention: for a grid of n points on an axis with spacing delta,
    // the i-th cosine (0-based) satisfies  delta * u_i = -0.5 + i / n,
    // i.e. the grid is left-closed on [-0.5, 0.5) in delta*u units. With n = m
    // this is exactly the DFT grid.
    struct SamplingGrid
    {
        arma::uword n_k = 0, n_z = 0, n_x = 0;
        double f_k = 1.0, f_z = 1.0, f_x = 1.0;
        arma::vec u_r; // n_k receive cosines
        arma::vec u_t; // n_z cosines w.r.t. the z axis
        arma::vec v_t; // n_x cosines w.r.t. the x axis

        arma::uword n_t() const { return n_z * n_x; }
    };

    // Steering matrices of the beam domain model H = U G V^H.
    //
    // Storage order: V = V_z ⊗ V_x (so that V^H = V_z^H ⊗ V_x^H). Column
    // j * n_x + l of V is the UPA steering vector at (u_t[j], v_t[l]); row
    // iz * m_x + ix is the BS antenna at vertical index iz, horizontal index ix.
    // Channel power matrices are indexed the same way: omega(i, j * n_x + l).
    struct SteeringMatrices
    {
        arma::cx_mat u_mat; // m_k x n_k
        arma::cx_mat v_mat; // m_t x n_t
        arma::cx_mat v_z;   // m_z x n_z
        arma::cx_mat v_x;   // m_x x n_x
    };

    // (1/sqrt(m)) * exp(-j 2 pi delta u i), i = 0..m-1
    arma::cx_vec ula_steering(double u, arma::uword m, double delta);

    // v_z(u_t) ⊗ v_x(v_t); u_t is the cosine w.r.t. the z axis, v_t w.r.t. the x axis
    arma::cx_vec upa_steering(double u_t, double v_t, const ArrayGeometry &geom);

    SamplingGrid build_grids(const ArrayGeometry &geom, const FineFactors &fine);

    SteeringMatrices build_steering_matrices(const ArrayGeometry &geom, const SamplingGrid &grid);

    // Nearest grid index of a cosine, using the circular distance in delta*u units
    // (the steering vector is periodic with period 1 in delta*u).
    arma::uword nearest_grid_index(double u, double delta, arma::uword n);
}

#endif
