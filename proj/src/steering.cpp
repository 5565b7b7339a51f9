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

#include <cmath>
#include <stdexcept>
#include <string>

namespace robust_mimo
{
    namespace
    {
        constexpr double two_pi = 6.283185307179586476925286766559;

        arma::uword grid_size(double f, arma::uword m, const char *axis)
        {
            if (!(f >= 1.0) || !std::isfinite(f))
                throw std::invalid_argument(std::string("build_grids: fine factor must be >= 1 on axis ") + axis);
            double n = f * double(m);
            double n_round = std::round(n);
            if (std::abs(n - n_round) > 1e-9)
                throw std::invalid_argument(std::string("build_grids: fine factor times antenna count is not an integer on axis ") + axis);
            return arma::uword(n_round);
        }

        arma::vec uniform_cosines(arma::uword n, double delta)
        {
            arma::vec u(n);
            for (arma::uword i = 0; i < n; ++i)
                u(i) = (-0.5 + double(i) / double(n)) / delta;
            return u;
        }

        arma::cx_mat ula_matrix(const arma::vec &u, arma::uword m, double delta)
        {
            arma::cx_mat A(m, u.n_elem);
            for (arma::uword c = 0; c < u.n_elem; ++c)
                A.col(c) = ula_steering(u(c), m, delta);
            return A;
        }
    }

    void ArrayGeometry::validate() const
    {
        if (m_z < 1 || m_x < 1 || m_k < 1)
            throw std::invalid_argument("ArrayGeometry: antenna counts must be >= 1");
        if (!(delta_z > 0.0) || !(delta_x > 0.0) || !(delta_r > 0.0))
            throw std::invalid_argument("ArrayGeometry: antenna spacings must be > 0");
    }

    arma::cx_vec ula_steering(double u, arma::uword m, double delta)
    {
        if (m == 0)
            throw std::invalid_argument("ula_steering: antenna count must be >= 1");
        if (!std::isfinite(u))
            throw std::invalid_argument("ula_steering: directional cosine must be finite");
        if (!(delta > 0.0))
            throw std::invalid_argument("ula_steering: spacing must be > 0");

        double scale = 1.0 / std::sqrt(double(m));
        arma::cx_vec a(m);
        for (arma::uword i = 0; i < m; ++i)
            a(i) = std::polar(scale, -two_pi * delta * u * double(i));
        return a;
    }

    arma::cx_vec upa_steering(double u_t, double v_t, const ArrayGeometry &geom)
    {
        geom.validate();
        return arma::kron(ula_steering(u_t, geom.m_z, geom.delta_z), ula_steering(v_t, geom.m_x, geom.delta_x));
    }

    SamplingGrid build_grids(const ArrayGeometry &geom, const FineFactors &fine)
    {
        geom.validate();
        SamplingGrid g;
        g.n_k = grid_size(fine.f_k, geom.m_k, "k");
        g.n_z = grid_size(fine.f_z, geom.m_z, "z");
        g.n_x = grid_size(fine.f_x, geom.m_x, "x");
        g.f_k = double(g.n_k) / double(geom.m_k);
        g.f_z = double(g.n_z) / double(geom.m_z);
        g.f_x = double(g.n_x) / double(geom.m_x);
        g.u_r = uniform_cosines(g.n_k, geom.delta_r);
        g.u_t = uniform_cosines(g.n_z, geom.delta_z);
        g.v_t = uniform_cosines(g.n_x, geom.delta_x);
        return g;
    }

    SteeringMatrices build_steering_matrices(const ArrayGeometry &geom, const SamplingGrid &grid)
    {
        geom.validate();
        if (grid.u_r.n_elem != grid.n_k || grid.u_t.n_elem != grid.n_z || grid.v_t.n_elem != grid.n_x)
            throw std::invalid_argument("build_steering_matrices: inconsistent grid");

        SteeringMatrices s;
        s.u_mat = ula_matrix(grid.u_r, geom.m_k, geom.delta_r);
        s.v_z = ula_matrix(grid.u_t, geom.m_z, geom.delta_z);
        s.v_x = ula_matrix(grid.v_t, geom.m_x, geom.delta_x);
        s.v_mat = arma::kron(s.v_z, s.v_x);
        return s;
    }

    arma::uword nearest_grid_index(double u, double delta, arma::uword n)
    {
        if (n == 0)
            throw std::invalid_argument("nearest_grid_index: empty grid");
        // delta*u = -0.5 + i/n  =>  i = n * (delta*u + 0.5), wrapped mod n
        double pos = double(n) * (delta * u + 0.5);
        long long i = std::llround(pos);
        long long nn = (long long)n;
        i = ((i % nn) + nn) % nn;
        return arma::uword(i);
    }
}
