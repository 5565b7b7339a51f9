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

#include "robust_mimo/common.hpp"

#include <stdexcept>

namespace robust_mimo
{
    Rng make_stream(std::uint64_t seed, StreamTag tag, std::uint64_t index_a, std::uint64_t index_b)
    {
        std::seed_seq seq{std::uint32_t(seed & 0xffffffffu), std::uint32_t(seed >> 32),
                          std::uint32_t(tag),
                          std::uint32_t(index_a & 0xffffffffu), std::uint32_t(index_a >> 32),
                          std::uint32_t(index_b & 0xffffffffu), std::uint32_t(index_b >> 32)};
        return Rng(seq);
    }

    cx complex_gaussian(Rng &rng)
    {
        // Box-Muller on the engine's raw output; libstdc++'s normal_distribution
        // caches values, which makes draw counts harder to reason about.
        constexpr double two_pi = 6.283185307179586476925286766559;
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        double u1 = unif(rng);
        while (u1 <= 0.0)
            u1 = unif(rng);
        double u2 = unif(rng);
        double r = std::sqrt(-std::log(u1)); // |w|^2 ~ Exp(1)
        return {r * std::cos(two_pi * u2), r * std::sin(two_pi * u2)};
    }

    arma::cx_mat complex_gaussian(arma::uword n_rows, arma::uword n_cols, Rng &rng)
    {
        arma::cx_mat W(n_rows, n_cols);
        for (arma::uword c = 0; c < n_cols; ++c)
            for (arma::uword r = 0; r < n_rows; ++r)
                W(r, c) = complex_gaussian(rng);
        return W;
    }

    arma::cx_mat hermitian_part(const arma::cx_mat &A)
    {
        return 0.5 * (A + A.t());
    }

    double log_det_hpd(const arma::cx_mat &A)
    {
        arma::cx_mat L;
        if (!arma::chol(L, hermitian_part(A), "lower"))
            throw std::domain_error("log_det_hpd: matrix is not Hermitian positive definite");
        double ld = 0.0;
        for (arma::uword i = 0; i < L.n_rows; ++i)
            ld += std::log(L(i, i).real());
        return 2.0 * ld;
    }

    arma::cx_mat inv_hpd(const arma::cx_mat &A)
    {
        arma::cx_mat X;
        if (!arma::inv_sympd(X, hermitian_part(A)))
            throw std::domain_error("inv_hpd: matrix is not Hermitian positive definite");
        return hermitian_part(X);
    }

    arma::mat abs2(const arma::cx_mat &A)
    {
        return arma::square(arma::real(A)) + arma::square(arma::imag(A));
    }
}
