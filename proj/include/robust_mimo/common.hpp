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

#ifndef robust_mimo_common_H
#define robust_mimo_common_H

#include <armadillo>
#include <complex>
#include <cstdint>
#include <random>

namespace robust_mimo
{
    using cx = std::complex<double>;

    // All random draws go through this engine type. A stream is identified by
    // (seed, tag, index_a, index_b) and derived with std::seed_seq, which is
    // fully specified by the standard, so streams are reproducible across
    // platforms using the same standard library.
    using Rng = std::mt19937_64;

    // Purpose tags for random streams. Evaluation streams never share a tag
    // with optimization or estimation streams.
    enum class StreamTag : std::uint32_t
    {
        geometry = 1,       // path cluster layout
        statistics = 2,     // independent fading slots used to build Phi
        previous_slot = 3,  // channel realisation at the previous slot
        optimization = 4,   // Monte-Carlo samples inside the precoder solver
        evaluation = 5,     // fresh channel draws for sum-rate evaluation
        test = 100
    };

    Rng make_stream(std::uint64_t seed, StreamTag tag, std::uint64_t index_a = 0, std::uint64_t index_b = 0);

    // Circularly-symmetric complex Gaussian, CN(0, 1)
    cx complex_gaussian(Rng &rng);
    arma::cx_mat complex_gaussian(arma::uword n_rows, arma::uword n_cols, Rng &rng);

    // (A + A^H) / 2
    arma::cx_mat hermitian_part(const arma::cx_mat &A);

    // log det of a Hermitian positive definite matrix (natural log); throws std::domain_error otherwise
    double log_det_hpd(const arma::cx_mat &A);

    // Inverse of a Hermitian positive definite matrix, symmetrised
    arma::cx_mat inv_hpd(const arma::cx_mat &A);

    // |A|^2 element-wise, i.e. A ⊙ A^*
    arma::mat abs2(const arma::cx_mat &A);
}

#endif
