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

#include "robust_mimo/precoder.hpp"

#include <cmath>
#include <stdexcept>

namespace robust_mimo
{
    namespace
    {
        void check_streams(const LinkModel &link, arma::uword streams)
        {
            link.validate();
            for (const auto &u : link.users)
                if (streams < 1 || streams > u.m_k())
                    throw std::invalid_argument("baseline precoder: streams must be in [1, m_k]");
        }

        // Dominant right singular subspace of a (columns of the result are orthonormal)
        arma::cx_mat dominant_columns(const arma::cx_mat &a, arma::uword d)
        {
            arma::cx_mat u, v;
            arma::vec s;
            arma::svd_econ(u, s, v, a, "right");
            return v.cols(0, d - 1);
        }
    }

    PrecoderSet rzf_precoder(const LinkModel &link, arma::uword streams)
    {
        check_streams(link, streams);
        const arma::uword n_users = link.size();
        arma::cx_mat h;
        for (const auto &u : link.users)
            h = arma::join_cols(h, u.h_bar);
        arma::cx_mat reg = h * h.t();
        reg.diag() += double(n_users) * link.noise_var;
        arma::cx_mat g = h.t() * arma::inv(hermitian_part(reg));

        PrecoderSet out;
        out.p.resize(n_users);
        arma::uword r0 = 0;
        for (arma::uword k = 0; k < n_users; ++k)
        {
            arma::uword mk = link.users[k].m_k();
            arma::cx_mat block = g.cols(r0, r0 + mk - 1);
            r0 += mk;
            if (streams < mk)
                block = block * dominant_columns(block, streams);
            out.p[k] = block;
        }
        out.normalize();
        return out;
    }

    PrecoderSet slnr_precoder(const LinkModel &link, arma::uword streams)
    {
        check_streams(link, streams);
        const arma::uword n_users = link.size();
        const arma::uword m_t = link.users[0].m_t();

        arma::cx_mat total(m_t, m_t, arma::fill::zeros);
        for (const auto &u : link.users)
            total += u.h_bar.t() * u.h_bar;

        PrecoderSet out;
        out.p.resize(n_users);
        for (arma::uword k = 0; k < n_users; ++k)
        {
            const arma::cx_mat &hk = link.users[k].h_bar;
            arma::cx_mat signal = hermitian_part(hk.t() * hk);
            arma::cx_mat leak = hermitian_part(total - signal);
            leak.diag() += double(hk.n_rows) * link.noise_var;

            arma::cx_mat l;
            if (!arma::chol(l, leak, "lower"))
                throw std::runtime_error("slnr_precoder: leakage matrix is not positive definite");
            arma::cx_mat l_inv = arma::inv(arma::trimatl(l));
            arma::vec eigval;
            arma::cx_mat eigvec;
            arma::eig_sym(eigval, eigvec, hermitian_part(l_inv * signal * l_inv.t()));

            arma::cx_mat pk(m_t, streams);
            for (arma::uword s = 0; s < streams; ++s)
            {
                arma::cx_vec x = l_inv.t() * eigvec.col(m_t - 1 - s);
                pk.col(s) = x / arma::norm(x);
            }
            out.p[k] = pk / std::sqrt(double(n_users * streams));
        }
        return out;
    }

    namespace
    {
        struct MmseState
        {
            std::vector<arma::cx_mat> u; // receivers
            std::vector<arma::cx_mat> w; // MSE weights E^{-1}
        };

        MmseState mmse_state(const PrecoderSet &precoders, const std::vector<arma::cx_mat> &channels, double noise_var)
        {
            const arma::uword n_users = channels.size();
            if (precoders.users() != n_users)
                throw std::invalid_argument("wmmse: one channel per precoder required");
            if (!(noise_var > 0.0))
                throw std::invalid_argument("wmmse: noise variance must be > 0");
            MmseState st;
            st.u.resize(n_users);
            st.w.resize(n_users);
            for (arma::uword k = 0; k < n_users; ++k)
            {
                const arma::cx_mat &hk = channels[k];
                arma::cx_mat cov(hk.n_rows, hk.n_rows, arma::fill::eye);
                cov *= noise_var;
                for (arma::uword l = 0; l < n_users; ++l)
                {
                    arma::cx_mat hp = hk * precoders.p[l];
                    cov += hp * hp.t();
                }
                arma::cx_mat hpk = hk * precoders.p[k];
                st.u[k] = arma::solve(hermitian_part(cov), hpk);
                arma::cx_mat e = arma::eye<arma::cx_mat>(hpk.n_cols, hpk.n_cols) - st.u[k].t() * hpk;
                st.w[k] = inv_hpd(e);
            }
            return st;
        }

        double weight_or_one(const std::vector<double> &weights, arma::uword k)
        {
            return weights.empty() ? 1.0 : weights.at(k);
        }
    }

    PrecoderSet wmmse_step(const PrecoderSet &precoders, const std::vector<arma::cx_mat> &channels, double noise_var,
                           const std::vector<double> &weights)
    {
        MmseState st = mmse_state(precoders, channels, noise_var);
        const arma::uword n_users = channels.size();
        const arma::uword m_t = channels[0].n_cols;

        arma::cx_mat b(m_t, m_t, arma::fill::zeros);
        arma::uword cols = 0;
        for (arma::uword k = 0; k < n_users; ++k)
        {
            arma::cx_mat hu = channels[k].t() * st.u[k];
            b += weight_or_one(weights, k) * hu * st.w[k] * hu.t();
            cols += precoders.p[k].n_cols;
        }
        arma::cx_mat rhs(m_t, cols);
        arma::uword c0 = 0;
        for (arma::uword k = 0; k < n_users; ++k)
        {
            arma::uword d = precoders.p[k].n_cols;
            rhs.cols(c0, c0 + d - 1) = weight_or_one(weights, k) * channels[k].t() * st.u[k] * st.w[k];
            c0 += d;
        }

        // Power as a function of the multiplier: sum_i c_i / (lambda_i + lambda)^2
        arma::vec lam;
        arma::cx_mat q;
        arma::eig_sym(lam, q, hermitian_part(b));
        arma::cx_mat qr = q.t() * rhs;
        arma::vec c = arma::sum(abs2(qr), 1);
        auto power_at = [&](double mult) {
            double s = 0.0;
            for (arma::uword i = 0; i < lam.n_elem; ++i)
                if (c(i) > 0.0)
                    s += c(i) / std::pow(lam(i) + mult, 2);
            return s;
        };

        const double lam_min = lam.min();
        const double floor = 1e-12 * std::max(1.0, lam.max());
        double lo, hi;
        if (lam_min > floor && power_at(0.0) < 1.0)
        {
            lo = -lam_min * (1.0 - 1e-12);
            hi = 0.0;
        }
        else
        {
            lo = lam_min > 0.0 ? 0.0 : -lam_min + floor;
            hi = std::max(1.0, lo);
            while (power_at(hi) > 1.0)
                hi *= 2.0;
        }
        for (int it = 0; it < 200; ++it)
        {
            double mid = 0.5 * (lo + hi);
            if (power_at(mid) > 1.0)
                lo = mid;
            else
                hi = mid;
        }
        double mult = 0.5 * (lo + hi);

        arma::vec inv_diag = 1.0 / (lam + mult);
        arma::cx_mat x = q * (arma::diagmat(arma::conv_to<arma::cx_vec>::from(inv_diag)) * qr);

        PrecoderSet out;
        out.p.resize(n_users);
        c0 = 0;
        for (arma::uword k = 0; k < n_users; ++k)
        {
            arma::uword d = precoders.p[k].n_cols;
            out.p[k] = x.cols(c0, c0 + d - 1);
            c0 += d;
        }
        out.normalize();
        return out;
    }

    double wmmse_weighted_rate(const PrecoderSet &precoders, const std::vector<arma::cx_mat> &channels, double noise_var,
                               const std::vector<double> &weights)
    {
        MmseState st = mmse_state(precoders, channels, noise_var);
        double s = 0.0;
        for (arma::uword k = 0; k < channels.size(); ++k)
            s += weight_or_one(weights, k) * log_det_hpd(st.w[k]);
        return s;
    }

    WmmseResult wmmse_solve(const PrecoderSet &init, const std::vector<arma::cx_mat> &channels, double noise_var,
                            const std::vector<double> &weights, arma::uword iterations)
    {
        WmmseResult res;
        res.precoders = init;
        res.precoders.normalize();
        res.weighted_rate.push_back(wmmse_weighted_rate(res.precoders, channels, noise_var, weights));
        for (arma::uword it = 0; it < iterations; ++it)
        {
            res.precoders = wmmse_step(res.precoders, channels, noise_var, weights);
            res.weighted_rate.push_back(wmmse_weighted_rate(res.precoders, channels, noise_var, weights));
        }
        return res;
    }
}
