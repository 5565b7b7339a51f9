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

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace robust_mimo
{
    double PrecoderSet::power() const
    {
        double s = 0.0;
        for (const auto &pk : p)
            s += std::real(arma::cdot(arma::vectorise(pk), arma::vectorise(pk)));
        return s;
    }

    void PrecoderSet::normalize()
    {
        double pw = power();
        if (!(pw > 0.0) || !std::isfinite(pw))
            throw std::domain_error("PrecoderSet::normalize: precoders carry no power");
        double s = 1.0 / std::sqrt(pw);
        for (auto &pk : p)
            pk *= s;
    }

    void LinkModel::validate() const
    {
        if (users.empty())
            throw std::invalid_argument("LinkModel: no users");
        if (!(noise_var > 0.0))
            throw std::invalid_argument("LinkModel: noise variance must be > 0");
        if (!weights.empty() && weights.size() != users.size())
            throw std::invalid_argument("LinkModel: one weight per user required");
        for (double w : weights)
            if (!(w > 0.0))
                throw std::invalid_argument("LinkModel: weights must be > 0");
        for (const auto &u : users)
        {
            u.validate();
            if (u.m_t() != users[0].m_t())
                throw std::invalid_argument("LinkModel: users disagree on the BS antenna count");
        }
    }

    namespace
    {
        void check_precoders(const PrecoderSet &precoders, const LinkModel &link)
        {
            if (precoders.users() != link.size())
                throw std::invalid_argument("precoder set does not match the number of users");
            for (const auto &pk : precoders.p)
                if (pk.n_rows != link.users[0].m_t())
                    throw std::invalid_argument("precoder rows must equal the BS antenna count");
        }

        arma::cx_mat gram(const arma::cx_mat &p) { return p * p.t(); }

        double max_abs_change(const PrecoderSet &a, const PrecoderSet &b)
        {
            double m = 0.0;
            for (arma::uword k = 0; k < a.users(); ++k)
                if (a.p[k].n_elem > 0)
                    m = std::max(m, arma::abs(a.p[k] - b.p[k]).max());
            return m;
        }

        arma::cx_mat to_cx(const arma::mat &a) { return arma::cx_mat(a, arma::zeros(arma::size(a))); }

        // U diag(d) U^H
        arma::cx_mat weighted_outer(const arma::cx_mat &u, const arma::cx_vec &d)
        {
            arma::cx_mat ud = u;
            ud.each_row() %= d.st();
            return ud * u.t();
        }

        // diag(A^H C A)
        arma::cx_vec quad_diag(const arma::cx_mat &a, const arma::cx_mat &c)
        {
            return arma::sum(arma::conj(a) % (c * a), 0).st();
        }

        // Shared update P_k <- (B + mu I)^{-1} A_k P_k with one factorisation for all users
        PrecoderSet apply_update(const PrecoderSet &precoders, const std::vector<arma::cx_mat> &a_list,
                                 const arma::cx_mat &b, StepInfo *info)
        {
            const arma::uword m_t = b.n_rows, n_users = precoders.users();
            double mu = 0.0;
            for (arma::uword k = 0; k < n_users; ++k)
                mu += std::real(arma::trace(precoders.p[k].t() * (a_list[k] - b) * precoders.p[k]));

            arma::cx_mat lhs = hermitian_part(b);
            lhs.diag() += mu;

            arma::uword cols = 0;
            for (const auto &pk : precoders.p)
                cols += pk.n_cols;
            arma::cx_mat rhs(m_t, cols);
            arma::uword c0 = 0;
            for (arma::uword k = 0; k < n_users; ++k)
            {
                arma::uword d = precoders.p[k].n_cols;
                if (d > 0)
                    rhs.cols(c0, c0 + d - 1) = a_list[k] * precoders.p[k];
                c0 += d;
            }

            bool regularized = false;
            double epsilon = 0.0;
            if (!(arma::rcond(lhs) > 1e-14))
            {
                regularized = true;
                epsilon = 1e-10 * std::abs(std::real(arma::trace(b))) / double(m_t);
                if (!(epsilon > 0.0))
                    epsilon = 1e-10;
                lhs.diag() += epsilon;
            }
            arma::cx_mat x;
            if (!arma::solve(x, lhs, rhs))
                throw std::runtime_error("precoder update: linear solve failed");

            PrecoderSet out;
            out.p.resize(n_users);
            c0 = 0;
            for (arma::uword k = 0; k < n_users; ++k)
            {
                arma::uword d = precoders.p[k].n_cols;
                out.p[k] = d > 0 ? arma::cx_mat(x.cols(c0, c0 + d - 1)) : arma::cx_mat(m_t, 0);
                c0 += d;
            }
            out.normalize();

            if (info)
            {
                info->mu = mu;
                info->regularized = regularized;
                info->epsilon = epsilon;
            }
            return out;
        }

        PrecoderSet step_from_grads(const PrecoderSet &precoders, const LinkModel &link,
                                    const std::vector<GradientMatrices> &grads, StepInfo *info)
        {
            const arma::uword n_users = link.size();
            const arma::uword m_t = link.users[0].m_t();
            arma::cx_mat b(m_t, m_t, arma::fill::zeros);
            for (arma::uword k = 0; k < n_users; ++k)
                b += link.weight(k) * grads[k].f;
            std::vector<arma::cx_mat> a_list(n_users);
            for (arma::uword k = 0; k < n_users; ++k)
                a_list[k] = link.weight(k) * grads[k].f + grads[k].e;

            PrecoderSet next = apply_update(precoders, a_list, b, info);
            if (info)
            {
                std::vector<arma::cx_mat> e_list(n_users);
                for (arma::uword k = 0; k < n_users; ++k)
                    e_list[k] = grads[k].e;
                info->grad_norm = riemannian_grad(precoders, e_list, interference_penalties(grads, link)).norm();
            }
            return next;
        }
    }

    arma::cx_mat eta(const PosteriorChannel &model, const arma::cx_mat &c)
    {
        const SteeringMatrices &s = *model.steering;
        if (c.n_rows != s.v_mat.n_rows || c.n_cols != s.v_mat.n_rows)
            throw std::invalid_argument("eta: argument must be m_t x m_t");
        double scale = 1.0 - model.beta * model.beta;
        if (scale == 0.0)
            return arma::cx_mat(s.u_mat.n_rows, s.u_mat.n_rows, arma::fill::zeros);
        arma::cx_vec lambda = to_cx(model.power.omega) * quad_diag(s.v_mat, c);
        return scale * weighted_outer(s.u_mat, lambda);
    }

    arma::cx_mat eta_tilde(const PosteriorChannel &model, const arma::cx_mat &c)
    {
        const SteeringMatrices &s = *model.steering;
        if (c.n_rows != s.u_mat.n_rows || c.n_cols != s.u_mat.n_rows)
            throw std::invalid_argument("eta_tilde: argument must be m_k x m_k");
        double scale = 1.0 - model.beta * model.beta;
        if (scale == 0.0)
            return arma::cx_mat(s.v_mat.n_rows, s.v_mat.n_rows, arma::fill::zeros);
        arma::cx_vec lambda = to_cx(model.power.omega).st() * quad_diag(s.u_mat, c);
        return scale * weighted_outer(s.v_mat, lambda);
    }

    arma::cx_mat expected_outer(const PosteriorChannel &model, const arma::cx_mat &c)
    {
        return model.h_bar * c * model.h_bar.t() + eta(model, c);
    }

    arma::cx_mat expected_inner(const PosteriorChannel &model, const arma::cx_mat &c)
    {
        return model.h_bar.t() * c * model.h_bar + eta_tilde(model, c);
    }

    arma::cx_mat interference_cov(arma::uword k, const PrecoderSet &precoders, const LinkModel &link)
    {
        check_precoders(precoders, link);
        const PosteriorChannel &model = link.users.at(k);
        arma::cx_mat r(model.m_k(), model.m_k(), arma::fill::eye);
        r *= link.noise_var;
        for (arma::uword l = 0; l < link.size(); ++l)
            if (l != k && precoders.p[l].n_cols > 0)
                r += expected_outer(model, gram(precoders.p[l]));
        return hermitian_part(r);
    }

    RateEstimate expected_rate_mc(arma::uword k, const PrecoderSet &precoders, const LinkModel &link, arma::uword n_samples, Rng &rng)
    {
        if (n_samples < 1)
            throw std::invalid_argument("expected_rate_mc: need at least one sample");
        const arma::cx_mat r = interference_cov(k, precoders, link);
        const arma::cx_mat &pk = precoders.p[k];
        if (pk.n_cols == 0 || arma::norm(pk, "fro") == 0.0)
            return {};
        const double ld_r = log_det_hpd(r);
        double s = 0.0, s2 = 0.0;
        for (arma::uword n = 0; n < n_samples; ++n)
        {
            arma::cx_mat hp = sample_posterior(link.users[k], rng) * pk;
            double v = log_det_hpd(r + hp * hp.t()) - ld_r;
            s += v;
            s2 += v * v;
        }
        RateEstimate est;
        est.mean = s / double(n_samples);
        if (n_samples > 1)
        {
            double var = std::max(0.0, (s2 - double(n_samples) * est.mean * est.mean) / double(n_samples - 1));
            est.std_error = std::sqrt(var / double(n_samples));
        }
        return est;
    }

    double rate_upper_bound(arma::uword k, const PrecoderSet &precoders, const LinkModel &link)
    {
        const arma::cx_mat r = interference_cov(k, precoders, link);
        const arma::cx_mat &pk = precoders.p[k];
        if (pk.n_cols == 0)
            return 0.0;
        return log_det_hpd(r + expected_outer(link.users[k], gram(pk))) - log_det_hpd(r);
    }

    double weighted_upper_bound(const PrecoderSet &precoders, const LinkModel &link)
    {
        double s = 0.0;
        for (arma::uword k = 0; k < link.size(); ++k)
            s += link.weight(k) * rate_upper_bound(k, precoders, link);
        return s;
    }

    RateEstimate weighted_rate_mc(const PrecoderSet &precoders, const LinkModel &link, arma::uword n_samples, Rng &rng)
    {
        RateEstimate total;
        double var = 0.0;
        for (arma::uword k = 0; k < link.size(); ++k)
        {
            RateEstimate e = expected_rate_mc(k, precoders, link, n_samples, rng);
            total.mean += link.weight(k) * e.mean;
            var += std::pow(link.weight(k) * e.std_error, 2);
        }
        total.std_error = std::sqrt(var);
        return total;
    }

    GradientMatrices grad_matrices_mc(arma::uword k, const PrecoderSet &precoders, const LinkModel &link, arma::uword n_samples, Rng &rng)
    {
        if (n_samples < 1)
            throw std::invalid_argument("grad_matrices_mc: need at least one sample");
        const PosteriorChannel &model = link.users.at(k);
        const arma::cx_mat r = interference_cov(k, precoders, link);
        const arma::cx_mat r_inv = inv_hpd(r);
        const arma::cx_mat &pk = precoders.p[k];

        arma::cx_mat e_acc(model.m_t(), model.m_t(), arma::fill::zeros);
        arma::cx_mat x_acc(model.m_k(), model.m_k(), arma::fill::zeros);
        for (arma::uword n = 0; n < n_samples; ++n)
        {
            arma::cx_mat h = sample_posterior(model, rng);
            arma::cx_mat hp = h * pk;
            arma::cx_mat rc_inv = inv_hpd(r + hp * hp.t());
            e_acc += h.t() * rc_inv * h;
            x_acc += rc_inv;
        }
        GradientMatrices g;
        g.e = link.weight(k) * hermitian_part(e_acc / double(n_samples));
        arma::cx_mat x = hermitian_part(x_acc / double(n_samples));
        g.f = hermitian_part(expected_inner(model, r_inv) - expected_inner(model, x));
        return g;
    }

    GradientMatrices grad_matrices_closed(arma::uword k, const PrecoderSet &precoders, const LinkModel &link)
    {
        const PosteriorChannel &model = link.users.at(k);
        const arma::cx_mat r = interference_cov(k, precoders, link);
        const arma::cx_mat r_inv = inv_hpd(r);
        const arma::cx_mat rc_inv = inv_hpd(r + expected_outer(model, gram(precoders.p[k])));
        GradientMatrices g;
        arma::cx_mat q_rc = hermitian_part(expected_inner(model, rc_inv));
        g.e = link.weight(k) * q_rc;
        g.f = hermitian_part(expected_inner(model, r_inv)) - q_rc;
        return g;
    }

    std::vector<arma::cx_mat> interference_penalties(const std::vector<GradientMatrices> &grads, const LinkModel &link)
    {
        const arma::uword n_users = grads.size();
        arma::cx_mat total(arma::size(grads.at(0).f), arma::fill::zeros);
        for (arma::uword l = 0; l < n_users; ++l)
            total += link.weight(l) * grads[l].f;
        std::vector<arma::cx_mat> b(n_users);
        for (arma::uword k = 0; k < n_users; ++k)
            b[k] = total - link.weight(k) * grads[k].f;
        return b;
    }

    double RiemannianGradient::norm() const
    {
        double s = 0.0;
        for (const auto &g : grad)
            s += std::pow(arma::norm(g, "fro"), 2);
        return std::sqrt(s);
    }

    RiemannianGradient riemannian_grad(const PrecoderSet &precoders, const std::vector<arma::cx_mat> &e_list,
                                       const std::vector<arma::cx_mat> &b_list)
    {
        const arma::uword n_users = precoders.users();
        if (e_list.size() != n_users || b_list.size() != n_users)
            throw std::invalid_argument("riemannian_grad: need one E and one B matrix per user");
        RiemannianGradient rg;
        rg.grad.resize(n_users);
        for (arma::uword k = 0; k < n_users; ++k)
        {
            rg.grad[k] = (e_list[k] - b_list[k]) * precoders.p[k];
            rg.mu += std::real(arma::trace(precoders.p[k].t() * rg.grad[k]));
        }
        for (arma::uword k = 0; k < n_users; ++k)
            rg.grad[k] -= rg.mu * precoders.p[k];
        return rg;
    }

    PrecoderSet algorithm1_step(const PrecoderSet &precoders, const LinkModel &link, arma::uword n_samples, Rng &rng, StepInfo *info)
    {
        check_precoders(precoders, link);
        std::vector<GradientMatrices> grads(link.size());
        for (arma::uword k = 0; k < link.size(); ++k)
        {
            Rng user_rng = make_stream(rng(), StreamTag::optimization, k);
            grads[k] = grad_matrices_mc(k, precoders, link, n_samples, user_rng);
        }
        return step_from_grads(precoders, link, grads, info);
    }

    PrecoderSet algorithm2_step(const PrecoderSet &precoders, const LinkModel &link, StepInfo *info)
    {
        check_precoders(precoders, link);
        std::vector<GradientMatrices> grads(link.size());
        for (arma::uword k = 0; k < link.size(); ++k)
            grads[k] = grad_matrices_closed(k, precoders, link);
        return step_from_grads(precoders, link, grads, info);
    }

    double stationarity_residual_closed(const PrecoderSet &precoders, const LinkModel &link)
    {
        check_precoders(precoders, link);
        std::vector<GradientMatrices> grads(link.size());
        std::vector<arma::cx_mat> e_list(link.size());
        for (arma::uword k = 0; k < link.size(); ++k)
        {
            grads[k] = grad_matrices_closed(k, precoders, link);
            e_list[k] = grads[k].e;
        }
        RiemannianGradient rg = riemannian_grad(precoders, e_list, interference_penalties(grads, link));
        double worst = 0.0;
        for (const auto &g : rg.grad)
            worst = std::max(worst, arma::norm(g, "fro"));
        return worst;
    }

    std::string method_name(Method m)
    {
        return m == Method::algorithm1 ? "algorithm1" : "algorithm2";
    }

    std::pair<PrecoderSet, SolverReport> solve(const PrecoderSet &init, const LinkModel &link, const SolverOptions &options)
    {
        link.validate();
        check_precoders(init, link);
        PrecoderSet p = init;
        p.normalize();

        SolverReport rep;
        rep.method = method_name(options.method);
        rep.termination = "max_iters";

        auto objective = [&](const PrecoderSet &x, arma::uword it) {
            if (options.method == Method::algorithm2)
                return weighted_upper_bound(x, link);
            Rng obj_rng = make_stream(options.seed, StreamTag::optimization, it, 1);
            return weighted_rate_mc(x, link, options.n_samples, obj_rng).mean;
        };

        if (options.record_objective)
            rep.objective.push_back(objective(p, 0));

        for (arma::uword it = 0; it < options.max_iters; ++it)
        {
            auto t0 = std::chrono::steady_clock::now();
            StepInfo info;
            PrecoderSet next;
            if (options.method == Method::algorithm2)
                next = algorithm2_step(p, link, &info);
            else
            {
                Rng step_rng = make_stream(options.seed, StreamTag::optimization, it, 0);
                next = algorithm1_step(p, link, options.n_samples, step_rng, &info);
            }
            auto t1 = std::chrono::steady_clock::now();

            double change = max_abs_change(next, p);
            p = std::move(next);
            rep.iterations = it + 1;
            rep.mu.push_back(info.mu);
            rep.grad_norm.push_back(info.grad_norm);
            rep.wall_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
            if (info.regularized)
                ++rep.regularized_steps;
            if (options.record_objective)
                rep.objective.push_back(objective(p, it + 1));
            if (change < options.tol)
            {
                rep.termination = "tolerance";
                break;
            }
        }
        return {std::move(p), std::move(rep)};
    }
}
