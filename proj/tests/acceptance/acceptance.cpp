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

// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance            run all criteria
//   acceptance 3 7        run the listed criteria only
// Exit status is nonzero when any selected criterion fails.

#include "robust_mimo/harness.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>

using namespace robust_mimo;

namespace
{
    struct Outcome
    {
        bool pass = false;
        std::string detail;
    };

    std::string fmt(const char *f, double a)
    {
        char buf[64];
        std::snprintf(buf, sizeof buf, f, a);
        return buf;
    }

    std::string sci(double x) { return fmt("%.3g", x); }

    // Standard error of the difference of two reported estimates
    double combined_error(const CellResult &a, const CellResult &b) { return std::hypot(a.std_error, b.std_error); }

    // Mean and standard error of (a - b) over aligned draws
    RateEstimate paired_difference(const CellResult &a, const CellResult &b)
    {
        if (a.samples.size() != b.samples.size())
            throw std::logic_error("paired_difference: cells are not aligned");
        std::vector<double> d(a.samples.size());
        for (std::size_t i = 0; i < d.size(); ++i)
            d[i] = a.samples[i] - b.samples[i];
        return mean_and_error(d);
    }

    const CellResult &cell(const RunReport &r, const std::string &method, double snr, double beta, double f)
    {
        const CellResult *c = r.find(method, snr, beta, f);
        if (!c)
            throw std::logic_error("missing cell " + method);
        if (c->status != "ok")
            throw std::runtime_error("cell " + method + " failed: " + c->status);
        return *c;
    }

    // Desk-scale scenario: 4 x 4 UPA, four single-antenna users
    ScenarioConfig desk_config()
    {
        ScenarioConfig c;
        c.seed = 20261014;
        c.array = ArrayGeometry{4, 4, 1};
        c.fine = FineFactors{1.0, 2.0, 2.0};
        c.users.count = 4;
        c.users.betas = {0.7};
        c.users.paths = 20;
        c.users.spread = 0.05;
        c.snr_db = {20.0};
        c.pilot.phi_slots = 500;
        c.pilot.snr_db = 20.0;
        c.solver.max_iters = 100;
        c.solver.tol = 1e-5;
        c.solver.n_samples = 200;
        c.evaluation.drops = 10;
        c.evaluation.samples = 1000;
        return c;
    }

    // ------------------------------------------------------------------ 1

    Outcome second_moment_mc()
    {
        Rng rng = make_stream(1, StreamTag::test);
        arma::mat omega = oracle::random_sparse(3, 4, 0.6, rng);
        auto power = ChannelPowerMatrix::from_omega(omega);
        arma::cx_mat c1 = oracle::random_cx(3, 3, rng), c2 = oracle::random_cx(4, 4, rng);
        arma::mat acc(3, 4, arma::fill::zeros);
        const int n = 100000;
        for (int s = 0; s < n; ++s)
            acc += abs2(c1 * sample_beam_channel(power, rng).g_tilde * c2.t());
        acc /= double(n);
        arma::mat ref = second_moment_transform(omega, c1, c2);
        double worst = 0.0;
        for (arma::uword i = 0; i < ref.n_elem; ++i)
            if (ref(i) > 1e-3 * ref.max())
                worst = std::max(worst, std::abs(acc(i) / ref(i) - 1.0));
        double loops = oracle::rel_fro(ref, oracle::second_moment_loops(omega, c1, c2));
        return {worst < 0.03 && loops < 1e-12, "max entry rel err " + sci(worst) + " (tol 0.03), closed form vs loops " + sci(loops)};
    }

    // ------------------------------------------------------------------ 2, 3 setup

    struct FitSetup
    {
        SamplingGrid grid;
        SteeringMatrices steering;
        PilotConfig pilot;
        TransformSet transforms;
    };

    FitSetup fit_setup(double noise_var)
    {
        // N_k = 4 (m_k = 2, f_k = 2), N_t = 8 (m_z = 2, f_z = 2, m_x = 2, f_x = 1)
        ArrayGeometry g{2, 2, 2};
        FitSetup s;
        s.grid = build_grids(g, FineFactors{2.0, 2.0, 1.0});
        s.steering = build_steering_matrices(g, s.grid);
        s.pilot = PilotConfig{orthogonal_pilots(1, 2, 2)[0], noise_var};
        s.transforms = build_transforms(s.pilot, s.steering);
        return s;
    }

    Outcome kl_gradient_fd()
    {
        Rng rng = make_stream(2, StreamTag::test);
        FitSetup s = fit_setup(0.01);
        double worst = 0.0;
        for (int rep = 0; rep < 10; ++rep)
        {
            PhiMatrix phi{oracle::random_positive(4, 8, rng), 1000};
            arma::mat m = oracle::random_positive(4, 8, rng);
            auto f = [&](const arma::mat &x) { return kl_objective(x, phi, s.transforms); };
            worst = std::max(worst, oracle::rel_fro(kl_gradient(m, phi, s.transforms), oracle::real_fd(f, m, 1e-6)));
        }
        return {worst < 1e-5, "worst relative Frobenius error " + sci(worst) + " over 10 instances (tol 1e-5)"};
    }

    Outcome fixed_point_recovery()
    {
        Rng rng = make_stream(3, StreamTag::test);
        FitSetup s = fit_setup(0.01); // unit mean channel entry power, 20 dB
        arma::mat omega(4, 8, arma::fill::zeros);
        omega(0, 1) = 3.0;
        omega(1, 5) = 2.0;
        omega(2, 6) = 1.5;
        omega(3, 2) = 1.0;
        omega *= 8.0 / arma::accu(omega);
        auto power = ChannelPowerMatrix::from_omega(omega);

        std::vector<arma::cx_mat> ys;
        for (int t = 0; t < 1000; ++t)
        {
            arma::cx_mat h = assemble_h(sample_beam_channel(power, rng).g_tilde, s.steering);
            std::vector<arma::cx_mat> hs{h}, xs{s.pilot.x};
            ys.push_back(received_pilots(hs, xs, s.pilot.noise_var, rng));
        }
        PhiMatrix phi = compute_phi(ys, s.pilot, s.steering);
        FitResult fit = fixed_point_fit(phi, s.transforms, initial_factor(phi, s.transforms), FitOptions{200000, 1e-14});
        const arma::mat &est = fit.power.omega;
        double nmse = arma::accu(arma::square(est - omega)) / arma::accu(arma::square(omega));

        arma::mat qt = q_term(fit.power.m_factor, phi, s.transforms);
        const arma::mat &jt = s.transforms.j_term;
        double resid = 0.0;
        arma::uword positive = 0;
        for (arma::uword i = 0; i < est.n_elem; ++i)
            if (est(i) > 1e-6 * est.max())
            {
                ++positive;
                resid = std::max(resid, std::abs(qt(i) - jt(i)) / jt(i));
            }
        return {nmse < 0.2 && resid < 1e-6,
                "NMSE " + sci(nmse) + " (tol 0.2), stationarity residual " + sci(resid) + " on " + std::to_string(positive) +
                    " positive entries (tol 1e-6), " + std::to_string(fit.iterations) + " iterations"};
    }

    // ------------------------------------------------------------------ 4

    Outcome unitary_reduction()
    {
        Rng rng = make_stream(4, StreamTag::test);
        ArrayGeometry g{2, 4, 2};
        SamplingGrid grid = build_grids(g, FineFactors{1.0, 1.0, 1.0});
        SteeringMatrices st = build_steering_matrices(g, grid);
        PilotConfig pilot{orthogonal_pilots(1, 2, 2)[0], 0.0};
        arma::mat omega = oracle::random_positive(2, 8, rng);
        auto power = ChannelPowerMatrix::from_omega(omega);
        std::vector<arma::cx_mat> ys;
        for (int t = 0; t < 1000; ++t)
        {
            std::vector<arma::cx_mat> hs{assemble_h(sample_beam_channel(power, rng).g_tilde, st)}, xs{pilot.x};
            ys.push_back(received_pilots(hs, xs, 0.0, rng));
        }
        PhiMatrix phi = compute_phi(ys, pilot, st);
        double err = oracle::rel_fro(phi.phi, omega);
        TransformSet ts = build_transforms(pilot, st);
        double t_id = arma::norm(ts.t_kr - arma::eye(2, 2), "fro") + arma::norm(ts.t_t - arma::eye(8, 8), "fro");
        return {err < 0.05 && t_id < 1e-12,
                "relative Frobenius |Phi - Omega| " + sci(err) + " (tol 0.05), |T - I| " + sci(t_id)};
    }

    // ------------------------------------------------------------------ 5

    Outcome mmse_estimator()
    {
        Rng rng = make_stream(5, StreamTag::test);
        FitSetup s = fit_setup(0.1);
        arma::mat omega = oracle::random_sparse(4, 8, 0.5, rng);
        omega *= 8.0 / arma::accu(omega);
        auto power = ChannelPowerMatrix::from_omega(omega);

        arma::cx_mat h = assemble_h(sample_beam_channel(power, rng).g_tilde, s.steering);
        std::vector<arma::cx_mat> hs{h}, xs{s.pilot.x};
        arma::cx_mat y = received_pilots(hs, xs, s.pilot.noise_var, rng);
        double oracle_err = oracle::rel_fro(mmse_beam_estimate(y, s.pilot, s.steering, power).g_tilde,
                                            oracle::lmmse_bruteforce(y, s.pilot.x, s.pilot.noise_var, s.steering, omega));

        // Common draws across SNR: G and unit noise are reused, only the noise scale changes
        std::vector<double> nmse;
        const int n = 300;
        std::vector<arma::cx_mat> gs, zs;
        for (int t = 0; t < n; ++t)
        {
            gs.push_back(sample_beam_channel(power, rng).g_tilde);
            zs.push_back(complex_gaussian(4, 2, rng));
        }
        for (double snr : {0.0, 10.0, 20.0})
        {
            PilotConfig p = s.pilot;
            p.noise_var = std::pow(10.0, -snr / 10.0);
            double num = 0.0, den = 0.0;
            for (int t = 0; t < n; ++t)
            {
                arma::cx_mat yy = (assemble_h(gs[t], s.steering)).st() * p.x + std::sqrt(p.noise_var) * zs[t];
                arma::cx_mat est = mmse_beam_estimate(yy, p, s.steering, power).g_tilde;
                num += std::pow(arma::norm(est - gs[t], "fro"), 2);
                den += std::pow(arma::norm(gs[t], "fro"), 2);
            }
            nmse.push_back(num / den);
        }
        bool mono = nmse[0] > nmse[1] && nmse[1] > nmse[2];
        return {oracle_err < 1e-8 && mono,
                "oracle rel err " + sci(oracle_err) + " (tol 1e-8), NMSE at 0/10/20 dB " + sci(nmse[0]) + "/" + sci(nmse[1]) + "/" +
                    sci(nmse[2])};
    }

    // ------------------------------------------------------------------ 6

    Outcome covariance_functionals()
    {
        Rng rng = make_stream(6, StreamTag::test);
        PosteriorChannel m = oracle::random_posterior(ArrayGeometry{2, 2, 2}, FineFactors{2.0, 2.0, 2.0}, 0.6, rng);
        arma::cx_mat ct = oracle::random_cx(4, 4, rng), cr = oracle::random_cx(2, 2, rng);
        ct = ct * ct.t();
        cr = cr * cr.t();
        arma::cx_mat outer(2, 2, arma::fill::zeros), inner(4, 4, arma::fill::zeros);
        const int n = 100000;
        for (int s = 0; s < n; ++s)
        {
            arma::cx_mat hr = sample_posterior(m, rng) - m.h_bar;
            outer += hr * ct * hr.t();
            inner += hr.t() * cr * hr;
        }
        double e1 = oracle::rel_fro(eta(m, ct), arma::cx_mat(outer / double(n)));
        double e2 = oracle::rel_fro(eta_tilde(m, cr), arma::cx_mat(inner / double(n)));
        return {e1 < 0.05 && e2 < 0.05, "eta rel err " + sci(e1) + ", eta~ rel err " + sci(e2) + " (tol 0.05)"};
    }

    // ------------------------------------------------------------------ 7

    Outcome bound_gradient_fd()
    {
        Rng rng = make_stream(7, StreamTag::test);
        LinkModel link;
        link.noise_var = 0.2;
        link.weights = {1.0, 0.6, 1.4};
        for (int k = 0; k < 3; ++k)
            link.users.push_back(oracle::random_posterior(ArrayGeometry{2, 2, 2}, FineFactors{2.0, 2.0, 1.0}, 0.6, rng));
        PrecoderSet p = oracle::random_precoders(3, 4, 2, rng);

        std::vector<GradientMatrices> grads;
        std::vector<arma::cx_mat> e;
        for (arma::uword k = 0; k < 3; ++k)
        {
            grads.push_back(grad_matrices_closed(k, p, link));
            e.push_back(grads.back().e);
        }
        auto b = interference_penalties(grads, link);
        double worst = 0.0;
        for (arma::uword j = 0; j < 3; ++j)
        {
            auto f = [&](const arma::cx_mat &pj) {
                PrecoderSet x = p;
                x.p[j] = pj;
                return weighted_upper_bound(x, link);
            };
            worst = std::max(worst, oracle::rel_fro(arma::cx_mat((e[j] - b[j]) * p.p[j]), oracle::wirtinger_fd(f, p.p[j], 1e-6)));
        }
        // mu is half the radial derivative of the objective
        auto radial = [&](double t) {
            PrecoderSet x = p;
            for (auto &pk : x.p)
                pk *= (1.0 + t);
            return weighted_upper_bound(x, link);
        };
        double mu_fd = 0.5 * (radial(1e-6) - radial(-1e-6)) / 2e-6;
        StepInfo info;
        algorithm2_step(p, link, &info);
        double mu_err = std::abs(info.mu - mu_fd) / std::abs(mu_fd);
        return {worst < 1e-5 && mu_err < 1e-5, "gradient rel err " + sci(worst) + ", mu rel err " + sci(mu_err) + " (tol 1e-5)"};
    }

    // ------------------------------------------------------------------ 8

    Outcome manifold_machinery()
    {
        Rng rng = make_stream(8, StreamTag::test);
        LinkModel link;
        link.noise_var = 0.1;
        for (int k = 0; k < 3; ++k)
            link.users.push_back(oracle::random_posterior(ArrayGeometry{2, 2, 2}, FineFactors{2.0, 2.0, 1.0}, 0.7, rng));
        PrecoderSet p = oracle::random_precoders(3, 4, 2, rng);
        std::vector<GradientMatrices> grads;
        std::vector<arma::cx_mat> e;
        for (arma::uword k = 0; k < 3; ++k)
        {
            grads.push_back(grad_matrices_closed(k, p, link));
            e.push_back(grads.back().e);
        }
        RiemannianGradient rg = riemannian_grad(p, e, interference_penalties(grads, link));
        double tangency = 0.0;
        for (arma::uword k = 0; k < 3; ++k)
            tangency += std::real(arma::cdot(arma::vectorise(p.p[k]), arma::vectorise(rg.grad[k])));
        tangency = std::abs(tangency);

        Rng r1 = make_stream(81, StreamTag::test);
        double pw2 = std::abs(algorithm2_step(p, link).power() - 1.0);
        double pw1 = std::abs(algorithm1_step(p, link, 100, r1).power() - 1.0);

        auto change = [](const PrecoderSet &a, const PrecoderSet &b) {
            double m = 0.0;
            for (arma::uword k = 0; k < a.users(); ++k)
                m = std::max(m, arma::abs(a.p[k] - b.p[k]).max());
            return m;
        };
        auto wf = oracle::orthogonal_water_filling({2.0, 1.0, 0.5}, {1.0, 1.5, 0.8}, 0.1, 4);
        Rng r2 = make_stream(82, StreamTag::test);
        double fix2 = change(algorithm2_step(wf.precoders, wf.link), wf.precoders);
        double fix1 = change(algorithm1_step(wf.precoders, wf.link, 50, r2), wf.precoders);

        // One user under uncertainty: the dominant eigenvector of E{H^H H}
        LinkModel single;
        single.noise_var = 0.5;
        single.users.push_back(oracle::random_posterior(ArrayGeometry{2, 2, 1}, FineFactors{1.0, 2.0, 2.0}, 0.5, rng));
        arma::vec ev;
        arma::cx_mat q;
        arma::eig_sym(ev, q, expected_inner(single.users[0], arma::eye<arma::cx_mat>(1, 1)));
        PrecoderSet eig{{arma::cx_mat(q.col(q.n_cols - 1))}};
        double fix_eig = change(algorithm2_step(eig, single), eig);

        bool ok = tangency < 1e-10 && pw1 < 1e-10 && pw2 < 1e-10 && fix1 < 1e-8 && fix2 < 1e-8 && fix_eig < 1e-8;
        return {ok, "tangency " + sci(tangency) + ", power dev " + sci(std::max(pw1, pw2)) + ", fixed-point moves " + sci(fix1) +
                        "/" + sci(fix2) + "/" + sci(fix_eig)};
    }

    // ------------------------------------------------------------------ 9

    Outcome wmmse_equivalence()
    {
        Rng rng = make_stream(9, StreamTag::test);
        const arma::uword m_t = 8, m_k = 2;
        ArrayGeometry g{2, 4, m_k};
        auto steering = oracle::steering_for(g, FineFactors{1.0, 1.0, 1.0});
        LinkModel link;
        link.noise_var = 0.1;
        std::vector<arma::cx_mat> h;
        for (int k = 0; k < 3; ++k)
        {
            h.push_back(oracle::random_cx(m_k, m_t, rng));
            link.users.push_back(posterior_from_channel(h.back(), 1.0, ChannelPowerMatrix::from_omega(arma::zeros(m_k, m_t)), steering));
        }
        PrecoderSet p0 = oracle::random_precoders(3, m_t, m_k, rng);

        PrecoderSet p = p0;
        for (int it = 0; it < 50; ++it)
            p = algorithm2_step(p, link);
        double r_alg2 = weighted_upper_bound(p, link);
        WmmseResult w = wmmse_solve(p0, h, link.noise_var, {}, 50);
        double r_wmmse = weighted_upper_bound(w.precoders, link);
        double rel = std::abs(r_alg2 - r_wmmse) / std::abs(r_wmmse);
        double self = std::abs(w.weighted_rate.back() - r_wmmse) / r_wmmse;
        return {rel < 1e-6 && self < 1e-10, "sum-rates " + fmt("%.10f", r_alg2 / std::log(2.0)) + " vs " +
                                                fmt("%.10f", r_wmmse / std::log(2.0)) + " bits, rel diff " + sci(rel) + " (tol 1e-6)"};
    }

    // ------------------------------------------------------------------ 10

    Outcome ordering_vs_baselines()
    {
        ScenarioConfig c = desk_config();
        c.methods = {"rzf", "slnr", "algorithm2"};
        RunReport r = sweep(c, SweepAxis::beta, {0.95, 0.7, 0.4});
        bool ok = true;
        std::ostringstream d;
        std::vector<double> adv;
        for (double beta : {0.95, 0.7, 0.4})
        {
            const auto &a2 = cell(r, "algorithm2", 20.0, beta, 2.0);
            const auto &rzf = cell(r, "rzf", 20.0, beta, 2.0);
            const auto &slnr = cell(r, "slnr", 20.0, beta, 2.0);
            double zr = (a2.sum_rate - rzf.sum_rate) / combined_error(a2, rzf);
            double zs = (a2.sum_rate - slnr.sum_rate) / combined_error(a2, slnr);
            RateEstimate dr = paired_difference(a2, rzf);
            ok = ok && zr > 3.0 && zs > 3.0;
            adv.push_back(a2.sum_rate / rzf.sum_rate - 1.0);
            d << "beta " << beta << ": alg2 " << fmt("%.3f", a2.sum_rate) << " rzf " << fmt("%.3f", rzf.sum_rate) << " slnr "
              << fmt("%.3f", slnr.sum_rate) << " (z " << fmt("%.1f", zr) << "/" << fmt("%.1f", zs) << ", paired z vs rzf "
              << fmt("%.1f", dr.mean / dr.std_error) << ", adv " << fmt("%.3f", adv.back())
              << "); ";
        }
        ok = ok && adv[0] < adv[1] && adv[1] < adv[2];
        return {ok, d.str()};
    }

    // ------------------------------------------------------------------ 11

    Outcome fine_factor_ordering()
    {
        ScenarioConfig c = desk_config();
        c.methods = {"algorithm2"};
        c.snr_db = {20.0, 30.0};
        RunReport r = sweep(c, SweepAxis::fine_factor, {1.0, 2.0, 4.0});
        bool ok = true;
        std::ostringstream d;
        for (double snr : {20.0, 30.0})
        {
            const auto &f1 = cell(r, "algorithm2", snr, 0.7, 1.0);
            const auto &f2 = cell(r, "algorithm2", snr, 0.7, 2.0);
            const auto &f4 = cell(r, "algorithm2", snr, 0.7, 4.0);
            double z = (f2.sum_rate - f1.sum_rate) / combined_error(f2, f1);
            double rel4 = std::abs(f4.sum_rate - f2.sum_rate) / f2.sum_rate;
            ok = ok && z > 3.0 && rel4 < 0.05;
            d << snr << " dB: F1 " << fmt("%.3f", f1.sum_rate) << " F2 " << fmt("%.3f", f2.sum_rate) << " F4 " << fmt("%.3f", f4.sum_rate)
              << " (z " << fmt("%.1f", z) << ", |F4-F2|/F2 " << fmt("%.3f", rel4) << "); ";
        }
        return {ok, d.str()};
    }

    // ------------------------------------------------------------------ 12

    Outcome convergence_traces()
    {
        ScenarioConfig c = desk_config();
        c.methods = {"algorithm2"};
        c.snr_db = {0.0, 20.0};
        c.solver.max_iters = 1000;
        RunReport r = run_scenario(c);
        const auto &lo = cell(r, "algorithm2", 0.0, 0.7, 2.0);
        const auto &hi = cell(r, "algorithm2", 20.0, 0.7, 2.0);
        bool shape = true;
        arma::uword capped = 0;
        for (const auto &t : r.traces)
        {
            for (std::size_t i = 1; i < t.objective.size(); ++i)
                shape = shape && t.objective[i] >= t.objective[i - 1] - 1e-9 * std::abs(t.objective[i - 1]);
            shape = shape && t.objective.back() >= t.objective.front();
            if (t.termination != "tolerance")
                ++capped;
        }
        bool ok = lo.iterations < hi.iterations && shape;
        return {ok, "mean iterations to tolerance " + fmt("%.1f", lo.iterations) + " at 0 dB vs " + fmt("%.1f", hi.iterations) +
                        " at 20 dB; traces nondecreasing " + (shape ? "yes" : "no") + ", runs hitting the cap " + std::to_string(capped)};
    }

    // ------------------------------------------------------------------ 13

    Outcome algorithm1_vs_algorithm2()
    {
        ScenarioConfig c = desk_config();
        c.methods = {"algorithm1", "algorithm2"};
        RunReport r = run_scenario(c);
        const auto &a1 = cell(r, "algorithm1", 20.0, 0.7, 2.0);
        const auto &a2 = cell(r, "algorithm2", 20.0, 0.7, 2.0);
        double diff = std::abs(a1.sum_rate - a2.sum_rate);
        double se = combined_error(a1, a2);
        RateEstimate paired = paired_difference(a1, a2);
        return {diff < 3.0 * se, "alg1 " + fmt("%.4f", a1.sum_rate) + " +- " + fmt("%.4f", a1.std_error) + ", alg2 " +
                                     fmt("%.4f", a2.sum_rate) + " +- " + fmt("%.4f", a2.std_error) + ", |diff| " + fmt("%.4f", diff) +
                                     " (3 SE of the difference = " + fmt("%.4f", 3.0 * se) + "; paired diff " + fmt("%.4f", paired.mean) + " +- " +
                                     fmt("%.4f", paired.std_error) + ")"};
    }

    struct Criterion
    {
        int id;
        const char *name;
        double budget_s;
        std::function<Outcome()> run;
    };
}

int main(int argc, char **argv)
{
    const std::vector<Criterion> all = {
        {1, "second-moment transform vs Monte Carlo", 10, second_moment_mc},
        {2, "KL gradient vs finite differences", 5, kl_gradient_fd},
        {3, "fixed-point recovery of a sparse power matrix", 60, fixed_point_recovery},
        {4, "unitary grid reduces Phi to Omega", 30, unitary_reduction},
        {5, "MMSE estimate vs joint-Gaussian oracle", 30, mmse_estimator},
        {6, "eta / eta~ vs Monte Carlo", 30, covariance_functionals},
        {7, "upper-bound gradient vs finite differences", 10, bound_gradient_fd},
        {8, "sphere manifold machinery and fixed points", 10, manifold_machinery},
        {9, "perfect-CSI equivalence with WMMSE", 60, wmmse_equivalence},
        {10, "robust precoder beats RZF/SLNR, gain grows with aging", 600, ordering_vs_baselines},
        {11, "fine factor 2 beats 1, 4 adds little", 600, fine_factor_ordering},
        {12, "faster convergence at low SNR, monotone traces", 300, convergence_traces},
        {13, "Monte-Carlo and closed-form designs agree", 900, algorithm1_vs_algorithm2},
    };

    std::vector<int> selected;
    for (int i = 1; i < argc; ++i)
        selected.push_back(std::atoi(argv[i]));

    int failures = 0;
    for (const auto &c : all)
    {
        if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end())
            continue;
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try
        {
            o = c.run();
        }
        catch (const std::exception &e)
        {
            o = {false, std::string("exception: ") + e.what()};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        bool in_time = secs < c.budget_s;
        bool pass = o.pass && in_time;
        if (!pass)
            ++failures;
        std::printf("%s [%2d] %s: %s [%.1f s, budget %.0f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs,
                    c.budget_s, in_time ? "" : ", over budget");
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
