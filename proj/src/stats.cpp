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

#include "robust_mimo/stats.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace robust_mimo
{
    std::vector<arma::cx_mat> orthogonal_pilots(arma::uword n_users, arma::uword m_k, arma::uword length)
    {
        if (n_users < 1 || m_k < 1)
            throw std::invalid_argument("orthogonal_pilots: need at least one user and one antenna");
        if (length < n_users * m_k)
            throw std::invalid_argument("orthogonal_pilots: pilot length must be at least n_users * m_k");

        constexpr double two_pi = 6.283185307179586476925286766559;
        double scale = 1.0 / std::sqrt(double(length));
        arma::cx_mat dft(length, length);
        for (arma::uword r = 0; r < length; ++r)
            for (arma::uword c = 0; c < length; ++c)
                dft(r, c) = std::polar(scale, -two_pi * double((r * c) % length) / double(length));

        std::vector<arma::cx_mat> x(n_users);
        for (arma::uword k = 0; k < n_users; ++k)
            x[k] = dft.rows(k * m_k, k * m_k + m_k - 1);
        return x;
    }

    arma::cx_mat received_pilots(std::span<const arma::cx_mat> channels, std::span<const arma::cx_mat> pilots,
                                 double noise_var, Rng &rng)
    {
        if (channels.size() != pilots.size() || channels.empty())
            throw std::invalid_argument("received_pilots: need one pilot per channel");
        arma::uword m_t = channels[0].n_cols, t = pilots[0].n_cols;
        arma::cx_mat y(m_t, t, arma::fill::zeros);
        for (std::size_t k = 0; k < channels.size(); ++k)
        {
            if (channels[k].n_cols != m_t || pilots[k].n_cols != t || channels[k].n_rows != pilots[k].n_rows)
                throw std::invalid_argument("received_pilots: dimension mismatch");
            y += channels[k].st() * pilots[k];
        }
        if (noise_var > 0.0)
            y += std::sqrt(noise_var) * complex_gaussian(m_t, t, rng);
        return y;
    }

    PhiMatrix compute_phi(std::span<const arma::cx_mat> received, const PilotConfig &pilot, const SteeringMatrices &steering)
    {
        if (received.empty())
            throw std::invalid_argument("compute_phi: no received pilot slots");
        const arma::cx_mat left = steering.u_mat.t() * arma::conj(pilot.x); // U^H X^*
        PhiMatrix out;
        out.phi.zeros(steering.u_mat.n_cols, steering.v_mat.n_cols);
        for (const auto &y : received)
        {
            if (y.n_rows != steering.v_mat.n_rows || y.n_cols != pilot.x.n_cols)
                throw std::invalid_argument("compute_phi: received block has wrong dimensions");
            out.phi += abs2(left * y.st() * steering.v_mat);
        }
        out.slots = received.size();
        out.phi /= double(out.slots);
        return out;
    }

    TransformSet build_transforms(const PilotConfig &pilot, const SteeringMatrices &steering)
    {
        if (pilot.x.n_rows != steering.u_mat.n_rows)
            throw std::invalid_argument("build_transforms: pilot rows must equal the user antenna count");
        if (!(pilot.noise_var >= 0.0))
            throw std::invalid_argument("build_transforms: noise variance must be nonnegative");

        const arma::cx_mat &U = steering.u_mat;
        const arma::cx_mat &V = steering.v_mat;
        const arma::cx_mat ux = U.t() * arma::conj(pilot.x); // U^H X^*

        TransformSet t;
        t.t_kr = abs2(ux * pilot.x.st() * U);
        t.t_t = abs2(V.t() * V);
        t.o_kr = abs2(ux);
        t.n_mat = arma::mat(pilot.x.n_cols, V.n_rows).fill(pilot.noise_var);
        t.o_t = abs2(V);
        t.noise_term = t.o_kr * t.n_mat * t.o_t;
        arma::mat j_ones(V.n_cols, U.n_cols, arma::fill::ones);
        t.j_term = (t.t_t * j_ones * t.t_kr).t();
        return t;
    }

    arma::mat second_moment_transform(const arma::mat &omega, const arma::cx_mat &c1, const arma::cx_mat &c2)
    {
        if (c1.n_cols != omega.n_rows || c2.n_cols != omega.n_cols)
            throw std::invalid_argument("second_moment_transform: dimension mismatch");
        // C2^H ⊙ C2^T = |C2^H|^2
        return abs2(c1) * omega * abs2(c2).t();
    }

    arma::mat model_moment(const arma::mat &m_factor, const TransformSet &transforms)
    {
        if (m_factor.n_rows != transforms.t_kr.n_rows || m_factor.n_cols != transforms.t_t.n_rows)
            throw std::invalid_argument("model_moment: factor does not match transforms");
        return transforms.t_kr * (m_factor % m_factor) * transforms.t_t + transforms.noise_term;
    }

    namespace
    {
        void check_phi(const PhiMatrix &phi, const TransformSet &transforms)
        {
            if (phi.phi.n_rows != transforms.t_kr.n_rows || phi.phi.n_cols != transforms.t_t.n_rows)
                throw std::invalid_argument("Phi does not match transforms");
            if (!phi.phi.is_finite() || (phi.phi.n_elem > 0 && phi.phi.min() < 0.0))
                throw std::invalid_argument("Phi must be finite and nonnegative");
        }

        arma::mat ratio_q(const arma::mat &model, const arma::mat &phi)
        {
            arma::mat q(arma::size(phi), arma::fill::zeros);
            for (arma::uword i = 0; i < phi.n_elem; ++i)
            {
                if (phi(i) > 0.0)
                {
                    if (!(model(i) > 0.0))
                        throw std::domain_error("KL objective: model entry is non-positive where Phi is positive");
                    q(i) = phi(i) / model(i);
                }
            }
            return q;
        }
    }

    double kl_objective(const arma::mat &m_factor, const PhiMatrix &phi, const TransformSet &transforms)
    {
        check_phi(phi, transforms);
        arma::mat model = model_moment(m_factor, transforms);
        double log_term = 0.0;
        for (arma::uword i = 0; i < model.n_elem; ++i)
        {
            if (phi.phi(i) > 0.0)
            {
                if (!(model(i) > 0.0))
                    throw std::domain_error("kl_objective: model entry is non-positive where Phi is positive");
                log_term += phi.phi(i) * std::log(model(i));
            }
        }
        return -log_term + arma::accu(model - transforms.noise_term);
    }

    double kl_divergence(const arma::mat &m_factor, const PhiMatrix &phi, const TransformSet &transforms)
    {
        check_phi(phi, transforms);
        arma::mat model = model_moment(m_factor, transforms);
        double f = 0.0;
        for (arma::uword i = 0; i < model.n_elem; ++i)
        {
            if (phi.phi(i) > 0.0)
            {
                if (!(model(i) > 0.0))
                    throw std::domain_error("kl_divergence: model entry is non-positive where Phi is positive");
                f += phi.phi(i) * std::log(phi.phi(i) / model(i));
            }
            f += model(i) - phi.phi(i);
        }
        return f;
    }

    arma::mat q_term(const arma::mat &m_factor, const PhiMatrix &phi, const TransformSet &transforms)
    {
        check_phi(phi, transforms);
        arma::mat q = ratio_q(model_moment(m_factor, transforms), phi.phi);
        return (transforms.t_t * q.t() * transforms.t_kr).t();
    }

    arma::mat kl_gradient(const arma::mat &m_factor, const PhiMatrix &phi, const TransformSet &transforms)
    {
        return 2.0 * (transforms.j_term - q_term(m_factor, phi, transforms)) % m_factor;
    }

    arma::mat initial_factor(const PhiMatrix &phi, const TransformSet &transforms)
    {
        check_phi(phi, transforms);
        arma::mat ones(arma::size(phi.phi), arma::fill::ones);
        double unit = arma::accu(transforms.t_kr * ones * transforms.t_t);
        double target = arma::accu(phi.phi) - arma::accu(transforms.noise_term);
        double floor = 1e-6 * std::max(arma::accu(phi.phi), std::numeric_limits<double>::min());
        double c2 = std::max(target, floor) / unit;
        return ones * std::sqrt(std::max(c2, std::numeric_limits<double>::min()));
    }

    FitResult fixed_point_fit(const PhiMatrix &phi, const TransformSet &transforms, const arma::mat &m_init,
                              const FitOptions &options)
    {
        check_phi(phi, transforms);
        if (m_init.n_rows != phi.phi.n_rows || m_init.n_cols != phi.phi.n_cols)
            throw std::invalid_argument("fixed_point_fit: initial factor has wrong dimensions");
        if (!m_init.is_finite() || m_init.min() < 0.0)
            throw std::invalid_argument("fixed_point_fit: initial factor must be finite and nonnegative");

        FitResult res;
        arma::mat m = m_init;
        const arma::mat &jt = transforms.j_term;
        arma::umat frozen = (jt <= 0.0);
        res.frozen_entries = arma::accu(frozen);

        res.g_trace.push_back(kl_objective(m, phi, transforms));
        for (arma::uword it = 0; it < options.max_iters; ++it)
        {
            arma::mat qt = q_term(m, phi, transforms);
            arma::mat next = m;
            for (arma::uword i = 0; i < m.n_elem; ++i)
            {
                if (frozen(i))
                    continue;
                next(i) = m(i) * (qt(i) + jt(i)) / (2.0 * jt(i));
            }
            if (!next.is_finite())
                throw std::runtime_error("fixed_point_fit: non-finite value in the multiplicative update at iteration " +
                                         std::to_string(it));

            double scale = std::max(next.max(), std::numeric_limits<double>::min());
            double change = arma::abs(next - m).max() / scale;
            m = std::move(next);
            res.iterations = it + 1;
            res.g_trace.push_back(kl_objective(m, phi, transforms));
            if (change < options.tol)
            {
                res.converged = true;
                break;
            }
        }
        if (!res.converged)
            res.warning = "fixed_point_fit: stopped at max_iters before reaching tolerance";
        res.power = ChannelPowerMatrix::from_factor(m);
        return res;
    }

    BeamDomainChannel mmse_beam_estimate(const arma::cx_mat &y, const PilotConfig &pilot, const SteeringMatrices &steering,
                                         const ChannelPowerMatrix &power)
    {
        const arma::cx_mat &U = steering.u_mat;
        const arma::cx_mat &V = steering.v_mat;
        if (y.n_rows != V.n_rows || y.n_cols != pilot.x.n_cols)
            throw std::invalid_argument("mmse_beam_estimate: received block has wrong dimensions");
        if (power.omega.n_rows != U.n_cols || power.omega.n_cols != V.n_cols)
            throw std::invalid_argument("mmse_beam_estimate: power matrix does not match the grid");

        // vec(Y^T) = (V^* ⊗ X^T U) vec(G) + vec(Z^T)
        arma::cx_mat a = arma::kron(arma::conj(V), pilot.x.st() * U);
        arma::vec r = arma::vectorise(power.omega);
        arma::cx_mat ar = a.each_row() % arma::conv_to<arma::cx_rowvec>::from(r.t());
        arma::cx_mat inner = hermitian_part(ar * a.t());
        inner.diag() += pilot.noise_var;
        arma::cx_vec yv = arma::vectorise(arma::cx_mat(y.st()));

        arma::cx_vec z;
        bool ok = arma::solve(z, inner, yv, arma::solve_opts::no_approx);
        if (!ok || (pilot.noise_var == 0.0 && arma::rcond(inner) < 1e-13))
            throw std::runtime_error("mmse_beam_estimate: singular system with zero noise variance; add a ridge (noise_var > 0)");

        arma::cx_vec g = ar.t() * z; // R A^H z, R real diagonal
        BeamDomainChannel out;
        out.g_tilde = arma::reshape(g, U.n_cols, V.n_cols);
        for (arma::uword i = 0; i < out.g_tilde.n_elem; ++i)
            if (power.omega(i) == 0.0)
                out.g_tilde(i) = 0.0;
        return out;
    }

    void write_omega(const std::string &path, const ChannelPowerMatrix &power, const SamplingGrid &grid)
    {
        if (power.omega.n_rows != grid.n_k || power.omega.n_cols != grid.n_t())
            throw std::invalid_argument("write_omega: power matrix does not match the grid");
        std::ofstream out(path);
        if (!out)
            throw std::runtime_error("write_omega: cannot open " + path);
        out << "# robust_mimo omega v1\n";
        out << "# n_k=" << grid.n_k << " n_z=" << grid.n_z << " n_x=" << grid.n_x << std::setprecision(17)
            << " f_k=" << grid.f_k << " f_z=" << grid.f_z << " f_x=" << grid.f_x << " ordering=z_major\n";
        for (arma::uword i = 0; i < power.omega.n_rows; ++i)
        {
            for (arma::uword c = 0; c < power.omega.n_cols; ++c)
                out << (c ? "," : "") << power.omega(i, c);
            out << '\n';
        }
        if (!out)
            throw std::runtime_error("write_omega: write failed for " + path);
    }

    OmegaFile read_omega(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw std::runtime_error("read_omega: cannot open " + path);
        std::string line;
        std::getline(in, line);
        if (line != "# robust_mimo omega v1")
            throw std::runtime_error("read_omega: " + path + " is not an omega v1 file");
        std::getline(in, line);
        if (line.rfind("# ", 0) != 0)
            throw std::runtime_error("read_omega: missing metadata line in " + path);

        OmegaFile f;
        std::istringstream meta(line.substr(2));
        std::string kv;
        while (meta >> kv)
        {
            auto eq = kv.find('=');
            if (eq == std::string::npos)
                continue;
            std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
            if (key == "n_k") f.n_k = std::stoull(val);
            else if (key == "n_z") f.n_z = std::stoull(val);
            else if (key == "n_x") f.n_x = std::stoull(val);
            else if (key == "f_k") f.f_k = std::stod(val);
            else if (key == "f_z") f.f_z = std::stod(val);
            else if (key == "f_x") f.f_x = std::stod(val);
            else if (key == "ordering" && val != "z_major")
                throw std::runtime_error("read_omega: unsupported column ordering " + val);
        }
        arma::mat omega(f.n_k, f.n_z * f.n_x);
        for (arma::uword i = 0; i < f.n_k; ++i)
        {
            if (!std::getline(in, line))
                throw std::runtime_error("read_omega: truncated file " + path);
            std::istringstream row(line);
            std::string cell;
            for (arma::uword c = 0; c < omega.n_cols; ++c)
            {
                if (!std::getline(row, cell, ','))
                    throw std::runtime_error("read_omega: short row in " + path);
                omega(i, c) = std::stod(cell);
            }
        }
        f.power = ChannelPowerMatrix::from_omega(omega);
        return f;
    }
}
