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

#include "robust_mimo/harness.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace robust_mimo
{
    using nlohmann::json;

    const char *const csv_header = "schema_version,method,axis,snr_db,speed_kmh,beta,fine_factor,sum_rate_bits,"
                                   "std_error_bits,fit_nmse,iterations,n_samples,status";

    namespace
    {
        std::string fmt(double x)
        {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.12g", x);
            return buf;
        }

        // Value as it appears after a 12-significant-digit round trip
        double round12(double x) { return std::strtod(fmt(x).c_str(), nullptr); }

        std::string slurp(const std::string &path)
        {
            std::ifstream in(path, std::ios::binary);
            if (!in)
                throw std::runtime_error("cannot open '" + path + "' for reading");
            std::stringstream ss;
            ss << in.rdbuf();
            return ss.str();
        }

        void write_file(const std::string &path, const std::string &text)
        {
            std::ofstream out(path, std::ios::binary);
            if (!out)
                throw std::runtime_error("cannot open '" + path + "' for writing");
            out << text;
            out.flush();
            if (!out)
                throw std::runtime_error("write to '" + path + "' failed");
        }

        std::vector<std::string> split(const std::string &line, char sep)
        {
            std::vector<std::string> out;
            std::string field;
            std::istringstream ss(line);
            while (std::getline(ss, field, sep))
                out.push_back(field);
            if (!line.empty() && line.back() == sep)
                out.emplace_back();
            return out;
        }

        double parse_double(const std::string &s, const std::string &what)
        {
            std::size_t pos = 0;
            double v = 0.0;
            try
            {
                v = std::stod(s, &pos);
            }
            catch (const std::exception &)
            {
                throw std::invalid_argument("report: cannot parse " + what + " '" + s + "'");
            }
            if (pos != s.size())
                throw std::invalid_argument("report: trailing characters in " + what + " '" + s + "'");
            return v;
        }

        json matrix_to_json(const arma::cx_mat &m)
        {
            std::vector<double> re(m.n_elem), im(m.n_elem);
            for (arma::uword i = 0; i < m.n_elem; ++i)
            {
                re[i] = m(i).real();
                im[i] = m(i).imag();
            }
            return {{"rows", m.n_rows}, {"cols", m.n_cols}, {"re", re}, {"im", im}};
        }

        arma::cx_mat matrix_from_json(const json &j, arma::uword rows, arma::uword cols, const std::string &what)
        {
            auto re = j.at("re").get<std::vector<double>>();
            auto im = j.at("im").get<std::vector<double>>();
            if (j.contains("rows"))
                rows = j["rows"].get<arma::uword>();
            if (j.contains("cols"))
                cols = j["cols"].get<arma::uword>();
            if (re.size() != rows * cols || im.size() != rows * cols)
                throw std::invalid_argument(what + ": expected " + std::to_string(rows * cols) + " entries");
            arma::cx_mat m(rows, cols);
            for (arma::uword i = 0; i < m.n_elem; ++i)
                m(i) = cx(re[i], im[i]);
            return m;
        }
    }

    std::string report_to_csv(const RunReport &report)
    {
        std::string out = std::string(csv_header) + "\n";
        for (const auto &c : report.cells)
        {
            out += std::to_string(report.schema_version) + "," + c.method + "," + c.axis + "," + fmt(c.snr_db) + "," +
                   (c.speed_kmh ? fmt(*c.speed_kmh) : std::string()) + "," + fmt(c.beta) + "," + fmt(c.fine_factor) + "," +
                   fmt(c.sum_rate) + "," + fmt(c.std_error) + "," + fmt(c.fit_nmse) + "," + fmt(c.iterations) + "," +
                   std::to_string(c.n_samples) + "," + c.status + "\n";
        }
        return out;
    }

    RunReport report_from_csv(const std::string &text)
    {
        std::istringstream in(text);
        std::string line;
        if (!std::getline(in, line) || line != csv_header)
            throw std::invalid_argument("report: CSV header does not match the schema");
        RunReport rep;
        arma::uword line_no = 1;
        while (std::getline(in, line))
        {
            ++line_no;
            if (line.empty())
                continue;
            auto f = split(line, ',');
            if (f.size() != 13)
                throw std::invalid_argument("report: CSV line " + std::to_string(line_no) + " has " + std::to_string(f.size()) +
                                            " fields, expected 13");
            rep.schema_version = int(parse_double(f[0], "schema_version"));
            CellResult c;
            c.method = f[1];
            c.axis = f[2];
            c.snr_db = parse_double(f[3], "snr_db");
            if (!f[4].empty())
                c.speed_kmh = parse_double(f[4], "speed_kmh");
            c.beta = parse_double(f[5], "beta");
            c.fine_factor = parse_double(f[6], "fine_factor");
            c.sum_rate = parse_double(f[7], "sum_rate_bits");
            c.std_error = parse_double(f[8], "std_error_bits");
            c.fit_nmse = parse_double(f[9], "fit_nmse");
            c.iterations = parse_double(f[10], "iterations");
            c.n_samples = arma::uword(parse_double(f[11], "n_samples"));
            c.status = f[12];
            rep.cells.push_back(std::move(c));
        }
        return rep;
    }

    std::string report_to_json(const RunReport &report)
    {
        json j;
        j["schema_version"] = report.schema_version;
        j["seed"] = report.seed;
        j["cells"] = json::array();
        for (const auto &c : report.cells)
        {
            j["cells"].push_back({{"method", c.method},
                                  {"axis", c.axis},
                                  {"snr_db", round12(c.snr_db)},
                                  {"speed_kmh", c.speed_kmh ? json(round12(*c.speed_kmh)) : json(nullptr)},
                                  {"beta", round12(c.beta)},
                                  {"fine_factor", round12(c.fine_factor)},
                                  {"sum_rate_bits", round12(c.sum_rate)},
                                  {"std_error_bits", round12(c.std_error)},
                                  {"fit_nmse", round12(c.fit_nmse)},
                                  {"iterations", round12(c.iterations)},
                                  {"n_samples", c.n_samples},
                                  {"solve_ms", round12(c.solve_ms)},
                                  {"status", c.status}});
        }
        j["traces"] = json::array();
        for (const auto &t : report.traces)
        {
            std::vector<double> obj, gn;
            for (double v : t.objective)
                obj.push_back(round12(v));
            for (double v : t.grad_norm)
                gn.push_back(round12(v));
            j["traces"].push_back({{"method", t.method},
                                   {"snr_db", round12(t.snr_db)},
                                   {"beta", round12(t.beta)},
                                   {"fine_factor", round12(t.fine_factor)},
                                   {"drop", t.drop},
                                   {"objective_bits", obj},
                                   {"grad_norm", gn},
                                   {"iterations", t.iterations},
                                   {"termination", t.termination}});
        }
        return j.dump(2) + "\n";
    }

    RunReport report_from_json(const std::string &text)
    {
        RunReport rep;
        try
        {
            json j = json::parse(text);
            rep.schema_version = j.at("schema_version").get<int>();
            rep.seed = j.value("seed", std::uint64_t(0));
            for (const auto &jc : j.at("cells"))
            {
                CellResult c;
                c.method = jc.at("method").get<std::string>();
                c.axis = jc.value("axis", std::string("snr"));
                c.snr_db = jc.at("snr_db").get<double>();
                if (jc.contains("speed_kmh") && !jc["speed_kmh"].is_null())
                    c.speed_kmh = jc["speed_kmh"].get<double>();
                c.beta = jc.at("beta").get<double>();
                c.fine_factor = jc.at("fine_factor").get<double>();
                c.sum_rate = jc.at("sum_rate_bits").get<double>();
                c.std_error = jc.at("std_error_bits").get<double>();
                c.fit_nmse = jc.value("fit_nmse", 0.0);
                c.iterations = jc.value("iterations", 0.0);
                c.n_samples = jc.value("n_samples", arma::uword(0));
                c.solve_ms = jc.value("solve_ms", 0.0);
                c.status = jc.value("status", std::string("ok"));
                rep.cells.push_back(std::move(c));
            }
            if (j.contains("traces"))
                for (const auto &jt : j["traces"])
                {
                    ConvergenceTrace t;
                    t.method = jt.at("method").get<std::string>();
                    t.snr_db = jt.at("snr_db").get<double>();
                    t.beta = jt.at("beta").get<double>();
                    t.fine_factor = jt.at("fine_factor").get<double>();
                    t.drop = jt.value("drop", arma::uword(0));
                    t.objective = jt.at("objective_bits").get<std::vector<double>>();
                    t.grad_norm = jt.value("grad_norm", std::vector<double>{});
                    t.iterations = jt.value("iterations", arma::uword(0));
                    t.termination = jt.value("termination", std::string());
                    rep.traces.push_back(std::move(t));
                }
        }
        catch (const json::exception &e)
        {
            throw std::invalid_argument(std::string("report: malformed JSON: ") + e.what());
        }
        return rep;
    }

    void emit(const RunReport &report, Format format, const std::string &path)
    {
        write_file(path, format == Format::csv ? report_to_csv(report) : report_to_json(report));
    }

    void emit_traces_csv(const RunReport &report, const std::string &path)
    {
        std::string out = "method,snr_db,beta,fine_factor,drop,iteration,objective_bits,grad_norm\n";
        for (const auto &t : report.traces)
            for (std::size_t i = 0; i < t.objective.size(); ++i)
                out += t.method + "," + fmt(t.snr_db) + "," + fmt(t.beta) + "," + fmt(t.fine_factor) + "," +
                       std::to_string(t.drop) + "," + std::to_string(i) + "," + fmt(t.objective[i]) + "," +
                       (i > 0 && i - 1 < t.grad_norm.size() ? fmt(t.grad_norm[i - 1]) : std::string()) + "\n";
        write_file(path, out);
    }

    RunReport read_report(const std::string &path)
    {
        std::string text = slurp(path);
        try
        {
            if (path.size() >= 5 && path.substr(path.size() - 5) == ".json")
                return report_from_json(text);
            return report_from_csv(text);
        }
        catch (const std::invalid_argument &e)
        {
            throw std::invalid_argument(path + ": " + e.what());
        }
    }

    ChannelDump load_channel_dump(const std::string &path)
    {
        ChannelDump dump;
        try
        {
            json j = json::parse(slurp(path));
            dump.m_k = j.at("m_k").get<arma::uword>();
            dump.m_t = j.at("m_t").get<arma::uword>();
            if (dump.m_k < 1 || dump.m_t < 1)
                throw std::invalid_argument("m_k and m_t must be positive");
            for (const auto &u : j.at("users"))
            {
                double beta = u.value("beta", 1.0);
                if (!(beta >= 0.0 && beta <= 1.0))
                    throw std::invalid_argument("beta must lie in [0, 1]");
                dump.betas.push_back(beta);
                dump.h_prev.push_back(matrix_from_json(u.at("h_prev"), dump.m_k, dump.m_t, "h_prev"));
                std::vector<arma::cx_mat> draws;
                for (const auto &s : u.at("samples"))
                    draws.push_back(matrix_from_json(s, dump.m_k, dump.m_t, "sample"));
                if (!dump.samples.empty() && draws.size() != dump.samples[0].size())
                    throw std::invalid_argument("every user needs the same number of samples");
                dump.samples.push_back(std::move(draws));
            }
            if (dump.h_prev.empty())
                throw std::invalid_argument("no users");
        }
        catch (const json::exception &e)
        {
            throw std::invalid_argument(path + ": malformed channel dump: " + e.what());
        }
        catch (const std::invalid_argument &e)
        {
            throw std::invalid_argument(path + ": " + e.what());
        }
        return dump;
    }

    void save_channel_dump(const ChannelDump &dump, const std::string &path)
    {
        json j;
        j["m_k"] = dump.m_k;
        j["m_t"] = dump.m_t;
        j["users"] = json::array();
        for (std::size_t k = 0; k < dump.h_prev.size(); ++k)
        {
            json u;
            u["beta"] = k < dump.betas.size() ? dump.betas[k] : 1.0;
            u["h_prev"] = matrix_to_json(dump.h_prev[k]);
            u["samples"] = json::array();
            if (k < dump.samples.size())
                for (const auto &s : dump.samples[k])
                    u["samples"].push_back(matrix_to_json(s));
            j["users"].push_back(std::move(u));
        }
        write_file(path, j.dump() + "\n");
    }

    void save_precoders(const PrecoderFile &file, const std::string &path)
    {
        json j;
        j["schema_version"] = 1;
        j["method"] = file.method;
        j["snr_db"] = file.snr_db;
        j["seed"] = file.seed;
        j["precoders"] = json::array();
        for (const auto &p : file.precoders.p)
            j["precoders"].push_back(matrix_to_json(p));
        write_file(path, j.dump(2) + "\n");
    }

    PrecoderFile load_precoders(const std::string &path)
    {
        PrecoderFile f;
        try
        {
            json j = json::parse(slurp(path));
            f.method = j.value("method", std::string());
            f.snr_db = j.value("snr_db", 0.0);
            f.seed = j.value("seed", std::uint64_t(0));
            for (const auto &p : j.at("precoders"))
                f.precoders.p.push_back(matrix_from_json(p, 0, 0, "precoder"));
        }
        catch (const json::exception &e)
        {
            throw std::invalid_argument(path + ": malformed precoder file: " + e.what());
        }
        if (f.precoders.p.empty())
            throw std::invalid_argument(path + ": precoder file holds no users");
        return f;
    }
}
