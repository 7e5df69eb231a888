#pragma once

#include "srdcc/core.hpp"
#include "srdcc/field/chi.hpp"
#include "srdcc/field/samples.hpp"
#include "srdcc/harness/config.hpp"
#include "srdcc/harness/csv.hpp"
#include "srdcc/optim/sqp.hpp"
#include "srdcc/problems/bilinear.hpp"
#include "srdcc/problems/linear.hpp"
#include "srdcc/srd/estimate.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace srdcc::harness {

struct RunOptions {
    bool timing = false;          // wall-clock columns hold "NA" otherwise, keeping files byte-stable
    bool dump_operators = false;  // write the assembled operators as COO triplets
};

struct CommandResult {
    std::vector<std::filesystem::path> files;
};

using Snapshots = std::vector<srd::ProbabilityEstimate>;

namespace detail {

class Stopwatch {
public:
    explicit Stopwatch(bool enabled) : enabled_(enabled), start_(std::chrono::steady_clock::now()) {}
    std::string seconds() const {
        if (!enabled_) return "NA";
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", s);
        return buf;
    }

private:
    bool enabled_;
    std::chrono::steady_clock::time_point start_;
};

inline std::uint64_t rep_seed(std::uint64_t base, std::uint64_t rep) {
    const std::uint64_t s = splitmix64(base * 0x9E3779B97F4A7C15ULL + rep + 1);
    return s == 0 ? 1 : s;
}

inline field::SamplerKind stream_kind(const std::string& sampler) {
    return sampler == "srd-qmc" ? field::SamplerKind::qmc_halton : field::SamplerKind::mc;
}

inline std::string tag(double p) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", p);
    return buf;
}

inline std::vector<std::pair<std::string, std::string>> metadata(const ExperimentConfig& c, const std::string& extra = {}) {
    std::vector<std::pair<std::string, std::string>> m = {
        {"problem", c.oracle == "none" ? c.problem : c.oracle + "-oracle"},
        {"qmc", "halton-inverse-normal-random-start"},
        {"seed", std::to_string(c.seed)},
    };
    if (!extra.empty()) m.emplace_back("note", extra);
    return m;
}

inline problems::LinearSettings linear_settings(const ExperimentConfig& c) {
    problems::LinearSettings s;
    s.n = c.n;
    s.K = c.K;
    s.gamma = c.gamma;
    s.alpha_reg = c.alpha_reg;
    s.lower = c.lower;
    s.upper = c.upper;
    s.constraint_stride = c.constraint_stride;
    return s;
}

inline problems::BilinearSettings bilinear_settings(const ExperimentConfig& c) {
    problems::BilinearSettings s;
    s.n = c.n;
    s.alpha_cov = c.alpha_cov;
    s.lower = c.lower;
    s.upper = c.upper;
    s.constraint_stride = c.constraint_stride;
    s.lumped_mass = c.lumped_mass;
    return s;
}

// Estimator over a ray system given by sampler name.
inline srd::ProbabilityEstimate run_sampler(const srd::RaySystem& sys, const std::string& sampler, std::uint64_t seed,
                                            Index n, const srd::StreamOptions& opt = {}, Snapshots* snaps = nullptr) {
    const field::SampleStream stream(stream_kind(sampler), seed, sys.dim());
    if (sampler == "mc") return srd::estimate_mc(sys, stream, n, opt, snaps);
    return srd::estimate_srd(sys, stream, n, opt, snaps);
}

// Centered ball of radius R in R^d: rho = R for every direction, and the
// indicator of ||z|| <= R for Gaussian draws.
inline srd::ProbabilityEstimate ball_estimate(const ExperimentConfig& c, const std::string& sampler, std::uint64_t seed,
                                              Index n, const srd::StreamOptions& opt, Snapshots* snaps) {
    const int d = c.oracle_dim;
    const double r = c.oracle_radius;
    srd::Moments m;
    srd::ProbabilityEstimate e;
    e.dof = d;
    std::size_t next = 0;
    auto snapshot = [&]() {
        while (snaps && next < opt.checkpoints.size() && static_cast<double>(opt.checkpoints[next]) == m.n) {
            srd::ProbabilityEstimate s = e;
            srd::finish(s, m);
            snaps->push_back(s);
            ++next;
        }
    };
    if (sampler == "mc") {
        const field::SampleStream stream(field::SamplerKind::mc, seed, d);
        Mat z(d, field::kSampleBlock);
        for (Index first = 0; first < n; first += field::kSampleBlock) {
            const Index cnt = std::min(field::kSampleBlock, n - first);
            stream.gaussians(first, z.leftCols(cnt));
            for (Index i = 0; i < cnt; ++i) {
                const double v = z.col(i).norm() <= r ? 1.0 : 0.0;
                m.add(v);
                if (opt.keep_contributions) e.contributions.push_back(v);
                snapshot();
            }
        }
        srd::finish(e, m);
        e.bernoulli_variance = e.value * (1.0 - e.value);
        return e;
    }
    const double f = field::chi_cdf(r, d);
    for (Index i = 0; i < n; ++i) {
        m.add(f);
        if (opt.keep_contributions) e.contributions.push_back(f);
        snapshot();
    }
    e.rho_inf = e.rho_sup = r;
    srd::finish(e, m);
    return e;
}

// The half-space z_1 <= c written as the single constraint -z_1 >= -c.
inline srd::RaySystem halfspace_system(const ExperimentConfig& c) {
    Mat g = Mat::Zero(1, c.oracle_dim);
    g(0, 0) = 1.0;
    return {srd::RayBounds(Vec::Zero(1), Vec::Constant(1, -c.oracle_offset), Vec::Constant(1, kInf), false), g};
}

// A probability target whose estimators can be run repeatedly: the linear
// problem at its nominal control or one of the analytic oracles.
struct EstimationTarget {
    std::function<srd::ProbabilityEstimate(const std::string&, std::uint64_t, Index, const srd::StreamOptions&,
                                           Snapshots*)>
        run;
    std::function<double(Index)> reference;  // argument: sample budget for a numerical reference
    std::string reference_kind;
};

inline EstimationTarget make_target(const ExperimentConfig& c, const problems::LinearProblem* problem, int k) {
    EstimationTarget t;
    if (c.oracle == "ball") {
        t.run = [c](const std::string& s, std::uint64_t seed, Index n, const srd::StreamOptions& o, Snapshots* sn) {
            return ball_estimate(c, s, seed, n, o, sn);
        };
        t.reference = [c](Index) { return field::chi_cdf(c.oracle_radius, c.oracle_dim); };
        t.reference_kind = "exact";
        return t;
    }
    if (c.oracle == "halfspace") {
        const srd::RaySystem sys = halfspace_system(c);
        t.run = [sys](const std::string& s, std::uint64_t seed, Index n, const srd::StreamOptions& o, Snapshots* sn) {
            return run_sampler(sys, s, seed, n, o, sn);
        };
        t.reference = [c](Index) { return 0.5 * std::erfc(-c.oracle_offset / std::sqrt(2.0)); };
        t.reference_kind = "exact";
        return t;
    }
    const srd::RaySystem sys = problem->ray_system(problem->nominal_control(), k);
    t.run = [sys](const std::string& s, std::uint64_t seed, Index n, const srd::StreamOptions& o, Snapshots* sn) {
        return run_sampler(sys, s, seed, n, o, sn);
    };
    t.reference = [sys](Index n) { return run_sampler(sys, "srd-qmc", 0, n).value; };
    t.reference_kind = "srd-qmc";
    return t;
}

inline void require_linear(const ExperimentConfig& c, const std::string& command) {
    if (c.problem != "linear" && c.oracle == "none")
        throw ConfigError(command + " runs on the linear problem or an oracle");
}

inline void dump_linear_operators(const problems::LinearProblem& p, const std::filesystem::path& dir,
                                  CommandResult& res) {
    std::filesystem::create_directories(dir);
    const std::pair<const char*, const mesh::DiscreteOperator*> ops[] = {{"laplacian", &p.laplacian()},
                                                                         {"injection", &p.injection()}};
    for (const auto& [name, op] : ops) {
        const auto path = dir / (std::string(name) + ".coo");
        std::ofstream os(path, std::ios::binary);
        op->dump_coo(os);
        res.files.push_back(path);
    }
}

inline void dump_bilinear_operators(const problems::BilinearProblem& p, const Vec& u, const std::filesystem::path& dir,
                                    CommandResult& res) {
    std::filesystem::create_directories(dir);
    const mesh::DiscreteOperator control = mesh::assemble_control_mass(p.grid(), u);
    const std::pair<const char*, const mesh::DiscreteOperator*> ops[] = {
        {"stiffness", &p.fem().stiffness}, {"mass", &p.fem().mass}, {"control_mass", &control}};
    for (const auto& [name, op] : ops) {
        const auto path = dir / (std::string(name) + ".coo");
        std::ofstream os(path, std::ios::binary);
        op->dump_coo(os);
        res.files.push_back(path);
    }
}

// Least-squares slope and intercept of log10(rmse) against log10(N).
inline std::pair<double, double> loglog_fit(const std::vector<double>& n, const std::vector<double>& rmse) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (!(rmse[i] > 0.0)) continue;
        const double x = std::log10(n[i]), y = std::log10(rmse[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    if (m < 2) return {std::nan(""), std::nan("")};
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    return {slope, (sy - slope * sx) / m};
}

// Nodal field on the full grid as (x1, x2, value) rows.
inline void write_grid_field(const std::filesystem::path& path, const std::string& command, const ExperimentConfig& c,
                             const mesh::Grid& g, const Vec& nodal, const std::string& note) {
    CsvWriter w(path, command, c, metadata(c, note), {"x1", "x2", "value"});
    for (Index k = 0; k < g.num_nodes(); ++k) w.row() << g.x1(k) << g.x2(k) << nodal[k];
}

// max over x1 of each sampled state, per x2 row.
inline Mat row_maxima(const mesh::Grid& g, const Mat& nodal_states) {
    Mat out = Mat::Constant(g.n, nodal_states.cols(), -kInf);
    for (Index k = 0; k < g.num_nodes(); ++k)
        for (Index s = 0; s < nodal_states.cols(); ++s) out(g.row(k), s) = std::max(out(g.row(k), s), nodal_states(k, s));
    return out;
}

}  // namespace detail

// Single probability estimate per configured sampler.
inline CommandResult cmd_estimate(const ExperimentConfig& c, const RunOptions& opt = {}) {
    validate(c);
    CommandResult res;
    const std::filesystem::path dir = c.output_dir;
    CsvWriter w(dir / "estimate.csv", "estimate", c, detail::metadata(c),
                {"problem", "sampler", "n", "K", "lower", "upper", "N", "seed", "p_hat", "std_error", "variance",
                 "variance_se", "rho_inf", "rho_sup", "degenerate", "slater_warning", "wallclock_s"});
    const std::string label = c.oracle == "none" ? c.problem : c.oracle + "-oracle";
    auto emit = [&](const std::string& sampler, const srd::ProbabilityEstimate& e, int k, const std::string& secs) {
        auto row = w.row();
        row << label << sampler << c.n << k << c.lower << c.upper << e.n << std::to_string(c.seed) << e.value
                << e.standard_error() << e.variance << e.variance_se;
        if (sampler == "mc") row << "NA" << "NA";
        else row << e.rho_inf << e.rho_sup;
        row << e.degenerate_count
                << (e.slater_warning ? "true" : "false") << secs;
    };
    if (c.problem == "bilinear" && c.oracle == "none") {
        const problems::BilinearProblem p(detail::bilinear_settings(c));
        const Vec u = p.nominal_control();
        if (opt.dump_operators) detail::dump_bilinear_operators(p, u, dir / "operators", res);
        for (const std::string& s : c.samplers) {
            const detail::Stopwatch sw(opt.timing);
            const srd::ProbabilityEstimate e = s == "mc" ? p.chance_mc(u, c.seed, c.samples)
                                                         : p.chance_stream(u, detail::stream_kind(s), c.seed, c.samples);
            emit(s, e, p.chance_dof(), sw.seconds());
        }
    } else {
        std::unique_ptr<problems::LinearProblem> p;
        if (c.oracle == "none") {
            p = std::make_unique<problems::LinearProblem>(detail::linear_settings(c));
            if (opt.dump_operators) detail::dump_linear_operators(*p, dir / "operators", res);
        }
        const detail::EstimationTarget t = detail::make_target(c, p.get(), c.K);
        const int k = c.oracle == "none" ? c.K : c.oracle_dim;
        for (const std::string& s : c.samplers) {
            const detail::Stopwatch sw(opt.timing);
            emit(s, t.run(s, c.seed, c.samples, {}, nullptr), k, sw.seconds());
        }
    }
    res.files.push_back(w.path());
    return res;
}

// RMSE against a reference over repetitions, at every schedule point, plus
// a log-log slope per sampler.
inline CommandResult cmd_converge(const ExperimentConfig& c, const RunOptions& opt = {}) {
    validate(c);
    detail::require_linear(c, "converge");
    CommandResult res;
    std::unique_ptr<problems::LinearProblem> p;
    if (c.oracle == "none") p = std::make_unique<problems::LinearProblem>(detail::linear_settings(c));
    const detail::EstimationTarget t = detail::make_target(c, p.get(), c.K);
    const double ref = t.reference(c.reference_samples);
    const std::string ref_note = t.reference_kind == "exact" ? "reference=exact"
                                                             : "reference=srd-qmc-N" + std::to_string(c.reference_samples);
    const std::filesystem::path dir = c.output_dir;
    CsvWriter w(dir / "converge.csv", "converge", c, detail::metadata(c, ref_note),
                {"sampler", "N", "rmse", "mean", "bias", "repetitions", "reference", "wallclock_s"});
    CsvWriter fit(dir / "converge_fit.csv", "converge", c, detail::metadata(c, ref_note),
                  {"sampler", "slope", "intercept", "N_min", "N_max"});
    srd::StreamOptions so;
    so.checkpoints = c.schedule;
    for (std::size_t si = 0; si < c.samplers.size(); ++si) {
        const std::string& s = c.samplers[si];
        const detail::Stopwatch sw(opt.timing);
        std::vector<double> sq(c.schedule.size(), 0.0), mean(c.schedule.size(), 0.0);
        for (int r = 0; r < c.repetitions; ++r) {
            Snapshots snaps;
            t.run(s, detail::rep_seed(c.seed, 1000 * si + r), c.schedule.back(), so, &snaps);
            for (std::size_t i = 0; i < snaps.size(); ++i) {
                sq[i] += (snaps[i].value - ref) * (snaps[i].value - ref);
                mean[i] += snaps[i].value;
            }
        }
        std::vector<double> ns, rmse;
        for (std::size_t i = 0; i < c.schedule.size(); ++i) {
            const double e = std::sqrt(sq[i] / c.repetitions), m = mean[i] / c.repetitions;
            ns.push_back(static_cast<double>(c.schedule[i]));
            rmse.push_back(e);
            w.row() << s << c.schedule[i] << e << m << m - ref << c.repetitions << ref << sw.seconds();
        }
        const auto [slope, intercept] = detail::loglog_fit(ns, rmse);
        fit.row() << s << slope << intercept << c.schedule.front() << c.schedule.back();
    }
    res.files.push_back(w.path());
    res.files.push_back(fit.path());
    return res;
}

// RMSE against a K_ref reference for several truncation levels, and the
// input and state KL spectra.
inline CommandResult cmd_kl_study(const ExperimentConfig& c, const RunOptions& opt = {}) {
    validate(c);
    if (c.problem != "linear" || c.oracle != "none") throw ConfigError("kl-study runs on the linear problem");
    CommandResult res;
    const problems::LinearProblem p(detail::linear_settings(c));
    const Vec u = p.nominal_control();
    const double ref = detail::run_sampler(p.ray_system(u, c.kl_reference_modes), "srd-qmc", 0, c.reference_samples).value;
    const std::string note = "reference=srd-qmc-N" + std::to_string(c.reference_samples) +
                             "-K" + std::to_string(c.kl_reference_modes);
    const std::filesystem::path dir = c.output_dir;
    CsvWriter w(dir / "kl_study.csv", "kl-study", c, detail::metadata(c, note),
                {"K", "sampler", "N", "rmse", "mean", "bias", "repetitions", "reference", "wallclock_s"});
    srd::StreamOptions so;
    so.checkpoints = c.schedule;
    const std::string& s = c.samplers.front();
    for (int k : c.kl_modes) {
        const detail::Stopwatch sw(opt.timing);
        const srd::RaySystem sys = p.ray_system(u, k);
        std::vector<double> sq(c.schedule.size(), 0.0), mean(c.schedule.size(), 0.0);
        for (int r = 0; r < c.repetitions; ++r) {
            Snapshots snaps;
            detail::run_sampler(sys, s, detail::rep_seed(c.seed, r), c.schedule.back(), so, &snaps);
            for (std::size_t i = 0; i < snaps.size(); ++i) {
                sq[i] += (snaps[i].value - ref) * (snaps[i].value - ref);
                mean[i] += snaps[i].value;
            }
        }
        for (std::size_t i = 0; i < c.schedule.size(); ++i) {
            const double m = mean[i] / c.repetitions;
            w.row() << k << s << c.schedule[i] << std::sqrt(sq[i] / c.repetitions) << m << m - ref << c.repetitions
                    << ref << sw.seconds();
        }
    }
    res.files.push_back(w.path());

    CsvWriter spectrum(dir / "kl_spectrum.csv", "kl-study", c, detail::metadata(c),
                   {"k", "lambda_xi", "lambda_y", "lambda_xi_normalized", "lambda_y_normalized"});
    const Vec& lx = p.input_model().spectrum.eigenvalues;
    const Vec& ly = p.state_basis().eigenvalues;
    for (Index k = 0; k < std::min(lx.size(), ly.size()); ++k)
        spectrum.row() << k + 1 << lx[k] << ly[k] << lx[k] / lx[0] << ly[k] / ly[0];
    res.files.push_back(spectrum.path());
    return res;
}

// Elementary-estimator variances of MC and SRD-MC over repetitions, with the
// analytic bounds on V_SRD.
inline CommandResult cmd_variance_study(const ExperimentConfig& c, const RunOptions& opt = {}) {
    validate(c);
    detail::require_linear(c, "variance-study");
    CommandResult res;
    const std::filesystem::path dir = c.output_dir;
    CsvWriter w(dir / "variance.csv", "variance-study", c, detail::metadata(c),
                {"bound", "p_ref", "N", "repetitions", "v_mc", "v_mc_se", "v_srd", "v_srd_se", "v_mc_normalized",
                 "v_srd_normalized", "ratio", "rep_var_mc", "rep_var_srd", "rho_inf", "rho_sup", "lemma1_bound",
                 "lemma1_ok", "lemma2_bound", "lemma2_ok", "wallclock_s"});
    std::vector<double> levels = c.bound_levels;
    if (c.oracle != "none") levels = {c.oracle == "ball" ? c.oracle_radius : c.oracle_offset};
    for (double b : levels) {
        const detail::Stopwatch sw(opt.timing);
        ExperimentConfig cb = c;
        cb.lower = -b;
        cb.upper = b;
        std::unique_ptr<problems::LinearProblem> p;
        if (c.oracle == "none") p = std::make_unique<problems::LinearProblem>(detail::linear_settings(cb));
        const detail::EstimationTarget t = detail::make_target(cb, p.get(), c.K);
        const double p_ref = t.reference(c.reference_samples);
        srd::StreamOptions so;
        so.keep_contributions = true;
        srd::Moments pooled_mc, pooled_srd, reps_mc, reps_srd;
        srd::ProbabilityEstimate srd_all, mc_all;
        for (int r = 0; r < c.repetitions; ++r) {
            const srd::ProbabilityEstimate em = t.run("mc", detail::rep_seed(c.seed, r), c.samples, so, nullptr);
            const srd::ProbabilityEstimate es =
                t.run("srd-mc", detail::rep_seed(c.seed, r + c.repetitions), c.samples, so, nullptr);
            for (double v : em.contributions) pooled_mc.add(v);
            for (double v : es.contributions) pooled_srd.add(v);
            reps_mc.add(em.value);
            reps_srd.add(es.value);
            srd_all.rho_inf = std::min(srd_all.rho_inf, es.rho_inf);
            srd_all.rho_sup = std::max(srd_all.rho_sup, es.rho_sup);
            srd_all.dof = es.dof;
        }
        srd::finish(srd_all, pooled_srd);
        srd::finish(mc_all, pooled_mc);
        const srd::VarianceReport rep = srd::variance_report(srd_all, mc_all);
        const double q = 1.0 - p_ref;
        const double n = static_cast<double>(c.samples);
        w.row() << b << p_ref << c.samples << c.repetitions << rep.v_mc << mc_all.variance_se << rep.v_srd
                << srd_all.variance_se << rep.v_mc / q << rep.v_srd / q << rep.ratio << n * reps_mc.variance()
                << n * reps_srd.variance() << srd_all.rho_inf << srd_all.rho_sup << rep.lemma1_bound
                << (rep.lemma1_violated ? "false" : "true") << rep.lemma2_bound
                << (rep.lemma2_violated ? "false" : "true") << sw.seconds();
    }
    res.files.push_back(w.path());
    return res;
}

// Chance-constrained optimization for each target probability.
inline CommandResult cmd_optimize(const ExperimentConfig& c, const RunOptions& opt = {}) {
    validate(c);
    if (c.oracle != "none") throw ConfigError("optimize has no oracle mode");
    const std::string& sampler = c.samplers.front();
    if (sampler == "mc") throw ConfigError("optimize needs an SRD sampler (srd-mc or srd-qmc)");
    CommandResult res;
    const std::filesystem::path dir = c.output_dir;
    const field::SamplerKind kind = detail::stream_kind(sampler);

    optim::SqpConfig sc;
    sc.max_iterations = c.max_iterations;
    sc.kkt_tol = c.kkt_tol;
    sc.bfgs_memory = static_cast<std::size_t>(c.bfgs_memory);
    sc.u_min = c.u_min;
    sc.u_max = c.u_max;

    CsvWriter table(dir / "objective_vs_p.csv", "optimize", c,
                    detail::metadata(c, "validation=" + std::to_string(c.validation_samples)),
                    {"target", "objective", "phi", "validation_phi", "exceedance", "mu", "kkt", "iterations", "reason",
                     "plotted_exceeding", "plotted", "wallclock_s"});

    auto write_history = [&](const std::string& t, const optim::SolveReport& r) {
        CsvWriter h(dir / ("history_p" + t + ".csv"), "optimize", c, detail::metadata(c),
                    {"iteration", "objective", "phi", "kkt", "mu", "penalty", "merit", "merit_next", "step_length",
                     "step_norm"});
        for (const optim::IterateRecord& it : r.history)
            h.row() << it.iteration << it.objective << it.phi << it.kkt << it.mu << it.penalty << it.merit
                    << it.merit_next << it.step_length << it.step_norm;
        res.files.push_back(h.path());
    };

    // Nodal state samples (columns) and how many of them violate the bounds
    // at some constraint point.
    auto write_states = [&](const std::string& t, const mesh::Grid& g, const Vec& mean_nodal, const Mat& states,
                            const std::vector<Index>& points_nodal, int& exceeding) {
        exceeding = 0;
        for (Index s = 0; s < states.cols(); ++s) {
            bool bad = false;
            for (Index node : points_nodal) bad = bad || states(node, s) > c.upper || states(node, s) < c.lower;
            exceeding += bad ? 1 : 0;
        }
        std::vector<std::string> header = {"x2", "mean"};
        for (Index s = 0; s < states.cols(); ++s) header.push_back("sample_" + std::to_string(s + 1));
        CsvWriter sw(dir / ("states_p" + t + ".csv"), "optimize", c, detail::metadata(c, "max_over_x1"), header);
        const Mat mean_max = detail::row_maxima(g, mean_nodal);
        const Mat sample_max = detail::row_maxima(g, states);
        for (int j = 0; j < g.n; ++j) {
            auto row = sw.row();
            row << j * g.h << mean_max(j, 0);
            for (Index s = 0; s < states.cols(); ++s) row << sample_max(j, s);
        }
        res.files.push_back(sw.path());
    };

    auto emit = [&](const std::string& t, double j, double phi, double vphi, const optim::SolveReport* r, int exceed,
                    const std::string& secs) {
        table.row() << t << j << phi << vphi << 1.0 - vphi << (r ? r->mu : 0.0) << (r ? r->kkt : 0.0)
                    << (r ? r->iterations : 0) << (r ? r->reason : std::string("unconstrained")) << exceed
                    << c.plot_samples << secs;
    };

    if (c.problem == "linear") {
        const problems::LinearProblem p(detail::linear_settings(c));
        if (opt.dump_operators) detail::dump_linear_operators(p, dir / "operators", res);
        const field::SampleSet samples = field::sphere_samples(kind, c.seed, c.samples, c.K);
        const Mat factor = p.state_factor();
        const Mat z = field::gaussian_samples(detail::rep_seed(c.seed, 7777), c.plot_samples, static_cast<int>(factor.cols()));
        std::vector<Index> nodal_points;
        for (Index k : p.points()) nodal_points.push_back(p.grid().free_nodes[k]);
        auto validate_phi = [&](const Vec& u) {
            const srd::RaySystem sys = p.ray_system(u, c.K, false);
            return detail::run_sampler(sys, "srd-qmc", 0, c.validation_samples).value;
        };
        auto states_of = [&](const Vec& u) {
            const Vec y0 = p.mean_state(u);
            Mat ys(p.grid().num_nodes(), z.cols());
            for (Index s = 0; s < z.cols(); ++s) ys.col(s) = p.grid().extend(y0 - factor * z.col(s));
            return ys;
        };
        {
            const detail::Stopwatch sw(opt.timing);
            const Vec u = p.nominal_control();
            int exceed = 0;
            write_states("none", p.grid(), p.grid().extend(p.mean_state(u)), states_of(u), nodal_points, exceed);
            const double phi = p.slater(u) ? p.chance(u, samples, false).value : 0.0;
            emit("none", p.objective(u), phi, p.slater(u) ? validate_phi(u) : 0.0, nullptr, exceed, sw.seconds());
        }
        for (double target : c.targets) {
            const detail::Stopwatch sw(opt.timing);
            sc.p = target;
            const optim::SolveReport r = optim::solve_sqp(p, sc, samples, p.nominal_control());
            const std::string t = detail::tag(target);
            detail::write_grid_field(dir / ("control_p" + t + ".csv"), "optimize", c, p.grid(), p.grid().extend(r.u),
                                     "control");
            res.files.push_back(dir / ("control_p" + t + ".csv"));
            write_history(t, r);
            int exceed = 0;
            write_states(t, p.grid(), p.grid().extend(p.mean_state(r.u)), states_of(r.u), nodal_points, exceed);
            emit(t, r.objective, r.phi, validate_phi(r.u), &r, exceed, sw.seconds());
        }
    } else {
        const problems::BilinearProblem p(detail::bilinear_settings(c));
        if (opt.dump_operators) detail::dump_bilinear_operators(p, p.nominal_control(), dir / "operators", res);
        const field::SampleSet samples = field::sphere_samples(kind, c.seed, c.samples, p.chance_dof());
        const field::SampleSet plot =
            field::sphere_samples(field::SamplerKind::mc, detail::rep_seed(c.seed, 7777), c.plot_samples, p.chance_dof(), true);
        std::vector<Index> nodal_points;
        for (Index k : p.points()) nodal_points.push_back(p.grid().free_nodes[k]);
        auto validate_phi = [&](const Vec& u) {
            return p.chance_stream(u, field::SamplerKind::mc, detail::rep_seed(c.seed, 4242), c.validation_samples).value;
        };
        auto states_of = [&](const Vec& u) {
            Mat ys(p.grid().num_nodes(), plot.size());
            if (plot.size() == 0) return ys;
            const Mat interior = p.state_samples(u, plot);
            for (Index s = 0; s < interior.cols(); ++s) ys.col(s) = p.grid().extend(interior.col(s));
            return ys;
        };
        {
            const detail::Stopwatch sw(opt.timing);
            const Vec u = p.nominal_control();
            int exceed = 0;
            write_states("none", p.grid(), p.grid().extend(p.mean_state(u)), states_of(u), nodal_points, exceed);
            emit("none", p.objective(u), p.chance(u, samples, false).value, validate_phi(u), nullptr, exceed,
                 sw.seconds());
        }
        for (double target : c.targets) {
            const detail::Stopwatch sw(opt.timing);
            sc.p = target;
            const optim::SolveReport r = optim::solve_sqp(p, sc, samples, p.nominal_control());
            const std::string t = detail::tag(target);
            detail::write_grid_field(dir / ("control_p" + t + ".csv"), "optimize", c, p.grid(), r.u, "control");
            res.files.push_back(dir / ("control_p" + t + ".csv"));
            write_history(t, r);
            int exceed = 0;
            write_states(t, p.grid(), p.grid().extend(p.mean_state(r.u)), states_of(r.u), nodal_points, exceed);
            emit(t, r.objective, r.phi, validate_phi(r.u), &r, exceed, sw.seconds());
        }
    }
    res.files.push_back(table.path());
    return res;
}

inline CommandResult run_command(const std::string& name, const ExperimentConfig& c, const RunOptions& opt = {}) {
    if (name == "estimate") return cmd_estimate(c, opt);
    if (name == "converge") return cmd_converge(c, opt);
    if (name == "kl-study") return cmd_kl_study(c, opt);
    if (name == "variance-study") return cmd_variance_study(c, opt);
    if (name == "optimize") return cmd_optimize(c, opt);
    throw ConfigError("unknown command " + name);
}

}  // namespace srdcc::harness
