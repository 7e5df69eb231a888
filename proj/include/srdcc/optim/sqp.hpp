#pragma once

#include "srdcc/core.hpp"
#include "srdcc/field/samples.hpp"
#include "srdcc/optim/bfgs.hpp"
#include "srdcc/srd/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace srdcc::optim {

struct SqpConfig {
    double p = 0.9;
    int max_iterations = 200;
    double kkt_tol = 1e-6;
    double armijo = 1e-4;
    double backtrack = 0.5;
    int max_backtracks = 40;
    double penalty_factor = 1.5;  // nu >= penalty_factor * mu + penalty_floor
    double penalty_floor = 1e-6;
    std::size_t bfgs_memory = 0;  // 0: keep every pair up to max_iterations
    double u_min = -kInf;
    double u_max = kInf;

    void validate() const {
        if (!(p > 0.0 && p < 1.0)) throw ConfigError("target probability must lie in (0, 1)");
        if (!(kkt_tol > 0.0)) throw ConfigError("KKT tolerance must be positive");
        if (max_iterations < 1) throw ConfigError("iteration limit must be positive");
        if (!(armijo > 0.0 && armijo < 0.5)) throw ConfigError("Armijo constant must lie in (0, 0.5)");
        if (!(backtrack > 0.0 && backtrack < 1.0)) throw ConfigError("backtracking factor must lie in (0, 1)");
        if (!(u_min < u_max)) throw ConfigError("control bounds are empty");
    }
};

struct IterateRecord {
    int iteration = 0;
    double objective = 0.0;
    double phi = 0.0;
    double kkt = 0.0;
    double mu = 0.0;
    double penalty = 0.0;
    double merit = 0.0;       // at this iterate, with this iteration's penalty
    double merit_next = 0.0;  // at the accepted trial point, same penalty
    double step_length = 0.0;
    double step_norm = 0.0;
};

struct SolveReport {
    Vec u;
    double objective = 0.0;
    double phi = 0.0;
    double mu = 0.0;
    double kkt = 0.0;
    int iterations = 0;
    std::string reason;
    std::vector<IterateRecord> history;
    srd::ProbabilityEstimate final_estimate;
    double validation_phi = std::numeric_limits<double>::quiet_NaN();
};

// Problems provide: control_dim, objective, objective_gradient,
// chance(u, samples, with_gradient), apply_hessian, solve_hessian,
// dual_norm, slater.

namespace detail {

inline Vec lagrangian_gradient(const Vec& gj, const Vec& gphi, double mu, const Vec& u, double u_min, double u_max) {
    Vec r = gj - mu * gphi;
    for (Index i = 0; i < r.size(); ++i) {
        if (u[i] <= u_min && r[i] > 0.0) r[i] = 0.0;
        if (u[i] >= u_max && r[i] < 0.0) r[i] = 0.0;
    }
    return r;
}

template <class Problem>
double kkt_from_parts(const Problem& problem, const Vec& u, double mu, double phi, double p, const Vec& gj,
                      const Vec& gphi, double u_min, double u_max) {
    const Vec r = lagrangian_gradient(gj, gphi, mu, u, u_min, u_max);
    return problem.dual_norm(r) + std::abs(mu * (phi - p)) + std::max(0.0, p - phi) + std::max(0.0, -mu);
}

}  // namespace detail

template <class Problem>
double kkt_residual(const Problem& problem, const Vec& u, double mu, const field::SampleSet& samples, double p,
                    double u_min = -kInf, double u_max = kInf) {
    const srd::ProbabilityEstimate e = problem.chance(u, samples, true);
    return detail::kkt_from_parts(problem, u, mu, e.value, p, problem.objective_gradient(u), e.gradient, u_min, u_max);
}

template <class Problem>
SolveReport solve_sqp(const Problem& problem, const SqpConfig& cfg, const field::SampleSet& samples, Vec u) {
    cfg.validate();
    if (u.size() != problem.control_dim()) throw ConfigError("initial control has the wrong size");
    u = u.cwiseMax(cfg.u_min).cwiseMin(cfg.u_max);
    if (!problem.slater(u)) u = problem.restore(u);
    if (!problem.slater(u)) throw InfeasibleStartError("restoration did not produce a strictly feasible mean");

    const std::size_t memory = cfg.bfgs_memory > 0 ? cfg.bfgs_memory : static_cast<std::size_t>(cfg.max_iterations) + 1;
    DampedBfgs model([&](const Vec& x) { return problem.apply_hessian(x); },
                     [&](const Vec& g) { return problem.solve_hessian(g); }, memory);

    auto project = [&](const Vec& v) { return Vec(v.cwiseMax(cfg.u_min).cwiseMin(cfg.u_max)); };

    double j = problem.objective(u);
    Vec gj = problem.objective_gradient(u);
    srd::ProbabilityEstimate est = problem.chance(u, samples, true);
    double mu = 0.0, nu = 0.0;

    SolveReport rep;
    for (int it = 0;; ++it) {
        const double c = est.value - cfg.p;
        const Vec& a = est.gradient;

        // Closed-form QP step against the BFGS model.
        const Vec d0 = -model.solve(gj);
        double mu_new = 0.0;
        Vec d = d0;
        if (c + a.dot(d0) < 0.0) {
            const Vec ha = model.solve(a);
            const double aha = a.dot(ha);
            if (aha > 0.0) {
                mu_new = (-a.dot(d0) - c) / aha;
                d = d0 + mu_new * ha;
            }
        }

        IterateRecord rec;
        rec.iteration = it;
        rec.objective = j;
        rec.phi = est.value;
        rec.mu = mu_new;
        rec.kkt = detail::kkt_from_parts(problem, u, mu_new, est.value, cfg.p, gj, a, cfg.u_min, cfg.u_max);
        mu = mu_new;

        auto finish = [&](const std::string& reason) {
            rec.penalty = nu;
            rec.merit = j + nu * std::max(0.0, -c);
            rec.merit_next = rec.merit;
            rep.history.push_back(rec);
            rep.u = u;
            rep.objective = j;
            rep.phi = est.value;
            rep.mu = mu;
            rep.kkt = rec.kkt;
            rep.iterations = it;
            rep.reason = reason;
            rep.final_estimate = est;
            return rep;
        };

        if (rec.kkt <= cfg.kkt_tol) return finish("converged");
        if (it >= cfg.max_iterations) return finish("max_iterations");

        nu = std::max(nu, cfg.penalty_factor * mu_new + cfg.penalty_floor);
        auto merit = [&](double jv, double phiv) { return jv + nu * std::max(0.0, cfg.p - phiv); };
        const double m0 = merit(j, est.value);
        const double ad = a.dot(d);
        double dm = gj.dot(d);
        if (c < 0.0) dm -= nu * ad;
        else if (c == 0.0) dm += nu * std::max(0.0, -ad);

        double t = 1.0;
        bool accepted = false;
        Vec u_t;
        double j_t = 0.0, phi_t = 0.0;
        for (int bt = 0; bt <= cfg.max_backtracks; ++bt, t *= cfg.backtrack) {
            u_t = project(u + t * d);
            try {
                if (!problem.slater(u_t)) continue;
                j_t = problem.objective(u_t);
                phi_t = problem.chance(u_t, samples, false).value;
            } catch (const SlaterError&) {
                continue;
            } catch (const DefinitenessError&) {
                continue;
            }
            if (merit(j_t, phi_t) <= m0 + cfg.armijo * t * std::min(dm, 0.0)) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (model.size() > 0) {
                model.reset();
                rec.penalty = nu;
                rec.merit = m0;
                rec.merit_next = m0;
                rep.history.push_back(rec);
                continue;
            }
            return finish("line_search_failed");
        }

        const srd::ProbabilityEstimate est_t = problem.chance(u_t, samples, true);
        const Vec gj_t = problem.objective_gradient(u_t);
        const Vec s = u_t - u;
        const Vec y = (gj_t - mu_new * est_t.gradient) - (gj - mu_new * a);
        model.update(s, y);

        rec.penalty = nu;
        rec.merit = m0;
        rec.merit_next = merit(j_t, est_t.value);
        rec.step_length = t;
        rec.step_norm = std::sqrt(std::max(0.0, problem.inner(s, s)));
        rep.history.push_back(rec);

        u = u_t;
        j = j_t;
        gj = gj_t;
        est = est_t;
        if (rec.step_norm <= 1e-15 * (1.0 + std::sqrt(std::max(0.0, problem.inner(u, u))))) {
            ++it;
            IterateRecord last;
            last.iteration = it;
            rec = last;
            rec.objective = j;
            rec.phi = est.value;
            rec.mu = mu;
            rec.kkt = detail::kkt_from_parts(problem, u, mu, est.value, cfg.p, gj, est.gradient, cfg.u_min, cfg.u_max);
            rep.history.push_back(rec);
            rep.u = u;
            rep.objective = j;
            rep.phi = est.value;
            rep.mu = mu;
            rep.kkt = rec.kkt;
            rep.iterations = it;
            rep.reason = rec.kkt <= cfg.kkt_tol ? "converged" : "stalled";
            rep.final_estimate = est;
            return rep;
        }
    }
}

}  // namespace srdcc::optim
