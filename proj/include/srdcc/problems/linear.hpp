#pragma once

#include "srdcc/core.hpp"
#include "srdcc/field/chi.hpp"
#include "srdcc/field/kl.hpp"
#include "srdcc/field/samples.hpp"
#include "srdcc/mesh/factorization.hpp"
#include "srdcc/mesh/grid.hpp"
#include "srdcc/mesh/operators.hpp"
#include "srdcc/srd/estimate.hpp"

#include <cmath>
#include <memory>
#include <mutex>
#include <string>

namespace srdcc::problems {

struct LinearSettings {
    int n = 128;  // interior grid points per side
    int K = 20;
    double gamma = 4.0;
    double alpha_reg = 1e-5;
    double lower = -0.3;
    double upper = 0.3;
    int constraint_stride = 1;
};

// Tracking problem -Laplace(y) = f + u on the unit square with homogeneous
// Dirichlet data on x1 = 1, x2 = 0, x2 = 1 and a Gaussian Neumann flux xi on
// x1 = 0. Unknowns and controls live on the free nodes; the chance
// constraint is imposed at the interior nodes.
class LinearProblem {
public:
    explicit LinearProblem(const LinearSettings& s = {})
        : settings_(s),
          grid_(mesh::build_grid(s.n + 2, mesh::ProblemKind::linear_neumann, s.constraint_stride,
                                 mesh::ConstraintRegion::interior)) {
        if (!(s.lower < s.upper)) throw ConfigError("lower bound must be below the upper bound");
        if (!(s.alpha_reg > 0.0)) throw ConfigError("regularization must be positive");
        a_ = mesh::assemble_laplacian_mixed(grid_);
        a_fac_ = mesh::factorize(a_);
        b_ = mesh::boundary_injection_operator(grid_);
        row_scale_ = mesh::neumann_row_scale(grid_);
        weight_ = grid_.h * grid_.h;
        points_ = grid_.constraint_free_indices();

        xi_model_ = field::boundary_field_model(s.gamma, grid_.n);
        state_kl_ = field::state_kl(a_fac_, b_.matrix, xi_model_, static_cast<int>(xi_model_.dim()), weight_);
        if (s.K < 1 || s.K > state_kl_.size())
            throw TruncationError("K = " + std::to_string(s.K) + " exceeds the " +
                                  std::to_string(state_kl_.size()) + " available state modes");
        const Mat factor = state_kl_.factor();
        g_full_.resize(static_cast<Index>(points_.size()), factor.cols());
        for (std::size_t j = 0; j < points_.size(); ++j) g_full_.row(static_cast<Index>(j)) = factor.row(points_[j]);

        yd_.resize(grid_.num_free());
        nominal_.resize(grid_.num_free());
        for (Index k = 0; k < grid_.num_free(); ++k) {
            const Index node = grid_.free_nodes[k];
            const double x1 = grid_.x1(node), x2 = grid_.x2(node);
            yd_[k] = 0.1 * std::cos(2.0 * M_PI * x1) * std::sin(2.0 * M_PI * x2);
            nominal_[k] = 0.2 * std::sin(2.0 * M_PI * x1) * std::cos(M_PI * x2);
        }
        f_ = Vec::Zero(grid_.num_free());
        xi0_ = Vec::Zero(xi_model_.dim());
        lower_ = Vec::Constant(static_cast<Index>(points_.size()), s.lower);
        upper_ = Vec::Constant(static_cast<Index>(points_.size()), s.upper);
    }

    const LinearSettings& settings() const { return settings_; }
    const mesh::Grid& grid() const { return grid_; }
    const mesh::DiscreteOperator& laplacian() const { return a_; }
    const mesh::Factorization& laplacian_factorization() const { return a_fac_; }
    const mesh::DiscreteOperator& injection() const { return b_; }
    const Vec& row_scale() const { return row_scale_; }
    const field::GaussianFieldModel& input_model() const { return xi_model_; }
    const field::KLBasis& state_basis() const { return state_kl_; }
    const std::vector<Index>& points() const { return points_; }
    const Vec& target() const { return yd_; }
    double weight() const { return weight_; }
    Index control_dim() const { return grid_.num_free(); }
    int chance_dof() const { return settings_.K; }
    Vec nominal_control() const { return nominal_; }
    Vec lower_bounds() const { return lower_; }
    Vec upper_bounds() const { return upper_; }

    // Sum of all state-KL eigenvalues, the trace of the state covariance in
    // the h^2-weighted inner product.
    double trace() const { return state_kl_.eigenvalues.sum(); }
    // Constant gap between the expected tracking term and the mean-state one.
    double trace_term() const { return 0.5 * trace(); }

    // State factor (free nodes x all modes): y = y0 - factor * z, z ~ N(0, I).
    Mat state_factor() const { return state_kl_.factor(); }

    Vec mean_state(const Vec& u) const {
        check_control(u);
        const Vec rhs = row_scale_.cwiseProduct(f_ + u) + b_.apply(xi0_);
        return a_fac_.solve(rhs);
    }

    Vec at_points(const Vec& field) const {
        Vec out(static_cast<Index>(points_.size()));
        for (std::size_t j = 0; j < points_.size(); ++j) out[static_cast<Index>(j)] = field[points_[j]];
        return out;
    }

    double objective(const Vec& u) const {
        const Vec r = mean_state(u) - yd_;
        return 0.5 * weight_ * r.squaredNorm() + 0.5 * settings_.alpha_reg * weight_ * u.squaredNorm();
    }

    Vec objective_gradient(const Vec& u) const {
        const Vec r = mean_state(u) - yd_;
        const Vec q = a_fac_.solve((weight_ * r).eval());
        return row_scale_.cwiseProduct(q) + settings_.alpha_reg * weight_ * u;
    }

    // Exact objective Hessian h^2 (D A^{-2} D + alpha I) and its inverse
    // h^{-2} D^{-1} A (I + alpha A D^{-2} A)^{-1} A D^{-1}.
    Vec apply_hessian(const Vec& x) const {
        const Vec t = a_fac_.solve(row_scale_.cwiseProduct(x));
        const Vec t2 = a_fac_.solve(t);
        return weight_ * (row_scale_.cwiseProduct(t2) + settings_.alpha_reg * x);
    }

    Vec solve_hessian(const Vec& g) const {
        ensure_hessian_factor();
        const Vec t = a_.matrix * g.cwiseQuotient(row_scale_);
        const Vec s = hess_fac_.solve(t);
        return (a_.matrix * s).cwiseQuotient(row_scale_) / weight_;
    }

    double inner(const Vec& a, const Vec& b) const { return weight_ * a.dot(b); }
    double dual_norm(const Vec& g) const { return g.norm() / std::sqrt(weight_); }

    srd::RaySystem ray_system(const Vec& u, int k = -1, bool require_slater = true) const {
        if (k < 0) k = settings_.K;
        if (k > g_full_.cols()) throw TruncationError("requested more KL modes than available");
        srd::RaySystem sys;
        sys.bounds = srd::RayBounds(at_points(mean_state(u)), lower_, upper_, require_slater);
        sys.g = g_full_.leftCols(k);
        return sys;
    }

    bool slater(const Vec& u) const { return srd::RayBounds(at_points(mean_state(u)), lower_, upper_, false).slater(); }

    srd::ProbabilityEstimate chance(const Vec& u, const field::SampleSet& samples, bool with_gradient) const {
        const srd::RaySystem sys = ray_system(u, samples.dim());
        srd::ProbabilityEstimate e = srd::estimate_srd(sys, samples, true);
        if (with_gradient) e.gradient = grad_srd(e, samples.size());
        return e;
    }

    // Gradient of the SRD estimate with respect to the control from a stored
    // radial profile. One adjoint solve.
    Vec grad_srd(srd::ProbabilityEstimate& e, Index n) const {
        const Index m = static_cast<Index>(points_.size());
        Vec rhs = Vec::Zero(grid_.num_free());
        e.tangential_count = 0;
        for (const srd::RadialSample& s : e.profile.samples) {
            if (!s.finite()) continue;
            if (std::abs(s.delta_active) < 1e-14) {
                ++e.tangential_count;
                continue;
            }
            const Index j = s.active < m ? s.active : s.active - m;
            rhs[points_[j]] += field::chi_pdf(s.rho, e.dof) / s.delta_active;
        }
        rhs /= static_cast<double>(n);
        return row_scale_.cwiseProduct(a_fac_.solve(rhs));
    }

    // Control whose mean state is the bound midpoint (or zero when that is
    // admissible) on every free node. Used to restore the Slater condition.
    Vec restoration_target() const {
        const double lo = settings_.lower, up = settings_.upper;
        double c = 0.0;
        if (!(lo < 0.0 && 0.0 < up)) {
            if (std::isfinite(lo) && std::isfinite(up)) c = 0.5 * (lo + up);
            else if (std::isfinite(up)) c = up - 1.0;
            else c = lo + 1.0;
        }
        const Vec y = Vec::Constant(grid_.num_free(), c);
        return (a_.apply(y) - b_.apply(xi0_)).cwiseQuotient(row_scale_) - f_;
    }

    Vec restore(const Vec& u) const {
        if (slater(u)) return u;
        const Vec target = restoration_target();
        for (int k = 1; k <= 16; ++k) {
            const double t = k / 16.0;
            const Vec trial = (1.0 - t) * u + t * target;
            if (slater(trial)) return trial;
        }
        throw InfeasibleStartError("could not restore a strictly feasible mean state");
    }

private:
    void check_control(const Vec& u) const {
        if (u.size() != grid_.num_free())
            throw GridMismatchError("control has " + std::to_string(u.size()) + " entries, expected " +
                                    std::to_string(grid_.num_free()));
    }

    void ensure_hessian_factor() const {
        std::lock_guard<std::mutex> lock(*hess_mutex_);
        if (hess_fac_.valid()) return;
        const Vec inv_d2 = row_scale_.cwiseAbs2().cwiseInverse();
        SpMat p = a_.matrix * inv_d2.asDiagonal() * a_.matrix;
        p *= settings_.alpha_reg;
        SpMat eye(p.rows(), p.cols());
        eye.setIdentity();
        p += eye;
        const SpMat sym = 0.5 * (p + SpMat(p.transpose()));
        hess_fac_ = mesh::Factorization(sym);
    }

    LinearSettings settings_;
    mesh::Grid grid_;
    mesh::DiscreteOperator a_, b_;
    mesh::Factorization a_fac_;
    mutable mesh::Factorization hess_fac_;
    std::shared_ptr<std::mutex> hess_mutex_ = std::make_shared<std::mutex>();
    Vec row_scale_;
    double weight_ = 0.0;
    std::vector<Index> points_;
    field::GaussianFieldModel xi_model_;
    field::KLBasis state_kl_;
    Mat g_full_;
    Vec yd_, nominal_, f_, xi0_, lower_, upper_;
};

inline Vec grad_srd_linear(const LinearProblem& problem, srd::ProbabilityEstimate& estimate, Index n) {
    return problem.grad_srd(estimate, n);
}

}  // namespace srdcc::problems
