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
#include <cstdint>
#include <algorithm>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace srdcc::problems {

struct BilinearSettings {
    int n = 31;  // interior grid points per side
    double alpha_cov = 0.1;
    double lower = -kInf;
    double upper = 1.10;
    int constraint_stride = 1;
    bool lumped_mass = false;
};

// -Laplace(y) + u y = f + xi on the unit square, homogeneous Dirichlet data,
// piecewise-linear elements. The control lives on all nodes, the state on
// the interior nodes. xi = (alpha A + M)^{-1} L z with L L^T = M.
class BilinearProblem {
public:
    explicit BilinearProblem(const BilinearSettings& s = {})
        : settings_(s),
          grid_(mesh::build_grid(s.n + 2, mesh::ProblemKind::bilinear_dirichlet, s.constraint_stride)),
          cache_(std::make_shared<Cache>()) {
        if (!(s.lower < s.upper)) throw ConfigError("lower bound must be below the upper bound");
        fem_ = mesh::assemble_fem(grid_, s.lumped_mass);
        prior_ = field::domain_field_model(fem_, s.alpha_cov);
        mass_all_ = mesh::assemble_mass_full(grid_, s.lumped_mass);
        mass_all_fac_ = mesh::Factorization(mass_all_);
        points_ = grid_.constraint_free_indices();

        yd_.resize(grid_.num_free());
        f_.resize(grid_.num_free());
        const double c = 8.0 * M_PI * M_PI + 1.0;
        for (Index k = 0; k < grid_.num_free(); ++k) {
            const Index node = grid_.free_nodes[k];
            yd_[k] = std::sin(2.0 * M_PI * grid_.x1(node)) * std::sin(2.0 * M_PI * grid_.x2(node));
            f_[k] = c * yd_[k];
        }
        mf_ = fem_.mass.matrix * f_;
        u0_ = Vec::Ones(grid_.num_nodes());
        lower_ = Vec::Constant(static_cast<Index>(points_.size()), s.lower);
        upper_ = Vec::Constant(static_cast<Index>(points_.size()), s.upper);
    }

    const BilinearSettings& settings() const { return settings_; }
    const mesh::Grid& grid() const { return grid_; }
    const mesh::FemOperators& fem() const { return fem_; }
    const field::GaussianFieldModel& prior() const { return prior_; }
    const SpMat& control_mass_matrix() const { return mass_all_; }
    const std::vector<Index>& points() const { return points_; }
    const Vec& target() const { return yd_; }
    const Vec& source() const { return f_; }
    Index control_dim() const { return grid_.num_nodes(); }
    int chance_dof() const { return static_cast<int>(grid_.num_free()); }
    Vec nominal_control() const { return u0_; }
    const Vec& reference_control() const { return u0_; }

    // Factorization of A + M(u), cached for the most recent u.
    mesh::Factorization state_factorization(const Vec& u) const {
        if (u.size() != grid_.num_nodes())
            throw GridMismatchError("control has " + std::to_string(u.size()) + " entries, expected " +
                                    std::to_string(grid_.num_nodes()));
        std::lock_guard<std::mutex> lock(cache_->mutex);
        if (cache_->fac.valid() && cache_->u.size() == u.size() && cache_->u == u) return cache_->fac;
        const SpMat op = fem_.stiffness.matrix + mesh::assemble_control_mass(grid_, u).matrix;
        cache_->fac = mesh::Factorization(op);
        cache_->u = u;
        return cache_->fac;
    }

    Vec mean_state(const Vec& u) const { return state_factorization(u).solve(mf_); }

    Vec at_points(const Vec& field) const {
        Vec out(static_cast<Index>(points_.size()));
        for (std::size_t j = 0; j < points_.size(); ++j) out[static_cast<Index>(j)] = field[points_[j]];
        return out;
    }

    double objective(const Vec& u) const {
        const Vec d = u - u0_;
        return 0.5 * d.dot(mass_all_ * d);
    }
    Vec objective_gradient(const Vec& u) const { return mass_all_ * (u - u0_); }
    Vec apply_hessian(const Vec& x) const { return mass_all_ * x; }
    Vec solve_hessian(const Vec& g) const { return mass_all_fac_.solve(g); }
    double inner(const Vec& a, const Vec& b) const { return a.dot(mass_all_ * b); }
    double dual_norm(const Vec& g) const { return std::sqrt(std::max(0.0, g.dot(mass_all_fac_.solve(g)))); }

    // M (alpha A + M)^{-1} L v_i for every direction, i.e. the noise part of
    // the state-equation right-hand side. Independent of u, so cached per
    // sample set.
    std::shared_ptr<const Mat> noise_rhs(const field::SampleSet& samples) const {
        if (samples.dim() != chance_dof())
            throw DomainError("bilinear sample directions must have dimension " + std::to_string(chance_dof()));
        const std::uint64_t key = fingerprint(samples.directions);
        std::lock_guard<std::mutex> lock(cache_->mutex);
        auto it = cache_->noise.find(key);
        if (it != cache_->noise.end()) return it->second;
        const Mat lv = prior_.mass_factor * samples.directions;
        const Mat xi = prior_.precision_fac.solve(lv);
        auto rhs = std::make_shared<const Mat>(fem_.mass.matrix * xi);
        if (cache_->noise.size() > 8) cache_->noise.clear();
        cache_->noise.emplace(key, rhs);
        return rhs;
    }

    // Noise response w_i = (A + M(u))^{-1} M Ltilde v_i per direction.
    Mat noise_response(const Vec& u, const field::SampleSet& samples) const {
        const auto rhs = noise_rhs(samples);
        return state_factorization(u).solve(*rhs);
    }

    // Full state samples y_i = y0 + r_i w_i; requires radial draws.
    Mat state_samples(const Vec& u, const field::SampleSet& samples) const {
        if (!samples.has_radii()) throw DomainError("state samples need radial draws");
        Mat w = noise_response(u, samples);
        const Vec y0 = mean_state(u);
        for (Index i = 0; i < w.cols(); ++i) w.col(i) = y0 + samples.radii[i] * w.col(i);
        return w;
    }

    bool slater(const Vec& u) const {
        return srd::RayBounds(at_points(mean_state(u)), lower_, upper_, false).slater();
    }

    // SRD estimate along rays y0 + r w_i, with the gradient on request.
    srd::ProbabilityEstimate chance(const Vec& u, const field::SampleSet& samples, bool with_gradient) const {
        const Vec y0 = mean_state(u);
        const Mat w = noise_response(u, samples);
        const srd::RayBounds bounds(at_points(y0), lower_, upper_);
        const Index m = static_cast<Index>(points_.size());
        Vec delta(m);
        srd::RadialProfile profile;
        profile.num_points = m;
        profile.samples.reserve(static_cast<std::size_t>(samples.size()));
        for (Index i = 0; i < samples.size(); ++i) {
            for (Index j = 0; j < m; ++j) delta[j] = -w(points_[j], i);
            profile.samples.push_back(bounds.profile(delta.data()));
        }
        srd::ProbabilityEstimate e = srd::estimate_srd(profile, chance_dof(), true);
        if (with_gradient) e.gradient = grad_srd(u, y0, w, e);
        return e;
    }

    Index last_adjoint_solves() const { return cache_->adjoint_solves; }

    // Standard MC estimate from Gaussian draws of the prior, processed in
    // chunks of the sample stream so memory stays bounded.
    srd::ProbabilityEstimate chance_mc(const Vec& u, std::uint64_t seed, Index n) const {
        const field::SampleStream stream(field::SamplerKind::mc, seed, chance_dof());
        const mesh::Factorization fac = state_factorization(u);
        const Vec y0 = mean_state(u);
        srd::Moments mom;
        for (Index first = 0; first < n; first += kChunk) {
            const Index cnt = std::min(kChunk, n - first);
            Mat z(chance_dof(), cnt);
            stream.gaussians(first, z);
            const Mat noise = fem_.mass.matrix * prior_.precision_fac.solve((prior_.mass_factor * z).eval());
            const Mat y = fac.solve(noise);
            for (Index i = 0; i < cnt; ++i) {
                bool ok = true;
                for (std::size_t j = 0; j < points_.size() && ok; ++j) {
                    const double v = y0[points_[j]] + y(points_[j], i);
                    ok = v >= lower_[static_cast<Index>(j)] && v <= upper_[static_cast<Index>(j)];
                }
                mom.add(ok ? 1.0 : 0.0);
            }
        }
        srd::ProbabilityEstimate e;
        e.dof = chance_dof();
        srd::finish(e, mom);
        e.bernoulli_variance = e.value * (1.0 - e.value);
        return e;
    }

    // SRD estimate over the first n directions of a sample stream, in chunks.
    srd::ProbabilityEstimate chance_stream(const Vec& u, field::SamplerKind kind, std::uint64_t seed, Index n) const {
        const field::SampleStream stream(kind, seed, chance_dof());
        srd::Moments mom;
        srd::ProbabilityEstimate total;
        for (Index first = 0; first < n; first += kChunk) {
            field::SampleSet set;
            set.kind = kind;
            set.seed = seed;
            set.directions.resize(chance_dof(), std::min(kChunk, n - first));
            stream.directions(first, set.directions);
            const srd::ProbabilityEstimate part = chance(u, set, false);
            for (double c : part.contributions) mom.add(c);
            total.rho_inf = std::min(total.rho_inf, part.rho_inf);
            total.rho_sup = std::max(total.rho_sup, part.rho_sup);
            total.degenerate_count += part.degenerate_count;
        }
        total.dof = chance_dof();
        srd::finish(total, mom);
        return total;
    }

    // Increase the control uniformly until the mean state is strictly inside
    // the bounds.
    Vec restore(const Vec& u) const {
        if (slater(u)) return u;
        double shift = 1.0;
        for (int attempt = 0; attempt < 30; ++attempt, shift *= 2.0) {
            const Vec trial = u.array() + shift;
            if (slater(trial)) return trial;
        }
        throw InfeasibleStartError("could not restore a strictly feasible mean state");
    }

private:
    static constexpr Index kChunk = 16 * field::kSampleBlock;

    struct Cache {
        std::mutex mutex;
        Vec u;
        mesh::Factorization fac;
        std::map<std::uint64_t, std::shared_ptr<const Mat>> noise;
        Index adjoint_solves = 0;
    };

    static std::uint64_t fingerprint(const Mat& m) {
        std::uint64_t h = 1469598103934665603ULL;
        const auto* bytes = reinterpret_cast<const unsigned char*>(m.data());
        const std::size_t len = static_cast<std::size_t>(m.size()) * sizeof(double);
        for (std::size_t i = 0; i < len; ++i) h = (h ^ bytes[i]) * 1099511628211ULL;
        return h ^ (static_cast<std::uint64_t>(m.rows()) << 32) ^ static_cast<std::uint64_t>(m.cols());
    }

    // d rho_i = -q_j^T M(du) ytilde_i / delta_i, q_j = (A + M(u))^{-1} e_j and
    // ytilde_i = y0 + rho_i w_i the state where the ray leaves the set.
    // Contributions are grouped by active point: one solve for the mean
    // part and one per distinct active point.
    Vec grad_srd(const Vec& u, const Vec& y0, const Mat& w, srd::ProbabilityEstimate& e) const {
        const mesh::Factorization fac = state_factorization(u);
        const Index m = static_cast<Index>(points_.size());
        const double inv_n = 1.0 / static_cast<double>(e.profile.samples.size());
        Vec mean_rhs = Vec::Zero(grid_.num_free());
        std::map<Index, Vec> by_point;
        e.tangential_count = 0;
        for (std::size_t i = 0; i < e.profile.samples.size(); ++i) {
            const srd::RadialSample& s = e.profile.samples[i];
            if (!s.finite()) continue;
            if (std::abs(s.delta_active) < 1e-14) {
                ++e.tangential_count;
                continue;
            }
            const Index j = s.active < m ? s.active : s.active - m;
            const double c = -field::chi_pdf(s.rho, e.dof) / s.delta_active * inv_n;
            if (c == 0.0) continue;
            mean_rhs[points_[j]] += c;
            auto [it, inserted] = by_point.try_emplace(j, Vec::Zero(grid_.num_free()));
            it->second += (c * s.rho) * w.col(static_cast<Index>(i));
        }
        Index solves = 0;
        Vec grad = Vec::Zero(grid_.num_nodes());
        if (!by_point.empty()) {
            const Vec q_mean = fac.solve(mean_rhs);
            ++solves;
            grad += mesh::control_mass_derivative(grid_, q_mean, y0);
            Vec unit = Vec::Zero(grid_.num_free());
            for (const auto& [j, acc] : by_point) {
                unit[points_[j]] = 1.0;
                const Vec q = fac.solve(unit);
                unit[points_[j]] = 0.0;
                ++solves;
                grad += mesh::control_mass_derivative(grid_, q, acc);
            }
        }
        cache_->adjoint_solves = solves;
        return grad;
    }

    BilinearSettings settings_;
    mesh::Grid grid_;
    mesh::FemOperators fem_;
    field::GaussianFieldModel prior_;
    SpMat mass_all_;
    mesh::Factorization mass_all_fac_;
    std::vector<Index> points_;
    Vec yd_, f_, mf_, u0_, lower_, upper_;
    std::shared_ptr<Cache> cache_;
};

}  // namespace srdcc::problems
