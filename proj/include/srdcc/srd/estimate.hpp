#pragma once

#include "srdcc/core.hpp"
#include "srdcc/field/chi.hpp"
#include "srdcc/field/samples.hpp"
#include "srdcc/srd/radial.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace srdcc::srd {

// Running central moments (mean, M2, M3, M4), updated one value at a time.
// Identical inputs leave M2 exactly zero.
struct Moments {
    double n = 0.0, mean = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0;

    void add(double x) {
        const double n1 = n;
        n += 1.0;
        const double delta = x - mean;
        const double delta_n = delta / n;
        const double delta_n2 = delta_n * delta_n;
        const double term1 = delta * delta_n * n1;
        mean += delta_n;
        m4 += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * m2 - 4.0 * delta_n * m3;
        m3 += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * m2;
        m2 += term1;
    }

    double variance() const { return n > 1.0 ? m2 / (n - 1.0) : 0.0; }

    // Standard error of the sample variance, from the fourth central moment.
    double variance_standard_error() const {
        if (n < 2.0) return 0.0;
        const double mu2 = m2 / n, mu4 = m4 / n;
        return std::sqrt(std::max(0.0, mu4 - mu2 * mu2) / n);
    }
};

struct ProbabilityEstimate {
    double value = 0.0;
    Index n = 0;
    int dof = 0;
    double variance = 0.0;            // unbiased sample variance of the contributions
    double variance_se = 0.0;         // standard error of `variance`
    double bernoulli_variance = 0.0;  // p(1-p), indicator estimators only
    double rho_inf = kInf;
    double rho_sup = 0.0;
    Index degenerate_count = 0;
    Index tangential_count = 0;
    bool slater_warning = false;
    std::vector<double> contributions;  // optional
    RadialProfile profile;              // optional
    Vec gradient;                       // optional, control-space gradient

    double standard_error() const { return n > 0 ? std::sqrt(variance / static_cast<double>(n)) : 0.0; }
};

inline void finish(ProbabilityEstimate& e, const Moments& m) {
    e.n = static_cast<Index>(m.n);
    e.value = std::clamp(m.mean, 0.0, 1.0);
    e.variance = m.variance();
    e.variance_se = m.variance_standard_error();
}

// Estimate from precomputed radial profiles: mean of F_chi(rho_i).
inline ProbabilityEstimate estimate_srd(const RadialProfile& profile, int dof, bool keep_contributions = true) {
    ProbabilityEstimate e;
    e.dof = dof;
    Moments m;
    for (const RadialSample& s : profile.samples) {
        const double c = field::chi_cdf(s.rho, dof);
        m.add(c);
        e.rho_inf = std::min(e.rho_inf, s.rho);
        e.rho_sup = std::max(e.rho_sup, s.rho);
        if (s.degenerate) ++e.degenerate_count;
        if (keep_contributions) e.contributions.push_back(c);
    }
    finish(e, m);
    e.profile = profile;
    return e;
}

// Joint pointwise bounds on a state that is affine in the KL coordinates:
// state(zeta) = y0 - G zeta at the constraint points, with zeta standard
// normal in R^K (the KL scaling sqrt(lambda_k) is folded into G).
struct RaySystem {
    RayBounds bounds;
    Mat g;  // M x K

    int dim() const { return static_cast<int>(g.cols()); }
};

struct StreamOptions {
    bool keep_contributions = false;
    bool keep_profile = false;          // SRD only: per-sample rho, active index, delta
    std::vector<Index> checkpoints;     // sorted sample counts at which to snapshot the running estimate
    Index chunk_blocks = 32;            // blocks evaluated between sequential reductions
};

namespace detail {

// Evaluate `per_block(block_first, count, out_values, out_profile)` over all
// blocks, possibly in parallel, then reduce in canonical sample order.
template <class PerBlock>
ProbabilityEstimate stream_reduce(Index n, int dof, const StreamOptions& opt, bool srd, PerBlock&& per_block,
                                  std::vector<ProbabilityEstimate>* snapshots) {
    ProbabilityEstimate e;
    e.dof = dof;
    Moments m;
    const Index block = field::kSampleBlock;
    const Index nblocks = (n + block - 1) / block;
    const Index chunk = std::max<Index>(1, opt.chunk_blocks);
    std::vector<double> values;
    std::vector<RadialSample> prof;
    std::size_t next_cp = 0;
    if (opt.keep_contributions) e.contributions.reserve(static_cast<std::size_t>(n));
    if (opt.keep_profile) e.profile.samples.reserve(static_cast<std::size_t>(n));

    for (Index c0 = 0; c0 < nblocks; c0 += chunk) {
        const Index c1 = std::min(nblocks, c0 + chunk);
        const Index first = c0 * block;
        const Index last = std::min(n, c1 * block);
        values.assign(static_cast<std::size_t>(last - first), 0.0);
        prof.assign(opt.keep_profile || srd ? static_cast<std::size_t>(last - first) : 0, RadialSample{});

#pragma omp parallel for schedule(dynamic, 1)
        for (Index b = c0; b < c1; ++b) {
            const Index bf = b * block;
            const Index cnt = std::min(block, n - bf);
            per_block(bf, cnt, values.data() + (bf - first), prof.empty() ? nullptr : prof.data() + (bf - first));
        }

        for (Index i = first; i < last; ++i) {
            const double v = values[static_cast<std::size_t>(i - first)];
            m.add(v);
            if (opt.keep_contributions) e.contributions.push_back(v);
            if (srd) {
                const RadialSample& s = prof[static_cast<std::size_t>(i - first)];
                e.rho_inf = std::min(e.rho_inf, s.rho);
                e.rho_sup = std::max(e.rho_sup, s.rho);
                if (s.degenerate) ++e.degenerate_count;
                if (opt.keep_profile) e.profile.samples.push_back(s);
            }
            while (snapshots && next_cp < opt.checkpoints.size() && opt.checkpoints[next_cp] == i + 1) {
                ProbabilityEstimate snap;
                snap.dof = dof;
                snap.rho_inf = e.rho_inf;
                snap.rho_sup = e.rho_sup;
                finish(snap, m);
                snapshots->push_back(snap);
                ++next_cp;
            }
        }
    }
    finish(e, m);
    if (!srd) e.bernoulli_variance = e.value * (1.0 - e.value);
    return e;
}

}  // namespace detail

// SRD estimate N^{-1} sum F_chi(rho(v_i)) over the first n directions of
// `stream`.
inline ProbabilityEstimate estimate_srd(const RaySystem& sys, const field::SampleStream& stream, Index n,
                                        const StreamOptions& opt = {},
                                        std::vector<ProbabilityEstimate>* snapshots = nullptr) {
    if (stream.dim() != sys.dim()) throw DomainError("sample dimension does not match the ray system");
    const int dof = sys.dim();
    const bool exact = opt.keep_profile;
    auto per_block = [&](Index first, Index cnt, double* out, RadialSample* prof) {
        Mat v(dof, cnt);
        stream.directions(first, v);
        const Mat delta = sys.g * v;
        for (Index i = 0; i < cnt; ++i) {
            RadialSample s;
            if (exact) {
                s = sys.bounds.profile(delta.col(i).data());
            } else {
                s.rho = sys.bounds.rho(delta.col(i).data());
            }
            out[i] = field::chi_cdf(s.rho, dof);
            prof[i] = s;
        }
    };
    ProbabilityEstimate e = detail::stream_reduce(n, dof, opt, true, per_block, snapshots);
    return e;
}

// Same estimator over an explicit sample set (columns are unit directions).
inline ProbabilityEstimate estimate_srd(const RaySystem& sys, const field::SampleSet& samples,
                                        bool keep_profile = true) {
    if (samples.dim() != sys.dim()) throw DomainError("sample dimension does not match the ray system");
    const Mat delta = sys.g * samples.directions;
    RadialProfile p;
    p.num_points = sys.bounds.size();
    p.samples.reserve(static_cast<std::size_t>(samples.size()));
    for (Index i = 0; i < samples.size(); ++i) p.samples.push_back(sys.bounds.profile(delta.col(i).data()));
    ProbabilityEstimate e = estimate_srd(p, sys.dim(), true);
    if (!keep_profile) e.profile = {};
    return e;
}

// Standard MC estimate: fraction of Gaussian draws zeta with y0 - G zeta
// inside the bounds. Does not require the mean to be feasible.
inline ProbabilityEstimate estimate_mc(const RaySystem& sys, const field::SampleStream& stream, Index n,
                                       const StreamOptions& opt = {},
                                       std::vector<ProbabilityEstimate>* snapshots = nullptr) {
    if (stream.dim() != sys.dim()) throw DomainError("sample dimension does not match the ray system");
    const int dof = sys.dim();
    auto per_block = [&](Index first, Index cnt, double* out, RadialSample*) {
        Mat z(dof, cnt);
        stream.gaussians(first, z);
        const Mat delta = sys.g * z;
        for (Index i = 0; i < cnt; ++i) out[i] = sys.bounds.contains(delta.col(i).data()) ? 1.0 : 0.0;
    };
    StreamOptions o = opt;
    o.keep_profile = false;
    ProbabilityEstimate e = detail::stream_reduce(n, dof, o, false, per_block, snapshots);
    e.slater_warning = !sys.bounds.slater();
    return e;
}

// MC estimate for an arbitrary feasibility predicate on Gaussian draws.
inline ProbabilityEstimate estimate_mc(const std::function<bool(const Vec&)>& feasible, const Mat& z) {
    ProbabilityEstimate e;
    e.dof = static_cast<int>(z.rows());
    Moments m;
    for (Index i = 0; i < z.cols(); ++i) m.add(feasible(z.col(i)) ? 1.0 : 0.0);
    finish(e, m);
    e.bernoulli_variance = e.value * (1.0 - e.value);
    return e;
}

struct VarianceReport {
    double p_srd = 0.0, p_mc = 0.0;
    double v_srd = 0.0, v_mc = 0.0;
    double v_srd_se = 0.0, v_mc_se = 0.0;
    double ratio = 0.0;  // V_SRD / V_MC
    double lemma1_bound = 0.0;
    double lemma2_bound = 0.0;
    bool lemma1_violated = false;
    bool lemma2_violated = false;
};

// Elementary-estimator variances and the two analytic upper bounds on V_SRD,
// evaluated with the empirical p, rho_inf and rho_sup of the SRD estimate.
inline VarianceReport variance_report(const ProbabilityEstimate& srd, const ProbabilityEstimate& mc) {
    VarianceReport r;
    r.p_srd = srd.value;
    r.p_mc = mc.value;
    r.v_srd = srd.variance;
    r.v_mc = mc.variance;
    r.v_srd_se = srd.variance_se;
    r.v_mc_se = mc.variance_se;
    r.ratio = r.v_mc > 0.0 ? r.v_srd / r.v_mc : (r.v_srd > 0.0 ? kInf : 0.0);
    const int dof = srd.dof;
    const double p = srd.value;
    const double f_inf = field::chi_cdf(srd.rho_inf, dof);
    const double f_sup = field::chi_cdf(srd.rho_sup, dof);
    r.lemma1_bound = std::min((1.0 - p) * (p - f_inf), p * (f_sup - p));
    const double lip = field::chi_max_density(dof);
    const double spread = srd.rho_sup - srd.rho_inf;
    r.lemma2_bound = std::isfinite(spread) ? lip * lip * spread * spread : kInf;
    r.lemma1_violated = r.v_srd > r.lemma1_bound + 3.0 * r.v_srd_se;
    r.lemma2_violated = r.v_srd > r.lemma2_bound + 3.0 * r.v_srd_se;
    return r;
}

}  // namespace srdcc::srd
