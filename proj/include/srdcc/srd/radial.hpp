#pragma once

#include "srdcc/core.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace srdcc::srd {

inline constexpr Index kNoIndex = -1;
inline constexpr double kDegeneracyTol = 1e-9;

// Ray length for one direction. `active` is j for the upper bound at point j
// and M + j for the lower bound; kNoIndex when the ray never leaves the
// feasible set.
struct RadialSample {
    double rho = kInf;
    Index active = kNoIndex;
    double delta_active = 0.0;  // delta at the active point
    bool degenerate = false;

    bool finite() const { return active != kNoIndex; }
};

struct RadialProfile {
    Index num_points = 0;
    std::vector<RadialSample> samples;

    Index degenerate_count() const {
        return static_cast<Index>(std::count_if(samples.begin(), samples.end(),
                                                [](const RadialSample& s) { return s.degenerate; }));
    }
};

// Pointwise bounds around a mean state y0 along rays y0 - r * delta.
// Stores reciprocal slacks so that the hit "rate" of point j is
//   t_j = max(-delta_j / (upper_j - y0_j), delta_j / (y0_j - lower_j))
// and the ray length is 1 / max_j t_j.
class RayBounds {
public:
    RayBounds() = default;

    RayBounds(Vec y0, Vec lower, Vec upper, bool require_slater = true)
        : y0_(std::move(y0)), lower_(std::move(lower)), upper_(std::move(upper)) {
        const Index m = y0_.size();
        if (lower_.size() != m || upper_.size() != m) throw DomainError("bound vectors do not match the mean state");
        Index worst = kNoIndex;
        double worst_margin = kInf;
        for (Index j = 0; j < m; ++j) {
            const double margin = std::min(upper_[j] - y0_[j], y0_[j] - lower_[j]);
            if (margin < worst_margin) {
                worst_margin = margin;
                worst = j;
            }
        }
        slater_ = m == 0 || worst_margin > 0.0;
        worst_point_ = worst;
        worst_margin_ = worst_margin;
        if (require_slater && !slater_) throw SlaterError(worst, worst_margin);
        upper_slack_ = upper_ - y0_;
        lower_slack_ = y0_ - lower_;
        inv_upper_ = upper_slack_.cwiseInverse();
        inv_lower_ = lower_slack_.cwiseInverse();
    }

    Index size() const { return y0_.size(); }
    bool slater() const { return slater_; }
    Index worst_point() const { return worst_point_; }
    double worst_margin() const { return worst_margin_; }
    const Vec& y0() const { return y0_; }
    const Vec& lower() const { return lower_; }
    const Vec& upper() const { return upper_; }

    // 1 / rho for one ray; zero when no bound is hit.
    double max_rate(const double* delta) const {
        const Eigen::Map<const Vec> d(delta, size());
        const double t = ((-d.array()) * inv_upper_.array()).max(d.array() * inv_lower_.array()).maxCoeff();
        return t > 0.0 ? t : 0.0;
    }

    double rho(const double* delta) const {
        const double t = max_rate(delta);
        return t > 0.0 ? 1.0 / t : kInf;
    }

    // True when y0 - delta satisfies every bound.
    bool contains(const double* delta) const {
        const Eigen::Map<const Vec> d(delta, size());
        return ((-d.array() - upper_slack_.array()).max(d.array() - lower_slack_.array())).maxCoeff() <= 0.0;
    }

    // Exact ray length with active index and degeneracy flag.
    RadialSample profile(const double* delta) const {
        const Index m = size();
        double t1 = 0.0, t2 = 0.0;
        Index best = kNoIndex;
        for (Index j = 0; j < m; ++j) {
            const double d = delta[j];
            double t;
            Index idx;
            if (d < 0.0) {
                t = -d * inv_upper_[j];
                idx = j;
            } else if (d > 0.0) {
                t = d * inv_lower_[j];
                idx = m + j;
            } else {
                continue;
            }
            if (t > t1) {
                t2 = t1;
                t1 = t;
                best = idx;
            } else if (t > t2) {
                t2 = t;
            }
        }
        RadialSample s;
        if (best == kNoIndex || t1 <= 0.0) return s;
        const Index j = best < m ? best : best - m;
        const double bound = best < m ? upper_[j] : lower_[j];
        s.active = best;
        s.delta_active = delta[j];
        s.rho = (y0_[j] - bound) / delta[j];
        s.degenerate = t2 > 0.0 && (t1 - t2) <= kDegeneracyTol * t1;
        return s;
    }

private:
    Vec y0_, lower_, upper_;
    Vec upper_slack_, lower_slack_, inv_upper_, inv_lower_;
    bool slater_ = true;
    Index worst_point_ = kNoIndex;
    double worst_margin_ = kInf;
};

// Radial profile of each column of `deltas` (M x N).
inline RadialProfile radial_profile(const Vec& y0, const Mat& deltas, const Vec& lower, const Vec& upper) {
    const RayBounds bounds(y0, lower, upper);
    if (deltas.rows() != y0.size()) throw DomainError("delta fields do not match the constraint points");
    RadialProfile p;
    p.num_points = y0.size();
    p.samples.reserve(static_cast<std::size_t>(deltas.cols()));
    for (Index i = 0; i < deltas.cols(); ++i) p.samples.push_back(bounds.profile(deltas.col(i).data()));
    return p;
}

}  // namespace srdcc::srd
