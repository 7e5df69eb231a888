#pragma once

#include "srdcc/core.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace srdcc::optim {

// Damped BFGS approximation B_k built from an initial operator B0 and a list
// of (s, y) pairs. B_k x uses the product form
//   B_k = B0 - sum a_i a_i^T + sum b_i b_i^T,
// and B_k^{-1} g uses the two-loop recursion with H0 = B0^{-1}. When the pair
// list is full it is cleared, which keeps both representations consistent.
class DampedBfgs {
public:
    using Operator = std::function<Vec(const Vec&)>;

    DampedBfgs(Operator b0_apply, Operator b0_solve, std::size_t memory)
        : b0_apply_(std::move(b0_apply)), b0_solve_(std::move(b0_solve)), memory_(memory) {}

    std::size_t size() const { return s_.size(); }
    std::size_t restarts() const { return restarts_; }

    void reset() {
        s_.clear();
        y_.clear();
        a_.clear();
        b_.clear();
        rho_.clear();
    }

    Vec apply(const Vec& x) const {
        Vec r = b0_apply_(x);
        for (std::size_t i = 0; i < s_.size(); ++i) r += b_[i].dot(x) * b_[i] - a_[i].dot(x) * a_[i];
        return r;
    }

    Vec solve(const Vec& g) const {
        const std::size_t k = s_.size();
        std::vector<double> alpha(k);
        Vec q = g;
        for (std::size_t i = k; i-- > 0;) {
            alpha[i] = rho_[i] * s_[i].dot(q);
            q -= alpha[i] * y_[i];
        }
        Vec r = b0_solve_(q);
        for (std::size_t i = 0; i < k; ++i) {
            const double beta = rho_[i] * y_[i].dot(r);
            r += (alpha[i] - beta) * s_[i];
        }
        return r;
    }

    // Powell-damped update. Returns false when the pair was skipped.
    bool update(const Vec& s, Vec y) {
        if (memory_ > 0 && s_.size() >= memory_) {
            reset();
            ++restarts_;
        }
        const Vec bs = apply(s);
        const double sbs = s.dot(bs);
        if (!(sbs > 0.0) || !std::isfinite(sbs)) return false;
        double sy = s.dot(y);
        if (sy < 0.2 * sbs) {
            const double theta = 0.8 * sbs / (sbs - sy);
            y = theta * y + (1.0 - theta) * bs;
            sy = s.dot(y);
        }
        if (!(sy > 1e-300)) return false;
        s_.push_back(s);
        y_.push_back(y);
        a_.push_back(bs / std::sqrt(sbs));
        b_.push_back(y / std::sqrt(sy));
        rho_.push_back(1.0 / sy);
        return true;
    }

private:
    Operator b0_apply_, b0_solve_;
    std::size_t memory_;
    std::size_t restarts_ = 0;
    std::vector<Vec> s_, y_, a_, b_;
    std::vector<double> rho_;
};

}  // namespace srdcc::optim
