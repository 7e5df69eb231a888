#pragma once

#include "srdcc/core.hpp"

#include <Eigen/SparseCholesky>

#include <memory>

namespace srdcc::mesh {

// Sparse Cholesky factorization of a symmetric positive definite operator.
// Copies share the same immutable factor, and solve() is safe to call
// concurrently.
class Factorization {
public:
    using Solver = Eigen::SimplicialLLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>>;

    Factorization() = default;

    explicit Factorization(const SpMat& a) {
        if (a.rows() != a.cols()) throw DefinitenessError("cannot factorize a non-square operator");
        const SpMat diff = SpMat(a.transpose()) - a;
        for (Index k = 0; k < diff.outerSize(); ++k)
            for (SpMat::InnerIterator it(diff, k); it; ++it)
                if (it.value() != 0.0) throw DefinitenessError("operator is not symmetric");
        auto solver = std::make_shared<Solver>(a);
        if (solver->info() != Eigen::Success)
            throw DefinitenessError("operator is not positive definite (Cholesky breakdown)");
        solver_ = std::move(solver);
        dim_ = a.rows();
    }

    bool valid() const { return static_cast<bool>(solver_); }
    bool self_adjoint() const { return true; }
    Index dim() const { return dim_; }
    const Solver& solver() const { return *solver_; }

    template <class Rhs>
    auto solve(const Eigen::MatrixBase<Rhs>& rhs) const {
        using Result = Eigen::Matrix<double, Rhs::RowsAtCompileTime, Rhs::ColsAtCompileTime>;
        if (!solver_) throw Error("solve called on an empty factorization");
        Result x = solver_->solve(rhs);
        return x;
    }

private:
    std::shared_ptr<const Solver> solver_;
    Index dim_ = 0;
};

inline Vec solve(const Factorization& fac, const Vec& rhs) { return fac.solve(rhs); }

}  // namespace srdcc::mesh
