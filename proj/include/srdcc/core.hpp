#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace srdcc {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidGridError : public Error {
public:
    using Error::Error;
};

class GridMismatchError : public Error {
public:
    using Error::Error;
};

class DefinitenessError : public Error {
public:
    using Error::Error;
};

class TruncationError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class InfeasibleStartError : public Error {
public:
    using Error::Error;
};

class SlaterError : public Error {
public:
    SlaterError(Index worst_point, double margin)
        : Error("mean state violates the bounds at constraint point " +
                std::to_string(worst_point) + " (margin " + std::to_string(margin) + ")"),
          worst_point_(worst_point),
          margin_(margin) {}

    Index worst_point() const noexcept { return worst_point_; }
    double margin() const noexcept { return margin_; }

private:
    Index worst_point_;
    double margin_;
};

// 64-bit mixer used to derive independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace srdcc
