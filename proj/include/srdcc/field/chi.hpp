#pragma once

#include "srdcc/core.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <random>

namespace srdcc::field {

// Chi distribution with `dof` degrees of freedom, i.e. the law of the norm of
// a standard normal vector. The radius +infinity is a valid argument.

inline void check_chi_args(double r, int dof) {
    if (dof < 1) throw DomainError("chi distribution needs dof >= 1");
    if (!(r >= 0.0)) throw DomainError("chi distribution is defined for r >= 0");
}

inline double chi_cdf(double r, int dof) {
    check_chi_args(r, dof);
    if (r == kInf) return 1.0;
    if (r == 0.0) return 0.0;
    return boost::math::gamma_p(0.5 * dof, 0.5 * r * r);
}

// Survival function 1 - F, accurate where F is close to 1.
inline double chi_sf(double r, int dof) {
    check_chi_args(r, dof);
    if (r == kInf) return 0.0;
    if (r == 0.0) return 1.0;
    return boost::math::gamma_q(0.5 * dof, 0.5 * r * r);
}

inline double chi_pdf(double r, int dof) {
    check_chi_args(r, dof);
    if (r == kInf) return 0.0;
    if (r == 0.0) return dof == 1 ? std::sqrt(2.0 / M_PI) : 0.0;
    // d/dr P(k/2, r^2/2) = r * P'(k/2, r^2/2)
    return r * boost::math::gamma_p_derivative(0.5 * dof, 0.5 * r * r);
}

inline double chi_quantile(double p, int dof) {
    if (dof < 1) throw DomainError("chi distribution needs dof >= 1");
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("chi quantile needs p in [0, 1]");
    if (p == 1.0) return kInf;
    if (p == 0.0) return 0.0;
    return std::sqrt(2.0 * boost::math::gamma_p_inv(0.5 * dof, p));
}

// Radius with survival probability q.
inline double chi_quantile_upper(double q, int dof) {
    if (dof < 1) throw DomainError("chi distribution needs dof >= 1");
    if (!(q >= 0.0 && q <= 1.0)) throw DomainError("chi quantile needs q in [0, 1]");
    if (q == 0.0) return kInf;
    if (q == 1.0) return 0.0;
    return std::sqrt(2.0 * boost::math::gamma_q_inv(0.5 * dof, q));
}

// Maximum of the density, attained at sqrt(dof - 1).
inline double chi_max_density(int dof) { return chi_pdf(std::sqrt(static_cast<double>(dof - 1)), dof); }

template <class Rng>
double chi_sample(Rng& rng, int dof) {
    if (dof < 1) throw DomainError("chi distribution needs dof >= 1");
    std::chi_squared_distribution<double> chi2(static_cast<double>(dof));
    return std::sqrt(chi2(rng));
}

}  // namespace srdcc::field
