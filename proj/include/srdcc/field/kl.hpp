#pragma once

#include "srdcc/core.hpp"
#include "srdcc/mesh/factorization.hpp"
#include "srdcc/mesh/operators.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace srdcc::field {

enum class KLTarget { input_xi, state_y };

// Truncated Karhunen-Loeve basis. Modes are orthonormal with respect to the
// inner product (a, b) = weight * sum_i a_i b_i.
struct KLBasis {
    KLTarget target = KLTarget::input_xi;
    Vec eigenvalues;  // non-increasing, non-negative
    Mat modes;        // one discrete eigenfunction per column
    double weight = 1.0;
    bool rank_deficient = false;  // fewer modes than requested were available

    int size() const { return static_cast<int>(eigenvalues.size()); }

    // Columns sqrt(lambda_k) e_k, so that factor * factor^T is the covariance.
    Mat factor() const { return modes * eigenvalues.cwiseSqrt().asDiagonal(); }

    KLBasis truncated(int k) const {
        if (k < 0 || k > size())
            throw TruncationError("cannot truncate a basis of " + std::to_string(size()) + " modes to " +
                                  std::to_string(k));
        KLBasis out = *this;
        out.eigenvalues = eigenvalues.head(k);
        out.modes = modes.leftCols(k);
        return out;
    }

    // Largest deviation of the weighted Gram matrix from the identity.
    double orthonormality_defect() const {
        const Mat gram = weight * (modes.transpose() * modes);
        return (gram - Mat::Identity(size(), size())).cwiseAbs().maxCoeff();
    }

    void check() const {
        for (int k = 0; k < size(); ++k) {
            if (eigenvalues[k] < 0.0) throw Error("KL eigenvalue is negative");
            if (k > 0 && eigenvalues[k] > eigenvalues[k - 1]) throw Error("KL eigenvalues are not sorted");
        }
        if (size() > 0 && orthonormality_defect() > 1e-8) throw Error("KL modes are not orthonormal");
    }
};

// Covariance gamma * (-d^2/dx2^2)^{-1} on (0, 1) with homogeneous Dirichlet
// ends. Eigenpairs are sin(k pi x2) with eigenvalue gamma / (k pi)^2, sampled
// at the n_boundary - 2 interior points of a uniform boundary grid.
inline KLBasis boundary_kl(double gamma, int n_boundary, int k_modes) {
    if (!(gamma > 0.0)) throw DomainError("covariance scale gamma must be positive");
    if (n_boundary < 3) throw InvalidGridError("boundary grid needs at least 3 points");
    const int nb = n_boundary - 2;
    if (k_modes > nb || k_modes < 1)
        throw TruncationError("requested " + std::to_string(k_modes) + " boundary modes, at most " +
                              std::to_string(nb) + " are resolved");
    const double h = 1.0 / (n_boundary - 1);
    KLBasis b;
    b.target = KLTarget::input_xi;
    b.weight = h;
    b.eigenvalues.resize(k_modes);
    b.modes.resize(nb, k_modes);
    for (int k = 1; k <= k_modes; ++k) {
        b.eigenvalues[k - 1] = gamma / ((k * M_PI) * (k * M_PI));
        for (int j = 1; j <= nb; ++j) b.modes(j - 1, k - 1) = std::sqrt(2.0) * std::sin(k * M_PI * j * h);
    }
#ifndef NDEBUG
    b.check();
#endif
    return b;
}

enum class CovarianceKind { inverse_1d_laplacian, squared_inverse_elliptic };

// Gaussian field with mean `mean`. The boundary kind carries its full
// discrete KL basis; the domain kind carries (alpha A + M), its factorization
// and the mass factor L, and draws xi = mean + (alpha A + M)^{-1} L z.
struct GaussianFieldModel {
    CovarianceKind kind = CovarianceKind::inverse_1d_laplacian;
    double scale = 0.0;  // gamma or alpha
    Vec mean;
    KLBasis spectrum;                  // boundary kind
    SpMat precision_operator;          // alpha A + M, domain kind
    mesh::Factorization precision_fac; // domain kind
    SpMat mass;
    SpMat mass_factor;

    Index dim() const { return mean.size(); }

    // Action of the covariance on a coefficient vector.
    Vec apply_covariance(const Vec& z) const {
        if (kind == CovarianceKind::inverse_1d_laplacian) {
            const Vec c = spectrum.weight * (spectrum.modes.transpose() * z);
            return spectrum.modes * (spectrum.eigenvalues.cwiseProduct(c));
        }
        return precision_fac.solve(mass * precision_fac.solve(z).eval());
    }
};

inline GaussianFieldModel boundary_field_model(double gamma, int n_boundary) {
    GaussianFieldModel m;
    m.kind = CovarianceKind::inverse_1d_laplacian;
    m.scale = gamma;
    m.spectrum = boundary_kl(gamma, n_boundary, n_boundary - 2);
    m.mean = Vec::Zero(n_boundary - 2);
    return m;
}

inline GaussianFieldModel domain_field_model(const mesh::FemOperators& fem, double alpha) {
    if (!(alpha > 0.0)) throw DomainError("covariance parameter alpha must be positive");
    GaussianFieldModel m;
    m.kind = CovarianceKind::squared_inverse_elliptic;
    m.scale = alpha;
    m.precision_operator = alpha * fem.stiffness.matrix + fem.mass.matrix;
    m.precision_fac = mesh::Factorization(m.precision_operator);
    m.mass = fem.mass.matrix;
    m.mass_factor = fem.mass_factor;
    m.mean = Vec::Zero(fem.mass.rows());
    return m;
}

inline Vec sample_domain_field(const GaussianFieldModel& model, const Vec& z) {
    if (model.kind != CovarianceKind::squared_inverse_elliptic)
        throw DomainError("domain samples need a squared_inverse_elliptic model");
    if (z.size() != model.mass_factor.cols()) throw DomainError("normal vector has the wrong dimension");
    return model.mean + model.precision_fac.solve((model.mass_factor * z).eval());
}

// KL basis of the state covariance A^{-1} B C0 B^T A^{-T}: thin SVD of the
// map A^{-1} B C0^{1/2}, built one input mode at a time. `weight` is the
// scalar of the state inner product. Modes whose singular value falls below
// a relative 1e-13 are treated as absent.
inline KLBasis state_kl(const mesh::Factorization& a_fac, const SpMat& b, const GaussianFieldModel& model,
                        int k_modes, double weight) {
    if (model.kind != CovarianceKind::inverse_1d_laplacian)
        throw DomainError("state KL needs the boundary field model");
    const Mat input_factor = model.spectrum.factor();
    const Mat rhs = b * input_factor;
    const Mat t = a_fac.solve(rhs);

    Eigen::BDCSVD<Mat> svd(std::sqrt(weight) * t, Eigen::ComputeThinU);
    const Vec& s = svd.singularValues();
    int rank = 0;
    while (rank < s.size() && s[rank] > 1e-13 * s[0]) ++rank;

    KLBasis out;
    out.target = KLTarget::state_y;
    out.weight = weight;
    int k = k_modes;
    if (k > rank) {
        k = rank;
        out.rank_deficient = true;
    }
    out.eigenvalues = s.head(k).cwiseAbs2();
    out.modes = svd.matrixU().leftCols(k) / std::sqrt(weight);
#ifndef NDEBUG
    out.check();
#endif
    return out;
}

}  // namespace srdcc::field

namespace srdcc::field {

// CSV: comment line with target and weight, then "k,lambda,e_1,...,e_dim".
inline void write_csv(std::ostream& os, const KLBasis& b) {
    os << "# target=" << (b.target == KLTarget::input_xi ? "input_xi" : "state_y") << " weight=";
    os.precision(17);
    os << b.weight << " K=" << b.size() << '\n';
    os << "k,lambda";
    for (Index i = 0; i < b.modes.rows(); ++i) os << ",e" << (i + 1);
    os << '\n';
    for (int k = 0; k < b.size(); ++k) {
        os << (k + 1) << ',' << b.eigenvalues[k];
        for (Index i = 0; i < b.modes.rows(); ++i) os << ',' << b.modes(i, k);
        os << '\n';
    }
}

inline KLBasis read_kl_csv(std::istream& is) {
    KLBasis b;
    std::string line;
    std::vector<double> lambdas;
    std::vector<std::vector<double>> cols;
    bool header_seen = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream meta(line.substr(1));
            std::string tok;
            while (meta >> tok) {
                if (tok.rfind("target=", 0) == 0) b.target = tok.substr(7) == "state_y" ? KLTarget::state_y : KLTarget::input_xi;
                if (tok.rfind("weight=", 0) == 0) b.weight = std::stod(tok.substr(7));
            }
            continue;
        }
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        std::istringstream row(line);
        std::string cell;
        std::getline(row, cell, ',');
        std::getline(row, cell, ',');
        lambdas.push_back(std::stod(cell));
        std::vector<double> v;
        while (std::getline(row, cell, ',')) v.push_back(std::stod(cell));
        cols.push_back(std::move(v));
    }
    const Index k = static_cast<Index>(lambdas.size());
    b.eigenvalues = Eigen::Map<Vec>(lambdas.data(), k);
    b.modes.resize(k == 0 ? 0 : static_cast<Index>(cols.front().size()), k);
    for (Index j = 0; j < k; ++j)
        for (Index i = 0; i < b.modes.rows(); ++i) b.modes(i, j) = cols[j][i];
    return b;
}

}  // namespace srdcc::field
