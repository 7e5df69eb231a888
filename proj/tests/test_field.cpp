#include "srdcc/field/chi.hpp"
#include "srdcc/field/kl.hpp"
#include "srdcc/field/normal.hpp"
#include "srdcc/field/samples.hpp"
#include "srdcc/mesh/operators.hpp"

#include <gtest/gtest.h>

#include <boost/math/special_functions/erf.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

using namespace srdcc;
using namespace srdcc::field;

TEST(BoundaryKL, AnalyticEigenvalues) {
    const KLBasis b = boundary_kl(4.0, 130, 20);
    EXPECT_NEAR(b.eigenvalues[0], 4.0 / (M_PI * M_PI), 1e-15);
    EXPECT_NEAR(b.eigenvalues[0], 0.4053, 5e-5);
    for (int k = 1; k <= 20; ++k) EXPECT_NEAR(b.eigenvalues[k - 1] / b.eigenvalues[0], 1.0 / (k * k), 1e-14);
}

TEST(BoundaryKL, DiscreteOrthonormality) {
    const KLBasis b = boundary_kl(4.0, 128, 126);
    EXPECT_LE(b.orthonormality_defect(), 1e-8);
    EXPECT_NO_THROW(b.check());
}

TEST(BoundaryKL, TooManyModes) {
    EXPECT_THROW(boundary_kl(4.0, 10, 9), TruncationError);
    EXPECT_NO_THROW(boundary_kl(4.0, 10, 8));
}

namespace {

struct SmallLinearSetup {
    mesh::Grid g;
    mesh::DiscreteOperator a, b;
    mesh::Factorization fac;
    GaussianFieldModel model;
    double w;

    explicit SmallLinearSetup(int n) : g(mesh::build_grid(n, mesh::ProblemKind::linear_neumann, 1)) {
        a = mesh::assemble_laplacian_mixed(g);
        b = mesh::boundary_injection_operator(g);
        fac = mesh::factorize(a);
        model = boundary_field_model(4.0, n);
        w = g.h * g.h;
    }
};

}  // namespace

TEST(StateKL, SortedNonNegativeAndFasterDecay) {
    SmallLinearSetup s(34);
    const KLBasis y = state_kl(s.fac, s.b.matrix, s.model, 25, s.w);
    ASSERT_EQ(y.size(), 25);
    EXPECT_NO_THROW(y.check());
    for (int k = 0; k < y.size(); ++k) EXPECT_GE(y.eigenvalues[k], 0.0);
    const double ratio_y = y.eigenvalues[19] / y.eigenvalues[0];
    const double ratio_xi = s.model.spectrum.eigenvalues[19] / s.model.spectrum.eigenvalues[0];
    EXPECT_LT(ratio_y, ratio_xi);
}

TEST(StateKL, CovarianceReconstructionMatchesTail) {
    SmallLinearSetup s(32);
    const Mat t = s.fac.solve(Mat(s.b.matrix * s.model.spectrum.factor()));
    const Mat cov = t * t.transpose();
    const KLBasis full = state_kl(s.fac, s.b.matrix, s.model, 30, s.w);
    const KLBasis k20 = full.truncated(20);
    const Mat approx = k20.modes * k20.eigenvalues.asDiagonal() * k20.modes.transpose();
    const double err = (approx - cov).norm();
    const double tail = full.eigenvalues.tail(10).norm() / s.w;
    EXPECT_NEAR(err, tail, 1e-8 * tail + 1e-14 * cov.norm());
    const Mat all = full.modes * full.eigenvalues.asDiagonal() * full.modes.transpose();
    EXPECT_LE((all - cov).norm(), 1e-10 * cov.norm());
}

TEST(StateKL, RankDeficientRequest) {
    SmallLinearSetup s(12);
    const KLBasis y = state_kl(s.fac, s.b.matrix, s.model, 50, s.w);
    EXPECT_TRUE(y.rank_deficient);
    EXPECT_EQ(y.size(), 10);
}

TEST(Chi, EndpointsAndClosedForm) {
    for (int dof : {1, 3, 20}) {
        EXPECT_EQ(chi_cdf(0.0, dof), 0.0);
        EXPECT_EQ(chi_cdf(kInf, dof), 1.0);
        EXPECT_EQ(chi_pdf(kInf, dof), 0.0);
    }
    EXPECT_NEAR(chi_cdf(1.0, 1), std::erf(1.0 / std::sqrt(2.0)), 1e-15);
    EXPECT_NEAR(chi_cdf(1.0, 1), 0.682689, 1e-6);
    EXPECT_THROW(chi_cdf(-1.0, 3), DomainError);
    EXPECT_THROW(chi_cdf(1.0, 0), DomainError);
}

TEST(Chi, QuantileRoundTrip) {
    // Above the median the round trip goes through the survival function:
    // for dof = 1 and r near 8 the cdf is within 1e-15 of 1 and no longer
    // determines r in double precision.
    for (int dof : {1, 5, 20}) {
        for (int i = 0; i <= 40; ++i) {
            const double r = std::pow(10.0, -3.0 + 4.0 * i / 40.0);
            const double p = chi_cdf(r, dof);
            const double back = p <= 0.5 ? chi_quantile(p, dof) : chi_quantile_upper(chi_sf(r, dof), dof);
            EXPECT_NEAR(back, r, 1e-8 * std::max(1.0, r)) << "dof=" << dof << " r=" << r;
        }
    }
    EXPECT_NEAR(chi_sf(2.0, 3) + chi_cdf(2.0, 3), 1.0, 1e-15);
}

TEST(Chi, DensityIsDerivativeOfCdf) {
    for (int dof : {1, 4, 20}) {
        for (double r : {0.3, 1.0, 2.5, 4.0}) {
            const double eps = 1e-6;
            const double fd = (chi_cdf(r + eps, dof) - chi_cdf(r - eps, dof)) / (2 * eps);
            EXPECT_NEAR(chi_pdf(r, dof), fd, 1e-7);
        }
    }
    EXPECT_NEAR(chi_max_density(1), std::sqrt(2.0 / M_PI), 1e-15);
    EXPECT_GE(chi_max_density(20), chi_pdf(4.2, 20));
    EXPECT_GE(chi_max_density(20), chi_pdf(4.4, 20));
}

TEST(Chi, KolmogorovSmirnov) {
    const int n = 100000;
    for (int dof : {1, 20}) {
        std::mt19937_64 rng(2024 + dof);
        std::vector<double> x(n);
        for (double& v : x) v = chi_sample(rng, dof);
        std::sort(x.begin(), x.end());
        double d = 0.0;
        for (int i = 0; i < n; ++i) {
            const double f = chi_cdf(x[static_cast<std::size_t>(i)], dof);
            d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
        }
        EXPECT_LE(d, 1.63 / std::sqrt(static_cast<double>(n))) << "dof=" << dof;
    }
}

TEST(Normal, InverseCdfAccuracy) {
    for (int i = 1; i < 2000; ++i) {
        const double p = i / 2000.0;
        const double ref = -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
        EXPECT_NEAR(inverse_normal_cdf(p), ref, 1e-13) << p;
    }
    for (double p : {1e-300, 1e-100, 1e-20, 1e-8, 0.01, 0.99, 1 - 1e-10}) {
        const double ref = -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
        EXPECT_NEAR(inverse_normal_cdf(p), ref, 1e-13 * std::max(1.0, std::abs(ref))) << p;
    }
}

TEST(Halton, RadicalInverseAndPrimes) {
    EXPECT_EQ(first_primes(8), (std::vector<std::uint32_t>{2, 3, 5, 7, 11, 13, 17, 19}));
    EXPECT_DOUBLE_EQ(radical_inverse(1, 2), 0.5);
    EXPECT_DOUBLE_EQ(radical_inverse(6, 2), 0.375);
    EXPECT_NEAR(radical_inverse(5, 3), 7.0 / 9.0, 2e-16);
}

TEST(Samples, UnitNormAndDeterminism) {
    for (SamplerKind kind : {SamplerKind::mc, SamplerKind::qmc_halton}) {
        const SampleSet a = sphere_samples(kind, 17, 3000, 7);
        const SampleSet b = sphere_samples(kind, 17, 3000, 7);
        for (Index i = 0; i < a.size(); ++i) EXPECT_NEAR(a.directions.col(i).norm(), 1.0, 1e-12);
        EXPECT_EQ(std::memcmp(a.directions.data(), b.directions.data(),
                              sizeof(double) * static_cast<std::size_t>(a.directions.size())),
                  0);
    }
}

TEST(Samples, QmcSeedZeroStartsAfterOrigin) {
    const SampleSet s = sphere_samples(SamplerKind::qmc_halton, 0, 2, 3);
    Vec z(3);
    z << inverse_normal_cdf(0.5), inverse_normal_cdf(1.0 / 3), inverse_normal_cdf(0.2);
    EXPECT_LE((s.directions.col(0) - z.normalized()).norm(), 1e-15);
    const SampleSet other = sphere_samples(SamplerKind::qmc_halton, 5, 2, 3);
    EXPECT_GT((other.directions.col(0) - s.directions.col(0)).norm(), 0.0);
}

TEST(Samples, BlocksAreIndependentOfSplitting) {
    const SampleStream stream(SamplerKind::mc, 99, 5);
    Mat whole(5, 3 * kSampleBlock);
    stream.directions(0, whole);
    Mat tail(5, kSampleBlock);
    stream.directions(2 * kSampleBlock, tail);
    EXPECT_EQ((whole.rightCols(kSampleBlock) - tail).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_THROW(stream.directions(3, tail), DomainError);
}

TEST(Samples, SymmetryStatistics) {
    const Index n = 100000;
    const SampleSet s2 = sphere_samples(SamplerKind::mc, 1, n, 2);
    EXPECT_LE(std::abs(s2.directions.row(0).mean()), 4.0 / std::sqrt(static_cast<double>(n)));
    const SampleSet s20 = sphere_samples(SamplerKind::mc, 2, n, 20);
    const double frac = (s20.directions.row(0).array() >= 0.0).cast<double>().mean();
    EXPECT_NEAR(frac, 0.5, 0.01);
}

TEST(Samples, CsvRoundTrip) {
    const SampleSet s = sphere_samples(SamplerKind::mc, 4, 50, 3, true);
    std::stringstream ss;
    write_csv(ss, s);
    const SampleSet r = read_sample_set_csv(ss);
    EXPECT_EQ(r.kind, s.kind);
    EXPECT_EQ(r.seed, s.seed);
    EXPECT_EQ((r.directions - s.directions).cwiseAbs().maxCoeff(), 0.0);
    ASSERT_TRUE(r.has_radii());
    EXPECT_EQ((r.radii - s.radii).cwiseAbs().maxCoeff(), 0.0);
}

TEST(KLBasisCsv, RoundTrip) {
    const KLBasis b = boundary_kl(4.0, 20, 5);
    std::stringstream ss;
    write_csv(ss, b);
    const KLBasis r = read_kl_csv(ss);
    EXPECT_EQ(r.weight, b.weight);
    EXPECT_EQ((r.eigenvalues - b.eigenvalues).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ((r.modes - b.modes).cwiseAbs().maxCoeff(), 0.0);
}

TEST(GaussianField, CovarianceIsPositiveSemidefinite) {
    const GaussianFieldModel bm = boundary_field_model(4.0, 40);
    const mesh::Grid g = mesh::build_grid(10, mesh::ProblemKind::bilinear_dirichlet, 1);
    const GaussianFieldModel dm = domain_field_model(mesh::assemble_fem(g), 0.1);
    std::mt19937_64 rng(8);
    std::normal_distribution<double> nd;
    for (int t = 0; t < 20; ++t) {
        Vec zb(bm.dim()), zd(dm.dim());
        for (Index k = 0; k < zb.size(); ++k) zb[k] = nd(rng);
        for (Index k = 0; k < zd.size(); ++k) zd[k] = nd(rng);
        EXPECT_GE(zb.dot(bm.apply_covariance(zb)), 0.0);
        EXPECT_GE(zd.dot(dm.apply_covariance(zd)), 0.0);
    }
}

TEST(GaussianField, DomainSamplesZeroAndLinear) {
    const mesh::Grid g = mesh::build_grid(9, mesh::ProblemKind::bilinear_dirichlet, 1);
    const GaussianFieldModel m = domain_field_model(mesh::assemble_fem(g), 0.1);
    EXPECT_EQ(sample_domain_field(m, Vec::Zero(m.dim())), m.mean);
    const Mat z = gaussian_samples(3, 2, static_cast<int>(m.dim()));
    const Vec a = sample_domain_field(m, z.col(0)), b = sample_domain_field(m, z.col(1));
    const Vec ab = sample_domain_field(m, (2.0 * z.col(0) - z.col(1)).eval());
    EXPECT_LE((ab - (2.0 * a - b)).cwiseAbs().maxCoeff(), 1e-14 * ab.cwiseAbs().maxCoeff());
}

TEST(GaussianField, SampleCovarianceMatchesDenseOracle) {
    const mesh::Grid g = mesh::build_grid(16, mesh::ProblemKind::bilinear_dirichlet, 1);
    const mesh::FemOperators fem = mesh::assemble_fem(g);
    const double alpha = 0.1;
    const GaussianFieldModel m = domain_field_model(fem, alpha);
    const Mat mass = Mat(fem.mass.matrix);
    const Mat prec = Mat(alpha * fem.stiffness.matrix + fem.mass.matrix);
    const Mat s_inv_m = prec.llt().solve(mass);
    // Covariance operator (with respect to the mass inner product) and the
    // nodal covariance matrix C = S^{-1} M S^{-1}.
    const Mat op = s_inv_m * s_inv_m;
    const Mat c = prec.llt().solve(Mat(s_inv_m.transpose()));
    ASSERT_LE((c * mass - op).cwiseAbs().maxCoeff(), 1e-12 * op.cwiseAbs().maxCoeff());

    const Index n = 100000;
    const Mat z = gaussian_samples(77, n, static_cast<int>(m.dim()));
    const Mat xi = m.precision_fac.solve(Mat(m.mass_factor * z));
    const Mat emp = xi * xi.transpose() / static_cast<double>(n);
    double worst = 0.0;
    for (Index i = 0; i < c.rows(); ++i)
        for (Index j = 0; j < c.cols(); ++j) {
            const double se = std::sqrt((c(i, i) * c(j, j) + c(i, j) * c(i, j)) / static_cast<double>(n));
            worst = std::max(worst, std::abs(emp(i, j) - c(i, j)) / se);
        }
    EXPECT_LE(worst, 5.0);
}
