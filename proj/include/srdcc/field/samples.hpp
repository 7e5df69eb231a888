#pragma once

#include "srdcc/core.hpp"
#include "srdcc/field/chi.hpp"
#include "srdcc/field/normal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace srdcc::field {

enum class SamplerKind { mc, qmc_halton };

inline std::string to_string(SamplerKind k) { return k == SamplerKind::mc ? "mc" : "qmc_halton"; }

inline std::vector<std::uint32_t> first_primes(int count) {
    std::vector<std::uint32_t> primes;
    for (std::uint32_t c = 2; static_cast<int>(primes.size()) < count; ++c) {
        bool prime = true;
        for (std::uint32_t p : primes) {
            if (p * p > c) break;
            if (c % p == 0) {
                prime = false;
                break;
            }
        }
        if (prime) primes.push_back(c);
    }
    return primes;
}

inline double radical_inverse(std::uint64_t index, std::uint32_t base) {
    const double inv = 1.0 / base;
    double f = inv, r = 0.0;
    while (index > 0) {
        r += static_cast<double>(index % base) * f;
        index /= base;
        f *= inv;
    }
    return r;
}

// Samples are generated in fixed blocks so that any sample can be produced
// independently of how the work is split across threads.
inline constexpr Index kSampleBlock = 512;

// Deterministic stream of sample vectors in R^K for a (kind, seed) pair.
// MC uses one mt19937_64 per (seed, block, stream); QMC uses the unscrambled
// Halton sequence starting at a seed-dependent index (seed 0 starts at 1, the
// first point after the origin).
class SampleStream {
public:
    SampleStream(SamplerKind kind, std::uint64_t seed, int dim) : kind_(kind), seed_(seed), dim_(dim) {
        if (dim < 1) throw DomainError("sample dimension must be positive");
        if (kind == SamplerKind::qmc_halton) {
            bases_ = first_primes(dim);
            start_ = 1 + (seed == 0 ? 0 : splitmix64(seed) % (std::uint64_t{1} << 30));
        }
    }

    SamplerKind kind() const { return kind_; }
    std::uint64_t seed() const { return seed_; }
    int dim() const { return dim_; }
    std::uint64_t qmc_start() const { return start_; }

    // Standard normal vectors for samples [first, first + out.cols()).
    // `first` must be a multiple of kSampleBlock.
    void gaussians(Index first, Eigen::Ref<Mat> out) const { fill(first, out, kGaussianStream, false); }

    // Unit directions for samples [first, first + out.cols()).
    void directions(Index first, Eigen::Ref<Mat> out) const { fill(first, out, kDirectionStream, true); }

    // Chi-distributed radii (MC only; QMC runs use directions alone).
    void radii(Index first, Eigen::Ref<Vec> out) const {
        check_alignment(first, out.size());
        for (Index b0 = 0; b0 < out.size(); b0 += kSampleBlock) {
            auto rng = block_rng((first + b0) / kSampleBlock, kRadiusStream);
            const Index cnt = std::min(kSampleBlock, out.size() - b0);
            for (Index i = 0; i < cnt; ++i) out[b0 + i] = chi_sample(rng, dim_);
        }
    }

private:
    static constexpr std::uint64_t kGaussianStream = 1, kDirectionStream = 2, kRadiusStream = 3;

    void check_alignment(Index first, Index count) const {
        if (first % kSampleBlock != 0 || first < 0 || count < 0)
            throw DomainError("sample ranges must start at a block boundary");
    }

    std::mt19937_64 block_rng(Index block, std::uint64_t stream) const {
        std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                          static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
                          static_cast<std::uint32_t>(stream)};
        return std::mt19937_64(seq);
    }

    void fill(Index first, Eigen::Ref<Mat> out, std::uint64_t stream, bool normalize) const {
        if (out.rows() != dim_) throw DomainError("sample buffer has the wrong dimension");
        check_alignment(first, out.cols());
        if (kind_ == SamplerKind::qmc_halton) {
            for (Index i = 0; i < out.cols(); ++i) {
                const std::uint64_t idx = start_ + static_cast<std::uint64_t>(first + i);
                for (int k = 0; k < dim_; ++k) out(k, i) = inverse_normal_cdf(radical_inverse(idx, bases_[k]));
                if (normalize) out.col(i) /= out.col(i).norm();
            }
            return;
        }
        std::normal_distribution<double> normal;
        for (Index b0 = 0; b0 < out.cols(); b0 += kSampleBlock) {
            auto rng = block_rng((first + b0) / kSampleBlock, stream);
            const Index cnt = std::min(kSampleBlock, out.cols() - b0);
            for (Index i = 0; i < cnt; ++i) {
                auto col = out.col(b0 + i);
                double nrm = 0.0;
                do {
                    for (int k = 0; k < dim_; ++k) col[k] = normal(rng);
                    nrm = col.norm();
                } while (nrm == 0.0);
                if (normalize) col /= nrm;
            }
        }
    }

    SamplerKind kind_;
    std::uint64_t seed_;
    int dim_;
    std::vector<std::uint32_t> bases_;
    std::uint64_t start_ = 0;
};

// Materialized set of directions on the unit sphere (one column per sample).
struct SampleSet {
    SamplerKind kind = SamplerKind::mc;
    std::uint64_t seed = 0;
    Mat directions;  // K x N
    Vec radii;       // empty unless radial draws were requested

    Index size() const { return directions.cols(); }
    int dim() const { return static_cast<int>(directions.rows()); }
    bool has_radii() const { return radii.size() == directions.cols(); }
};

inline SampleSet sphere_samples(SamplerKind kind, std::uint64_t seed, Index n, int dim, bool with_radii = false) {
    if (n < 1) throw DomainError("sample count must be positive");
    const SampleStream stream(kind, seed, dim);
    SampleSet s;
    s.kind = kind;
    s.seed = seed;
    s.directions.resize(dim, n);
    stream.directions(0, s.directions);
    if (with_radii) {
        if (kind != SamplerKind::mc) throw DomainError("radial draws are only defined for MC sample sets");
        s.radii.resize(n);
        stream.radii(0, s.radii);
    }
    return s;
}

inline Mat gaussian_samples(std::uint64_t seed, Index n, int dim) {
    const SampleStream stream(SamplerKind::mc, seed, dim);
    Mat z(dim, n);
    stream.gaussians(0, z);
    return z;
}

// CSV: a comment line with the provenance, then one row per sample
// "i,r,v_1,...,v_K" (r empty when no radial draws are stored).
inline void write_csv(std::ostream& os, const SampleSet& s) {
    os << "# sampler=" << to_string(s.kind) << " seed=" << s.seed << " N=" << s.size() << " K=" << s.dim() << '\n';
    os << "i,r";
    for (int k = 0; k < s.dim(); ++k) os << ",v" << (k + 1);
    os << '\n';
    os.precision(17);
    for (Index i = 0; i < s.size(); ++i) {
        os << i << ',';
        if (s.has_radii()) os << s.radii[i];
        for (int k = 0; k < s.dim(); ++k) os << ',' << s.directions(k, i);
        os << '\n';
    }
}

inline SampleSet read_sample_set_csv(std::istream& is) {
    SampleSet s;
    std::string line;
    std::vector<std::vector<double>> rows;
    std::vector<double> radii;
    bool header_seen = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream meta(line.substr(1));
            std::string tok;
            while (meta >> tok) {
                if (tok.rfind("sampler=", 0) == 0) s.kind = tok.substr(8) == "mc" ? SamplerKind::mc : SamplerKind::qmc_halton;
                if (tok.rfind("seed=", 0) == 0) s.seed = std::stoull(tok.substr(5));
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
        if (!cell.empty()) radii.push_back(std::stod(cell));
        std::vector<double> v;
        while (std::getline(row, cell, ',')) v.push_back(std::stod(cell));
        rows.push_back(std::move(v));
    }
    if (rows.empty()) throw DomainError("sample CSV has no rows");
    s.directions.resize(static_cast<Index>(rows.front().size()), static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t k = 0; k < rows[i].size(); ++k) s.directions(static_cast<Index>(k), static_cast<Index>(i)) = rows[i][k];
    if (radii.size() == rows.size()) s.radii = Eigen::Map<Vec>(radii.data(), static_cast<Index>(radii.size()));
    return s;
}

}  // namespace srdcc::field
