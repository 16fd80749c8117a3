#pragma once

// Brute-force reference implementations used to check the banded pipeline.
//
// Everything here works on dense matrices and explicit patches and uses its
// own index loops; nothing goes through BandIndexMap, vecf or the band
// offsets of ConvSpec.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "cqnn/model.hpp"

namespace cqnn::oracle {

/// Per-patch quadratic forms (Z^{k,1}, Z^{k,2}, Z^{k,4}) for k = 0..K-1.
struct PatchModel {
    Matrix z1;  // f x f, symmetric
    Vector z2;  // f
    double z4 = 0.0;
};

class PatchModelSet {
public:
    PatchModelSet(std::size_t n, std::vector<PatchModel> patches, ActivationParams params)
        : n_(n), patches_(std::move(patches)), params_(params) {
        if (patches_.empty()) throw DimensionMismatch("patch model set is empty");
        f_ = static_cast<std::size_t>(patches_.front().z1.rows());
        detail::require_dims(f_ >= 1 && f_ <= n_ && patches_.size() == n_ - f_ + 1,
                             "patch model set: need n - f + 1 patches of size f");
        for (const auto& p : patches_) {
            const auto f = static_cast<Eigen::Index>(f_);
            detail::require_dims(p.z1.rows() == f && p.z1.cols() == f && p.z2.size() == f,
                                 "patch model set: inconsistent patch sizes");
            if (p.z1 != p.z1.transpose())
                throw DimensionMismatch("patch model set: Z^{k,1} must be symmetric");
            const double tr = p.z1.trace();
            if (std::abs(p.z4 - tr) > 1e-12 * std::max(1.0, std::abs(tr)))
                throw DimensionMismatch("patch model set: Z^{k,4} must equal trace(Z^{k,1})");
        }
    }

    std::size_t n() const noexcept { return n_; }
    std::size_t f() const noexcept { return f_; }
    std::size_t patches() const noexcept { return patches_.size(); }
    const PatchModel& operator[](std::size_t k) const { return patches_[k]; }
    const ActivationParams& params() const noexcept { return params_; }

private:
    std::size_t n_;
    std::size_t f_ = 0;
    std::vector<PatchModel> patches_;
    ActivationParams params_;
};

/// First-layer filters (rows of `filters`, m x f) and second-layer weights
/// (rows of `alphas`, m x K).
struct NeuronSet {
    Matrix filters;
    Matrix alphas;
};

inline std::vector<Vector> extract_patches(const Eigen::Ref<const Vector>& x, const ConvSpec& spec) {
    detail::require_dims(static_cast<std::size_t>(x.size()) == spec.n(),
                         "extract_patches: input has length " + std::to_string(x.size()) + ", expected " +
                             std::to_string(spec.n()));
    const std::size_t f = spec.f();
    std::vector<Vector> out;
    for (std::size_t k = 0; k + f <= spec.n(); ++k) {
        Vector patch(static_cast<Eigen::Index>(f));
        for (std::size_t t = 0; t < f; ++t) patch[static_cast<Eigen::Index>(t)] = x[static_cast<Eigen::Index>(k + t)];
        out.push_back(std::move(patch));
    }
    return out;
}

/// Sum over patches of [chi; 1]^T [[a Z1, b/2 Z2], [b/2 Z2^T, c Z4]] [chi; 1].
inline double eval_patch_model(const PatchModelSet& s, const Eigen::Ref<const Vector>& x) {
    detail::require_dims(static_cast<std::size_t>(x.size()) == s.n(), "eval_patch_model: input length mismatch");
    const ActivationParams& p = s.params();
    const auto f = static_cast<Eigen::Index>(s.f());
    const auto chis = extract_patches(x, ConvSpec(s.n(), s.f()));
    double total = 0.0;
    for (std::size_t k = 0; k < s.patches(); ++k) {
        const PatchModel& pm = s[k];
        Matrix block(f + 1, f + 1);
        block.topLeftCorner(f, f) = p.a() * pm.z1;
        block.topRightCorner(f, 1) = 0.5 * p.b() * pm.z2;
        block.bottomLeftCorner(1, f) = 0.5 * p.b() * pm.z2.transpose();
        block(f, f) = p.c() * pm.z4;
        Vector lifted(f + 1);
        lifted << chis[k], 1.0;
        total += lifted.dot(block * lifted);
    }
    return total;
}

/// Dense aggregation of a patch set: each Z^{k,1} is zero-padded into an
/// n x n matrix at offset k, and likewise for Z^{k,2}.
struct DenseQuadratic {
    Matrix z1;
    Vector z2;
    double z4 = 0.0;
};

inline DenseQuadratic aggregate_dense(const PatchModelSet& s) {
    const auto n = static_cast<Eigen::Index>(s.n());
    const auto f = static_cast<Eigen::Index>(s.f());
    DenseQuadratic out{Matrix::Zero(n, n), Vector::Zero(n), 0.0};
    for (std::size_t k = 0; k < s.patches(); ++k) {
        const auto off = static_cast<Eigen::Index>(k);
        Matrix padded = Matrix::Zero(n, n);
        padded.block(off, off, f, f) = s[k].z1;
        out.z1 += padded;
        out.z2.segment(off, f) += s[k].z2;
        out.z4 += s[k].z4;
    }
    return out;
}

/// Converts a dense symmetric Z1 with bandwidth f into a QuadraticModel,
/// refusing matrices with non-zero entries outside the band.
inline QuadraticModel banded_from_dense(const Matrix& z1, const Vector& z2, std::size_t f,
                                        const ActivationParams& params) {
    const auto n = z1.rows();
    std::vector<double> band;
    for (Eigen::Index d = 0; d < n; ++d) {
        for (Eigen::Index r = 0; r + d < n; ++r) {
            if (static_cast<std::size_t>(d) < f) {
                band.push_back(z1(r, r + d));
            } else if (z1(r, r + d) != 0.0 || z1(r + d, r) != 0.0) {
                throw DimensionMismatch("dense Z1 has a non-zero entry outside the band");
            }
        }
    }
    Vector coeffs = Eigen::Map<Vector>(band.data(), static_cast<Eigen::Index>(band.size()));
    return QuadraticModel(ConvSpec(static_cast<std::size_t>(n), f), params, std::move(coeffs), z2);
}

inline QuadraticModel aggregate(const PatchModelSet& s) {
    const DenseQuadratic dense = aggregate_dense(s);
    QuadraticModel m = banded_from_dense(dense.z1, dense.z2, s.f(), s.params());
    if (std::abs(m.zbar4() - dense.z4) > 1e-12 * std::max(1.0, std::abs(dense.z4)))
        throw DimensionMismatch("aggregate: summed Z^{k,4} does not equal trace of aggregated Z1");
    return m;
}

/// Sum over neurons j and patches k of alpha_jk * sigma(w_j^T chi_k).
inline double eval_neuron_sum(const NeuronSet& ns, const ActivationParams& p, const Eigen::Ref<const Vector>& x) {
    const Eigen::Index f = ns.filters.cols();
    detail::require_dims(f >= 1 && f <= x.size(), "eval_neuron_sum: filter length must be in [1, n]");
    const Eigen::Index K = x.size() - f + 1;
    detail::require_dims(ns.alphas.rows() == ns.filters.rows() && ns.alphas.cols() == K,
                         "eval_neuron_sum: alphas must be (neurons x patches)");
    double total = 0.0;
    for (Eigen::Index j = 0; j < ns.filters.rows(); ++j) {
        for (Eigen::Index k = 0; k < K; ++k) {
            double z = 0.0;
            for (Eigen::Index t = 0; t < f; ++t) z += ns.filters(j, t) * x[k + t];
            total += ns.alphas(j, k) * p(z);
        }
    }
    return total;
}

/// Z^{k,1} = sum_j alpha_jk w_j w_j^T, Z^{k,2} = sum_j alpha_jk w_j, Z^{k,4} = sum_j alpha_jk.
/// The trace tie Z^{k,4} = trace(Z^{k,1}) holds only for unit-norm filters.
inline PatchModelSet to_patch_models(const NeuronSet& ns, std::size_t n, const ActivationParams& p) {
    const Eigen::Index f = ns.filters.cols();
    const Eigen::Index K = ns.alphas.cols();
    std::vector<PatchModel> patches;
    for (Eigen::Index k = 0; k < K; ++k) {
        PatchModel pm{Matrix::Zero(f, f), Vector::Zero(f), 0.0};
        for (Eigen::Index j = 0; j < ns.filters.rows(); ++j) {
            const Vector w = ns.filters.row(j).transpose();
            const double alpha = ns.alphas(j, k);
            pm.z1 += alpha * w * w.transpose();
            pm.z2 += alpha * w;
            pm.z4 += alpha;
        }
        const Matrix sym = 0.5 * (pm.z1 + pm.z1.transpose());
        pm.z1 = sym;
        patches.push_back(std::move(pm));
    }
    return PatchModelSet(n, std::move(patches), p);
}

/// Unconstrained dense QNN fit: features x_i x_j (i <= j, row-major over the
/// upper triangle) plus the linear terms, solved by complete orthogonal
/// decomposition (minimum-norm on rank deficiency).
inline QuadraticModel dense_qnn_fit(const Dataset& data, const ActivationParams& p) {
    const auto n = static_cast<Eigen::Index>(data.features());
    const auto N = static_cast<Eigen::Index>(data.samples());
    const Eigen::Index pairs = n * (n + 1) / 2;
    Matrix h(N, pairs + n);
    for (Eigen::Index s = 0; s < N; ++s) {
        Eigen::Index col = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = i; j < n; ++j) {
                const double xi = data.inputs()(s, i);
                const double xj = data.inputs()(s, j);
                // the constant c Z4 = c trace(Z1) rides on the diagonal weights
                h(s, col++) = i == j ? p.a() * xi * xi + p.c() : p.a() * xi * xj;
            }
        }
        for (Eigen::Index i = 0; i < n; ++i) h(s, col++) = p.b() * data.inputs()(s, i);
    }
    if (!h.allFinite() || !data.labels().allFinite()) throw NonFiniteInput("dense_qnn_fit: non-finite data");

    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(h);
    const Vector w = cod.solve(data.labels());

    Matrix z1 = Matrix::Zero(n, n);
    Eigen::Index col = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            if (i == j) {
                z1(i, i) = w[col++];
            } else {
                z1(i, j) = z1(j, i) = 0.5 * w[col++];
            }
        }
    }
    return banded_from_dense(z1, w.tail(n), static_cast<std::size_t>(n), p);
}

}  // namespace cqnn::oracle
