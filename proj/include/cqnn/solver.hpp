#pragma once

// Least-squares and ridge solves for the weight vector.
//
// The normal equations (H^T H + beta I) theta = H^T y are factorized with a
// Cholesky decomposition. When that factorization fails, or the normal matrix
// is too ill-conditioned to trust, the solve falls back to an SVD of H, which
// yields the minimum-norm minimizer. Note that the ridge
// path penalizes theta^T theta; it coincides with the nuclear-norm
// regularized convex formulation only at beta = 0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

#include "cqnn/regressor.hpp"

namespace cqnn {

/// Weight vector laid out as [Z1 diagonal (n); 2 * Z1 off-diagonals, diagonal-major (q - n); Z2 (n)].
class WeightVector {
public:
    WeightVector(Vector theta, ConvSpec spec) : theta_(std::move(theta)), spec_(spec) {
        detail::require_dims(static_cast<std::size_t>(theta_.size()) == spec_.weight_count(),
                             "weight vector has length " + std::to_string(theta_.size()) + ", expected q + n = " +
                                 std::to_string(spec_.weight_count()));
    }

    const Vector& values() const noexcept { return theta_; }
    const ConvSpec& spec() const noexcept { return spec_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(theta_.size()); }
    double operator[](std::size_t i) const { return theta_[static_cast<Eigen::Index>(i)]; }

    auto band() const { return theta_.head(static_cast<Eigen::Index>(spec_.band_size())); }
    auto linear() const { return theta_.tail(static_cast<Eigen::Index>(spec_.n())); }

private:
    Vector theta_;
    ConvSpec spec_;
};

enum class SolveStrategy { cholesky, pseudoinverse };

inline const char* to_string(SolveStrategy s) noexcept {
    return s == SolveStrategy::cholesky ? "cholesky" : "pseudoinverse";
}

/// Result of a dense solve on a bare matrix.
struct LinearSolution {
    Vector theta;
    double beta = 0.0;
    double residual_norm = 0.0;         // ||y - H theta||
    double normal_residual_norm = 0.0;  // ||H^T (y - H theta) - beta theta||
    bool rank_deficient = false;
    SolveStrategy strategy = SolveStrategy::cholesky;
    Eigen::Index rank = 0;              // numerical rank, only computed on the SVD path
};

struct SolveReport {
    WeightVector theta;
    double beta;
    double residual_norm;
    double normal_residual_norm;
    bool rank_deficient;
    SolveStrategy solve_strategy;
};

namespace detail {

/// Singular values below sigma_max * eps * max(rows, cols) count as zero.
inline double svd_cutoff(double sigma_max, Eigen::Index rows, Eigen::Index cols) {
    return sigma_max * std::numeric_limits<double>::epsilon() * static_cast<double>(std::max(rows, cols));
}

template <class Mat>
LinearSolution svd_solve(const Mat& h, const Vector& y, double beta) {
    Eigen::BDCSVD<Matrix> svd(h, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sigma = svd.singularValues();
    const double cutoff = sigma.size() > 0 ? svd_cutoff(sigma[0], h.rows(), h.cols()) : 0.0;
    const Vector uty = svd.matrixU().transpose() * y;
    Vector scaled = Vector::Zero(sigma.size());
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        if (sigma[i] > cutoff) {
            ++rank;
            scaled[i] = sigma[i] * uty[i] / (sigma[i] * sigma[i] + beta);
        }
    }
    LinearSolution out;
    out.theta = svd.matrixV() * scaled;
    out.rank = rank;
    out.rank_deficient = rank < h.cols();
    out.strategy = SolveStrategy::pseudoinverse;
    return out;
}

template <class Mat>
void fill_diagnostics(const Mat& h, const Vector& y, double beta, LinearSolution& s) {
    const Vector r = y - h * s.theta;
    s.beta = beta;
    s.residual_norm = r.norm();
    s.normal_residual_norm = (h.transpose() * r - beta * s.theta).norm();
}

}  // namespace detail

/// Minimizes ||H theta - y||^2 + beta theta^T theta for a bare matrix H.
template <class Derived>
LinearSolution solve_dense(const Eigen::MatrixBase<Derived>& h, const Vector& y, double beta = 0.0) {
    if (!std::isfinite(beta)) throw NonFiniteInput("regularizer must be finite");
    if (beta < 0.0) throw NegativeRegularizer("regularizer beta must be >= 0 (got " + std::to_string(beta) + ")");
    detail::require_dims(h.rows() == y.size(), "solve: H has " + std::to_string(h.rows()) + " rows but y has " +
                                                   std::to_string(y.size()) + " entries");
    if (!h.allFinite() || !y.allFinite()) throw NonFiniteInput("solve: H or y contains non-finite entries");

    const Eigen::Index p = h.cols();
    Matrix normal = Matrix::Zero(p, p);
    normal.template selfadjointView<Eigen::Lower>().rankUpdate(h.transpose());
    normal.diagonal().array() += beta;
    normal.template triangularView<Eigen::StrictlyUpper>() = normal.transpose();
    const Vector rhs = h.transpose() * y;

    // Forming H^T H squares cond(H), so the Cholesky solution keeps about
    // -log10(cond(H^T H) * eps) digits. Below rcond = sqrt(eps) that is under
    // eight, and exact rank loss cannot be told apart from roundoff: use SVD.
    Eigen::LLT<Matrix> llt;
    bool trust = h.rows() >= p || beta > 0.0;
    if (trust) {
        llt.compute(normal);
        trust = llt.info() == Eigen::Success && llt.rcond() > std::sqrt(std::numeric_limits<double>::epsilon());
    }

    LinearSolution out;
    if (trust) {
        out.theta = llt.solve(rhs);
        out.strategy = SolveStrategy::cholesky;
        out.rank = p;
    } else {
        out = detail::svd_solve(h.derived(), y, beta);
    }
    detail::fill_diagnostics(h.derived(), y, beta, out);
    return out;
}

inline SolveReport solve_ridge(const RegressorMatrix& h, const Vector& y, double beta) {
    LinearSolution s = solve_dense(h.matrix(), y, beta);
    return SolveReport{WeightVector(std::move(s.theta), h.spec()), s.beta, s.residual_norm, s.normal_residual_norm,
                       s.rank_deficient, s.strategy};
}

inline SolveReport solve_ls(const RegressorMatrix& h, const Vector& y) { return solve_ridge(h, y, 0.0); }

}  // namespace cqnn
