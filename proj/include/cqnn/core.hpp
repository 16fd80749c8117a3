#pragma once

// Core domain types: activation parameters, convolution geometry, and the
// diagonal-major band bookkeeping shared by the regressor and the model.

#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cqnn/errors.hpp"

namespace cqnn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Coefficients of the quadratic activation sigma(z) = a z^2 + b z + c.
///
/// Only obtainable through validate_activation(), so every instance satisfies
/// a > 0, c > 0 and b^2 - 4ac >= 0. Under those conditions the least-squares
/// optimum is also optimal for the convex CQNN training problem.
class ActivationParams {
public:
    double a() const noexcept { return a_; }
    double b() const noexcept { return b_; }
    double c() const noexcept { return c_; }

    double discriminant() const noexcept { return b_ * b_ - 4.0 * a_ * c_; }

    double operator()(double z) const noexcept { return (a_ * z + b_) * z + c_; }

    friend bool operator==(const ActivationParams&, const ActivationParams&) = default;

private:
    ActivationParams(double a, double b, double c) : a_(a), b_(b), c_(c) {}
    friend ActivationParams validate_activation(double, double, double);

    double a_;
    double b_;
    double c_;
};

inline ActivationParams validate_activation(double a, double b, double c) {
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c))
        throw InvalidActivation("activation coefficients must be finite");
    if (!(a > 0.0)) throw InvalidActivation("activation requires a > 0 (got a = " + std::to_string(a) + ")");
    if (!(c > 0.0)) throw InvalidActivation("activation requires c > 0 (got c = " + std::to_string(c) + ")");
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) {
        std::ostringstream os;
        os << "activation requires b^2 - 4ac >= 0 (got " << disc << ")";
        throw InvalidActivation(os.str());
    }
    return ActivationParams(a, b, c);
}

/// Coefficients that approximate a ReLU over the usual input range.
inline ActivationParams relu_like_activation() { return validate_activation(0.0937, 0.5, 0.4688); }

inline double activation_eval(const ActivationParams& p, double z) noexcept { return p(z); }

/// Geometry of a 1D convolution with stride 1: n inputs, filters of length f.
class ConvSpec {
public:
    ConvSpec(std::size_t n, std::size_t f) : n_(n), f_(f) {
        if (n == 0) throw InvalidSpec("input length n must be positive");
        if (f == 0 || f > n)
            throw InvalidSpec("filter length must satisfy 1 <= f <= n (n = " + std::to_string(n) +
                              ", f = " + std::to_string(f) + ")");
    }

    std::size_t n() const noexcept { return n_; }
    std::size_t f() const noexcept { return f_; }

    /// Number of patches K = n - f + 1.
    std::size_t patches() const noexcept { return n_ - f_ + 1; }

    /// Number of entries in diagonals 0..f-1 of an n x n matrix: (2n - f + 1) f / 2.
    std::size_t band_size() const noexcept { return (2 * n_ - f_ + 1) * f_ / 2; }

    /// Length of the weight vector: band entries followed by the n linear weights.
    std::size_t weight_count() const noexcept { return band_size() + n_; }

    /// Position in diagonal-major band order of the first entry of diagonal d.
    std::size_t diagonal_offset(std::size_t d) const noexcept { return d * n_ - d * (d - 1) / 2; }

    /// Position of the entry (row, row + d).
    std::size_t band_index(std::size_t row, std::size_t d) const noexcept { return diagonal_offset(d) + row; }

    friend bool operator==(const ConvSpec&, const ConvSpec&) = default;

private:
    std::size_t n_;
    std::size_t f_;
};

struct BandEntry {
    std::size_t row;
    std::size_t col;
    friend bool operator==(const BandEntry&, const BandEntry&) = default;
};

/// Enumerates the upper band of an n x n matrix diagonal by diagonal:
/// (0,0)..(n-1,n-1), then (0,1)..(n-2,n-1), up to (0,f-1)..(n-f,n-1).
class BandIndexMap {
public:
    explicit BandIndexMap(const ConvSpec& spec) : spec_(spec) {
        entries_.reserve(spec.band_size());
        for (std::size_t d = 0; d < spec.f(); ++d)
            for (std::size_t r = 0; r + d < spec.n(); ++r) entries_.push_back({r, r + d});
    }

    const ConvSpec& spec() const noexcept { return spec_; }
    std::size_t size() const noexcept { return entries_.size(); }
    const BandEntry& operator[](std::size_t i) const { return entries_[i]; }
    auto begin() const noexcept { return entries_.begin(); }
    auto end() const noexcept { return entries_.end(); }

private:
    ConvSpec spec_;
    std::vector<BandEntry> entries_;
};

/// Writes x_r * x_c for every band entry, in band order, into out[0..q).
template <class In, class Out>
void vecf_into(const In& x, const ConvSpec& spec, Out&& out) {
    const std::size_t n = spec.n();
    std::size_t k = 0;
    for (std::size_t d = 0; d < spec.f(); ++d)
        for (std::size_t r = 0; r + d < n; ++r) out[k++] = x[r] * x[r + d];
}

/// Products of the first f diagonals of x x^T, diagonal-major.
inline Vector vecf(const Eigen::Ref<const Vector>& x, const ConvSpec& spec) {
    detail::require_dims(static_cast<std::size_t>(x.size()) == spec.n(),
                         "vecf: input has length " + std::to_string(x.size()) + ", expected " +
                             std::to_string(spec.n()));
    Vector out(static_cast<Eigen::Index>(spec.band_size()));
    vecf_into(x, spec, out);
    return out;
}

struct WeightCounts {
    std::size_t cqnn;    // per-patch parametrization
    std::size_t banded;  // aggregated banded model
};

/// Number of unique weights of the per-patch CQNN problem and of the
/// equivalent banded model.
inline WeightCounts band_counts(const ConvSpec& spec) noexcept {
    const std::size_t n = spec.n();
    const std::size_t f = spec.f();
    return {(f + 3) * (n - f + 1) * f / 2, spec.band_size() + n};
}

}  // namespace cqnn
