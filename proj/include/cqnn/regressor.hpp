#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "cqnn/core.hpp"

namespace cqnn {

/// N feature rows of length n with one scalar label each.
class Dataset {
public:
    Dataset(RowMatrix inputs, Vector labels) : inputs_(std::move(inputs)), labels_(std::move(labels)) {
        if (inputs_.rows() < 1) throw DimensionMismatch("dataset needs at least one sample");
        if (inputs_.cols() < 1) throw DimensionMismatch("dataset needs at least one feature");
        detail::require_dims(labels_.size() == inputs_.rows(),
                             "dataset has " + std::to_string(inputs_.rows()) + " rows but " +
                                 std::to_string(labels_.size()) + " labels");
        if (!inputs_.allFinite() || !labels_.allFinite())
            throw NonFiniteInput("dataset contains non-finite values");
    }

    std::size_t samples() const noexcept { return static_cast<std::size_t>(inputs_.rows()); }
    std::size_t features() const noexcept { return static_cast<std::size_t>(inputs_.cols()); }

    const RowMatrix& inputs() const noexcept { return inputs_; }
    const Vector& labels() const noexcept { return labels_; }
    auto row(std::size_t i) const { return inputs_.row(static_cast<Eigen::Index>(i)); }

private:
    RowMatrix inputs_;
    Vector labels_;
};

/// H = [H1 + H2, bX]: the first q columns hold a * vecf(x x^T) with c added
/// on the diagonal-0 columns, the last n columns hold b * x.
class RegressorMatrix {
public:
    RegressorMatrix(RowMatrix h, ConvSpec spec, ActivationParams params)
        : h_(std::move(h)), spec_(spec), params_(params) {
        detail::require_dims(static_cast<std::size_t>(h_.cols()) == spec_.weight_count(),
                             "regressor has " + std::to_string(h_.cols()) + " columns, expected q + n = " +
                                 std::to_string(spec_.weight_count()));
    }

    const RowMatrix& matrix() const noexcept { return h_; }
    const ConvSpec& spec() const noexcept { return spec_; }
    const ActivationParams& params() const noexcept { return params_; }
    std::size_t rows() const noexcept { return static_cast<std::size_t>(h_.rows()); }

private:
    RowMatrix h_;
    ConvSpec spec_;
    ActivationParams params_;
};

/// Fills one regressor row for input x.
template <class In, class Out>
void regressor_row_into(const In& x, const ConvSpec& spec, const ActivationParams& p, Out&& row) {
    const std::size_t n = spec.n();
    const std::size_t q = spec.band_size();
    vecf_into(x, spec, row);
    for (std::size_t k = 0; k < q; ++k) row[k] *= p.a();
    for (std::size_t k = 0; k < n; ++k) row[k] += p.c();
    for (std::size_t k = 0; k < n; ++k) row[q + k] = p.b() * x[k];
}

inline Vector regressor_row(const Eigen::Ref<const Vector>& x, const ConvSpec& spec, const ActivationParams& p) {
    detail::require_dims(static_cast<std::size_t>(x.size()) == spec.n(),
                         "regressor_row: input has length " + std::to_string(x.size()) + ", expected " +
                             std::to_string(spec.n()));
    Vector row(static_cast<Eigen::Index>(spec.weight_count()));
    regressor_row_into(x, spec, p, row);
    return row;
}

inline RegressorMatrix build_regressor(const Dataset& data, const ConvSpec& spec, const ActivationParams& params) {
    detail::require_dims(data.features() == spec.n(), "build_regressor: dataset has " +
                                                          std::to_string(data.features()) +
                                                          " features, spec expects n = " + std::to_string(spec.n()));
    RowMatrix h(static_cast<Eigen::Index>(data.samples()), static_cast<Eigen::Index>(spec.weight_count()));
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
        auto x = data.inputs().row(i);
        auto row = h.row(i);
        regressor_row_into(x, spec, params, row);
    }
    return RegressorMatrix(std::move(h), spec, params);
}

}  // namespace cqnn
