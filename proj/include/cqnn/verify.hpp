#pragma once

// Randomized consistency suites comparing the banded pipeline against the
// brute-force oracles. Used by `cqnn verify` and the acceptance tests.
//
// Relative errors are |a - b| / max(|a|, |b|, 1) for scalars and
// ||a - b|| / max(||a||, ||b||, 1) for vectors.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cqnn/oracle.hpp"

namespace cqnn::verify {

using Rng = std::mt19937_64;

inline double rel_error(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1.0}); }

inline double rel_error(const Vector& a, const Vector& b) {
    return (a - b).norm() / std::max({a.norm(), b.norm(), 1.0});
}

inline double uniform(Rng& rng, double lo = -1.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::size_t uniform_int(Rng& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline Vector random_vector(Rng& rng, Eigen::Index size) {
    Vector v(size);
    for (Eigen::Index i = 0; i < size; ++i) v[i] = uniform(rng);
    return v;
}

inline Matrix random_symmetric(Rng& rng, Eigen::Index size) {
    Matrix m(size, size);
    for (Eigen::Index i = 0; i < size; ++i)
        for (Eigen::Index j = 0; j < size; ++j) m(i, j) = uniform(rng);
    return 0.5 * (m + m.transpose());
}

/// A valid activation with random coefficients: a, c in [0.05, 1], |b| >= 2 sqrt(ac).
inline ActivationParams random_activation(Rng& rng) {
    const double a = uniform(rng, 0.05, 1.0);
    const double c = uniform(rng, 0.05, 1.0);
    const double b = 2.0 * std::sqrt(a * c) * uniform(rng, 1.0, 2.0) * (uniform(rng) < 0.0 ? -1.0 : 1.0);
    return validate_activation(a, b, c);
}

inline ConvSpec random_spec(Rng& rng, std::size_t max_n) {
    const std::size_t n = uniform_int(rng, 1, max_n);
    return ConvSpec(n, uniform_int(rng, 1, n));
}

inline oracle::PatchModelSet random_patch_set(Rng& rng, const ConvSpec& spec, const ActivationParams& p) {
    const auto f = static_cast<Eigen::Index>(spec.f());
    std::vector<oracle::PatchModel> patches;
    for (std::size_t k = 0; k < spec.patches(); ++k) {
        oracle::PatchModel pm{random_symmetric(rng, f), random_vector(rng, f), 0.0};
        pm.z4 = pm.z1.trace();
        patches.push_back(std::move(pm));
    }
    return oracle::PatchModelSet(spec.n(), std::move(patches), p);
}

inline QuadraticModel random_model(Rng& rng, const ConvSpec& spec, const ActivationParams& p) {
    return QuadraticModel(spec, p, random_vector(rng, static_cast<Eigen::Index>(spec.band_size())),
                          random_vector(rng, static_cast<Eigen::Index>(spec.n())));
}

inline Dataset random_dataset(Rng& rng, std::size_t samples, std::size_t features) {
    RowMatrix x(static_cast<Eigen::Index>(samples), static_cast<Eigen::Index>(features));
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = uniform(rng);
    return Dataset(std::move(x), random_vector(rng, static_cast<Eigen::Index>(samples)));
}

/// Central finite-difference gradient of predict().
inline Vector finite_difference_gradient(const QuadraticModel& m, const Vector& x0, double step) {
    Vector g(x0.size());
    Vector xp = x0;
    Vector xm = x0;
    for (Eigen::Index i = 0; i < x0.size(); ++i) {
        xp[i] = x0[i] + step;
        xm[i] = x0[i] - step;
        g[i] = (predict(m, xp) - predict(m, xm)) / (2.0 * step);
        xp[i] = x0[i];
        xm[i] = x0[i];
    }
    return g;
}

struct SuiteResult {
    std::string name;
    std::size_t instances = 0;
    double max_error = 0.0;
    double tolerance = 0.0;
    bool passed = true;
    double seconds = 0.0;
    std::string detail;
};

namespace detail {

template <class Body>
SuiteResult timed(std::string name, double tolerance, Body&& body) {
    SuiteResult r;
    r.name = std::move(name);
    r.tolerance = tolerance;
    const auto start = std::chrono::steady_clock::now();
    body(r);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    r.passed = r.passed && r.max_error <= tolerance;
    return r;
}

}  // namespace detail

/// Per-patch evaluation vs prediction of the aggregated banded model.
inline SuiteResult patch_equivalence(std::uint64_t seed, std::size_t instances, std::size_t max_n = 16) {
    return detail::timed("patch_equivalence", 1e-10, [&](SuiteResult& r) {
        Rng rng(seed);
        for (std::size_t i = 0; i < instances; ++i) {
            const ConvSpec spec = random_spec(rng, max_n);
            const ActivationParams p = random_activation(rng);
            const auto set = random_patch_set(rng, spec, p);
            const QuadraticModel m = oracle::aggregate(set);
            const Vector x = random_vector(rng, static_cast<Eigen::Index>(spec.n()));
            r.max_error = std::max(r.max_error, rel_error(oracle::eval_patch_model(set, x), predict(m, x)));
            ++r.instances;
        }
    });
}

/// Explicit neuron sum vs the Z-parametrization it induces (unit-norm filters).
inline SuiteResult neuron_sum_consistency(std::uint64_t seed, std::size_t instances, std::size_t max_n = 16) {
    return detail::timed("neuron_sum_consistency", 1e-10, [&](SuiteResult& r) {
        Rng rng(seed);
        for (std::size_t i = 0; i < instances; ++i) {
            const ConvSpec spec = random_spec(rng, max_n);
            const ActivationParams p = random_activation(rng);
            const auto neurons = static_cast<Eigen::Index>(uniform_int(rng, 1, 6));
            const auto f = static_cast<Eigen::Index>(spec.f());
            oracle::NeuronSet ns{Matrix(neurons, f), Matrix(neurons, static_cast<Eigen::Index>(spec.patches()))};
            for (Eigen::Index j = 0; j < neurons; ++j) {
                Vector w = random_vector(rng, f);
                while (w.norm() < 1e-3) w = random_vector(rng, f);
                ns.filters.row(j) = w.normalized().transpose();
                ns.alphas.row(j) = random_vector(rng, ns.alphas.cols()).transpose();
            }
            const Vector x = random_vector(rng, static_cast<Eigen::Index>(spec.n()));
            const double direct = oracle::eval_neuron_sum(ns, p, x);
            const auto set = oracle::to_patch_models(ns, spec.n(), p);
            const double via_patches = oracle::eval_patch_model(set, x);
            const double via_band = predict(oracle::aggregate(set), x);
            r.max_error = std::max({r.max_error, rel_error(direct, via_patches), rel_error(direct, via_band)});
            ++r.instances;
        }
    });
}

/// Closed-form sensitivity vs central finite differences (step 1e-5).
inline SuiteResult gradient_check(std::uint64_t seed, std::size_t instances, std::size_t max_n = 16) {
    return detail::timed("gradient_check", 1e-6, [&](SuiteResult& r) {
        Rng rng(seed);
        for (std::size_t i = 0; i < instances; ++i) {
            const ConvSpec spec = random_spec(rng, max_n);
            const QuadraticModel m = random_model(rng, spec, random_activation(rng));
            const Vector x0 = random_vector(rng, static_cast<Eigen::Index>(spec.n()));
            r.max_error =
                std::max(r.max_error, rel_error(sensitivity(m, x0), finite_difference_gradient(m, x0, 1e-5)));
            ++r.instances;
        }
    });
}

/// Normal-equation residual and random-direction perturbation probe of
/// solve_ls on random full-rank systems with N >= 2 (q + n).
///
/// max_error is the worst normal residual divided by max(1, ||H^T y||); the
/// suite also fails if any perturbation decreases the loss by more than 1e-12.
inline SuiteResult ls_optimality(std::uint64_t seed, std::size_t instances, std::size_t directions = 100,
                                 std::size_t max_n = 10) {
    return detail::timed("ls_optimality", 1e-8, [&](SuiteResult& r) {
        Rng rng(seed);
        double worst_drop = 0.0;
        for (std::size_t i = 0; i < instances; ++i) {
            const ConvSpec spec = random_spec(rng, max_n);
            const ActivationParams p = random_activation(rng);
            const std::size_t N = 2 * spec.weight_count() + uniform_int(rng, 0, 20);
            const Dataset data = random_dataset(rng, N, spec.n());
            const RegressorMatrix h = build_regressor(data, spec, p);
            const SolveReport rep = solve_ls(h, data.labels());
            const Vector hty = h.matrix().transpose() * data.labels();
            r.max_error = std::max(r.max_error, rep.normal_residual_norm / std::max(1.0, hty.norm()));
            if (rep.rank_deficient) {
                r.passed = false;
                r.detail = "unexpected rank deficiency";
            }

            const auto loss = [&](const Vector& theta) { return (h.matrix() * theta - data.labels()).squaredNorm(); };
            const Vector& theta = rep.theta.values();
            const double base = loss(theta);
            for (std::size_t k = 0; k < directions; ++k) {
                Vector delta = random_vector(rng, theta.size());
                while (delta.norm() < 1e-6) delta = random_vector(rng, theta.size());
                delta.normalize();
                const double drop = base - loss(theta + 1e-3 * delta);
                worst_drop = std::max(worst_drop, drop);
            }
            ++r.instances;
        }
        if (worst_drop > 1e-12) {
            r.passed = false;
            r.detail = "perturbation decreased the loss by " + std::to_string(worst_drop);
        }
    });
}

/// Banded pipeline at f = n vs the independent dense QNN fit.
inline SuiteResult full_filter_reduction(std::uint64_t seed, std::size_t instances, std::size_t max_n = 8) {
    return detail::timed("full_filter_reduction", 1e-8, [&](SuiteResult& r) {
        Rng rng(seed);
        for (std::size_t i = 0; i < instances; ++i) {
            const std::size_t n = uniform_int(rng, 1, max_n);
            const ConvSpec spec(n, n);
            const ActivationParams p = random_activation(rng);
            const Dataset data = random_dataset(rng, 3 * spec.weight_count() + 5, n);
            const SolveReport rep = solve_ls(build_regressor(data, spec, p), data.labels());
            const QuadraticModel dense = oracle::dense_qnn_fit(data, p);
            r.max_error = std::max(r.max_error, rel_error(rep.theta.values(), to_weights(dense).values()));
            ++r.instances;
        }
    });
}

inline std::vector<SuiteResult> run_all(std::uint64_t seed, std::size_t instances) {
    return {patch_equivalence(seed, instances), neuron_sum_consistency(seed + 1, instances),
            gradient_check(seed + 2, instances), ls_optimality(seed + 3, instances),
            full_filter_reduction(seed + 4, instances)};
}

}  // namespace cqnn::verify
