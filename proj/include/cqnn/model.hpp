#pragma once

// Banded quadratic input-output model
//
//   y(x) = a x^T Z1 x + b Z2^T x + c Z4,   Z4 = trace(Z1),
//
// with Z1 symmetric and zero outside its first f diagonals. Z1 is stored as
// band coefficients in the same diagonal-major order as BandIndexMap, so an
// out-of-band entry cannot be represented at all.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <string>
#include <string_view>
#include <utility>

#include "json.hpp"

#include "cqnn/solver.hpp"

namespace cqnn {

class QuadraticModel {
public:
    QuadraticModel(ConvSpec spec, ActivationParams params, Vector zbar1_band, Vector zbar2)
        : spec_(spec), params_(params), band_(std::move(zbar1_band)), zbar2_(std::move(zbar2)) {
        detail::require_dims(static_cast<std::size_t>(band_.size()) == spec_.band_size(),
                             "model band has " + std::to_string(band_.size()) + " entries, expected q = " +
                                 std::to_string(spec_.band_size()));
        detail::require_dims(static_cast<std::size_t>(zbar2_.size()) == spec_.n(),
                             "model linear term has " + std::to_string(zbar2_.size()) + " entries, expected n = " +
                                 std::to_string(spec_.n()));
        zbar4_ = band_.head(static_cast<Eigen::Index>(spec_.n())).sum();
    }

    static QuadraticModel zero(ConvSpec spec, ActivationParams params) {
        return QuadraticModel(spec, params, Vector::Zero(static_cast<Eigen::Index>(spec.band_size())),
                              Vector::Zero(static_cast<Eigen::Index>(spec.n())));
    }

    const ConvSpec& spec() const noexcept { return spec_; }
    const ActivationParams& params() const noexcept { return params_; }
    const Vector& zbar1_band() const noexcept { return band_; }
    const Vector& zbar2() const noexcept { return zbar2_; }
    double zbar4() const noexcept { return zbar4_; }

    /// Entry (r, c) of Z1, zero outside the band.
    double zbar1(std::size_t r, std::size_t c) const {
        if (r > c) std::swap(r, c);
        const std::size_t d = c - r;
        if (d >= spec_.f()) return 0.0;
        return band_[static_cast<Eigen::Index>(spec_.band_index(r, d))];
    }

    Matrix zbar1_dense() const {
        const auto n = static_cast<Eigen::Index>(spec_.n());
        Matrix z = Matrix::Zero(n, n);
        for (std::size_t d = 0; d < spec_.f(); ++d) {
            for (std::size_t r = 0; r + d < spec_.n(); ++r) {
                const double v = band_[static_cast<Eigen::Index>(spec_.band_index(r, d))];
                z(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r + d)) = v;
                z(static_cast<Eigen::Index>(r + d), static_cast<Eigen::Index>(r)) = v;
            }
        }
        return z;
    }

    /// Z1 x using only the band.
    Vector zbar1_times(const Eigen::Ref<const Vector>& x) const {
        const std::size_t n = spec_.n();
        Vector out = Vector::Zero(static_cast<Eigen::Index>(n));
        for (std::size_t d = 0; d < spec_.f(); ++d) {
            const std::size_t off = spec_.diagonal_offset(d);
            for (std::size_t r = 0; r + d < n; ++r) {
                const double z = band_[static_cast<Eigen::Index>(off + r)];
                const auto i = static_cast<Eigen::Index>(r);
                const auto j = static_cast<Eigen::Index>(r + d);
                out[i] += z * x[j];
                if (d != 0) out[j] += z * x[i];
            }
        }
        return out;
    }

private:
    ConvSpec spec_;
    ActivationParams params_;
    Vector band_;
    Vector zbar2_;
    double zbar4_ = 0.0;
};

inline QuadraticModel reconstruct(const WeightVector& theta, const ActivationParams& params) {
    const ConvSpec& spec = theta.spec();
    const auto n = static_cast<Eigen::Index>(spec.n());
    const auto q = static_cast<Eigen::Index>(spec.band_size());
    Vector band = theta.band();
    band.segment(n, q - n) *= 0.5;  // off-diagonal weights carry 2 * Z1[r, c]
    return QuadraticModel(spec, params, std::move(band), theta.linear());
}

/// Inverse of reconstruct().
inline WeightVector to_weights(const QuadraticModel& m) {
    const ConvSpec& spec = m.spec();
    const auto n = static_cast<Eigen::Index>(spec.n());
    const auto q = static_cast<Eigen::Index>(spec.band_size());
    Vector theta(q + n);
    theta.head(q) = m.zbar1_band();
    theta.segment(n, q - n) *= 2.0;
    theta.tail(n) = m.zbar2();
    return WeightVector(std::move(theta), spec);
}

inline double predict(const QuadraticModel& m, const Eigen::Ref<const Vector>& x) {
    const ConvSpec& spec = m.spec();
    detail::require_dims(static_cast<std::size_t>(x.size()) == spec.n(),
                         "predict: input has length " + std::to_string(x.size()) + ", model expects n = " +
                             std::to_string(spec.n()));
    const Vector& band = m.zbar1_band();
    double quad = 0.0;
    for (std::size_t d = 0; d < spec.f(); ++d) {
        const std::size_t off = spec.diagonal_offset(d);
        const double weight = d == 0 ? 1.0 : 2.0;
        double acc = 0.0;
        for (std::size_t r = 0; r + d < spec.n(); ++r)
            acc += band[static_cast<Eigen::Index>(off + r)] * x[static_cast<Eigen::Index>(r)] *
                   x[static_cast<Eigen::Index>(r + d)];
        quad += weight * acc;
    }
    const ActivationParams& p = m.params();
    return p.a() * quad + p.b() * m.zbar2().dot(x) + p.c() * m.zbar4();
}

/// Gradient of the model output with respect to the input at x0: 2a Z1 x0 + b Z2.
inline Vector sensitivity(const QuadraticModel& m, const Eigen::Ref<const Vector>& x0) {
    detail::require_dims(static_cast<std::size_t>(x0.size()) == m.spec().n(),
                         "sensitivity: input has length " + std::to_string(x0.size()) + ", model expects n = " +
                             std::to_string(m.spec().n()));
    const ActivationParams& p = m.params();
    return 2.0 * p.a() * m.zbar1_times(x0) + p.b() * m.zbar2();
}

// ---------------------------------------------------------------------------
// Model files
//
//   {"n": int, "f": int, "a": num, "b": num, "c": num,
//    "zbar1_band": [q numbers, diagonal-major, true values],
//    "zbar2": [n numbers]}
//
// Z4 is recomputed on load. If a "zbar4" member is present it must match the
// trace of Z1 to 1e-9 relative. Numbers are written with 17 significant
// digits so finite values round-trip bit-exactly.

namespace detail {

inline void append_number(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
    // keep a float token so "-0" is not read back as the integer 0
    if (std::string_view(buf).find_first_of(".eE") == std::string_view::npos) out += ".0";
}

inline void append_array(std::string& out, const Vector& v) {
    out += '[';
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        append_number(out, v[i]);
    }
    out += ']';
}

inline std::size_t line_of(std::string_view text, std::size_t byte) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

inline const nlohmann::json& member(const nlohmann::json& j, const char* name) {
    auto it = j.find(name);
    if (it == j.end()) throw MalformedModelFile(std::string("model file: missing field \"") + name + "\"");
    return *it;
}

inline std::size_t positive_int(const nlohmann::json& j, const char* name) {
    const auto& v = member(j, name);
    if (!v.is_number_integer() || v.get<long long>() < 1)
        throw MalformedModelFile(std::string("model file: field \"") + name + "\" must be a positive integer");
    return v.get<std::size_t>();
}

inline double finite_number(const nlohmann::json& v, const std::string& where) {
    if (!v.is_number()) throw MalformedModelFile("model file: " + where + " must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw MalformedModelFile("model file: " + where + " is not finite");
    return d;
}

inline Vector number_array(const nlohmann::json& j, const char* name, std::size_t expected,
                           const std::string& length_note) {
    const auto& v = member(j, name);
    if (!v.is_array()) throw MalformedModelFile(std::string("model file: field \"") + name + "\" must be an array");
    if (v.size() != expected)
        throw MalformedModelFile(std::string("model file: field \"") + name + "\" has " + std::to_string(v.size()) +
                                 " entries, " + length_note);
    Vector out(static_cast<Eigen::Index>(expected));
    for (std::size_t i = 0; i < expected; ++i)
        out[static_cast<Eigen::Index>(i)] = finite_number(v[i], std::string(name) + "[" + std::to_string(i) + "]");
    return out;
}

}  // namespace detail

inline std::string serialize(const QuadraticModel& m) {
    if (!m.zbar1_band().allFinite() || !m.zbar2().allFinite())
        throw NonFiniteInput("serialize: model contains non-finite coefficients");
    std::string out = "{\n";
    out += "  \"n\": " + std::to_string(m.spec().n()) + ",\n";
    out += "  \"f\": " + std::to_string(m.spec().f()) + ",\n";
    out += "  \"a\": ";
    detail::append_number(out, m.params().a());
    out += ",\n  \"b\": ";
    detail::append_number(out, m.params().b());
    out += ",\n  \"c\": ";
    detail::append_number(out, m.params().c());
    out += ",\n  \"zbar1_band\": ";
    detail::append_array(out, m.zbar1_band());
    out += ",\n  \"zbar2\": ";
    detail::append_array(out, m.zbar2());
    out += "\n}\n";
    return out;
}

inline QuadraticModel deserialize(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedModelFile("model file: JSON syntax error at line " +
                                 std::to_string(detail::line_of(text, e.byte == 0 ? 0 : e.byte - 1)) + ": " +
                                 e.what());
    }
    if (!j.is_object()) throw MalformedModelFile("model file: top level must be a JSON object");

    const std::size_t n = detail::positive_int(j, "n");
    const std::size_t f = detail::positive_int(j, "f");
    if (f > n)
        throw MalformedModelFile("model file: filter length f = " + std::to_string(f) + " exceeds n = " +
                                 std::to_string(n));
    const ConvSpec spec(n, f);

    const double a = detail::finite_number(detail::member(j, "a"), "field \"a\"");
    const double b = detail::finite_number(detail::member(j, "b"), "field \"b\"");
    const double c = detail::finite_number(detail::member(j, "c"), "field \"c\"");
    ActivationParams params = [&] {
        try {
            return validate_activation(a, b, c);
        } catch (const InvalidActivation& e) {
            throw MalformedModelFile(std::string("model file: ") + e.what());
        }
    }();

    Vector band = detail::number_array(
        j, "zbar1_band", spec.band_size(),
        "expected q = " + std::to_string(spec.band_size()) + " for a band of width f = " + std::to_string(f) +
            " (entries outside the band are not allowed)");
    Vector zbar2 = detail::number_array(j, "zbar2", n, "expected n = " + std::to_string(n));
    QuadraticModel m(spec, params, std::move(band), std::move(zbar2));

    if (auto it = j.find("zbar4"); it != j.end()) {
        const double stored = detail::finite_number(*it, "field \"zbar4\"");
        const double scale = std::max({1.0, std::abs(stored), std::abs(m.zbar4())});
        if (std::abs(stored - m.zbar4()) > 1e-9 * scale)
            throw MalformedModelFile("model file: zbar4 does not equal trace(zbar1)");
    }
    return m;
}

}  // namespace cqnn
