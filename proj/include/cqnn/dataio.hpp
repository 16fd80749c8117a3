#pragma once

// Time-series ingestion and the windowing schemes that turn series into
// regression datasets.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cqnn/regressor.hpp"

namespace cqnn {

struct Channel {
    std::string name;
    std::vector<double> samples;
};

/// Named channels sampled on a common clock.
class TimeSeries {
public:
    TimeSeries() = default;

    explicit TimeSeries(std::vector<Channel> channels) : channels_(std::move(channels)) {
        for (const auto& ch : channels_) {
            if (ch.samples.size() != channels_.front().samples.size())
                throw DimensionMismatch("time series channel \"" + ch.name + "\" has a different length");
            for (double v : ch.samples)
                if (!std::isfinite(v)) throw NonFiniteInput("time series channel \"" + ch.name + "\" is not finite");
        }
    }

    std::size_t length() const noexcept { return channels_.empty() ? 0 : channels_.front().samples.size(); }
    const std::vector<Channel>& channels() const noexcept { return channels_; }

    bool has(std::string_view name) const noexcept {
        for (const auto& ch : channels_)
            if (ch.name == name) return true;
        return false;
    }

    const std::vector<double>& channel(std::string_view name) const {
        for (const auto& ch : channels_)
            if (ch.name == name) return ch.samples;
        throw ChannelMissing("time series has no channel \"" + std::string(name) + "\"");
    }

private:
    std::vector<Channel> channels_;
};

enum class SplitMode { sequential_prefix };

class SplitSpec {
public:
    explicit SplitSpec(double train_fraction, SplitMode mode = SplitMode::sequential_prefix)
        : fraction_(train_fraction), mode_(mode) {
        if (!(train_fraction > 0.0 && train_fraction < 1.0))
            throw InvalidSpec("split fraction must lie in (0, 1)");
    }

    double train_fraction() const noexcept { return fraction_; }
    SplitMode mode() const noexcept { return mode_; }

private:
    double fraction_;
    SplitMode mode_;
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline double parse_cell(std::string_view cell, std::size_t line, std::size_t column) {
    cell = trim(cell);
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value))
        throw ParseError("line " + std::to_string(line) + ", column " + std::to_string(column) +
                         ": not a finite number: \"" + std::string(cell) + "\"");
    return value;
}

}  // namespace detail

/// Parses CSV text with a header row. An empty schema keeps every column;
/// otherwise only the named columns are kept, in schema order.
inline TimeSeries parse_csv(std::string_view text, const std::vector<std::string>& schema = {}) {
    std::vector<std::string_view> lines;
    {
        std::size_t start = 0;
        while (start <= text.size()) {
            const std::size_t nl = text.find('\n', start);
            std::string_view line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
            lines.push_back(line);
            if (nl == std::string_view::npos) break;
            start = nl + 1;
        }
    }
    std::size_t header_line = 0;
    while (header_line < lines.size() && detail::trim(lines[header_line]).empty()) ++header_line;
    if (header_line == lines.size()) throw ParseError("CSV has no header row");

    std::string_view header_text = lines[header_line];
    if (header_text.substr(0, 3) == "\xEF\xBB\xBF") header_text.remove_prefix(3);
    std::vector<std::string> header;
    for (auto field : detail::split_fields(header_text)) header.emplace_back(detail::trim(field));

    std::vector<std::size_t> picked;
    std::vector<std::string> names;
    if (schema.empty()) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            picked.push_back(i);
            names.push_back(header[i]);
        }
    } else {
        for (const auto& want : schema) {
            std::size_t found = header.size();
            for (std::size_t i = 0; i < header.size(); ++i)
                if (header[i] == want) found = i;
            if (found == header.size()) throw MissingColumn("CSV header has no column \"" + want + "\"");
            picked.push_back(found);
            names.push_back(want);
        }
    }

    std::vector<Channel> channels(picked.size());
    for (std::size_t k = 0; k < picked.size(); ++k) channels[k].name = names[k];
    for (std::size_t li = header_line + 1; li < lines.size(); ++li) {
        if (detail::trim(lines[li]).empty()) continue;
        const auto fields = detail::split_fields(lines[li]);
        if (fields.size() != header.size())
            throw ParseError("line " + std::to_string(li + 1) + ": expected " + std::to_string(header.size()) +
                             " fields, found " + std::to_string(fields.size()));
        for (std::size_t k = 0; k < picked.size(); ++k)
            channels[k].samples.push_back(detail::parse_cell(fields[picked[k]], li + 1, picked[k] + 1));
    }
    if (channels.empty() || channels.front().samples.empty()) throw ParseError("CSV has no data rows");
    return TimeSeries(std::move(channels));
}

inline TimeSeries load_csv(const std::string& path, const std::vector<std::string>& schema = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileNotFound("cannot open \"" + path + "\"");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_csv(buf.str(), schema);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

/// Rows [u_{i-d} .. u_{i-1}, y_{i-d} .. y_{i-1}] with label y_i, for i = d .. T-1.
inline Dataset narx_window(const TimeSeries& ts, std::string_view input_channel, std::string_view output_channel,
                           std::size_t d) {
    if (d < 1) throw InvalidSpec("NARX delay d must be >= 1");
    const auto& u = ts.channel(input_channel);
    const auto& y = ts.channel(output_channel);
    const std::size_t T = u.size();
    if (T <= d)
        throw InsufficientData("NARX window with d = " + std::to_string(d) + " needs more than " + std::to_string(d) +
                               " samples, series has " + std::to_string(T));
    const std::size_t N = T - d;
    RowMatrix x(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(2 * d));
    Vector labels(static_cast<Eigen::Index>(N));
    for (std::size_t row = 0; row < N; ++row) {
        const std::size_t i = row + d;
        for (std::size_t k = 0; k < d; ++k) {
            x(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(k)) = u[i - d + k];
            x(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(d + k)) = y[i - d + k];
        }
        labels[static_cast<Eigen::Index>(row)] = y[i];
    }
    return Dataset(std::move(x), std::move(labels));
}

/// Non-overlapping blocks of r samples. Row j concatenates samples
/// [j r, (j + 1) r) of every listed channel in order; its label is the change
/// of the label channel across the block, P[(j + 1) r - 1] - P[j r].
/// One dataset is produced per label channel.
inline std::vector<Dataset> multichannel_window(const TimeSeries& ts, const std::vector<std::string>& channels,
                                                std::size_t r, const std::vector<std::string>& label_channels) {
    if (r < 1) throw InvalidSpec("window length r must be >= 1");
    if (channels.empty()) throw InvalidSpec("multichannel window needs at least one input channel");
    std::vector<const std::vector<double>*> inputs;
    for (const auto& name : channels) inputs.push_back(&ts.channel(name));
    std::vector<const std::vector<double>*> labels;
    for (const auto& name : label_channels) labels.push_back(&ts.channel(name));

    const std::size_t windows = ts.length() / r;
    if (windows < 1)
        throw InsufficientData("window length r = " + std::to_string(r) + " exceeds series length " +
                               std::to_string(ts.length()));
    const std::size_t n = r * channels.size();
    RowMatrix x(static_cast<Eigen::Index>(windows), static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < windows; ++j)
        for (std::size_t c = 0; c < inputs.size(); ++c)
            for (std::size_t t = 0; t < r; ++t)
                x(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c * r + t)) = (*inputs[c])[j * r + t];

    std::vector<Dataset> out;
    for (const auto* p : labels) {
        Vector y(static_cast<Eigen::Index>(windows));
        for (std::size_t j = 0; j < windows; ++j) y[static_cast<Eigen::Index>(j)] = (*p)[(j + 1) * r - 1] - (*p)[j * r];
        out.emplace_back(x, std::move(y));
    }
    return out;
}

struct SplitDatasets {
    Dataset train;
    Dataset test;
};

/// Sequential prefix split: the first floor(N * fraction) rows train, the
/// rest test. Both halves keep at least one row.
inline SplitDatasets split(const Dataset& data, const SplitSpec& s) {
    const std::size_t N = data.samples();
    if (N < 2) throw InsufficientData("splitting needs at least 2 samples");
    auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(N) * s.train_fraction()));
    n_train = std::clamp<std::size_t>(n_train, 1, N - 1);
    const auto tr = static_cast<Eigen::Index>(n_train);
    const auto te = static_cast<Eigen::Index>(N - n_train);
    return {Dataset(data.inputs().topRows(tr), data.labels().head(tr)),
            Dataset(data.inputs().bottomRows(te), data.labels().tail(te))};
}

/// Mean over samples of the squared prediction error.
template <class Predictor>
double mean_squared_error(const Dataset& data, Predictor&& predict_row) {
    double acc = 0.0;
    for (std::size_t i = 0; i < data.samples(); ++i) {
        const double e = predict_row(data.row(i).transpose()) - data.labels()[static_cast<Eigen::Index>(i)];
        acc += e * e;
    }
    return acc / static_cast<double>(data.samples());
}

/// Synthetic input/output series standing in for a measured plant.
///
///   u_t = 0.8 u_{t-1} + 0.5 e_t,             e_t ~ U[-1, 1]       (low-pass input)
///   y_t = 0.6 y_{t-1} - 0.15 y_{t-2} + 0.5 u_{t-1} + 0.25 u_{t-2}
///         + 0.4 u_{t-1} u_{t-2} - 0.2 y_{t-1} y_{t-2} + 0.005 v_t,   v_t ~ N(0, 1)
///
/// The deterministic part only uses products of adjacent lags, so it is
/// representable by a banded quadratic model with d >= 2 and f >= 2, and has
/// no constant term (the model's constant is tied to trace(Z1)). The small
/// output noise keeps the lagged-output columns from being exactly collinear.
inline TimeSeries synth_narx(std::size_t T, std::uint64_t seed) {
    if (T < 20) throw InsufficientData("synth_narx needs T >= 20");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> drive(-1.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> u(T, 0.0);
    std::vector<double> y(T, 0.0);
    double state = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        state = 0.8 * state + 0.5 * drive(rng);
        u[t] = state;
    }
    for (std::size_t t = 2; t < T; ++t) {
        y[t] = 0.6 * y[t - 1] - 0.15 * y[t - 2] + 0.5 * u[t - 1] + 0.25 * u[t - 2] + 0.4 * u[t - 1] * u[t - 2] -
               0.2 * y[t - 1] * y[t - 2] + 0.005 * noise(rng);
    }
    return TimeSeries({Channel{"u", std::move(u)}, Channel{"y", std::move(y)}});
}

}  // namespace cqnn
