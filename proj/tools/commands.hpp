#pragma once

// Implementation of the cqnn command-line subcommands. main() only parses
// flags into these config structs; everything else lives here so the tests
// can drive the commands directly.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cqnn/cqnn.hpp"

namespace cqnn::cli {

enum ExitCode : int { ok = 0, usage_error = 1, data_error = 2, verification_failure = 3 };

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Where the training rows come from and how they are windowed.
struct DataOptions {
    std::string path;               // CSV file; empty means synthetic
    std::size_t synth_length = 0;   // T for synth_narx when path is empty
    std::uint64_t seed = 1;
    std::string mode = "narx";      // narx | window | features
    std::size_t d = 5;
    std::size_t r = 0;
    std::string input = "u";
    std::string output = "y";
    std::vector<std::string> channels;
    std::string label;
    double split = 0.5;
};

struct TrainConfig {
    DataOptions data;
    std::size_t f = 3;
    std::vector<double> betas{0.0};
    double a = 0.0937;
    double b = 0.5;
    double c = 0.4688;
    std::string out = "model.json";
    std::string metrics;
};

struct PredictConfig {
    std::string model;
    DataOptions data;
    std::string subset = "all";  // all | train | test (windowed modes only)
    std::string out;
};

struct SensitivityConfig {
    std::string model;
    std::string x0;
    std::string out;
    bool summary = false;
};

struct VerifyConfig {
    std::uint64_t seed = 1;
    std::size_t instances = 200;
};

struct BenchConfig {
    DataOptions data;
    std::vector<std::string> f_list{"3", "n"};
    std::vector<double> betas{0.0};
    double a = 0.0937;
    double b = 0.5;
    double c = 0.4688;
    std::size_t repeats = 5;
    std::string out;
};

namespace detail {

inline std::string fmt(double v, int digits = 17) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write \"" + path + "\"");
    out << text;
    if (!out) throw DataError("failed writing \"" + path + "\"");
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileNotFound("cannot open \"" + path + "\"");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline QuadraticModel load_model(const std::string& path) {
    const std::string text = read_file(path);
    try {
        return deserialize(text);
    } catch (const MalformedModelFile& e) {
        throw MalformedModelFile(path + ": " + e.what());
    }
}

inline TimeSeries load_series(const DataOptions& o) {
    if (!o.path.empty()) return load_csv(o.path);
    if (o.synth_length > 0) return synth_narx(o.synth_length, o.seed);
    throw ConfigError("no data source: pass --data <csv> or --synth <T>");
}

/// Features-mode CSV: every column is a feature except an optional "y" column.
inline Dataset features_dataset(const TimeSeries& ts, bool& has_labels) {
    std::vector<const Channel*> feats;
    const Channel* label = nullptr;
    for (const auto& ch : ts.channels()) {
        if (ch.name == "y")
            label = &ch;
        else
            feats.push_back(&ch);
    }
    if (feats.empty()) throw DataError("feature CSV has no feature columns");
    has_labels = label != nullptr;
    RowMatrix x(static_cast<Eigen::Index>(ts.length()), static_cast<Eigen::Index>(feats.size()));
    Vector y = Vector::Zero(static_cast<Eigen::Index>(ts.length()));
    for (std::size_t i = 0; i < ts.length(); ++i) {
        for (std::size_t j = 0; j < feats.size(); ++j)
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = feats[j]->samples[i];
        if (label) y[static_cast<Eigen::Index>(i)] = label->samples[i];
    }
    return Dataset(std::move(x), std::move(y));
}

inline Dataset windowed_dataset(const DataOptions& o) {
    const TimeSeries ts = load_series(o);
    if (o.mode == "narx") return narx_window(ts, o.input, o.output, o.d);
    if (o.mode == "window") {
        if (o.r < 1) throw ConfigError("--mode window needs --r >= 1");
        if (o.channels.empty()) throw ConfigError("--mode window needs --channels");
        if (o.label.empty()) throw ConfigError("--mode window needs --label");
        return multichannel_window(ts, o.channels, o.r, {o.label}).front();
    }
    if (o.mode == "features") {
        bool has_labels = false;
        Dataset data = features_dataset(ts, has_labels);
        if (!has_labels) throw DataError("feature CSV needs a \"y\" column for training");
        return data;
    }
    throw ConfigError("unknown --mode \"" + o.mode + "\" (expected narx, window or features)");
}

inline SplitDatasets training_split(const DataOptions& o) {
    if (!(o.split > 0.0 && o.split < 1.0)) throw ConfigError("--split must lie in (0, 1)");
    return split(windowed_dataset(o), SplitSpec(o.split));
}

inline ActivationParams activation(double a, double b, double c) {
    try {
        return validate_activation(a, b, c);
    } catch (const InvalidActivation& e) {
        throw ConfigError(e.what());
    }
}

inline void check_betas(const std::vector<double>& betas) {
    if (betas.empty()) throw ConfigError("--beta needs at least one value");
    for (double beta : betas)
        if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("--beta values must be finite and >= 0");
}

inline ConvSpec conv_spec(std::size_t n, std::size_t f) {
    if (f < 1 || f > n)
        throw ConfigError("filter length f = " + std::to_string(f) + " must lie in [1, n] with n = " + std::to_string(n));
    return ConvSpec(n, f);
}

/// model.json -> model_beta10.json when several betas are trained.
inline std::string beta_path(const std::string& out, double beta, bool several) {
    if (!several) return out;
    const std::filesystem::path p(out);
    return (p.parent_path() / (p.stem().string() + "_beta" + fmt(beta, 6) + p.extension().string())).string();
}

}  // namespace detail

/// One trained model with its metrics. train_seconds covers regressor
/// assembly plus the solve, not file I/O.
struct TrainResult {
    QuadraticModel model;
    SolveReport report;
    double train_mse;
    double test_mse;
    double train_seconds;
};

inline TrainResult fit(const SplitDatasets& data, const ConvSpec& spec, const ActivationParams& p, double beta) {
    const auto start = std::chrono::steady_clock::now();
    const RegressorMatrix h = build_regressor(data.train, spec, p);
    SolveReport rep = solve_ridge(h, data.train.labels(), beta);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    QuadraticModel m = reconstruct(rep.theta, p);
    const auto pred = [&](const Vector& x) { return predict(m, x); };
    const double train_mse = mean_squared_error(data.train, pred);
    const double test_mse = mean_squared_error(data.test, pred);
    return TrainResult{std::move(m), std::move(rep), train_mse, test_mse, seconds};
}

inline int cmd_train(const TrainConfig& cfg, std::ostream& out) {
    detail::check_betas(cfg.betas);
    const ActivationParams p = detail::activation(cfg.a, cfg.b, cfg.c);
    const SplitDatasets data = detail::training_split(cfg.data);
    const ConvSpec spec = detail::conv_spec(data.train.features(), cfg.f);

    std::string metrics =
        "beta,n,f,weights,n_train,n_test,train_mse,test_mse,train_time_s,theta_norm,strategy,rank_deficient,model\n";
    for (double beta : cfg.betas) {
        const TrainResult r = fit(data, spec, p, beta);
        const std::string path = detail::beta_path(cfg.out, beta, cfg.betas.size() > 1);
        detail::write_file(path, serialize(r.model));
        metrics += detail::fmt(beta) + "," + std::to_string(spec.n()) + "," + std::to_string(spec.f()) + "," +
                   std::to_string(spec.weight_count()) + "," + std::to_string(data.train.samples()) + "," +
                   std::to_string(data.test.samples()) + "," + detail::fmt(r.train_mse) + "," +
                   detail::fmt(r.test_mse) + "," + detail::fmt(r.train_seconds, 6) + "," +
                   detail::fmt(r.report.theta.values().norm()) + "," + to_string(r.report.solve_strategy) + "," +
                   (r.report.rank_deficient ? "1" : "0") + "," + path + "\n";
        out << "beta=" << detail::fmt(beta, 6) << "  n=" << spec.n() << " f=" << spec.f()
            << "  train MSE=" << detail::fmt(r.train_mse, 6) << "  test MSE=" << detail::fmt(r.test_mse, 6)
            << "  train time=" << detail::fmt(r.train_seconds, 4) << " s  (" << to_string(r.report.solve_strategy)
            << (r.report.rank_deficient ? ", rank deficient" : "") << ")  -> " << path << "\n";
    }
    if (!cfg.metrics.empty()) detail::write_file(cfg.metrics, metrics);
    return ok;
}

inline int cmd_predict(const PredictConfig& cfg, std::ostream& out) {
    const QuadraticModel m = detail::load_model(cfg.model);
    bool has_labels = true;
    std::optional<Dataset> rows;
    if (cfg.data.mode == "features") {
        rows.emplace(detail::features_dataset(detail::load_series(cfg.data), has_labels));
    } else if (cfg.subset == "all") {
        rows.emplace(detail::windowed_dataset(cfg.data));
    } else if (cfg.subset == "train" || cfg.subset == "test") {
        SplitDatasets s = detail::training_split(cfg.data);
        rows.emplace(cfg.subset == "train" ? std::move(s.train) : std::move(s.test));
    } else {
        throw ConfigError("--subset must be all, train or test");
    }
    const Dataset& data = *rows;
    if (data.features() != m.spec().n())
        throw DimensionMismatch("data has " + std::to_string(data.features()) + " features but the model expects n = " +
                                std::to_string(m.spec().n()));

    std::string csv = has_labels ? "index,y_true,y_pred\n" : "index,y_pred\n";
    double sse = 0.0;
    for (std::size_t i = 0; i < data.samples(); ++i) {
        const double yhat = predict(m, data.row(i).transpose());
        const double y = data.labels()[static_cast<Eigen::Index>(i)];
        csv += std::to_string(i) + ",";
        if (has_labels) {
            csv += detail::fmt(y) + ",";
            sse += (yhat - y) * (yhat - y);
        }
        csv += detail::fmt(yhat) + "\n";
    }
    if (!cfg.out.empty())
        detail::write_file(cfg.out, csv);
    else
        out << csv;
    if (has_labels) std::cerr << "mse=" << detail::fmt(sse / static_cast<double>(data.samples())) << "\n";
    return ok;
}

inline int cmd_sensitivity(const SensitivityConfig& cfg, std::ostream& out) {
    const QuadraticModel m = detail::load_model(cfg.model);
    const TimeSeries ts = load_csv(cfg.x0);
    const std::size_t n = m.spec().n();
    if (ts.channels().size() != n)
        throw DimensionMismatch("x0 file has " + std::to_string(ts.channels().size()) +
                                " columns but the model expects n = " + std::to_string(n));

    std::string csv = "index";
    for (std::size_t j = 0; j < n; ++j) csv += ",g" + std::to_string(j);
    csv += "\n";
    Vector max_abs = Vector::Zero(static_cast<Eigen::Index>(n));
    Vector x0(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < ts.length(); ++i) {
        for (std::size_t j = 0; j < n; ++j) x0[static_cast<Eigen::Index>(j)] = ts.channels()[j].samples[i];
        const Vector g = sensitivity(m, x0);
        max_abs = max_abs.cwiseMax(g.cwiseAbs());
        csv += std::to_string(i);
        for (Eigen::Index j = 0; j < g.size(); ++j) csv += "," + detail::fmt(g[j]);
        csv += "\n";
    }
    if (cfg.summary) {
        csv += "max_abs";
        for (Eigen::Index j = 0; j < max_abs.size(); ++j) csv += "," + detail::fmt(max_abs[j]);
        csv += "\n";
    }
    if (!cfg.out.empty())
        detail::write_file(cfg.out, csv);
    else
        out << csv;
    return ok;
}

inline int cmd_verify(const VerifyConfig& cfg, std::ostream& out) {
    if (cfg.instances == 0) {
        out << "warning: instance count is 0, no checks were run (vacuous pass)\n";
        return ok;
    }
    bool all = true;
    for (const auto& r : verify::run_all(cfg.seed, cfg.instances)) {
        all = all && r.passed;
        out << (r.passed ? "PASS " : "FAIL ") << r.name << "  instances=" << r.instances
            << "  max_error=" << detail::fmt(r.max_error, 3) << "  tolerance=" << detail::fmt(r.tolerance, 3);
        if (!r.detail.empty()) out << "  (" << r.detail << ")";
        out << "\n";
    }
    return all ? ok : verification_failure;
}

struct BenchRow {
    std::string method;
    std::size_t f;
    std::size_t weights;
    double train_mse;
    double test_mse;
    double train_seconds;
};

inline std::vector<BenchRow> run_bench(const BenchConfig& cfg) {
    detail::check_betas(cfg.betas);
    if (cfg.betas.size() != 1) throw ConfigError("bench takes a single --beta value");
    if (cfg.repeats < 1) throw ConfigError("--repeats must be >= 1");
    const ActivationParams p = detail::activation(cfg.a, cfg.b, cfg.c);
    const SplitDatasets data = detail::training_split(cfg.data);
    const std::size_t n = data.train.features();

    std::vector<std::size_t> filters;
    for (const auto& tok : cfg.f_list) {
        std::size_t f = 0;
        if (tok == "n") {
            f = n;
        } else {
            try {
                std::size_t used = 0;
                f = std::stoul(tok, &used);
                if (used != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw ConfigError("--f-list entries must be integers or \"n\" (got \"" + tok + "\")");
            }
        }
        detail::conv_spec(n, f);
        if (std::find(filters.begin(), filters.end(), f) == filters.end()) filters.push_back(f);
    }
    if (std::find(filters.begin(), filters.end(), n) == filters.end()) filters.push_back(n);

    std::vector<BenchRow> rows;
    for (std::size_t f : filters) {
        const ConvSpec spec(n, f);
        double best = std::numeric_limits<double>::infinity();
        std::optional<TrainResult> r;
        for (std::size_t k = 0; k < cfg.repeats; ++k) {
            r.emplace(fit(data, spec, p, cfg.betas.front()));
            best = std::min(best, r->train_seconds);
        }
        rows.push_back({f == n ? "ls-qnn" : "ls-cqnn", f, spec.weight_count(), r->train_mse, r->test_mse, best});
    }
    return rows;
}

inline int cmd_bench(const BenchConfig& cfg, std::ostream& out) {
    const auto rows = run_bench(cfg);
    std::string csv = "method,f,weights,train_mse,test_mse,train_time_s\n";
    double qnn_time = 0.0;
    for (const auto& r : rows)
        if (r.method == "ls-qnn") qnn_time = r.train_seconds;
    for (const auto& r : rows) {
        csv += r.method + "," + std::to_string(r.f) + "," + std::to_string(r.weights) + "," + detail::fmt(r.train_mse) +
               "," + detail::fmt(r.test_mse) + "," + detail::fmt(r.train_seconds, 6) + "\n";
        if (r.method == "ls-cqnn" && r.train_seconds > qnn_time)
            std::cerr << "warning: ls-cqnn with f = " << r.f << " took longer than ls-qnn (" << r.train_seconds
                      << " s vs " << qnn_time << " s)\n";
    }
    if (!cfg.out.empty())
        detail::write_file(cfg.out, csv);
    else
        out << csv;
    return ok;
}

/// Runs a command and maps exceptions onto the exit-code contract:
/// 1 usage/config error, 2 data error.
inline int guarded(const std::function<int()>& body, std::ostream& err) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return usage_error;
    } catch (const InvalidSpec& e) {
        err << "error: " << e.what() << "\n";
        return usage_error;
    } catch (const InvalidActivation& e) {
        err << "error: " << e.what() << "\n";
        return usage_error;
    } catch (const NegativeRegularizer& e) {
        err << "error: " << e.what() << "\n";
        return usage_error;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return data_error;
    }
}

}  // namespace cqnn::cli
