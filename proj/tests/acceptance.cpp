// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
//
// Criterion 8 needs the flexible robot arm series as a CSV with columns u and y.
// Point CQNN_ROBOT_ARM_CSV at it to run that check; without it the synthetic
// end-to-end check (criterion 9) stands in.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <string>

#include "cqnn/cqnn.hpp"

using namespace cqnn;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool passed, const std::string& detail) {
    std::printf("%s  %d  %-26s %s\n", passed ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!passed) ++failures;
}

void skip(int id, const std::string& name, const std::string& detail) {
    std::printf("SKIP  %d  %-26s %s\n", id, name.c_str(), detail.c_str());
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string suite_detail(const verify::SuiteResult& r) {
    std::string s = "instances=" + std::to_string(r.instances) + " max_err=" + num(r.max_error) +
                    " tol=" + num(r.tolerance) + " time=" + num(r.seconds) + "s";
    if (!r.detail.empty()) s += " (" + r.detail + ")";
    return s;
}

double variance(const Vector& v) {
    const double mean = v.mean();
    return (v.array() - mean).square().mean();
}

template <class F>
double seconds(F&& body) {
    const auto start = std::chrono::steady_clock::now();
    body();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void criterion_patch_equivalence() {
    const auto r = verify::patch_equivalence(1001, 500);
    report(1, "patch-equivalence", r.passed && r.instances >= 200 && r.seconds < 10.0, suite_detail(r));
}

void criterion_neuron_sum() {
    const auto r = verify::neuron_sum_consistency(1002, 300);
    report(2, "neuron-sum-consistency", r.passed && r.instances >= 100, suite_detail(r));
}

void criterion_ls_optimality() {
    const auto r = verify::ls_optimality(1003, 100, 100);
    report(3, "ls-optimality", r.passed, suite_detail(r));
}

void criterion_gradient() {
    const auto r = verify::gradient_check(1004, 300);
    report(4, "sensitivity-gradient", r.passed && r.instances >= 100, suite_detail(r));
}

// Exactly quadratic targets y = x^T Q x + r^T x + (c / a) tr(Q) lie in the model
// class; fit with f = n on N >= q + n rows and score fresh test rows.
double exact_quadratic_residual(verify::Rng& rng, std::size_t n) {
    const auto p = verify::random_activation(rng);
    const auto ni = static_cast<Eigen::Index>(n);
    const Matrix q = verify::random_symmetric(rng, ni);
    const Vector lin = verify::random_vector(rng, ni);
    const double s = p.c() / p.a() * q.trace();
    const ConvSpec spec(n, n);
    const auto make = [&](std::size_t rows) {
        RowMatrix x(static_cast<Eigen::Index>(rows), ni);
        Vector y(static_cast<Eigen::Index>(rows));
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            const Vector xi = verify::random_vector(rng, ni);
            x.row(i) = xi.transpose();
            y[i] = xi.dot(q * xi) + lin.dot(xi) + s;
        }
        return Dataset(std::move(x), std::move(y));
    };
    const Dataset train = make(spec.weight_count() + verify::uniform_int(rng, 0, 10));
    const Dataset test = make(100);
    const QuadraticModel m = reconstruct(solve_ls(build_regressor(train, spec, p), train.labels()).theta, p);
    double worst = 0.0;
    for (std::size_t i = 0; i < test.samples(); ++i)
        worst = std::max(worst, verify::rel_error(predict(m, test.row(i).transpose()),
                                                  test.labels()[static_cast<Eigen::Index>(i)]));
    return worst;
}

void criterion_full_filter() {
    const auto r = verify::full_filter_reduction(1005, 100);
    verify::Rng rng(1006);
    double worst = 0.0;
    const std::size_t trials = 100;
    for (std::size_t t = 0; t < trials; ++t) worst = std::max(worst, exact_quadratic_residual(rng, 1 + t % 8));
    const bool exact_ok = worst <= 1e-8;
    report(5, "full-filter-reduction", r.passed && exact_ok,
           suite_detail(r) + "; exact-quadratic trials=" + std::to_string(trials) + " max_test_residual=" + num(worst) +
               " tol=1e-08");
}

void criterion_weight_counts() {
    std::size_t pairs = 0;
    std::size_t violations = 0;
    for (std::size_t n = 2; n <= 64; ++n) {
        for (std::size_t f = 2; f <= n; ++f) {
            const ConvSpec spec(n, f);
            const WeightCounts w = band_counts(spec);
            const std::size_t enumerated = BandIndexMap(spec).size() + n;
            const std::size_t closed = (2 * n - f + 1) * f / 2 + n;
            const std::size_t cqnn = (f + 3) * (n - f + 1) * f / 2;
            if (enumerated != closed || w.banded != closed || w.cqnn != cqnn || closed > cqnn) ++violations;
            ++pairs;
        }
    }
    report(6, "weight-count", violations == 0,
           "pairs=" + std::to_string(pairs) + " violations=" + std::to_string(violations) + " (n<=64, 2<=f<=n)");
}

void criterion_ridge() {
    verify::Rng rng(1007);
    double worst_ls = 0.0;
    std::size_t monotone_breaks = 0;
    const std::size_t trials = 100;
    for (std::size_t t = 0; t < trials; ++t) {
        const ConvSpec spec = verify::random_spec(rng, 12);
        const Dataset data = verify::random_dataset(rng, 2 * spec.weight_count() + verify::uniform_int(rng, 0, 20),
                                                    spec.n());
        const RegressorMatrix h = build_regressor(data, spec, verify::random_activation(rng));
        // plain least squares straight from an orthogonal factorization of H
        const Vector ls = h.matrix().completeOrthogonalDecomposition().solve(data.labels());
        const Vector r0 = solve_ridge(h, data.labels(), 0.0).theta.values();
        worst_ls = std::max(worst_ls, verify::rel_error(ls, r0));
        double prev = std::numeric_limits<double>::infinity();
        for (double beta : {0.0, 0.1, 1.0, 10.0, 100.0}) {
            const double norm = solve_ridge(h, data.labels(), beta).theta.values().norm();
            if (norm > prev) ++monotone_breaks;
            prev = norm;
        }
    }
    report(7, "ridge", worst_ls <= 1e-10 && monotone_breaks == 0,
           "trials=" + std::to_string(trials) + " max_rel(beta=0 vs ls)=" + num(worst_ls) +
               " tol=1e-10 norm_increases=" + std::to_string(monotone_breaks));
}

struct EndToEnd {
    double train_mse;
    double test_mse;
    double test_var;
    double train_seconds;
    Vector theta;
};

EndToEnd run_narx(const TimeSeries& ts) {
    const SplitDatasets data = split(narx_window(ts, "u", "y", 5), SplitSpec(0.5));
    const auto p = relu_like_activation();
    const ConvSpec spec(data.train.features(), 3);
    SolveReport rep = solve_ls(build_regressor(data.train, spec, p), data.train.labels());
    const double t = seconds([&] { rep = solve_ls(build_regressor(data.train, spec, p), data.train.labels()); });
    const QuadraticModel m = reconstruct(rep.theta, p);
    const auto pred = [&](const Vector& x) { return predict(m, x); };
    return {mean_squared_error(data.train, pred), mean_squared_error(data.test, pred), variance(data.test.labels()), t,
            rep.theta.values()};
}

void criterion_robot_arm() {
    const char* path = std::getenv("CQNN_ROBOT_ARM_CSV");
    if (path == nullptr || *path == '\0') {
        skip(8, "robot-arm-table", "dataset not provided (set CQNN_ROBOT_ARM_CSV); replaced by criterion 9");
        return;
    }
    try {
        const EndToEnd r = run_narx(load_csv(path, {"u", "y"}));
        const bool ok = r.train_mse <= 2.0 * 7.99e-6 && r.train_mse >= 7.99e-6 / 2.0 && r.test_mse <= 2.0 * 1.01e-5 &&
                        r.test_mse >= 1.01e-5 / 2.0 && r.train_seconds < 1.0;
        report(8, "robot-arm-table", ok,
               "train_mse=" + num(r.train_mse) + " (ref 7.99e-06) test_mse=" + num(r.test_mse) +
                   " (ref 1.01e-05) train_time=" + num(r.train_seconds) + "s");
    } catch (const Error& e) {
        report(8, "robot-arm-table", false, std::string("could not load data: ") + e.what());
    }
}

void criterion_synthetic() {
    const EndToEnd a = run_narx(synth_narx(2000, 1));
    const EndToEnd b = run_narx(synth_narx(2000, 1));
    const bool deterministic = a.theta == b.theta && a.test_mse == b.test_mse;
    report(9, "synthetic-end-to-end", a.test_mse <= a.test_var / 10.0 && deterministic,
           "test_mse=" + num(a.test_mse) + " var(y_test)/10=" + num(a.test_var / 10.0) + " train_mse=" +
               num(a.train_mse) + " train_time=" + num(a.train_seconds) + "s deterministic=" +
               (deterministic ? "yes" : "no"));
}

}  // namespace

int main() {
    criterion_patch_equivalence();
    criterion_neuron_sum();
    criterion_ls_optimality();
    criterion_gradient();
    criterion_full_filter();
    criterion_weight_counts();
    criterion_ridge();
    criterion_robot_arm();
    criterion_synthetic();
    std::printf("%s: %d failing criteria\n", failures == 0 ? "OK" : "FAILED", failures);
    return failures == 0 ? 0 : 1;
}
