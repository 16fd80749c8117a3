#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"

namespace {

using namespace cqnn::cli;

void add_data_options(CLI::App* cmd, DataOptions& o) {
    cmd->add_option("--data", o.path, "CSV file with a header row");
    cmd->add_option("--synth", o.synth_length, "generate a synthetic NARX series of this length instead of --data");
    cmd->add_option("--seed", o.seed, "seed for the synthetic series");
    cmd->add_option("--mode", o.mode, "narx | window | features")->capture_default_str();
    cmd->add_option("--d", o.d, "NARX delay (number of past samples)")->capture_default_str();
    cmd->add_option("--r", o.r, "window length for --mode window");
    cmd->add_option("--input", o.input, "NARX input channel")->capture_default_str();
    cmd->add_option("--output", o.output, "NARX output channel")->capture_default_str();
    cmd->add_option("--channels", o.channels, "input channels for --mode window")->delimiter(',');
    cmd->add_option("--label", o.label, "label channel for --mode window (first differences per window)");
    cmd->add_option("--split", o.split, "sequential train fraction")->capture_default_str();
}

void add_activation(CLI::App* cmd, double& a, double& b, double& c) {
    cmd->add_option("--a", a, "activation quadratic coefficient")->capture_default_str();
    cmd->add_option("--b", b, "activation linear coefficient")->capture_default_str();
    cmd->add_option("--c", c, "activation constant")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Least-squares training of quadratic convolutional neural networks"};
    app.require_subcommand(1);

    TrainConfig train;
    auto* train_cmd = app.add_subcommand("train", "fit a banded quadratic model and write it as JSON");
    add_data_options(train_cmd, train.data);
    train_cmd->add_option("--f", train.f, "filter length")->capture_default_str();
    train_cmd->add_option("--beta", train.betas, "ridge regularizer(s), comma separated")->delimiter(',');
    add_activation(train_cmd, train.a, train.b, train.c);
    train_cmd->add_option("--out", train.out, "model file (suffixed per beta when several are given)")
        ->capture_default_str();
    train_cmd->add_option("--metrics", train.metrics, "metrics CSV");

    PredictConfig pred;
    pred.data.mode = "features";
    auto* pred_cmd = app.add_subcommand("predict", "evaluate a model on data rows");
    pred_cmd->add_option("--model", pred.model, "model JSON")->required();
    add_data_options(pred_cmd, pred.data);
    pred_cmd->add_option("--subset", pred.subset, "all | train | test (windowed modes)")->capture_default_str();
    pred_cmd->add_option("--out", pred.out, "predictions CSV (stdout when omitted)");

    SensitivityConfig sens;
    auto* sens_cmd = app.add_subcommand("sensitivity", "input gradient 2a Z1 x0 + b Z2 at each x0 row");
    sens_cmd->add_option("--model", sens.model, "model JSON")->required();
    sens_cmd->add_option("--x0", sens.x0, "CSV of points, one per row, n columns")->required();
    sens_cmd->add_option("--out", sens.out, "output CSV (stdout when omitted)");
    sens_cmd->add_flag("--summary", sens.summary, "append per-feature max |gradient| row");

    VerifyConfig ver;
    auto* ver_cmd = app.add_subcommand("verify", "run the randomized oracle suites");
    ver_cmd->add_option("--seed", ver.seed)->capture_default_str();
    ver_cmd->add_option("--instances", ver.instances)->capture_default_str();

    BenchConfig bench;
    auto* bench_cmd = app.add_subcommand("bench", "compare banded (f < n) and full (f = n) fits");
    add_data_options(bench_cmd, bench.data);
    bench_cmd->add_option("--f-list", bench.f_list, "filter lengths; \"n\" means f = n")->delimiter(',');
    bench_cmd->add_option("--beta", bench.betas, "ridge regularizer");
    add_activation(bench_cmd, bench.a, bench.b, bench.c);
    bench_cmd->add_option("--repeats", bench.repeats, "timing repeats (minimum is reported)")->capture_default_str();
    bench_cmd->add_option("--out", bench.out, "table CSV (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return usage_error;
    }

    return guarded(
        [&]() -> int {
            if (*train_cmd) return cmd_train(train, std::cout);
            if (*pred_cmd) return cmd_predict(pred, std::cout);
            if (*sens_cmd) return cmd_sensitivity(sens, std::cout);
            if (*ver_cmd) return cmd_verify(ver, std::cout);
            return cmd_bench(bench, std::cout);
        },
        std::cerr);
}
