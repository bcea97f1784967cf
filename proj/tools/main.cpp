#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "snnconv/pipeline.hpp"

namespace {

using namespace snnconv;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitRepro = 4;

struct CommonOpts {
    std::string config_path;
    uint64_t seed = 0;
    bool seed_set = false;
    std::string out;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool config_required = true) {
    cmd->add_option("-c,--config", opts.config_path, "experiment config (JSON)")
        ->required(config_required);
    cmd->add_option("--seed", opts.seed, "override the config seed")
        ->each([&opts](const std::string&) { opts.seed_set = true; });
    cmd->add_option("--out", opts.out, "override the output directory");
}

ExperimentConfig resolve_config(const CommonOpts& opts) {
    ExperimentConfig cfg = load_config(opts.config_path);
    if (opts.seed_set) cfg.seed = opts.seed;
    if (!opts.out.empty()) cfg.output_dir = opts.out;
    return cfg;
}

std::filesystem::path ensure_output_dir(const ExperimentConfig& cfg) {
    std::filesystem::path dir(cfg.output_dir);
    std::filesystem::create_directories(dir);
    return dir;
}

int cmd_train(const CommonOpts& opts) {
    ExperimentConfig cfg = resolve_config(opts);
    SplitPair split = prepare_data(cfg);
    Rng rng(cfg.seed);
    AnnNetwork net = make_network(split.train.dim(), cfg.net, split.train.num_classes, cfg.L, rng);
    TrainLog log = train(net, split.train, TrainHyper{cfg.lr, cfg.epochs, cfg.batch, cfg.seed});

    std::filesystem::path dir = ensure_output_dir(cfg);
    save_ann_checkpoint(net, (dir / "ann.ckpt").string());
    nlohmann::json j;
    j["epoch_loss"] = log.epoch_loss;
    j["train_accuracy"] = accuracy(net, split.train);
    j["test_accuracy"] = accuracy(net, split.test);
    std::ofstream(dir / "train_log.json") << j.dump(2) << "\n";

    std::cout << "trained " << cfg.task << " (L=" << cfg.L << ", epochs=" << cfg.epochs
              << "): test accuracy " << accuracy(net, split.test) << "\n"
              << "checkpoint written to " << (dir / "ann.ckpt").string() << "\n";
    return kExitOk;
}

int cmd_convert(const CommonOpts& opts, const std::string& ckpt, const std::string& mode_str) {
    ExperimentConfig cfg = resolve_config(opts);
    std::filesystem::path dir = ensure_output_dir(cfg);
    std::string in_path = ckpt.empty() ? (dir / "ann.ckpt").string() : ckpt;
    AnnNetwork ann = load_ann_checkpoint(in_path);
    NeuronMode mode = mode_str.empty() ? cfg.mode_list.front() : neuron_mode_from_string(mode_str);
    SnnNetwork snn = convert(ann, mode, cfg.v0_policy, cfg.theta_neg);
    std::string out_path = (dir / "snn.ckpt").string();
    save_snn_checkpoint(snn, out_path);
    std::cout << "converted " << in_path << " -> " << out_path << " (mode " << to_string(mode)
              << ", theta' " << cfg.theta_neg << ")\n";
    return kExitOk;
}

int cmd_simulate(const CommonOpts& opts, const std::string& ckpt, int T, int sample,
                 bool record_potentials) {
    ExperimentConfig cfg = resolve_config(opts);
    std::filesystem::path dir = ensure_output_dir(cfg);
    std::string in_path = ckpt.empty() ? (dir / "snn.ckpt").string() : ckpt;
    SnnNetwork snn = load_snn_checkpoint(in_path);
    SplitPair split = prepare_data(cfg);
    if (T <= 0) T = cfg.T_list.front();

    if (sample >= 0) {
        if (sample >= split.test.size()) throw ArgumentError("--sample index out of range");
        SimRecord rec = simulate(snn, row(split.test.inputs, sample), T, record_potentials);
        std::string path = (dir / "sim_record.json").string();
        std::ofstream(path) << sim_record_to_json(rec) << "\n";
        std::cout << "sample " << sample << ": predicted " << rec.predicted << ", label "
                  << split.test.labels[size_t(sample)] << "; record written to " << path << "\n";
        return kExitOk;
    }

    int64_t correct = 0;
    for (int64_t i = 0; i < split.test.size(); ++i) {
        SimRecord rec = simulate(snn, row(split.test.inputs, i), T);
        if (rec.predicted == split.test.labels[size_t(i)]) ++correct;
    }
    std::cout << "simulated " << split.test.size() << " test samples at T=" << T << " ("
              << to_string(snn.mode) << "): accuracy "
              << double(correct) / double(split.test.size()) << "\n";
    return kExitOk;
}

int cmd_analyze(const CommonOpts& opts) {
    ExperimentConfig cfg = resolve_config(opts);
    ReportBundle bundle = run_pipeline(cfg);
    std::cout << "ANN accuracy " << bundle.ann.front().accuracy << "\n";
    for (const RunResult& run : bundle.runs) {
        std::cout << "  T=" << run.T << " " << to_string(run.mode) << ": accuracy "
                  << run.accuracy << ", sops " << run.report.sops << "\n";
    }
    std::cout << "reports written to " << cfg.output_dir << "\n";
    return kExitOk;
}

int cmd_sweep(const CommonOpts& opts) {
    ExperimentConfig cfg = resolve_config(opts);
    ReportBundle bundle = run_sweep(cfg);
    for (const AnnResult& ann : bundle.ann) {
        std::cout << "L=" << ann.L << ": ANN accuracy " << ann.accuracy << "\n";
    }
    std::cout << "reports written to " << cfg.output_dir << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantized-activation ANN training, spiking conversion and analysis"};
    app.require_subcommand(1);

    CommonOpts train_opts, convert_opts, simulate_opts, analyze_opts, sweep_opts;
    std::string convert_ckpt, convert_mode;
    std::string simulate_ckpt;
    int simulate_T = 0;
    int simulate_sample = -1;
    bool simulate_potentials = false;

    CLI::App* train_cmd = app.add_subcommand("train", "train the source network");
    add_common(train_cmd, train_opts);

    CLI::App* convert_cmd = app.add_subcommand("convert", "map a trained checkpoint to a spiking one");
    add_common(convert_cmd, convert_opts);
    convert_cmd->add_option("--ckpt", convert_ckpt, "source checkpoint (default <out>/ann.ckpt)");
    convert_cmd->add_option("--mode", convert_mode, "neuron mode: IF or DTN");

    CLI::App* simulate_cmd = app.add_subcommand("simulate", "run a spiking checkpoint on the test split");
    add_common(simulate_cmd, simulate_opts);
    simulate_cmd->add_option("--ckpt", simulate_ckpt, "spiking checkpoint (default <out>/snn.ckpt)");
    simulate_cmd->add_option("--T", simulate_T, "time steps (default: first of T_list)");
    simulate_cmd->add_option("--sample", simulate_sample, "export one sample's full record");
    simulate_cmd->add_flag("--record-potentials", simulate_potentials, "include membrane traces");

    CLI::App* analyze_cmd = app.add_subcommand("analyze", "full train/convert/simulate/analyze pipeline");
    add_common(analyze_cmd, analyze_opts);

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "repeat the pipeline over L_list");
    add_common(sweep_cmd, sweep_opts);

    CLI::App* repro_cmd = app.add_subcommand("repro-figures", "replay the reference neuron scenarios");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) return cmd_train(train_opts);
        if (convert_cmd->parsed()) return cmd_convert(convert_opts, convert_ckpt, convert_mode);
        if (simulate_cmd->parsed())
            return cmd_simulate(simulate_opts, simulate_ckpt, simulate_T, simulate_sample,
                                simulate_potentials);
        if (analyze_cmd->parsed()) return cmd_analyze(analyze_opts);
        if (sweep_cmd->parsed()) return cmd_sweep(sweep_opts);
        if (repro_cmd->parsed()) {
            return snnconv::repro_figures(std::cout) == 0 ? kExitOk : kExitRepro;
        }
    } catch (const snnconv::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const snnconv::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
