#include "snnconv/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "snnconv/ann.hpp"
#include "snnconv/snn.hpp"

namespace snnconv {

namespace {

using nlohmann::json;

const std::set<std::string> kKnownKeys = {
    "task",   "seed",   "net",       "L",          "epochs",     "lr",
    "batch",  "T_list", "mode_list", "v0_policy",  "output_dir", "L_list",
    "n_samples", "classes", "idx_images", "idx_labels", "theta_neg"};

template <class T>
void read_key(const json& j, const char* key, T& into) {
    if (j.contains(key)) into = j.at(key).get<T>();
}

V0Policy v0_policy_from_json(const json& v) {
    if (v.is_string()) {
        std::string s = v.get<std::string>();
        if (s == "zero") return V0Policy::zero();
        if (s == "half_theta") return V0Policy::half_theta();
        throw ConfigError("v0_policy must be \"zero\", \"half_theta\" or a number");
    }
    if (v.is_number()) return V0Policy::explicit_value(v.get<float>());
    throw ConfigError("v0_policy must be \"zero\", \"half_theta\" or a number");
}

json v0_policy_to_json(const V0Policy& p) {
    switch (p.kind) {
        case V0Policy::Kind::Zero: return "zero";
        case V0Policy::Kind::HalfTheta: return "half_theta";
        case V0Policy::Kind::Explicit: return p.value;
    }
    return "half_theta";
}

void validate(const ExperimentConfig& cfg) {
    if (cfg.task != "blobs" && cfg.task != "spirals" && cfg.task != "idx_images") {
        throw ConfigError("unknown task '" + cfg.task + "'");
    }
    if (cfg.task == "idx_images" && (cfg.idx_images.empty() || cfg.idx_labels.empty())) {
        throw ConfigError("idx_images task needs idx_images and idx_labels paths");
    }
    if (cfg.net.empty()) throw ConfigError("net must list at least one hidden layer size");
    for (int h : cfg.net)
        if (h < 1) throw ConfigError("hidden layer sizes must be >= 1");
    if (cfg.L < 1) throw ConfigError("L must be >= 1");
    if (cfg.epochs < 0) throw ConfigError("epochs must be >= 0");
    if (!(cfg.lr >= 0.0) || !std::isfinite(cfg.lr)) throw ConfigError("lr must be finite and >= 0");
    if (cfg.batch < 1) throw ConfigError("batch must be >= 1");
    if (cfg.T_list.empty()) throw ConfigError("T_list must be nonempty");
    for (int t : cfg.T_list)
        if (t < 1) throw ConfigError("T values must be >= 1");
    if (std::set<int>(cfg.T_list.begin(), cfg.T_list.end()).size() != cfg.T_list.size()) {
        throw ConfigError("T_list entries must be unique");
    }
    if (cfg.mode_list.empty()) throw ConfigError("mode_list must be nonempty");
    for (int l : cfg.L_list)
        if (l < 1) throw ConfigError("L_list values must be >= 1");
    if (std::set<int>(cfg.L_list.begin(), cfg.L_list.end()).size() != cfg.L_list.size()) {
        throw ConfigError("L_list entries must be unique");
    }
    if (cfg.n_samples < 8) throw ConfigError("n_samples must be >= 8");
    if (cfg.classes < 2) throw ConfigError("classes must be >= 2");
    if (!(cfg.theta_neg < 0.0f)) throw ConfigError("theta_neg must be negative");
    if (cfg.output_dir.empty()) throw ConfigError("output_dir must be set");
}

}  // namespace

ExperimentConfig config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& item : j.items()) {
        if (!kKnownKeys.count(item.key())) {
            throw ConfigError("unknown config key '" + item.key() + "'");
        }
    }
    ExperimentConfig cfg;
    try {
        read_key(j, "task", cfg.task);
        read_key(j, "seed", cfg.seed);
        read_key(j, "net", cfg.net);
        read_key(j, "L", cfg.L);
        read_key(j, "epochs", cfg.epochs);
        read_key(j, "lr", cfg.lr);
        read_key(j, "batch", cfg.batch);
        read_key(j, "T_list", cfg.T_list);
        if (j.contains("mode_list")) {
            cfg.mode_list.clear();
            for (const auto& m : j.at("mode_list")) {
                cfg.mode_list.push_back(neuron_mode_from_string(m.get<std::string>()));
            }
        }
        if (j.contains("v0_policy")) cfg.v0_policy = v0_policy_from_json(j.at("v0_policy"));
        read_key(j, "output_dir", cfg.output_dir);
        read_key(j, "L_list", cfg.L_list);
        read_key(j, "n_samples", cfg.n_samples);
        read_key(j, "classes", cfg.classes);
        read_key(j, "idx_images", cfg.idx_images);
        read_key(j, "idx_labels", cfg.idx_labels);
        read_key(j, "theta_neg", cfg.theta_neg);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config value: ") + e.what());
    } catch (const ArgumentError& e) {
        throw ConfigError(e.what());
    }
    validate(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return config_from_json_text(buf.str());
}

SplitPair prepare_data(const ExperimentConfig& cfg) {
    Dataset ds;
    if (cfg.task == "blobs") {
        ds = gen_blobs(cfg.seed, cfg.n_samples, cfg.classes);
    } else if (cfg.task == "spirals") {
        ds = gen_spirals(cfg.seed, cfg.n_samples);
    } else {
        ds = load_idx(cfg.idx_images, cfg.idx_labels);
    }
    // the split draws from its own stream one past the generator seed
    return split_dataset(ds, 0.25, cfg.seed + 1);
}

namespace {

struct SingleRun {
    AnnResult ann;
    std::vector<RunResult> runs;
    AnnNetwork net;
};

SingleRun run_single(const ExperimentConfig& cfg, const SplitPair& split) {
    Rng rng(cfg.seed);
    SingleRun out;
    out.net = make_network(split.train.dim(), cfg.net, split.train.num_classes, cfg.L, rng);
    TrainLog log =
        train(out.net, split.train, TrainHyper{cfg.lr, cfg.epochs, cfg.batch, cfg.seed});
    out.ann = AnnResult{cfg.L, accuracy(out.net, split.test), count_flops(out.net),
                        log.epoch_loss};
    for (int T : cfg.T_list) {
        for (NeuronMode mode : cfg.mode_list) {
            SnnNetwork snn = convert(out.net, mode, cfg.v0_policy, cfg.theta_neg);
            ConversionEval eval = evaluate_conversion(out.net, snn, split.test, T);
            out.runs.push_back(RunResult{cfg.L, T, mode, eval.snn_accuracy, eval.report});
        }
    }
    return out;
}

void sort_runs(std::vector<RunResult>& runs) {
    std::sort(runs.begin(), runs.end(), [](const RunResult& a, const RunResult& b) {
        if (a.L != b.L) return a.L < b.L;
        if (a.T != b.T) return a.T < b.T;
        return int(a.mode) < int(b.mode);
    });
}

double mean_layer(const ErrorReport& report, double LayerErrorStats::*member) {
    if (report.layers.empty()) return 0.0;
    double sum = 0.0;
    for (const LayerErrorStats& s : report.layers) sum += s.*member;
    return sum / double(report.layers.size());
}

json config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["task"] = cfg.task;
    j["seed"] = cfg.seed;
    j["net"] = cfg.net;
    j["L"] = cfg.L;
    j["epochs"] = cfg.epochs;
    j["lr"] = cfg.lr;
    j["batch"] = cfg.batch;
    j["T_list"] = cfg.T_list;
    json modes = json::array();
    for (NeuronMode m : cfg.mode_list) modes.push_back(to_string(m));
    j["mode_list"] = modes;
    j["v0_policy"] = v0_policy_to_json(cfg.v0_policy);
    j["output_dir"] = cfg.output_dir;
    if (!cfg.L_list.empty()) j["L_list"] = cfg.L_list;
    j["n_samples"] = cfg.n_samples;
    j["classes"] = cfg.classes;
    if (!cfg.idx_images.empty()) j["idx_images"] = cfg.idx_images;
    if (!cfg.idx_labels.empty()) j["idx_labels"] = cfg.idx_labels;
    j["theta_neg"] = cfg.theta_neg;
    return j;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(content.data(), std::streamsize(content.size()));
}

void write_outputs(const ExperimentConfig& cfg, const ReportBundle& bundle,
                   const std::vector<std::pair<int, const AnnNetwork*>>& nets) {
    std::filesystem::path dir(cfg.output_dir);
    std::filesystem::create_directories(dir);
    write_file(dir / "reports.csv", reports_to_csv(cfg, bundle));
    write_file(dir / "reports.json", reports_to_json(cfg, bundle));
    for (const auto& [L, net] : nets) {
        std::string name = nets.size() == 1 ? "ann.ckpt" : "ann_L" + std::to_string(L) + ".ckpt";
        save_ann_checkpoint(*net, (dir / name).string());
    }
    for (const RunResult& run : bundle.runs) {
        std::string name = "error_report_L" + std::to_string(run.L) + "_T" +
                           std::to_string(run.T) + "_" + to_string(run.mode) + ".csv";
        write_file(dir / name, error_report_to_csv(run.report));
    }
}

}  // namespace

std::string reports_to_csv(const ExperimentConfig& cfg, const ReportBundle& bundle) {
    std::ostringstream os;
    os << "task,L,T,mode,acc,ann_acc,rate_gap,clip_fraction,quant_mse,sops,"
          "energy_snn_j,energy_ann_j,seed\n";
    for (const AnnResult& ann : bundle.ann) {
        // ANN reference row: T=0, no spikes, energy from per-sample FLOPs
        double energy_ann = 0.0;
        for (const RunResult& run : bundle.runs) {
            if (run.L == ann.L) {
                energy_ann = run.report.energy_ann;
                break;
            }
        }
        os << cfg.task << ',' << ann.L << ",0,ANN," << fmt_g(ann.accuracy) << ','
           << fmt_g(ann.accuracy) << ",0,0,0,0,0," << fmt_g(energy_ann) << ',' << cfg.seed
           << '\n';
        for (const RunResult& run : bundle.runs) {
            if (run.L != ann.L) continue;
            os << cfg.task << ',' << run.L << ',' << run.T << ',' << to_string(run.mode) << ','
               << fmt_g(run.accuracy) << ',' << fmt_g(ann.accuracy) << ','
               << fmt_g(mean_layer(run.report, &LayerErrorStats::rate_gap)) << ','
               << fmt_g(mean_layer(run.report, &LayerErrorStats::clip_fraction)) << ','
               << fmt_g(mean_layer(run.report, &LayerErrorStats::quant_mse)) << ','
               << run.report.sops << ',' << fmt_g(run.report.energy_snn) << ','
               << fmt_g(run.report.energy_ann) << ',' << cfg.seed << '\n';
        }
    }
    return os.str();
}

std::string reports_to_json(const ExperimentConfig& cfg, const ReportBundle& bundle) {
    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["config"] = config_to_json(cfg);
    j["ann"] = json::array();
    for (const AnnResult& ann : bundle.ann) {
        j["ann"].push_back({{"L", ann.L},
                            {"accuracy", ann.accuracy},
                            {"flops_per_sample", ann.flops_per_sample},
                            {"train_loss", ann.train_loss}});
    }
    j["runs"] = json::array();
    for (const RunResult& run : bundle.runs) {
        j["runs"].push_back({{"L", run.L},
                             {"T", run.T},
                             {"mode", to_string(run.mode)},
                             {"accuracy", run.accuracy},
                             {"report", json::parse(error_report_to_json(run.report))}});
    }
    return j.dump(2) + "\n";
}

ReportBundle run_pipeline(const ExperimentConfig& cfg) {
    validate(cfg);
    SplitPair split = prepare_data(cfg);
    SingleRun single = run_single(cfg, split);
    ReportBundle bundle;
    bundle.ann.push_back(single.ann);
    bundle.runs = std::move(single.runs);
    sort_runs(bundle.runs);
    write_outputs(cfg, bundle, {{cfg.L, &single.net}});
    return bundle;
}

ReportBundle run_sweep(const ExperimentConfig& cfg) {
    validate(cfg);
    std::vector<int> levels = cfg.L_list.empty() ? std::vector<int>{cfg.L} : cfg.L_list;
    std::sort(levels.begin(), levels.end());

    ReportBundle bundle;
    std::vector<AnnNetwork> nets;
    nets.reserve(levels.size());
    for (int L : levels) {
        ExperimentConfig cell = cfg;
        cell.L = L;
        SplitPair split = prepare_data(cell);
        SingleRun single = run_single(cell, split);
        bundle.ann.push_back(single.ann);
        bundle.runs.insert(bundle.runs.end(), single.runs.begin(), single.runs.end());
        nets.push_back(std::move(single.net));
    }
    sort_runs(bundle.runs);
    std::vector<std::pair<int, const AnnNetwork*>> net_refs;
    for (size_t i = 0; i < levels.size(); ++i) net_refs.emplace_back(levels[i], &nets[i]);
    write_outputs(cfg, bundle, net_refs);
    return bundle;
}

namespace {

struct NeuronScenario {
    std::string name;
    NeuronMode mode;
    std::vector<float> charges;
    double expected_rate;
};

bool run_neuron_scenario(const NeuronScenario& sc, std::ostream& out) {
    NeuronLayerState st = make_state(1, 1.0, -1e-3, sc.mode, 0.0);
    std::vector<int> spikes;
    std::vector<double> trace;
    int net = 0;
    for (float c : sc.charges) {
        Tensor s = step(st, Tensor({1}, {c}));
        spikes.push_back(int(std::lround(s[0])));
        trace.push_back(st.v[0]);
        net += spikes.back();
    }
    double rate = double(net) / double(sc.charges.size());
    bool ok = rate == sc.expected_rate;
    out << "  " << std::left << std::setw(44) << sc.name << " expected " << std::setw(5)
        << sc.expected_rate << " got " << std::setw(5) << rate << (ok ? "  PASS" : "  FAIL")
        << "\n";
    if (!ok) {
        out << "    t | charge | spike | v\n";
        for (size_t t = 0; t < spikes.size(); ++t) {
            out << "    " << (t + 1) << " | " << sc.charges[t] << " | " << spikes[t] << " | "
                << trace[t] << "\n";
        }
    }
    return ok;
}

bool check_rate(const std::string& name, double got, double expected, std::ostream& out) {
    bool ok = got == expected;
    out << "  " << std::left << std::setw(44) << name << " expected " << std::setw(5) << expected
        << " got " << std::setw(5) << got << (ok ? "  PASS" : "  FAIL") << "\n";
    return ok;
}

}  // namespace

int repro_figures(std::ostream& out) {
    int failures = 0;
    out << "single-neuron traces (theta=1, theta'=-1e-3, v0=0):\n";
    const std::vector<NeuronScenario> scenarios = {
        {"IF  charges (-2,-2, 2, 2)", NeuronMode::IF, {-2, -2, 2, 2}, 0.0},
        {"IF  charges ( 2,-2, 2,-2)", NeuronMode::IF, {2, -2, 2, -2}, 0.5},
        {"DTN charges ( 2,-2, 2,-2)", NeuronMode::DTN, {2, -2, 2, -2}, 0.0},
    };
    for (const NeuronScenario& sc : scenarios) {
        if (!run_neuron_scenario(sc, out)) ++failures;
    }

    out << "spike-ordering enumeration (w=[2,-2], counts (3,2), theta=1, T=5, IF):\n";
    Tensor w({1, 2}, {2.0f, -2.0f});
    UnevennessResult res = unevenness_enumeration(w, {3, 2}, 1.0, 5, NeuronMode::IF);
    if (!check_rate("uniform ordering rate", res.uniform_phi, 0.4, out)) ++failures;
    if (!check_rate("max over orderings", res.max_phi, 0.8, out)) ++failures;
    if (!check_rate("min over orderings", res.min_phi, 0.2, out)) ++failures;

    out << (failures == 0 ? "all scenarios reproduced\n"
                          : std::to_string(failures) + " scenario(s) failed\n");
    return failures;
}

}  // namespace snnconv
