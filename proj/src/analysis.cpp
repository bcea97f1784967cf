#include "snnconv/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>

namespace snnconv {

ClipStats clipping_stats(const Tensor& acts, double lambda) {
    if (!(lambda > 0.0)) throw ArgumentError("clipping_stats: lambda must be positive");
    if (acts.size() == 0) return {};
    int64_t clipped = 0;
    double excess = 0.0;
    for (int64_t i = 0; i < acts.size(); ++i) {
        double a = double(acts[i]);
        if (a > lambda) {
            ++clipped;
            excess += a - lambda;
        }
    }
    return ClipStats{double(clipped) / double(acts.size()), excess / double(acts.size())};
}

double quantization_mse(const Tensor& z, double theta, int T, double v0) {
    if (T < 1) throw ArgumentError("quantization_mse: T must be >= 1");
    if (!(theta > 0.0)) throw ArgumentError("quantization_mse: theta must be positive");
    double sum = 0.0;
    int64_t count = 0;
    for (int64_t i = 0; i < z.size(); ++i) {
        double zi = double(z[i]);
        if (zi < 0.0 || zi > theta) continue;
        double q = theta / double(T) * std::floor((double(T) * zi + v0) / theta);
        sum += (zi - q) * (zi - q);
        ++count;
    }
    return count ? sum / double(count) : 0.0;
}

V0Curve v0_sweep(double theta, int T, const std::vector<double>& grid, int n_samples,
                 uint64_t seed) {
    if (grid.empty()) throw ArgumentError("v0_sweep: grid must be nonempty");
    if (n_samples < 1) throw ArgumentError("v0_sweep: need at least one sample");
    Rng rng(seed);
    std::vector<double> samples(static_cast<size_t>(n_samples));
    for (auto& z : samples) z = theta * rng.next_double();

    V0Curve result;
    size_t best = 0;
    for (size_t g = 0; g < grid.size(); ++g) {
        double v0 = grid[g];
        double sum = 0.0;
        for (double z : samples) {
            double q = theta / double(T) * std::floor((double(T) * z + v0) / theta);
            sum += (z - q) * (z - q);
        }
        double mse = sum / double(n_samples);
        result.curve.emplace_back(v0, mse);
        if (mse < result.curve[best].second) best = g;
    }
    result.argmin_v0 = result.curve[best].first;
    return result;
}

double UnevennessResult::mean_abs_dev(double target) const {
    if (orderings == 0) return 0.0;
    double sum = 0.0;
    for (const auto& [phi, count] : histogram) sum += std::abs(phi - target) * double(count);
    return sum / double(orderings);
}

std::vector<int> uniform_spike_times(int count, int T) {
    if (count < 0 || count > T) throw ArgumentError("uniform_spike_times: need 0 <= count <= T");
    std::vector<int> times;
    times.reserve(size_t(count));
    for (int j = 1; j <= count; ++j) {
        // midpoint rule: ceil((2j - 1) T / (2 count)), 1-indexed
        int64_t num = int64_t(2 * j - 1) * T + 2 * count - 1;
        times.push_back(int(num / (2 * count)));
    }
    return times;
}

namespace {

constexpr int64_t kMaxOrderings = 1'000'000;

int64_t binomial_capped(int T, int c) {
    // C(T, c), capped above kMaxOrderings to avoid overflow
    if (c < 0 || c > T) return 0;
    c = std::min(c, T - c);
    int64_t result = 1;
    for (int i = 1; i <= c; ++i) {
        result = result * (T - c + i) / i;
        if (result > kMaxOrderings) return kMaxOrderings + 1;
    }
    return result;
}

// Calls visit(times) for every size-c subset of {1..T}.
template <class Visit>
void for_each_subset(int T, int c, std::vector<int>& times, int next, Visit&& visit) {
    if (int(times.size()) == c) {
        visit(times);
        return;
    }
    for (int t = next; t <= T - (c - int(times.size())) + 1; ++t) {
        times.push_back(t);
        for_each_subset(T, c, times, t + 1, visit);
        times.pop_back();
    }
}

}  // namespace

UnevennessResult unevenness_enumeration(const Tensor& weights,
                                        const std::vector<int>& presyn_counts, double theta,
                                        int T, NeuronMode mode) {
    if (weights.rank() != 2 || weights.rows() != 1) {
        throw ArgumentError("unevenness_enumeration: weights must be 1 x n (single output)");
    }
    if (int64_t(presyn_counts.size()) != weights.cols()) {
        throw DimensionError("unevenness_enumeration: counts for " +
                             std::to_string(presyn_counts.size()) + " neurons, weights expect " +
                             std::to_string(weights.cols()));
    }
    if (T < 1) throw ArgumentError("unevenness_enumeration: T must be >= 1");

    int64_t total = 1;
    for (int c : presyn_counts) {
        if (c < 0 || c > T) throw ArgumentError("unevenness_enumeration: counts must be in [0, T]");
        int64_t ways = binomial_capped(T, c);
        total = (total > kMaxOrderings / std::max<int64_t>(ways, 1)) ? kMaxOrderings + 1
                                                                     : total * ways;
        if (total > kMaxOrderings) {
            throw ArgumentError(
                "unevenness_enumeration: more than 1e6 spike orderings; sample orderings "
                "randomly instead of enumerating");
        }
    }

    const int n_pre = int(presyn_counts.size());
    const Tensor bias({1});
    NeuronLayerState tmpl = make_state(1, theta, -1e-3, mode, 0.0);

    Tensor trains({n_pre, T});
    std::map<int64_t, int64_t> net_histogram;  // net spike count -> orderings
    int64_t net_min = 0, net_max = 0;
    bool first = true;

    // Depth-first product over per-neuron spike-time subsets.
    std::vector<std::vector<int>> chosen(static_cast<size_t>(n_pre));
    auto run_current = [&]() {
        for (int64_t i = 0; i < n_pre; ++i)
            for (int t = 0; t < T; ++t) trains.at(i, t) = 0.0f;
        for (int i = 0; i < n_pre; ++i)
            for (int t : chosen[size_t(i)]) trains.at(i, t - 1) = 1.0f;
        SimRecord rec = run_layer_with_trains(weights, bias, tmpl, trains, theta, T);
        int64_t net = rec.layers[0].pos_spikes[0] - rec.layers[0].neg_spikes[0];
        net_histogram[net] += 1;
        if (first || net < net_min) net_min = net;
        if (first || net > net_max) net_max = net;
        first = false;
    };

    std::function<void(int)> descend = [&](int neuron) {
        if (neuron == n_pre) {
            run_current();
            return;
        }
        std::vector<int> scratch;
        for_each_subset(T, presyn_counts[size_t(neuron)], scratch, 1, [&](const std::vector<int>& times) {
            chosen[size_t(neuron)] = times;
            descend(neuron + 1);
        });
    };
    descend(0);

    UnevennessResult result;
    auto to_phi = [&](int64_t net) { return theta * double(net) / double(T); };
    result.min_phi = to_phi(net_min);
    result.max_phi = to_phi(net_max);
    for (const auto& [net, count] : net_histogram) {
        result.histogram.emplace_back(to_phi(net), count);
        result.orderings += count;
    }

    for (int64_t i = 0; i < n_pre; ++i)
        for (int t = 0; t < T; ++t) trains.at(i, t) = 0.0f;
    for (int i = 0; i < n_pre; ++i)
        for (int t : uniform_spike_times(presyn_counts[size_t(i)], T)) trains.at(i, t - 1) = 1.0f;
    SimRecord uniform = run_layer_with_trains(weights, bias, tmpl, trains, theta, T);
    result.uniform_phi =
        to_phi(uniform.layers[0].pos_spikes[0] - uniform.layers[0].neg_spikes[0]);
    return result;
}

int64_t count_ops(const SimRecord& sim, const SnnNetwork& net) {
    if (sim.layers.size() != net.hidden.size()) {
        throw DimensionError("count_ops: record does not match network layout");
    }
    int64_t sops = 0;
    for (size_t l = 0; l < net.hidden.size(); ++l) {
        int64_t fan_out = l + 1 < net.hidden.size() ? net.hidden[l + 1].weights.rows()
                                                    : net.output.weights.rows();
        sops += sim.layers[l].total_spike_events() * fan_out;
    }
    return sops;
}

int64_t count_flops(const AnnNetwork& net) {
    int64_t flops = 0;
    for (const DenseLayer& layer : net.hidden) {
        flops += 2 * layer.weights.rows() * layer.weights.cols();
    }
    flops += 2 * net.output.weights.rows() * net.output.weights.cols();
    return flops;
}

EnergyEstimate estimate_energy(int64_t sops, int64_t flops) {
    if (sops < 0 || flops < 0) throw ArgumentError("estimate_energy: counts must be >= 0");
    return EnergyEstimate{double(sops) * kJoulesPerSop, double(flops) * kJoulesPerFlop};
}

ConversionEval evaluate_conversion(const AnnNetwork& ann, const SnnNetwork& snn,
                                   const Dataset& data, int T) {
    if (data.size() == 0) throw ArgumentError("evaluate_conversion: empty dataset");
    if (ann.hidden.size() != snn.hidden.size()) {
        throw DimensionError("evaluate_conversion: networks do not match");
    }
    const size_t n_hidden = ann.hidden.size();
    const int64_t n = data.size();

    ForwardTrace trace = ann_forward(ann, data.inputs);

    ConversionEval eval;
    eval.report.layers.resize(n_hidden);
    std::vector<double> gap_sums(n_hidden, 0.0);
    int64_t correct = 0;
    for (int64_t i = 0; i < n; ++i) {
        SimRecord rec = simulate(snn, row(data.inputs, i), T);
        if (rec.predicted == data.labels[size_t(i)]) ++correct;
        eval.report.sops += count_ops(rec, snn);
        for (size_t l = 0; l < n_hidden; ++l) {
            for (int64_t j = 0; j < trace.acts[l].cols(); ++j) {
                gap_sums[l] += std::abs(rec.layers[l].phi[size_t(j)] -
                                        double(trace.acts[l].at(i, j)));
            }
        }
    }
    eval.snn_accuracy = double(correct) / double(n);

    for (size_t l = 0; l < n_hidden; ++l) {
        double theta = double(snn.hidden[l].theta);
        ClipStats clip = clipping_stats(trace.acts[l], double(ann.activations[l].lambda));
        LayerErrorStats& stats = eval.report.layers[l];
        stats.clip_fraction = clip.clip_fraction;
        stats.clip_mass = clip.clip_mass;
        stats.quant_mse =
            quantization_mse(trace.preacts[l], theta, T, snn.v0_policy.value_for(theta));
        stats.rate_gap = gap_sums[l] / double(n * trace.acts[l].cols());
    }
    eval.report.flops = count_flops(ann) * n;
    EnergyEstimate energy = estimate_energy(eval.report.sops, eval.report.flops);
    eval.report.energy_snn = energy.energy_snn;
    eval.report.energy_ann = energy.energy_ann;
    return eval;
}

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::string error_report_to_csv(const ErrorReport& report) {
    std::ostringstream os;
    os << "layer,clip_fraction,clip_mass,quant_mse,rate_gap,sops,flops,energy_snn_j,energy_ann_j\n";
    for (size_t l = 0; l < report.layers.size(); ++l) {
        const LayerErrorStats& s = report.layers[l];
        os << (l + 1) << ',' << fmt_g(s.clip_fraction) << ',' << fmt_g(s.clip_mass) << ','
           << fmt_g(s.quant_mse) << ',' << fmt_g(s.rate_gap) << ",,,,\n";
    }
    os << "total,,,,," << report.sops << ',' << report.flops << ','
       << fmt_g(report.energy_snn) << ',' << fmt_g(report.energy_ann) << '\n';
    return os.str();
}

std::string error_report_to_json(const ErrorReport& report) {
    nlohmann::json j;
    j["layers"] = nlohmann::json::array();
    for (size_t l = 0; l < report.layers.size(); ++l) {
        const LayerErrorStats& s = report.layers[l];
        j["layers"].push_back({{"layer", l + 1},
                               {"clip_fraction", s.clip_fraction},
                               {"clip_mass", s.clip_mass},
                               {"quant_mse", s.quant_mse},
                               {"rate_gap", s.rate_gap}});
    }
    j["totals"] = {{"sops", report.sops},
                   {"flops", report.flops},
                   {"energy_snn_j", report.energy_snn},
                   {"energy_ann_j", report.energy_ann}};
    return j.dump(2);
}

}  // namespace snnconv
