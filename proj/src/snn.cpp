#include "snnconv/snn.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "wire.hpp"

namespace snnconv {

std::string to_string(NeuronMode mode) { return mode == NeuronMode::IF ? "IF" : "DTN"; }

NeuronMode neuron_mode_from_string(const std::string& s) {
    if (s == "IF") return NeuronMode::IF;
    if (s == "DTN") return NeuronMode::DTN;
    throw ArgumentError("unknown neuron mode '" + s + "' (expected IF or DTN)");
}

double V0Policy::value_for(double theta) const {
    switch (kind) {
        case Kind::Zero: return 0.0;
        case Kind::HalfTheta: return theta / 2.0;
        case Kind::Explicit: return double(value);
    }
    throw ArgumentError("invalid v0 policy");
}

NeuronLayerState make_state(int64_t n, double theta, double theta_neg, NeuronMode mode,
                            double v0) {
    if (n < 1) throw ArgumentError("make_state: need at least one neuron");
    if (!(theta > 0.0)) throw ArgumentError("make_state: theta must be positive");
    if (!(theta_neg < 0.0)) throw ArgumentError("make_state: theta_neg must be negative");
    NeuronLayerState st;
    st.v.assign(size_t(n), v0);
    st.net_spikes.assign(size_t(n), 0);
    st.theta = theta;
    st.theta_neg = theta_neg;
    st.mode = mode;
    return st;
}

Tensor step(NeuronLayerState& state, const Tensor& input_current) {
    const int64_t n = int64_t(state.v.size());
    if (input_current.size() != n) {
        throw DimensionError("step: input " + input_current.shape_str() + " does not match " +
                             std::to_string(n) + " neurons");
    }
    std::vector<float> spikes(size_t(n), 0.0f);
    for (int64_t i = 0; i < n; ++i) {
        const double m = state.v[size_t(i)] + double(input_current[i]);
        if (m >= state.theta) {
            // one positive spike per step; the residual carries over
            spikes[size_t(i)] = 1.0f;
            state.v[size_t(i)] = m - state.theta;
            state.net_spikes[size_t(i)] += 1;
        } else if (state.mode == NeuronMode::DTN && m <= state.theta_neg &&
                   state.net_spikes[size_t(i)] >= 1) {
            // cancel one previously emitted spike and restore its charge
            spikes[size_t(i)] = -1.0f;
            state.v[size_t(i)] = m + state.theta;
            state.net_spikes[size_t(i)] -= 1;
        } else {
            state.v[size_t(i)] = m;
        }
    }
    return Tensor({n}, std::move(spikes));
}

int64_t LayerRecord::total_spike_events() const {
    int64_t total = 0;
    for (size_t i = 0; i < pos_spikes.size(); ++i) total += pos_spikes[i] + neg_spikes[i];
    return total;
}

namespace {

Tensor as_column(const Tensor& t) { return Tensor({t.size(), 1}, t.data()); }

Tensor flatten(const Tensor& t) { return Tensor({t.size()}, t.data()); }

Tensor layer_current(const Tensor& weights, const Tensor& bias, const Tensor& x) {
    return add(flatten(matmul(weights, as_column(x))), bias);
}

struct Ledger {
    std::vector<double> v0;
    std::vector<double> input_sum;

    explicit Ledger(const NeuronLayerState& st) : v0(st.v), input_sum(st.v.size(), 0.0) {}

    void deliver(const Tensor& current) {
        for (size_t i = 0; i < input_sum.size(); ++i) input_sum[i] += double(current[int64_t(i)]);
    }

    // v(T) - v(0) == sum(input) - theta * (pos - neg), exactly.
    void check(const NeuronLayerState& st, const std::vector<int64_t>& pos,
               const std::vector<int64_t>& neg) const {
        for (size_t i = 0; i < input_sum.size(); ++i) {
            double lhs = st.v[i] - v0[i];
            double rhs = input_sum[i] - st.theta * double(pos[i] - neg[i]);
            if (lhs != rhs) {
                throw SimulationError("charge conservation violated at neuron " +
                                      std::to_string(i) + ": " + std::to_string(lhs) +
                                      " != " + std::to_string(rhs));
            }
            if (st.net_spikes[i] < 0) {
                throw SimulationError("negative net spike count at neuron " + std::to_string(i));
            }
        }
    }
};

void record_step(LayerRecord& rec, const Tensor& spikes, const NeuronLayerState& st,
                 bool record_potentials) {
    for (int64_t i = 0; i < spikes.size(); ++i) {
        if (spikes[i] > 0.5f) rec.pos_spikes[size_t(i)] += 1;
        if (spikes[i] < -0.5f) rec.neg_spikes[size_t(i)] += 1;
    }
    rec.spikes.push_back(spikes);
    if (record_potentials) rec.potentials.push_back(st.v);
}

void finish_layer(LayerRecord& rec, const NeuronLayerState& st, int T) {
    rec.phi.resize(st.v.size());
    for (size_t i = 0; i < st.v.size(); ++i) {
        rec.phi[i] = st.theta * double(rec.pos_spikes[i] - rec.neg_spikes[i]) / double(T);
    }
}

LayerRecord make_layer_record(int64_t n, double theta) {
    LayerRecord rec;
    rec.theta = theta;
    rec.pos_spikes.assign(size_t(n), 0);
    rec.neg_spikes.assign(size_t(n), 0);
    return rec;
}

int argmax_double(const std::vector<double>& v) {
    if (v.empty()) return -1;
    size_t best = 0;
    for (size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return int(best);
}

}  // namespace

SimRecord simulate(const SnnNetwork& net, const Tensor& input, int T, bool record_potentials) {
    if (T < 1) throw ArgumentError("simulate: T must be >= 1");
    if (input.rank() != 1 || input.size() != net.input_dim()) {
        throw DimensionError("simulate: input " + input.shape_str() +
                             " does not match network input dim " +
                             std::to_string(net.input_dim()));
    }

    const size_t n_hidden = net.hidden.size();
    SimRecord record;
    record.T = T;

    std::vector<NeuronLayerState> states;
    std::vector<Ledger> ledgers;
    states.reserve(n_hidden);
    for (const SnnLayer& layer : net.hidden) {
        double theta = double(layer.theta);
        states.push_back(make_state(layer.weights.rows(), theta, double(net.theta_neg), net.mode,
                                    net.v0_policy.value_for(theta)));
        ledgers.emplace_back(states.back());
        record.layers.push_back(make_layer_record(layer.weights.rows(), theta));
    }

    // Constant analog input: the first layer's current is the same every step.
    Tensor first_current = n_hidden > 0 ? layer_current(net.hidden[0].weights, net.hidden[0].bias, input)
                                        : Tensor();

    std::vector<double> out_accum(size_t(net.output_dim()), 0.0);
    for (int t = 0; t < T; ++t) {
        Tensor x = input;  // postsynaptic drive from the previous layer
        for (size_t l = 0; l < n_hidden; ++l) {
            Tensor current = l == 0 ? first_current
                                    : layer_current(net.hidden[l].weights, net.hidden[l].bias,
                                                    scale(x, net.hidden[l - 1].theta));
            ledgers[l].deliver(current);
            Tensor spikes = step(states[l], current);
            record_step(record.layers[l], spikes, states[l], record_potentials);
            x = spikes;
        }
        Tensor out_current =
            layer_current(net.output.weights, net.output.bias,
                          n_hidden > 0 ? scale(x, net.hidden.back().theta) : x);
        for (int64_t i = 0; i < out_current.size(); ++i) out_accum[size_t(i)] += double(out_current[i]);
        if (record_potentials) record.output_potentials.push_back(out_accum);
    }

    for (size_t l = 0; l < n_hidden; ++l) {
        ledgers[l].check(states[l], record.layers[l].pos_spikes, record.layers[l].neg_spikes);
        finish_layer(record.layers[l], states[l], T);
    }
    record.output_phi.resize(out_accum.size());
    for (size_t i = 0; i < out_accum.size(); ++i) record.output_phi[i] = out_accum[i] / double(T);
    record.predicted = argmax_double(record.output_phi);
    return record;
}

SimRecord run_layer_with_trains(const Tensor& weights, const Tensor& bias,
                                const NeuronLayerState& state_template, const Tensor& trains,
                                double theta_pre, int T, bool record_potentials) {
    if (T < 1) throw ArgumentError("run_layer_with_trains: T must be >= 1");
    if (trains.rank() != 2 || trains.cols() != T) {
        throw DimensionError("run_layer_with_trains: trains " + trains.shape_str() +
                             " do not cover T=" + std::to_string(T) + " steps");
    }
    if (trains.rows() != weights.cols()) {
        throw DimensionError("run_layer_with_trains: " + std::to_string(trains.rows()) +
                             " trains for " + std::to_string(weights.cols()) +
                             " presynaptic neurons");
    }
    if (int64_t(state_template.v.size()) != weights.rows()) {
        throw DimensionError("run_layer_with_trains: state does not match layer width");
    }
    for (int64_t i = 0; i < trains.size(); ++i) {
        float s = trains[i];
        if (s != 0.0f && s != 1.0f && s != -1.0f) {
            throw ArgumentError("run_layer_with_trains: spike trains must contain -1, 0 or 1");
        }
    }

    NeuronLayerState state = state_template;
    Ledger ledger(state);
    SimRecord record;
    record.T = T;
    record.layers.push_back(make_layer_record(weights.rows(), state.theta));

    for (int t = 0; t < T; ++t) {
        std::vector<float> x(size_t(trains.rows()));
        for (int64_t i = 0; i < trains.rows(); ++i) {
            x[size_t(i)] = trains.at(i, t) * float(theta_pre);
        }
        Tensor current = layer_current(weights, bias, Tensor({trains.rows()}, std::move(x)));
        ledger.deliver(current);
        Tensor spikes = step(state, current);
        record_step(record.layers[0], spikes, state, record_potentials);
    }

    ledger.check(state, record.layers[0].pos_spikes, record.layers[0].neg_spikes);
    finish_layer(record.layers[0], state, T);
    return record;
}

std::string sim_record_to_json(const SimRecord& record) {
    nlohmann::json j;
    j["T"] = record.T;
    j["layers"] = nlohmann::json::array();
    for (const LayerRecord& layer : record.layers) {
        nlohmann::json jl;
        jl["theta"] = layer.theta;
        jl["pos_spikes"] = layer.pos_spikes;
        jl["neg_spikes"] = layer.neg_spikes;
        jl["phi"] = layer.phi;
        if (!layer.potentials.empty()) jl["potentials"] = layer.potentials;
        j["layers"].push_back(std::move(jl));
    }
    j["output_phi"] = record.output_phi;
    if (!record.output_potentials.empty()) j["output_potentials"] = record.output_potentials;
    j["predicted"] = record.predicted;
    return j.dump(2);
}

namespace {

constexpr char kMagic[] = "SNNC";
constexpr char kVersion = '1';
constexpr uint8_t kKindSnn = 'S';
constexpr uint32_t kMaxDim = 1u << 24;

void write_layer(wire::Writer& w, const Tensor& weights, const Tensor& bias) {
    w.u32(uint32_t(weights.rows()));
    w.u32(uint32_t(weights.cols()));
    for (float v : weights.data()) w.f32(v);
    for (float v : bias.data()) w.f32(v);
}

void read_layer(wire::Reader& r, Tensor& weights, Tensor& bias) {
    uint32_t out = r.u32();
    uint32_t in = r.u32();
    if (out == 0 || in == 0 || out > kMaxDim || in > kMaxDim) {
        throw CheckpointError("implausible layer dimensions in checkpoint");
    }
    std::vector<float> w(size_t(out) * in);
    for (auto& v : w) v = r.f32();
    std::vector<float> b(out);
    for (auto& v : b) v = r.f32();
    weights = Tensor({int64_t(out), int64_t(in)}, std::move(w));
    bias = Tensor({int64_t(out)}, std::move(b));
}

}  // namespace

std::vector<uint8_t> export_snn_checkpoint(const SnnNetwork& net) {
    wire::Writer w;
    w.str(kMagic);
    w.u8(uint8_t(kVersion));
    w.u8(kKindSnn);
    w.u8(net.mode == NeuronMode::IF ? 'I' : 'D');
    w.f32(net.theta_neg);
    w.u8(uint8_t(net.v0_policy.kind));
    w.f32(net.v0_policy.value);
    w.u32(uint32_t(net.hidden.size()));
    for (const SnnLayer& layer : net.hidden) {
        w.f32(layer.theta);
        write_layer(w, layer.weights, layer.bias);
    }
    write_layer(w, net.output.weights, net.output.bias);
    return std::move(w.bytes);
}

SnnNetwork import_snn_checkpoint(const std::vector<uint8_t>& bytes) {
    wire::Reader r{bytes.data(), bytes.size()};
    if (r.str(4) != kMagic) throw CheckpointError("bad magic: not a checkpoint file");
    char version = char(r.u8());
    if (version != kVersion) {
        throw CheckpointError(std::string("unsupported checkpoint version '") + version + "'");
    }
    if (r.u8() != kKindSnn) throw CheckpointError("not an SNN checkpoint");

    SnnNetwork net;
    char mode = char(r.u8());
    if (mode == 'I') net.mode = NeuronMode::IF;
    else if (mode == 'D') net.mode = NeuronMode::DTN;
    else throw CheckpointError("unknown neuron mode in checkpoint");
    net.theta_neg = r.f32();
    if (!(net.theta_neg < 0.0f)) throw CheckpointError("theta_neg must be negative");
    uint8_t v0_kind = r.u8();
    if (v0_kind > 2) throw CheckpointError("unknown v0 policy in checkpoint");
    net.v0_policy.kind = V0Policy::Kind(v0_kind);
    net.v0_policy.value = r.f32();

    uint32_t n_hidden = r.u32();
    if (n_hidden > 4096) throw CheckpointError("implausible layer count");
    for (uint32_t l = 0; l < n_hidden; ++l) {
        SnnLayer layer;
        layer.theta = r.f32();
        if (!(layer.theta > 0.0f) || !std::isfinite(layer.theta)) {
            throw CheckpointError("non-positive theta in checkpoint layer " + std::to_string(l));
        }
        read_layer(r, layer.weights, layer.bias);
        net.hidden.push_back(std::move(layer));
    }
    read_layer(r, net.output.weights, net.output.bias);
    if (!r.exhausted()) throw CheckpointError("trailing bytes after checkpoint payload");

    for (size_t l = 1; l < net.hidden.size(); ++l) {
        if (net.hidden[l].weights.cols() != net.hidden[l - 1].weights.rows()) {
            throw CheckpointError("layer dimensions do not chain");
        }
    }
    if (!net.hidden.empty() && net.output.weights.cols() != net.hidden.back().weights.rows()) {
        throw CheckpointError("layer dimensions do not chain");
    }
    return net;
}

void save_snn_checkpoint(const SnnNetwork& net, const std::string& path) {
    std::vector<uint8_t> bytes = export_snn_checkpoint(net);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

SnnNetwork load_snn_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    return import_snn_checkpoint(bytes);
}

}  // namespace snnconv
