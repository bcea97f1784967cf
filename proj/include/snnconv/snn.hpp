#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snnconv/ann.hpp"
#include "snnconv/tensor.hpp"

namespace snnconv {

enum class NeuronMode { IF, DTN };

std::string to_string(NeuronMode mode);
NeuronMode neuron_mode_from_string(const std::string& s);

/// Initial membrane potential policy. Values quantize to float so membrane
/// arithmetic stays on the float lattice (keeps conservation checks exact).
struct V0Policy {
    enum class Kind { Zero, HalfTheta, Explicit };
    Kind kind = Kind::HalfTheta;
    float value = 0.0f;  // used by Explicit

    static V0Policy zero() { return {Kind::Zero, 0.0f}; }
    static V0Policy half_theta() { return {Kind::HalfTheta, 0.0f}; }
    static V0Policy explicit_value(float v) { return {Kind::Explicit, v}; }

    double value_for(double theta) const;
};

/// Mutable per-layer neuron state for one simulation run. Membrane
/// potentials are doubles; inputs arrive as float-valued currents.
struct NeuronLayerState {
    std::vector<double> v;
    std::vector<int64_t> net_spikes;  // net positive spikes, never negative
    double theta = 1.0;
    double theta_neg = -1e-3;
    NeuronMode mode = NeuronMode::IF;
};

NeuronLayerState make_state(int64_t n, double theta, double theta_neg, NeuronMode mode, double v0);

/// One time step: charge m = v + input, then fire. IF: +1 spike and soft
/// reset (v = m - theta) when m >= theta. DTN additionally fires -1 and
/// restores v = m + theta when m <= theta_neg and a net positive spike is
/// outstanding; the positive branch wins when both could apply.
/// Returns spikes in {-1, 0, +1}, at most one per neuron per step.
Tensor step(NeuronLayerState& state, const Tensor& input_current);

struct SnnLayer {
    Tensor weights;  // [out x in]
    Tensor bias;     // constant per-step input current
    float theta = 1.0f;
};

struct SnnNetwork {
    std::vector<SnnLayer> hidden;
    DenseLayer output;  // integrates potential, never spikes
    NeuronMode mode = NeuronMode::IF;
    float theta_neg = -1e-3f;
    V0Policy v0_policy = V0Policy::half_theta();

    int64_t input_dim() const {
        return hidden.empty() ? output.weights.cols() : hidden.front().weights.cols();
    }
    int64_t output_dim() const { return output.weights.rows(); }
};

struct LayerRecord {
    double theta = 0.0;
    std::vector<Tensor> spikes;                   // per step, values in {-1,0,1}
    std::vector<std::vector<double>> potentials;  // per step post-reset v, if recorded
    std::vector<int64_t> pos_spikes;              // per neuron totals
    std::vector<int64_t> neg_spikes;
    std::vector<double> phi;  // theta * (pos - neg) / T, exact

    int64_t total_spike_events() const;
};

struct SimRecord {
    int T = 0;
    std::vector<LayerRecord> layers;
    std::vector<double> output_phi;                      // time-averaged output potential
    std::vector<std::vector<double>> output_potentials;  // running sums per step, if recorded
    int predicted = -1;                                  // argmax of output_phi
};

/// Clock-driven simulation with the input presented as a constant analog
/// current at every step. Hidden layer l receives W^l (s^{l-1} theta^{l-1})
/// + b^l; the output layer accumulates raw potential. Charge conservation
/// v(T) - v(0) = sum(input) - theta*(pos - neg) is asserted per neuron.
SimRecord simulate(const SnnNetwork& net, const Tensor& input, int T,
                   bool record_potentials = false);

/// Drives a single layer with explicit presynaptic spike trains
/// (trains[i][t] in {0,1}, delivered as theta_pre-weighted current).
SimRecord run_layer_with_trains(const Tensor& weights, const Tensor& bias,
                                const NeuronLayerState& state_template, const Tensor& trains,
                                double theta_pre, int T, bool record_potentials = false);

std::string sim_record_to_json(const SimRecord& record);

// SNN checkpoint: same container as the ANN one plus a mode/theta'/v0 header.
std::vector<uint8_t> export_snn_checkpoint(const SnnNetwork& net);
SnnNetwork import_snn_checkpoint(const std::vector<uint8_t>& bytes);
void save_snn_checkpoint(const SnnNetwork& net, const std::string& path);
SnnNetwork load_snn_checkpoint(const std::string& path);

}  // namespace snnconv
