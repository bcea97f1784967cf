#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "snnconv/convert.hpp"
#include "snnconv/data.hpp"
#include "snnconv/snn.hpp"

namespace snnconv {

// Energy per synaptic operation / per multiply-accumulate pair.
constexpr double kJoulesPerSop = 77e-15;
constexpr double kJoulesPerFlop = 12.5e-12;

struct ClipStats {
    double clip_fraction = 0.0;  // fraction of activations above lambda
    double clip_mass = 0.0;      // mean of (a - lambda)+
};

/// Fraction and mean excess of activations exceeding the threshold.
ClipStats clipping_stats(const Tensor& acts, double lambda);

/// Mean squared rounding error of the rate quantizer
/// z -> (theta/T) * floor((T z + v0) / theta), over elements with z in
/// [0, theta]. Returns 0 when no element is in range.
double quantization_mse(const Tensor& z, double theta, int T, double v0);

struct V0Curve {
    std::vector<std::pair<double, double>> curve;  // (v0, mse) in grid order
    double argmin_v0 = 0.0;
};

/// Monte-Carlo sweep of quantization_mse over initial potentials, with
/// z ~ Uniform[0, theta) shared across the grid. Deterministic per seed.
V0Curve v0_sweep(double theta, int T, const std::vector<double>& grid, int n_samples,
                 uint64_t seed);

struct UnevennessResult {
    double min_phi = 0.0;
    double max_phi = 0.0;
    double uniform_phi = 0.0;
    std::vector<std::pair<double, int64_t>> histogram;  // (phi, orderings) ascending
    int64_t orderings = 0;

    double mean_abs_dev(double target) const;
};

/// Evenly spread spike times for a neuron firing `count` spikes in T steps
/// (midpoint rule); 1-indexed, matching the uniform-arrival idealization.
std::vector<int> uniform_spike_times(int count, int T);

/// Exhaustively enumerates every placement of the presynaptic spikes over T
/// steps for a single postsynaptic neuron (weights 1 x n, zero bias, v0 = 0)
/// and tabulates the resulting rates.
UnevennessResult unevenness_enumeration(const Tensor& weights,
                                        const std::vector<int>& presyn_counts, double theta,
                                        int T, NeuronMode mode);

/// Synaptic operations of one simulation: every emitted spike (positive or
/// negative) delivers across the emitting neuron's fan-out.
int64_t count_ops(const SimRecord& sim, const SnnNetwork& net);

/// Multiply-accumulate pairs of one forward pass: 2 * in * out per layer.
int64_t count_flops(const AnnNetwork& net);

struct EnergyEstimate {
    double energy_snn = 0.0;  // joules
    double energy_ann = 0.0;
};

EnergyEstimate estimate_energy(int64_t sops, int64_t flops);

struct LayerErrorStats {
    double clip_fraction = 0.0;
    double clip_mass = 0.0;
    double quant_mse = 0.0;
    double rate_gap = 0.0;  // mean |phi - a| against the source activations
};

struct ErrorReport {
    std::vector<LayerErrorStats> layers;  // hidden layers, in network order
    int64_t sops = 0;
    int64_t flops = 0;
    double energy_snn = 0.0;
    double energy_ann = 0.0;
};

struct ConversionEval {
    double snn_accuracy = 0.0;
    ErrorReport report;
};

/// Simulates the converted network over a dataset and aggregates per-layer
/// error statistics plus operation/energy totals (totals cover the whole
/// dataset). Accumulators are double precision.
ConversionEval evaluate_conversion(const AnnNetwork& ann, const SnnNetwork& snn,
                                   const Dataset& data, int T);

std::string error_report_to_csv(const ErrorReport& report);
std::string error_report_to_json(const ErrorReport& report);

/// Shortest stable decimal rendering used by every report writer ("%.10g").
std::string fmt_g(double v);

}  // namespace snnconv
