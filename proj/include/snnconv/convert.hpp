#pragma once

#include "snnconv/ann.hpp"
#include "snnconv/snn.hpp"

namespace snnconv {

/// Maps a trained quantized-activation network onto a spiking one: each
/// layer's learned threshold becomes the spike emission threshold, weights
/// and biases are copied verbatim.
SnnNetwork convert(const AnnNetwork& ann, NeuronMode mode,
                   V0Policy v0_policy = V0Policy::half_theta(), float theta_neg = -1e-3f);

/// Analytic activation-to-rate map used to isolate clipping from
/// quantization effects: phi = clip((theta/T) * floor(a*T/lambda), 0, theta).
Tensor predicted_rate(const Tensor& a, float lambda, float theta, int T);

}  // namespace snnconv
