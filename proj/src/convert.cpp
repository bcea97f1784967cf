#include "snnconv/convert.hpp"

#include <cmath>

namespace snnconv {

SnnNetwork convert(const AnnNetwork& ann, NeuronMode mode, V0Policy v0_policy, float theta_neg) {
    if (ann.hidden.size() != ann.activations.size()) {
        throw ConversionError("malformed network: activation count does not match layers");
    }
    if (!(theta_neg < 0.0f)) throw ConversionError("theta_neg must be negative");

    SnnNetwork snn;
    snn.mode = mode;
    snn.theta_neg = theta_neg;
    snn.v0_policy = v0_policy;
    for (size_t l = 0; l < ann.hidden.size(); ++l) {
        float lambda = ann.activations[l].lambda;
        if (!(lambda > 0.0f) || !std::isfinite(lambda)) {
            throw ConversionError("layer " + std::to_string(l) +
                                  " has non-positive lambda; cannot map to a threshold");
        }
        snn.hidden.push_back(SnnLayer{ann.hidden[l].weights, ann.hidden[l].bias, lambda});
    }
    snn.output = ann.output;
    return snn;
}

Tensor predicted_rate(const Tensor& a, float lambda, float theta, int T) {
    if (T < 1) throw ArgumentError("predicted_rate: T must be >= 1");
    if (!(lambda > 0.0f)) throw ArgumentError("predicted_rate: lambda must be positive");
    if (!(theta > 0.0f)) throw ArgumentError("predicted_rate: theta must be positive");
    const double lam = double(lambda), th = double(theta);
    std::vector<float> out(a.data().size());
    for (size_t i = 0; i < out.size(); ++i) {
        double k = std::floor(double(a.data()[i]) * double(T) / lam);
        if (k < 0.0) k = 0.0;
        if (k > double(T)) k = double(T);
        out[i] = float(th * k / double(T));
    }
    return Tensor(a.shape(), std::move(out));
}

}  // namespace snnconv
