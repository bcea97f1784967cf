#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snnconv/data.hpp"
#include "snnconv/tensor.hpp"

namespace snnconv {

/// Per-layer parameters of the quantized clip-floor-shift activation:
/// a = lambda * clip(floor(z * levels / lambda + shift) / levels, 0, 1).
struct QcfsParams {
    float lambda = 4.0f;  // learnable threshold, kept > 0 by projection
    int levels = 4;       // quantization steps L
    float shift = 0.5f;   // fixed displacement
};

struct DenseLayer {
    Tensor weights;  // [out x in]
    Tensor bias;     // [out]
};

struct AnnNetwork {
    std::vector<DenseLayer> hidden;        // layers with quantized activation
    std::vector<QcfsParams> activations;   // parallel to hidden
    DenseLayer output;                     // raw logits, no activation

    int64_t input_dim() const {
        return hidden.empty() ? output.weights.cols() : hidden.front().weights.cols();
    }
    int64_t output_dim() const { return output.weights.rows(); }
};

Tensor qcfs_forward(const Tensor& z, const QcfsParams& p);

struct QcfsGrad {
    Tensor dz;
    double dlambda = 0.0;
};

/// Straight-through gradient of the quantized activation. The pass-through
/// gate is 0 < z*L/lambda + shift <= L; on gated-off upper-clipped elements
/// dlambda still accumulates the full upstream (a == lambda there).
QcfsGrad qcfs_backward(const Tensor& z, const QcfsParams& p, const Tensor& upstream);

struct ForwardTrace {
    Tensor logits;               // [n x classes]
    std::vector<Tensor> preacts; // z^l per hidden layer, [n x width]
    std::vector<Tensor> acts;    // a^l per hidden layer
};

ForwardTrace ann_forward(const AnnNetwork& net, const Tensor& x);

struct TrainHyper {
    double lr = 0.1;
    int epochs = 100;
    int batch = 32;
    uint64_t seed = 0;
};

struct TrainLog {
    std::vector<double> epoch_loss;  // mean cross-entropy per sample
};

AnnNetwork make_network(int64_t input_dim, const std::vector<int>& hidden_sizes,
                        int64_t output_dim, int levels, Rng& rng);

/// Minibatch SGD on softmax cross-entropy; lambda is projected to >= 1e-4
/// after every step. Deterministic for a fixed seed.
TrainLog train(AnnNetwork& net, const Dataset& data, const TrainHyper& hyper);

double accuracy(const AnnNetwork& net, const Dataset& data);

std::vector<uint8_t> export_checkpoint(const AnnNetwork& net);
AnnNetwork import_checkpoint(const std::vector<uint8_t>& bytes);
void save_ann_checkpoint(const AnnNetwork& net, const std::string& path);
AnnNetwork load_ann_checkpoint(const std::string& path);

}  // namespace snnconv
