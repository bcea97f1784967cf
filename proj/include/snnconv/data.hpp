#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snnconv/tensor.hpp"

namespace snnconv {

struct Dataset {
    Tensor inputs;            // [n x d]
    std::vector<int> labels;  // values in [0, num_classes)
    int num_classes = 0;

    int64_t size() const { return inputs.rank() == 2 ? inputs.rows() : 0; }
    int64_t dim() const { return inputs.rank() == 2 ? inputs.cols() : 0; }
};

struct SplitPair {
    Dataset train;
    Dataset test;
};

/// Seeded 2-d Gaussian blobs on a circle; linearly separable by construction.
Dataset gen_blobs(uint64_t seed, int n, int classes);

/// Seeded two-arm interleaved spirals; not linearly separable.
Dataset gen_spirals(uint64_t seed, int n);

/// IDX image/label pair (big-endian headers, magic 0x00000803 / 0x00000801).
/// Pixels are scaled to [0, 1]. Image/label counts must agree.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

/// Deterministic shuffled split; test_fraction of the samples go to test.
SplitPair split_dataset(const Dataset& ds, double test_fraction, uint64_t seed);

}  // namespace snnconv
