#include "snnconv/data.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "snnconv/errors.hpp"

namespace snnconv {

namespace {

constexpr double kPi = 3.14159265358979323846;

uint32_t read_be_u32(std::ifstream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) {
        throw DataError("truncated file: " + path);
    }
    return (uint32_t(b[0]) << 24) | (uint32_t(b[1]) << 16) | (uint32_t(b[2]) << 8) | uint32_t(b[3]);
}

}  // namespace

Dataset gen_blobs(uint64_t seed, int n, int classes) {
    if (n <= 0 || classes <= 1) throw ArgumentError("gen_blobs: need n > 0 and classes > 1");
    Rng rng(seed);
    const double radius = 2.5;
    const double sigma = 0.4;
    std::vector<float> inputs(static_cast<size_t>(n) * 2);
    std::vector<int> labels(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        int k = i % classes;
        double angle = 2.0 * kPi * k / classes;
        double x = radius * std::cos(angle) + sigma * rng.next_gaussian();
        double y = radius * std::sin(angle) + sigma * rng.next_gaussian();
        inputs[2 * size_t(i)] = static_cast<float>(x);
        inputs[2 * size_t(i) + 1] = static_cast<float>(y);
        labels[size_t(i)] = k;
    }
    return Dataset{Tensor({n, 2}, std::move(inputs)), std::move(labels), classes};
}

Dataset gen_spirals(uint64_t seed, int n) {
    if (n <= 0) throw ArgumentError("gen_spirals: need n > 0");
    Rng rng(seed);
    const double turns = 1.5;
    const double noise = 0.05;
    std::vector<float> inputs(static_cast<size_t>(n) * 2);
    std::vector<int> labels(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        int k = i % 2;
        double t = rng.next_double();
        double r = 0.2 + 2.2 * t;
        double angle = k * kPi + turns * 2.0 * kPi * t;
        double x = r * std::cos(angle) + noise * rng.next_gaussian();
        double y = r * std::sin(angle) + noise * rng.next_gaussian();
        inputs[2 * size_t(i)] = static_cast<float>(x);
        inputs[2 * size_t(i) + 1] = static_cast<float>(y);
        labels[size_t(i)] = k;
    }
    return Dataset{Tensor({n, 2}, std::move(inputs)), std::move(labels), 2};
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw DataError("cannot open " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw DataError("cannot open " + labels_path);

    uint32_t img_magic = read_be_u32(img, images_path);
    if (img_magic != 0x00000803u) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "bad magic 0x%08x in ", img_magic);
        throw DataError(std::string(buf) + images_path + " (expected 0x00000803)");
    }
    uint32_t n_images = read_be_u32(img, images_path);
    uint32_t rows = read_be_u32(img, images_path);
    uint32_t cols = read_be_u32(img, images_path);

    uint32_t lab_magic = read_be_u32(lab, labels_path);
    if (lab_magic != 0x00000801u) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "bad magic 0x%08x in ", lab_magic);
        throw DataError(std::string(buf) + labels_path + " (expected 0x00000801)");
    }
    uint32_t n_labels = read_be_u32(lab, labels_path);

    if (n_images != n_labels) {
        throw DataError("count mismatch: " + std::to_string(n_images) + " images vs " +
                        std::to_string(n_labels) + " labels");
    }

    size_t pixels = size_t(n_images) * rows * cols;
    std::vector<unsigned char> raw(pixels);
    if (!img.read(reinterpret_cast<char*>(raw.data()), std::streamsize(pixels))) {
        throw DataError("truncated file: " + images_path);
    }
    std::vector<unsigned char> raw_labels(n_labels);
    if (!lab.read(reinterpret_cast<char*>(raw_labels.data()), std::streamsize(n_labels))) {
        throw DataError("truncated file: " + labels_path);
    }

    std::vector<float> inputs(pixels);
    for (size_t i = 0; i < pixels; ++i) inputs[i] = raw[i] / 255.0f;
    std::vector<int> labels(n_labels);
    int max_label = 0;
    for (size_t i = 0; i < raw_labels.size(); ++i) {
        labels[i] = raw_labels[i];
        if (labels[i] > max_label) max_label = labels[i];
    }
    return Dataset{Tensor({int64_t(n_images), int64_t(rows) * cols}, std::move(inputs)),
                   std::move(labels), max_label + 1};
}

SplitPair split_dataset(const Dataset& ds, double test_fraction, uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ArgumentError("split_dataset: test_fraction must be in (0, 1)");
    }
    int64_t n = ds.size();
    if (n < 2) throw ArgumentError("split_dataset: dataset too small");
    std::vector<int64_t> idx(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) idx[size_t(i)] = i;
    Rng rng(seed);
    for (int64_t i = n - 1; i > 0; --i) {
        std::swap(idx[size_t(i)], idx[rng.below(uint64_t(i + 1))]);
    }
    int64_t n_test = std::max<int64_t>(1, int64_t(std::floor(n * test_fraction)));
    int64_t n_train = n - n_test;

    auto take = [&](int64_t begin, int64_t count) {
        std::vector<float> inputs(static_cast<size_t>(count * ds.dim()));
        std::vector<int> labels(static_cast<size_t>(count));
        for (int64_t i = 0; i < count; ++i) {
            int64_t src = idx[size_t(begin + i)];
            for (int64_t j = 0; j < ds.dim(); ++j) {
                inputs[size_t(i * ds.dim() + j)] = ds.inputs.at(src, j);
            }
            labels[size_t(i)] = ds.labels[size_t(src)];
        }
        return Dataset{Tensor({count, ds.dim()}, std::move(inputs)), std::move(labels),
                       ds.num_classes};
    };
    return SplitPair{take(0, n_train), take(n_train, n_test)};
}

}  // namespace snnconv
