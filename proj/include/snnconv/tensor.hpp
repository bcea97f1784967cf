#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snnconv/errors.hpp"

namespace snnconv {

/// Dense row-major float32 tensor. Values are always finite; every
/// constructor and operation validates this and throws on NaN/Inf.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int64_t> shape);  // zero-filled
    Tensor(std::vector<int64_t> shape, std::vector<float> data);

    static Tensor scalar(float v) { return Tensor({1}, {v}); }

    const std::vector<int64_t>& shape() const { return shape_; }
    int64_t size() const { return static_cast<int64_t>(data_.size()); }
    int64_t rank() const { return static_cast<int64_t>(shape_.size()); }

    // 2-d accessors; the tensor must actually be rank 2.
    int64_t rows() const;
    int64_t cols() const;
    float& at(int64_t i, int64_t j);
    float at(int64_t i, int64_t j) const;

    float& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    float operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    const std::vector<float>& data() const { return data_; }
    std::vector<float>& data() { return data_; }

    std::string shape_str() const;

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

private:
    std::vector<int64_t> shape_;
    std::vector<float> data_;
};

/// Counter-based deterministic generator (SplitMix64 over an incrementing
/// counter). Identical seed gives an identical sequence on any platform.
class Rng {
public:
    explicit Rng(uint64_t seed) : seed_(seed) {}

    uint64_t next_u64();
    double next_double();  // [0, 1), 53-bit resolution
    uint64_t below(uint64_t n);
    float uniform(float lo, float hi);
    // Standard normal via Box-Muller; consumes two uniforms per pair.
    double next_gaussian();

    uint64_t seed() const { return seed_; }

private:
    uint64_t seed_ = 0;
    uint64_t counter_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Matrix product with mandated summation order: row-major output, inner
// index ascending, float accumulator.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// Elementwise operations. Binary ops accept equal shapes only; the scalar
// overloads cover the scalar-with-tensor case.
Tensor add(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, float c);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, float c);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor emax(const Tensor& a, const Tensor& b);
Tensor emax(const Tensor& a, float c);
Tensor clamp(const Tensor& a, float lo, float hi);
Tensor efloor(const Tensor& a);
Tensor scale(const Tensor& a, float c);

Tensor rand_uniform(Rng& rng, const std::vector<int64_t>& shape, float lo, float hi);

/// Row i of a rank-2 tensor as a rank-1 tensor.
Tensor row(const Tensor& a, int64_t i);
/// Index of the largest element; first index wins ties.
int64_t argmax(const Tensor& a);

}  // namespace snnconv
