#include "snnconv/tensor.hpp"

#include <cmath>
#include <sstream>

namespace snnconv {

namespace {

int64_t shape_product(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (int64_t d : shape) {
        if (d <= 0) throw ArgumentError("tensor dimensions must be positive");
        n *= d;
    }
    return n;
}

void ensure_finite(const std::vector<float>& data) {
    for (float v : data) {
        if (!std::isfinite(v)) throw ArgumentError("tensor element is not finite");
    }
}

std::string shape_to_string(const std::vector<int64_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_str() +
                             " vs " + b.shape_str());
    }
}

template <class F>
Tensor map_unary(const Tensor& a, F f) {
    std::vector<float> out(a.data().size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = f(a.data()[i]);
    return Tensor(a.shape(), std::move(out));
}

template <class F>
Tensor map_binary(const Tensor& a, const Tensor& b, const char* op, F f) {
    require_same_shape(a, b, op);
    std::vector<float> out(a.data().size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = f(a.data()[i], b.data()[i]);
    return Tensor(a.shape(), std::move(out));
}

}  // namespace

Tensor::Tensor(std::vector<int64_t> shape)
    : shape_(std::move(shape)), data_(static_cast<size_t>(shape_product(shape_)), 0.0f) {}

Tensor::Tensor(std::vector<int64_t> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (static_cast<int64_t>(data_.size()) != shape_product(shape_)) {
        throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_to_string(shape_));
    }
    ensure_finite(data_);
}

int64_t Tensor::rows() const {
    if (rank() != 2) throw DimensionError("rows(): tensor is not rank 2, shape " + shape_str());
    return shape_[0];
}

int64_t Tensor::cols() const {
    if (rank() != 2) throw DimensionError("cols(): tensor is not rank 2, shape " + shape_str());
    return shape_[1];
}

float& Tensor::at(int64_t i, int64_t j) {
    return data_[static_cast<size_t>(i * cols() + j)];
}

float Tensor::at(int64_t i, int64_t j) const {
    return data_[static_cast<size_t>(i * cols() + j)];
}

std::string Tensor::shape_str() const { return shape_to_string(shape_); }

uint64_t Rng::next_u64() {
    // SplitMix64 evaluated at (seed, counter); purely integer arithmetic.
    uint64_t z = seed_ + 0x9E3779B97F4A7C15ULL * (++counter_);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double Rng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

uint64_t Rng::below(uint64_t n) {
    if (n == 0) throw ArgumentError("Rng::below: n must be positive");
    return next_u64() % n;
}

float Rng::uniform(float lo, float hi) {
    if (!(lo < hi)) throw ArgumentError("Rng::uniform: lo must be < hi");
    double v = static_cast<double>(lo) + (static_cast<double>(hi) - lo) * next_double();
    float f = static_cast<float>(v);
    if (f >= hi) f = std::nextafterf(hi, lo);  // keep the half-open contract
    if (f < lo) f = lo;
    return f;
}

double Rng::next_gaussian() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = next_double();
    double u2 = next_double();
    if (u1 < 1e-300) u1 = 1e-300;
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
        throw DimensionError("matmul: incompatible shapes " + a.shape_str() + " and " +
                             b.shape_str());
    }
    const int64_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor out({m, n});
    for (int64_t i = 0; i < m; ++i) {
        for (int64_t j = 0; j < n; ++j) {
            float acc = 0.0f;  // 32-bit accumulator, inner index ascending
            for (int64_t p = 0; p < k; ++p) acc += a.at(i, p) * b.at(p, j);
            out.at(i, j) = acc;
        }
    }
    ensure_finite(out.data());
    return out;
}

Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) throw DimensionError("transpose: tensor is not rank 2");
    Tensor out({a.cols(), a.rows()});
    for (int64_t i = 0; i < a.rows(); ++i)
        for (int64_t j = 0; j < a.cols(); ++j) out.at(j, i) = a.at(i, j);
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    return map_binary(a, b, "add", [](float x, float y) { return x + y; });
}
Tensor add(const Tensor& a, float c) {
    return map_unary(a, [c](float x) { return x + c; });
}
Tensor sub(const Tensor& a, const Tensor& b) {
    return map_binary(a, b, "sub", [](float x, float y) { return x - y; });
}
Tensor sub(const Tensor& a, float c) {
    return map_unary(a, [c](float x) { return x - c; });
}
Tensor mul(const Tensor& a, const Tensor& b) {
    return map_binary(a, b, "mul", [](float x, float y) { return x * y; });
}
Tensor emax(const Tensor& a, const Tensor& b) {
    return map_binary(a, b, "max", [](float x, float y) { return x > y ? x : y; });
}
Tensor emax(const Tensor& a, float c) {
    return map_unary(a, [c](float x) { return x > c ? x : c; });
}
Tensor clamp(const Tensor& a, float lo, float hi) {
    if (!(lo <= hi)) throw ArgumentError("clamp: lo must be <= hi");
    return map_unary(a, [lo, hi](float x) { return x < lo ? lo : (x > hi ? hi : x); });
}
Tensor efloor(const Tensor& a) {
    return map_unary(a, [](float x) { return std::floor(x); });
}
Tensor scale(const Tensor& a, float c) {
    Tensor out = map_unary(a, [c](float x) { return x * c; });
    ensure_finite(out.data());
    return out;
}

Tensor rand_uniform(Rng& rng, const std::vector<int64_t>& shape, float lo, float hi) {
    if (!(lo < hi)) throw ArgumentError("rand_uniform: lo must be < hi");
    int64_t n = 1;
    for (int64_t d : shape) {
        if (d <= 0) throw ArgumentError("rand_uniform: dimensions must be positive");
        n *= d;
    }
    std::vector<float> data(static_cast<size_t>(n));
    for (auto& v : data) v = rng.uniform(lo, hi);
    return Tensor(shape, std::move(data));
}

Tensor row(const Tensor& a, int64_t i) {
    if (a.rank() != 2) throw DimensionError("row: tensor is not rank 2");
    if (i < 0 || i >= a.rows()) throw ArgumentError("row: index out of range");
    std::vector<float> data(static_cast<size_t>(a.cols()));
    for (int64_t j = 0; j < a.cols(); ++j) data[static_cast<size_t>(j)] = a.at(i, j);
    return Tensor({a.cols()}, std::move(data));
}

int64_t argmax(const Tensor& a) {
    if (a.size() == 0) throw ArgumentError("argmax: empty tensor");
    int64_t best = 0;
    for (int64_t i = 1; i < a.size(); ++i)
        if (a[i] > a[best]) best = i;
    return best;
}

}  // namespace snnconv
