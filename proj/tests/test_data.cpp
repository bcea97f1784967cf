#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

#include "snnconv/data.hpp"

using namespace snnconv;

namespace {

// Independent linear-classifier oracle: 2-class logistic regression on
// doubles, full-batch gradient descent. Deliberately separate from the ann
// module.
double linear_oracle_accuracy(const Dataset& ds) {
    REQUIRE(ds.num_classes == 2);
    int64_t n = ds.size();
    double w0 = 0, w1 = 0, b = 0;
    const double lr = 0.5;
    for (int iter = 0; iter < 500; ++iter) {
        double g0 = 0, g1 = 0, gb = 0;
        for (int64_t i = 0; i < n; ++i) {
            double x0 = ds.inputs.at(i, 0), x1 = ds.inputs.at(i, 1);
            double y = ds.labels[size_t(i)];
            double p = 1.0 / (1.0 + std::exp(-(w0 * x0 + w1 * x1 + b)));
            double d = p - y;
            g0 += d * x0;
            g1 += d * x1;
            gb += d;
        }
        w0 -= lr * g0 / n;
        w1 -= lr * g1 / n;
        b -= lr * gb / n;
    }
    int64_t correct = 0;
    for (int64_t i = 0; i < n; ++i) {
        double s = w0 * ds.inputs.at(i, 0) + w1 * ds.inputs.at(i, 1) + b;
        if ((s > 0 ? 1 : 0) == ds.labels[size_t(i)]) ++correct;
    }
    return double(correct) / double(n);
}

bool datasets_identical(const Dataset& a, const Dataset& b) {
    return a.labels == b.labels && a.inputs.same_shape(b.inputs) &&
           std::memcmp(a.inputs.data().data(), b.inputs.data().data(),
                       a.inputs.data().size() * sizeof(float)) == 0;
}

void write_bytes(const std::string& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

void push_be_u32(std::vector<unsigned char>& v, uint32_t x) {
    v.push_back((x >> 24) & 0xff);
    v.push_back((x >> 16) & 0xff);
    v.push_back((x >> 8) & 0xff);
    v.push_back(x & 0xff);
}

}  // namespace

TEST_CASE("blobs deterministic per seed") {
    Dataset a = gen_blobs(9, 100, 2);
    Dataset b = gen_blobs(9, 100, 2);
    Dataset c = gen_blobs(10, 100, 2);
    CHECK(datasets_identical(a, b));
    CHECK(!datasets_identical(a, c));
}

TEST_CASE("blobs linearly separable") {
    Dataset ds = gen_blobs(1, 400, 2);
    CHECK(linear_oracle_accuracy(ds) >= 0.98);
}

TEST_CASE("spirals not linearly separable") {
    Dataset ds = gen_spirals(1, 400);
    CHECK(datasets_identical(ds, gen_spirals(1, 400)));
    CHECK(linear_oracle_accuracy(ds) <= 0.70);
}

TEST_CASE("split is deterministic and disjoint by size") {
    Dataset ds = gen_blobs(3, 100, 2);
    SplitPair s1 = split_dataset(ds, 0.25, 42);
    SplitPair s2 = split_dataset(ds, 0.25, 42);
    CHECK(s1.train.size() == 75);
    CHECK(s1.test.size() == 25);
    CHECK(datasets_identical(s1.test, s2.test));
}

TEST_CASE("idx fixture round trip") {
    const int n = 4, rows = 28, cols = 28;
    std::vector<unsigned char> img;
    push_be_u32(img, 0x00000803);
    push_be_u32(img, n);
    push_be_u32(img, rows);
    push_be_u32(img, cols);
    for (int i = 0; i < n * rows * cols; ++i) img.push_back((unsigned char)(i % 256));
    std::vector<unsigned char> lab;
    push_be_u32(lab, 0x00000801);
    push_be_u32(lab, n);
    for (unsigned char l : {3, 1, 4, 1}) lab.push_back(l);

    write_bytes("idx_images.bin", img);
    write_bytes("idx_labels.bin", lab);

    Dataset ds = load_idx("idx_images.bin", "idx_labels.bin");
    CHECK(ds.size() == 4);
    CHECK(ds.dim() == 28 * 28);
    CHECK(ds.labels == std::vector<int>{3, 1, 4, 1});
    CHECK(ds.num_classes == 5);
    CHECK(ds.inputs.at(0, 255) == doctest::Approx(255.0 / 255.0));

    SUBCASE("swapped arguments -> bad magic") {
        try {
            load_idx("idx_labels.bin", "idx_images.bin");
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("bad magic") != std::string::npos);
        }
    }

    SUBCASE("count mismatch") {
        std::vector<unsigned char> lab2;
        push_be_u32(lab2, 0x00000801);
        push_be_u32(lab2, n + 1);
        for (int i = 0; i < n + 1; ++i) lab2.push_back(0);
        write_bytes("idx_labels2.bin", lab2);
        try {
            load_idx("idx_images.bin", "idx_labels2.bin");
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("count mismatch") != std::string::npos);
        }
    }

    SUBCASE("empty file -> truncation") {
        write_bytes("idx_empty.bin", {});
        try {
            load_idx("idx_empty.bin", "idx_labels.bin");
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("truncated") != std::string::npos);
        }
    }

    SUBCASE("short pixel payload -> truncation") {
        std::vector<unsigned char> img2(img.begin(), img.end() - 10);
        write_bytes("idx_short.bin", img2);
        try {
            load_idx("idx_short.bin", "idx_labels.bin");
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("truncated") != std::string::npos);
        }
    }
}
