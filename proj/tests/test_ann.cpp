#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "snnconv/ann.hpp"
#include "snnconv/data.hpp"

using namespace snnconv;

namespace {

// Hand-written per-element straight-through evaluator, written directly from
// the three-branch rule. Used as an independent check of qcfs_backward.
struct SteRef {
    std::vector<float> dz;
    double dlambda = 0.0;
};

SteRef ste_reference(const std::vector<float>& z, float lambda, int levels,
                     const std::vector<float>& upstream) {
    SteRef out;
    out.dz.resize(z.size());
    for (size_t i = 0; i < z.size(); ++i) {
        double u = double(z[i]) * levels / double(lambda) + 0.5;
        double c = std::floor(u) / double(levels);
        c = std::min(1.0, std::max(0.0, c));
        if (u > double(levels)) {  // upper clipped: a == lambda
            out.dz[i] = 0.0f;
            out.dlambda += double(upstream[i]);
        } else if (u <= 0.0) {  // lower clipped: dead zone
            out.dz[i] = 0.0f;
        } else {  // interior
            out.dz[i] = upstream[i];
            out.dlambda += double(upstream[i]) * (c - double(z[i]) / double(lambda));
        }
    }
    return out;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
    return a.same_shape(b) &&
           std::memcmp(a.data().data(), b.data().data(), a.data().size() * sizeof(float)) == 0;
}

}  // namespace

TEST_CASE("qcfs_forward examples, lambda=1 L=4") {
    QcfsParams p{1.0f, 4, 0.5f};
    Tensor z({4}, {0.0f, 0.3f, 2.0f, -0.5f});
    Tensor a = qcfs_forward(z, p);
    CHECK(a[0] == 0.0f);
    CHECK(a[1] == 0.25f);
    CHECK(a[2] == 1.0f);
    CHECK(a[3] == 0.0f);
}

TEST_CASE("qcfs_forward output lies on the lambda/L grid in [0, lambda]") {
    Rng rng(11);
    for (int levels : {1, 3, 4, 7, 16}) {
        QcfsParams p{0.0f, levels, 0.5f};
        p.lambda = rng.uniform(0.2f, 3.0f);
        Tensor z = rand_uniform(rng, {200}, -2.0f, 5.0f);
        Tensor a = qcfs_forward(z, p);
        for (int64_t i = 0; i < a.size(); ++i) {
            CHECK(a[i] >= 0.0f);
            CHECK(a[i] <= p.lambda);
            double k = double(a[i]) * levels / double(p.lambda);
            CHECK(std::abs(k - std::round(k)) < 1e-4);
        }
    }
}

TEST_CASE("qcfs_forward is monotone") {
    Rng rng(12);
    QcfsParams p{1.3f, 5, 0.5f};
    Tensor z1 = rand_uniform(rng, {300}, -2.0f, 3.0f);
    Tensor delta = rand_uniform(rng, {300}, 0.0f, 1.0f);
    Tensor z2 = add(z1, delta);
    Tensor a1 = qcfs_forward(z1, p);
    Tensor a2 = qcfs_forward(z2, p);
    for (int64_t i = 0; i < a1.size(); ++i) CHECK(a1[i] <= a2[i]);
}

TEST_CASE("quantization error shrinks as L grows") {
    // Centered quantizer: |a - z| <= lambda/(2L) for z strictly inside (0, lambda).
    const float lambda = 1.0f;
    for (int levels : {4, 64, 1024}) {
        QcfsParams p{lambda, levels, 0.5f};
        for (int i = 1; i < 100; ++i) {
            float z = lambda * float(i) / 100.0f;
            Tensor a = qcfs_forward(Tensor({1}, {z}), p);
            CHECK(std::abs(a[0] - z) <= lambda / (2.0f * levels) + 1e-6f);
        }
    }
}

TEST_CASE("qcfs_backward examples") {
    QcfsParams p{1.0f, 4, 0.5f};
    Tensor up({1}, {1.0f});

    SUBCASE("upper clipped") {
        QcfsGrad g = qcfs_backward(Tensor({1}, {2.0f}), p, up);
        CHECK(g.dz[0] == 0.0f);
        CHECK(g.dlambda == doctest::Approx(1.0));
    }
    SUBCASE("lower clipped") {
        QcfsGrad g = qcfs_backward(Tensor({1}, {-1.0f}), p, up);
        CHECK(g.dz[0] == 0.0f);
        CHECK(g.dlambda == doctest::Approx(0.0));
    }
    SUBCASE("interior") {
        QcfsGrad g = qcfs_backward(Tensor({1}, {0.3f}), p, up);
        CHECK(g.dz[0] == 1.0f);
        CHECK(g.dlambda == doctest::Approx(-0.05).epsilon(1e-5));
    }
}

TEST_CASE("qcfs_backward matches the per-element reference") {
    Rng rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        float lambda = rng.uniform(0.2f, 2.5f);
        int levels = 1 + int(rng.below(12));
        QcfsParams p{lambda, levels, 0.5f};
        Tensor z = rand_uniform(rng, {6, 7}, -3.0f, 4.0f);
        Tensor up = rand_uniform(rng, {6, 7}, -1.0f, 1.0f);
        QcfsGrad g = qcfs_backward(z, p, up);
        SteRef ref = ste_reference(z.data(), lambda, levels, up.data());
        for (size_t i = 0; i < ref.dz.size(); ++i) CHECK(g.dz[int64_t(i)] == ref.dz[i]);
        CHECK(g.dlambda == doctest::Approx(ref.dlambda).epsilon(1e-9));
    }
}

TEST_CASE("ann_forward single hidden unit") {
    AnnNetwork net;
    net.hidden.push_back(DenseLayer{Tensor({1, 1}, {1.0f}), Tensor({1})});
    net.activations.push_back(QcfsParams{1.0f, 4, 0.5f});
    net.output = DenseLayer{Tensor({1, 1}, {1.0f}), Tensor({1})};

    ForwardTrace t = ann_forward(net, Tensor({1, 1}, {0.3f}));
    CHECK(t.acts[0][0] == 0.25f);
    CHECK(t.logits[0] == 0.25f);
}

TEST_CASE("ann_forward zero weights give zero everything") {
    AnnNetwork net;
    net.hidden.push_back(DenseLayer{Tensor({3, 2}), Tensor({3})});
    net.activations.push_back(QcfsParams{1.0f, 4, 0.5f});
    net.output = DenseLayer{Tensor({2, 3}), Tensor({2})};
    ForwardTrace t = ann_forward(net, Tensor({2, 2}, {0.5f, -0.5f, 1.0f, 2.0f}));
    for (int64_t i = 0; i < t.acts[0].size(); ++i) CHECK(t.acts[0][i] == 0.0f);
    for (int64_t i = 0; i < t.logits.size(); ++i) CHECK(t.logits[i] == 0.0f);

    CHECK_THROWS_AS(ann_forward(net, Tensor({2, 3})), DimensionError);
}

TEST_CASE("ann_forward with huge lambda quantizes at resolution lambda/L") {
    AnnNetwork net;
    net.hidden.push_back(DenseLayer{Tensor({1, 1}, {1.0f}), Tensor({1})});
    net.activations.push_back(QcfsParams{1000.0f, 4, 0.5f});
    net.output = DenseLayer{Tensor({1, 1}, {1.0f}), Tensor({1})};
    for (float x : {0.3f, 150.0f, 400.0f, 900.0f}) {
        ForwardTrace t = ann_forward(net, Tensor({1, 1}, {x}));
        CHECK(std::abs(t.acts[0][0] - x) <= 1000.0f / 8.0f + 1e-3f);
        float steps = t.acts[0][0] / 250.0f;
        CHECK(std::abs(steps - std::round(steps)) < 1e-5f);
    }
}

TEST_CASE("training on separable blobs") {
    Dataset ds = gen_blobs(1, 200, 2);
    Rng rng(2);
    AnnNetwork net = make_network(2, {16}, 2, 4, rng);
    TrainHyper hyper{0.2, 30, 32, 2};
    TrainLog log = train(net, ds, hyper);

    CHECK(log.epoch_loss.size() == 30);
    CHECK(accuracy(net, ds) >= 0.98);

    SUBCASE("loss is non-increasing within a 5% band") {
        for (size_t i = 1; i < log.epoch_loss.size(); ++i) {
            CHECK(log.epoch_loss[i] <= log.epoch_loss[i - 1] * 1.05 + 1e-9);
        }
    }

    SUBCASE("same seed reproduces the log exactly") {
        Rng rng2(2);
        AnnNetwork net2 = make_network(2, {16}, 2, 4, rng2);
        TrainLog log2 = train(net2, ds, hyper);
        CHECK(log.epoch_loss == log2.epoch_loss);
        ForwardTrace t1 = ann_forward(net, ds.inputs);
        ForwardTrace t2 = ann_forward(net2, ds.inputs);
        CHECK(bit_equal(t1.logits, t2.logits));
    }
}

TEST_CASE("lr=0 leaves the loss unchanged") {
    Dataset ds = gen_blobs(4, 64, 2);
    Rng rng(3);
    AnnNetwork net = make_network(2, {8}, 2, 4, rng);
    TrainLog log = train(net, ds, TrainHyper{0.0, 5, 16, 3});
    for (size_t i = 1; i < log.epoch_loss.size(); ++i) {
        CHECK(log.epoch_loss[i] == doctest::Approx(log.epoch_loss[0]).epsilon(1e-12));
    }
}

TEST_CASE("training errors") {
    Rng rng(4);
    AnnNetwork net = make_network(2, {4}, 2, 4, rng);
    Dataset empty{Tensor(), {}, 2};
    CHECK_THROWS_AS(train(net, empty, TrainHyper{}), TrainError);

    Dataset bad = gen_blobs(5, 10, 2);
    bad.labels[0] = 7;
    CHECK_THROWS_AS(train(net, bad, TrainHyper{}), TrainError);

    SUBCASE("divergence reports the epoch") {
        Dataset ds = gen_blobs(5, 32, 2);
        Rng rng2(6);
        AnnNetwork net2 = make_network(2, {4}, 2, 4, rng2);
        try {
            train(net2, ds, TrainHyper{1e25, 50, 8, 6});
            FAIL("expected TrainError");
        } catch (const TrainError& e) {
            CHECK(std::string(e.what()).find("epoch") != std::string::npos);
        }
    }
}

TEST_CASE("checkpoint round trip") {
    Dataset ds = gen_blobs(6, 80, 2);
    Rng rng(5);
    AnnNetwork net = make_network(2, {6, 5}, 2, 4, rng);
    train(net, ds, TrainHyper{0.1, 3, 16, 5});

    std::vector<uint8_t> bytes = export_checkpoint(net);
    AnnNetwork back = import_checkpoint(bytes);

    REQUIRE(back.hidden.size() == 2);
    CHECK(back.activations[0].lambda == net.activations[0].lambda);
    CHECK(back.activations[1].lambda == net.activations[1].lambda);
    CHECK(back.activations[0].levels == 4);

    ForwardTrace t1 = ann_forward(net, ds.inputs);
    ForwardTrace t2 = ann_forward(back, ds.inputs);
    CHECK(bit_equal(t1.logits, t2.logits));

    SUBCASE("export is stable") { CHECK(export_checkpoint(back) == bytes); }

    SUBCASE("truncated bytes error out") {
        for (size_t cut : {size_t(0), size_t(3), size_t(10), bytes.size() - 1}) {
            std::vector<uint8_t> t(bytes.begin(), bytes.begin() + std::ptrdiff_t(cut));
            CHECK_THROWS_AS(import_checkpoint(t), CheckpointError);
        }
    }

    SUBCASE("bad magic") {
        std::vector<uint8_t> t = bytes;
        t[0] = 'X';
        try {
            import_checkpoint(t);
            FAIL("expected CheckpointError");
        } catch (const CheckpointError& e) {
            CHECK(std::string(e.what()).find("magic") != std::string::npos);
        }
    }

    SUBCASE("version mismatch") {
        std::vector<uint8_t> t = bytes;
        t[4] = '9';
        try {
            import_checkpoint(t);
            FAIL("expected CheckpointError");
        } catch (const CheckpointError& e) {
            CHECK(std::string(e.what()).find("version") != std::string::npos);
        }
    }

    SUBCASE("trailing garbage") {
        std::vector<uint8_t> t = bytes;
        t.push_back(0);
        CHECK_THROWS_AS(import_checkpoint(t), CheckpointError);
    }
}
