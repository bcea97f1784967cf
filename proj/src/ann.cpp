#include "snnconv/ann.hpp"

#include <cmath>
#include <fstream>

#include "wire.hpp"

namespace snnconv {

namespace {

void check_params(const QcfsParams& p) {
    if (!(p.lambda > 0.0f)) throw ArgumentError("qcfs: lambda must be positive");
    if (p.levels < 1) throw ArgumentError("qcfs: levels must be >= 1");
}

// Quantization index k = clip(floor(z*L/lambda + shift), 0, L), computed in
// double so the result is a single rounding of lambda*k/L.
int64_t qcfs_index(double z, double lambda, int64_t levels, double shift) {
    double u = z * double(levels) / lambda + shift;
    double f = std::floor(u);
    if (f <= 0.0) return 0;
    if (f >= double(levels)) return levels;
    return int64_t(f);
}

Tensor add_row_bias(Tensor z, const Tensor& bias) {
    const int64_t n = z.rows(), h = z.cols();
    if (bias.size() != h) {
        throw DimensionError("bias size " + bias.shape_str() + " does not match layer width " +
                             std::to_string(h));
    }
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < h; ++j) z.at(i, j) += bias[j];
    return z;
}

Tensor colsum(const Tensor& t) {
    Tensor out({t.cols()});
    for (int64_t i = 0; i < t.rows(); ++i)
        for (int64_t j = 0; j < t.cols(); ++j) out[j] += t.at(i, j);
    return out;
}

Tensor slice_rows(const Tensor& t, const std::vector<int64_t>& idx, int64_t begin, int64_t count) {
    std::vector<float> data(static_cast<size_t>(count * t.cols()));
    for (int64_t i = 0; i < count; ++i) {
        int64_t src = idx[size_t(begin + i)];
        for (int64_t j = 0; j < t.cols(); ++j) data[size_t(i * t.cols() + j)] = t.at(src, j);
    }
    return Tensor({count, t.cols()}, std::move(data));
}

void sgd_step(Tensor& param, const Tensor& grad, float lr) {
    for (int64_t i = 0; i < param.size(); ++i) param[i] -= lr * grad[i];
}

}  // namespace

Tensor qcfs_forward(const Tensor& z, const QcfsParams& p) {
    check_params(p);
    const double lambda = double(p.lambda);
    const int64_t levels = p.levels;
    std::vector<float> out(z.data().size());
    for (size_t i = 0; i < out.size(); ++i) {
        int64_t k = qcfs_index(double(z.data()[i]), lambda, levels, double(p.shift));
        out[i] = float(lambda * double(k) / double(levels));
    }
    return Tensor(z.shape(), std::move(out));
}

QcfsGrad qcfs_backward(const Tensor& z, const QcfsParams& p, const Tensor& upstream) {
    check_params(p);
    if (!z.same_shape(upstream)) {
        throw DimensionError("qcfs_backward: shape mismatch " + z.shape_str() + " vs " +
                             upstream.shape_str());
    }
    const double lambda = double(p.lambda);
    const int64_t levels = p.levels;
    std::vector<float> dz(z.data().size());
    double dlambda = 0.0;
    for (size_t i = 0; i < dz.size(); ++i) {
        double zi = double(z.data()[i]);
        double up = double(upstream.data()[i]);
        double u = zi * double(levels) / lambda + double(p.shift);
        bool gate = u > 0.0 && u <= double(levels);
        int64_t k = qcfs_index(zi, lambda, levels, double(p.shift));
        double c = double(k) / double(levels);
        dz[i] = gate ? upstream.data()[i] : 0.0f;
        dlambda += up * (c - (gate ? zi / lambda : 0.0));
    }
    return QcfsGrad{Tensor(z.shape(), std::move(dz)), dlambda};
}

ForwardTrace ann_forward(const AnnNetwork& net, const Tensor& x) {
    if (x.rank() != 2 || x.cols() != net.input_dim()) {
        throw DimensionError("ann_forward: input " + x.shape_str() + " does not match network input dim " +
                             std::to_string(net.input_dim()));
    }
    ForwardTrace trace;
    Tensor a = x;
    for (size_t l = 0; l < net.hidden.size(); ++l) {
        Tensor z = add_row_bias(matmul(a, transpose(net.hidden[l].weights)), net.hidden[l].bias);
        trace.preacts.push_back(z);
        a = qcfs_forward(z, net.activations[l]);
        trace.acts.push_back(a);
    }
    trace.logits = add_row_bias(matmul(a, transpose(net.output.weights)), net.output.bias);
    return trace;
}

AnnNetwork make_network(int64_t input_dim, const std::vector<int>& hidden_sizes,
                        int64_t output_dim, int levels, Rng& rng) {
    if (input_dim < 1 || output_dim < 1) throw ArgumentError("make_network: bad dimensions");
    AnnNetwork net;
    int64_t in = input_dim;
    for (int h : hidden_sizes) {
        if (h < 1) throw ArgumentError("make_network: hidden sizes must be positive");
        float limit = std::sqrt(6.0f / float(in + h));
        net.hidden.push_back(DenseLayer{rand_uniform(rng, {h, in}, -limit, limit), Tensor({h})});
        net.activations.push_back(QcfsParams{4.0f, levels, 0.5f});
        in = h;
    }
    float limit = std::sqrt(6.0f / float(in + output_dim));
    net.output = DenseLayer{rand_uniform(rng, {output_dim, in}, -limit, limit), Tensor({output_dim})};
    return net;
}

TrainLog train(AnnNetwork& net, const Dataset& data, const TrainHyper& hyper) {
    const int64_t n = data.size();
    if (n == 0) throw TrainError("empty dataset");
    if (data.num_classes != net.output_dim()) {
        throw TrainError("dataset has " + std::to_string(data.num_classes) +
                         " classes but network emits " + std::to_string(net.output_dim()));
    }
    for (int label : data.labels) {
        if (label < 0 || label >= data.num_classes) throw TrainError("label out of range");
    }
    if (hyper.batch < 1) throw ArgumentError("train: batch must be >= 1");
    if (hyper.epochs < 0) throw ArgumentError("train: epochs must be >= 0");

    // Separate stream from the init rng so reseeding the shuffle does not
    // replay weight initialization.
    Rng rng(hyper.seed ^ 0xD1B54A32D192ED03ULL);
    const float lr = float(hyper.lr);
    const size_t n_hidden = net.hidden.size();

    std::vector<int64_t> idx(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) idx[size_t(i)] = i;

    auto run_minibatch = [&](int64_t begin, int64_t bs) {
        Tensor x = slice_rows(data.inputs, idx, begin, bs);
        ForwardTrace trace = ann_forward(net, x);

        // Softmax cross-entropy, log-sum-exp stabilized in double.
        double batch_loss = 0.0;
        Tensor dlogits({bs, net.output_dim()});
        for (int64_t i = 0; i < bs; ++i) {
            int label = data.labels[size_t(idx[size_t(begin + i)])];
            double mx = trace.logits.at(i, 0);
            for (int64_t c = 1; c < net.output_dim(); ++c)
                mx = std::max(mx, double(trace.logits.at(i, c)));
            double sum = 0.0;
            for (int64_t c = 0; c < net.output_dim(); ++c)
                sum += std::exp(double(trace.logits.at(i, c)) - mx);
            batch_loss += std::log(sum) - (double(trace.logits.at(i, label)) - mx);
            for (int64_t c = 0; c < net.output_dim(); ++c) {
                double p = std::exp(double(trace.logits.at(i, c)) - mx) / sum;
                dlogits.at(i, c) = float((p - (c == label ? 1.0 : 0.0)) / double(bs));
            }
        }

        const Tensor& a_last = n_hidden ? trace.acts.back() : x;
        Tensor dw_out = matmul(transpose(dlogits), a_last);
        Tensor db_out = colsum(dlogits);
        Tensor da = matmul(dlogits, net.output.weights);

        std::vector<Tensor> dw(n_hidden), db(n_hidden);
        std::vector<double> dlambda(n_hidden, 0.0);
        for (size_t l = n_hidden; l-- > 0;) {
            QcfsGrad g = qcfs_backward(trace.preacts[l], net.activations[l], da);
            dlambda[l] = g.dlambda;
            const Tensor& a_prev = l == 0 ? x : trace.acts[l - 1];
            dw[l] = matmul(transpose(g.dz), a_prev);
            db[l] = colsum(g.dz);
            da = matmul(g.dz, net.hidden[l].weights);
        }

        sgd_step(net.output.weights, dw_out, lr);
        sgd_step(net.output.bias, db_out, lr);
        for (size_t l = 0; l < n_hidden; ++l) {
            sgd_step(net.hidden[l].weights, dw[l], lr);
            sgd_step(net.hidden[l].bias, db[l], lr);
            float next = net.activations[l].lambda - lr * float(dlambda[l]);
            net.activations[l].lambda = std::max(next, 1e-4f);
        }
        return batch_loss;
    };

    TrainLog log;
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        for (int64_t i = n - 1; i > 0; --i) std::swap(idx[size_t(i)], idx[rng.below(uint64_t(i + 1))]);

        double epoch_loss = 0.0;
        try {
            for (int64_t begin = 0; begin < n; begin += hyper.batch) {
                epoch_loss += run_minibatch(begin, std::min<int64_t>(hyper.batch, n - begin));
            }
        } catch (const Error& e) {
            // numeric blowup inside tensor ops (overflow to inf, NaN grads)
            throw TrainError("non-finite values at epoch " + std::to_string(epoch) + ": " +
                             e.what());
        }
        epoch_loss /= double(n);
        if (!std::isfinite(epoch_loss)) {
            throw TrainError("non-finite loss at epoch " + std::to_string(epoch));
        }
        log.epoch_loss.push_back(epoch_loss);
    }
    return log;
}

double accuracy(const AnnNetwork& net, const Dataset& data) {
    if (data.size() == 0) throw ArgumentError("accuracy: empty dataset");
    ForwardTrace trace = ann_forward(net, data.inputs);
    int64_t correct = 0;
    for (int64_t i = 0; i < data.size(); ++i) {
        if (argmax(row(trace.logits, i)) == data.labels[size_t(i)]) ++correct;
    }
    return double(correct) / double(data.size());
}

namespace {

constexpr char kMagic[] = "SNNC";
constexpr char kVersion = '1';
constexpr uint8_t kKindAnn = 'A';
constexpr uint32_t kMaxDim = 1u << 24;

void write_layer(wire::Writer& w, const DenseLayer& layer) {
    w.u32(uint32_t(layer.weights.rows()));
    w.u32(uint32_t(layer.weights.cols()));
    for (float v : layer.weights.data()) w.f32(v);
    for (float v : layer.bias.data()) w.f32(v);
}

DenseLayer read_layer(wire::Reader& r) {
    uint32_t out = r.u32();
    uint32_t in = r.u32();
    if (out == 0 || in == 0 || out > kMaxDim || in > kMaxDim) {
        throw CheckpointError("implausible layer dimensions in checkpoint");
    }
    std::vector<float> w(size_t(out) * in);
    for (auto& v : w) v = r.f32();
    std::vector<float> b(out);
    for (auto& v : b) v = r.f32();
    return DenseLayer{Tensor({int64_t(out), int64_t(in)}, std::move(w)),
                      Tensor({int64_t(out)}, std::move(b))};
}

}  // namespace

std::vector<uint8_t> export_checkpoint(const AnnNetwork& net) {
    if (net.hidden.size() != net.activations.size()) {
        throw ArgumentError("export_checkpoint: malformed network");
    }
    wire::Writer w;
    w.str(kMagic);
    w.u8(uint8_t(kVersion));
    w.u8(kKindAnn);
    w.u32(net.hidden.empty() ? 1u : uint32_t(net.activations.front().levels));
    w.u32(uint32_t(net.hidden.size()));
    for (size_t l = 0; l < net.hidden.size(); ++l) {
        w.f32(net.activations[l].lambda);
        write_layer(w, net.hidden[l]);
    }
    write_layer(w, net.output);
    return std::move(w.bytes);
}

AnnNetwork import_checkpoint(const std::vector<uint8_t>& bytes) {
    wire::Reader r{bytes.data(), bytes.size()};
    if (r.str(4) != kMagic) throw CheckpointError("bad magic: not a checkpoint file");
    char version = char(r.u8());
    if (version != kVersion) {
        throw CheckpointError(std::string("unsupported checkpoint version '") + version + "'");
    }
    uint8_t kind = r.u8();
    if (kind != kKindAnn) throw CheckpointError("not an ANN checkpoint");
    uint32_t levels = r.u32();
    if (levels < 1 || levels > kMaxDim) throw CheckpointError("implausible quantization level count");
    uint32_t n_hidden = r.u32();
    if (n_hidden > 4096) throw CheckpointError("implausible layer count");

    AnnNetwork net;
    for (uint32_t l = 0; l < n_hidden; ++l) {
        float lambda = r.f32();
        if (!(lambda > 0.0f) || !std::isfinite(lambda)) {
            throw CheckpointError("non-positive lambda in checkpoint layer " + std::to_string(l));
        }
        net.activations.push_back(QcfsParams{lambda, int(levels), 0.5f});
        net.hidden.push_back(read_layer(r));
    }
    net.output = read_layer(r);
    if (!r.exhausted()) throw CheckpointError("trailing bytes after checkpoint payload");

    for (size_t l = 1; l < net.hidden.size(); ++l) {
        if (net.hidden[l].weights.cols() != net.hidden[l - 1].weights.rows()) {
            throw CheckpointError("layer dimensions do not chain");
        }
    }
    if (!net.hidden.empty() && net.output.weights.cols() != net.hidden.back().weights.rows()) {
        throw CheckpointError("layer dimensions do not chain");
    }
    return net;
}

void save_ann_checkpoint(const AnnNetwork& net, const std::string& path) {
    std::vector<uint8_t> bytes = export_checkpoint(net);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

AnnNetwork load_ann_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    return import_checkpoint(bytes);
}

}  // namespace snnconv
