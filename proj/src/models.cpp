#include "pktclass/models.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "pktclass/rng.hpp"

namespace pktclass {

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::Knn: return "knn";
        case ModelKind::Mlp: return "mlp";
        case ModelKind::Cnn: return "cnn";
    }
    return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "knn") return ModelKind::Knn;
    if (s == "mlp") return ModelKind::Mlp;
    if (s == "cnn") return ModelKind::Cnn;
    throw std::invalid_argument("unknown model kind '" + s + "' (expected knn|mlp|cnn)");
}

Prediction knn_predict(const KnnModel& model, const FeatureVector& query) {
    const size_t n = model.table.size();
    if (n == 0) throw std::invalid_argument("knn_predict: empty training set");
    if (model.k <= 0 || static_cast<size_t>(model.k) > n)
        throw std::invalid_argument("knn_predict: k=" + std::to_string(model.k) +
                                    " outside [1, " + std::to_string(n) + "]");

    std::vector<std::pair<double, size_t>> dist(n);
    for (size_t i = 0; i < n; ++i) {
        double d2 = 0.0;
        for (size_t j = 0; j < 4; ++j) {
            const double d = model.table[i].chi[j] - query.chi[j];
            d2 += d * d;
        }
        dist[i] = {std::sqrt(d2), i};
    }
    const size_t k = static_cast<size_t>(model.k);
    std::partial_sort(dist.begin(), dist.begin() + static_cast<ptrdiff_t>(k), dist.end());

    // An exact feature match decides the vote by itself.
    for (size_t i = 0; i < k; ++i) {
        if (dist[i].first == 0.0) {
            const int label = model.table[dist[i].second].label;
            return {static_cast<uint8_t>(label), label == 1 ? 1.0 : 0.0};
        }
    }

    double total = 0.0;
    double compressed = 0.0;
    for (size_t i = 0; i < k; ++i) {
        const double w =
            model.weighting == KnnWeighting::InverseDistance ? 1.0 / dist[i].first : 1.0;
        total += w;
        if (model.table[dist[i].second].label == 1) compressed += w;
    }
    const double score = compressed / total;
    return {static_cast<uint8_t>(score > 0.5 ? 1 : 0), score};
}

KnnModel train_knn(const Dataset& dataset, int k, KnnWeighting weighting) {
    KnnModel model;
    model.k = k;
    model.weighting = weighting;
    model.table.reserve(dataset.samples.size());
    for (const Sample& s : dataset.samples) model.table.push_back(quadrant_features(s));
    if (model.table.empty()) throw std::invalid_argument("train_knn: empty dataset");
    if (k <= 0 || static_cast<size_t>(k) > model.table.size())
        throw std::invalid_argument("train_knn: k=" + std::to_string(k) +
                                    " exceeds training set size " +
                                    std::to_string(model.table.size()));
    return model;
}

Network make_mlp_network() {
    return Network({static_cast<int>(kFixedPacketSize)},
                   {LayerSpec::dense(256), LayerSpec::relu(), LayerSpec::dense(128),
                    LayerSpec::relu(), LayerSpec::dense(128), LayerSpec::relu(),
                    LayerSpec::dense(1), LayerSpec::sigmoid()});
}

Network make_cnn_network() {
    return Network({1, static_cast<int>(kFixedPacketSize)},
                   {LayerSpec::conv1d(64, 16), LayerSpec::relu(), LayerSpec::maxpool1d(2),
                    LayerSpec::conv1d(32, 16), LayerSpec::relu(), LayerSpec::maxpool1d(2),
                    LayerSpec::flatten(), LayerSpec::dense(1), LayerSpec::sigmoid()});
}

namespace {

// Bytes scaled to [0,1]; rank matches the network input.
Tensor sample_to_input(std::span<const uint8_t> payload, const std::vector<int>& input_shape) {
    Tensor t(input_shape);
    double* p = t.data();
    for (size_t i = 0; i < payload.size(); ++i) p[i] = static_cast<double>(payload[i]) / 255.0;
    return t;
}

// Per-sample gradients are computed in a fixed number of index groups and
// reduced in group order, so the result is bit-identical regardless of how
// many threads actually run.
constexpr int kGradientGroups = 8;

struct GroupResult {
    std::vector<Tensor> grads;
    double loss_sum = 0.0;
    int correct = 0;
};

NetModel train_network(ModelKind kind, const Dataset& dataset, TrainConfig config,
                       int default_epochs, int default_batch) {
    if (dataset.samples.empty()) throw std::invalid_argument("train: empty dataset");
    for (const Sample& s : dataset.samples)
        if (s.payload.size() != kFixedPacketSize)
            throw std::invalid_argument("train: dataset must be fixed1024; found a sample of " +
                                        std::to_string(s.payload.size()) + " bytes");

    NetModel model;
    model.kind = kind;
    model.net = kind == ModelKind::Mlp ? make_mlp_network() : make_cnn_network();
    model.net.init_params(derive_seed(config.seed, "net-init"));

    const int epochs = config.epochs >= 0 ? config.epochs : default_epochs;
    const int batch = config.batch_size >= 1 ? config.batch_size : default_batch;
    OptimizerState opt = config.optimizer == OptimizerKind::Adam
                             ? OptimizerState::adam(config.learning_rate)
                             : OptimizerState::sgd(config.learning_rate);

    const size_t n = dataset.samples.size();
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const int workers = static_cast<int>(std::min<unsigned>(hw, kGradientGroups));

    std::vector<GroupResult> groups(kGradientGroups);
    for (auto& g : groups) g.grads = model.net.zero_grads();
    std::vector<Workspace> workspaces(kGradientGroups);
    std::vector<Tensor> batch_grads = model.net.zero_grads();

    for (int epoch = 0; epoch < epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(config.seed, "epoch-shuffle", static_cast<uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        int64_t epoch_correct = 0;

        for (size_t start = 0; start < n; start += static_cast<size_t>(batch)) {
            const size_t count = std::min(static_cast<size_t>(batch), n - start);

            auto run_group = [&](int g) {
                GroupResult& res = groups[static_cast<size_t>(g)];
                for (Tensor& t : res.grads) t.fill(0.0);
                res.loss_sum = 0.0;
                res.correct = 0;
                Workspace& ws = workspaces[static_cast<size_t>(g)];
                for (size_t b = static_cast<size_t>(g); b < count; b += kGradientGroups) {
                    const Sample& s = dataset.samples[order[start + b]];
                    const Tensor input = sample_to_input(s.payload, model.net.input_shape());
                    const Tensor& out = model.net.forward(input, ws);
                    const double p = out[0];
                    res.loss_sum += bce_loss(p, s.label);
                    if ((p > 0.5 ? 1 : 0) == s.label) ++res.correct;
                    Tensor dout(out.shape());
                    dout[0] = bce_dloss(p, s.label);
                    model.net.backward(dout, ws, res.grads);
                }
            };

            if (workers > 1 && count > 1) {
                std::vector<std::thread> pool;
                pool.reserve(static_cast<size_t>(workers));
                for (int w = 0; w < workers; ++w)
                    pool.emplace_back([&, w] {
                        for (int g = w; g < kGradientGroups; g += workers) run_group(g);
                    });
                for (auto& t : pool) t.join();
            } else {
                for (int g = 0; g < kGradientGroups; ++g) run_group(g);
            }

            // Deterministic reduce in group order, then mean over the batch.
            for (Tensor& t : batch_grads) t.fill(0.0);
            for (const GroupResult& res : groups) {
                for (size_t p = 0; p < batch_grads.size(); ++p) {
                    double* acc = batch_grads[p].data();
                    const double* src = res.grads[p].data();
                    for (int64_t i = 0; i < batch_grads[p].size(); ++i) acc[i] += src[i];
                }
                epoch_loss += res.loss_sum;
                epoch_correct += res.correct;
            }
            const double inv = 1.0 / static_cast<double>(count);
            for (Tensor& t : batch_grads) {
                double* p = t.data();
                for (int64_t i = 0; i < t.size(); ++i) p[i] *= inv;
            }
            optimizer_step(opt, model.net.params(), batch_grads);
        }

        EpochStats stats;
        stats.loss = epoch_loss / static_cast<double>(n);
        stats.accuracy = static_cast<double>(epoch_correct) / static_cast<double>(n);

        if (config.stop_at_full_train_accuracy) {
            // Post-epoch full pass with the updated weights.
            Workspace ws;
            int64_t correct = 0;
            for (const Sample& s : dataset.samples) {
                const Tensor input = sample_to_input(s.payload, model.net.input_shape());
                const double p = model.net.forward(input, ws)[0];
                if ((p > 0.5 ? 1 : 0) == s.label) ++correct;
            }
            stats.accuracy = static_cast<double>(correct) / static_cast<double>(n);
            model.log.push_back(stats);
            if (correct == static_cast<int64_t>(n)) break;
        } else {
            model.log.push_back(stats);
        }
    }
    return model;
}

}  // namespace

NetModel train_mlp(const Dataset& dataset, TrainConfig config) {
    return train_network(ModelKind::Mlp, dataset, config, kMlpDefaultEpochs, kMlpDefaultBatch);
}

NetModel train_cnn(const Dataset& dataset, TrainConfig config) {
    return train_network(ModelKind::Cnn, dataset, config, kCnnDefaultEpochs, kCnnDefaultBatch);
}

Prediction net_predict(const NetModel& model, std::span<const uint8_t> payload, Workspace& ws) {
    if (payload.size() != kFixedPacketSize)
        throw std::invalid_argument("predict: " + to_string(model.kind) + " expects " +
                                    std::to_string(kFixedPacketSize) + "-byte payloads, got " +
                                    std::to_string(payload.size()));
    const Tensor input = sample_to_input(payload, model.net.input_shape());
    const double score = model.net.forward(input, ws)[0];
    return {static_cast<uint8_t>(score > 0.5 ? 1 : 0), score};
}

Prediction predict(const ModelArtifact& model, std::span<const uint8_t> payload) {
    Workspace ws;
    return predict(model, payload, ws);
}

Prediction predict(const ModelArtifact& model, std::span<const uint8_t> payload, Workspace& ws) {
    if (model.kind == ModelKind::Knn) {
        return knn_predict(model.knn, quadrant_features(payload));
    }
    return net_predict(model.net, payload, ws);
}

// ---------------------------------------------------------------------------
// Artifact serialization. Little-endian, versioned "PANN" header; see README.
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'P', 'A', 'N', 'N'};
constexpr uint32_t kFormatVersion = 1;

class Writer {
public:
    explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("save_model: cannot open " + path.string());
    }
    void bytes(const void* p, size_t n) { out_.write(static_cast<const char*>(p),
                                                     static_cast<std::streamsize>(n)); }
    void u8(uint8_t v) { bytes(&v, 1); }
    void u32(uint32_t v) {
        uint8_t b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<uint8_t>(v >> (8 * i));
        bytes(b, 4);
    }
    void u64(uint64_t v) {
        uint8_t b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<uint8_t>(v >> (8 * i));
        bytes(b, 8);
    }
    void f64(double v) { u64(std::bit_cast<uint64_t>(v)); }
    bool good() const { return static_cast<bool>(out_); }

private:
    std::ofstream out_;
};

class Reader {
public:
    explicit Reader(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw std::runtime_error("load_model: cannot open " + path.string());
        data_.assign((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    }
    void bytes(void* p, size_t n) {
        if (offset_ + n > data_.size())
            throw std::runtime_error("load_model: truncated file at offset " +
                                     std::to_string(offset_));
        std::memcpy(p, data_.data() + offset_, n);
        offset_ += n;
    }
    uint8_t u8() {
        uint8_t v;
        bytes(&v, 1);
        return v;
    }
    uint32_t u32() {
        uint8_t b[4];
        bytes(b, 4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
        return v;
    }
    uint64_t u64() {
        uint8_t b[8];
        bytes(b, 8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    size_t offset() const { return offset_; }

private:
    std::vector<uint8_t> data_;
    size_t offset_ = 0;
};

void write_tensor(Writer& w, const Tensor& t) {
    w.u8(static_cast<uint8_t>(t.rank()));
    for (int d : t.shape()) w.u32(static_cast<uint32_t>(d));
    for (int64_t i = 0; i < t.size(); ++i) w.f64(t[i]);
}

Tensor read_tensor(Reader& r) {
    const int rank = r.u8();
    if (rank < 1 || rank > 3)
        throw std::runtime_error("load_model: bad tensor rank at offset " +
                                 std::to_string(r.offset()));
    std::vector<int> shape(static_cast<size_t>(rank));
    for (int i = 0; i < rank; ++i) {
        shape[static_cast<size_t>(i)] = static_cast<int>(r.u32());
        if (shape[static_cast<size_t>(i)] <= 0 || shape[static_cast<size_t>(i)] > (1 << 24))
            throw std::runtime_error("load_model: bad tensor dimension at offset " +
                                     std::to_string(r.offset()));
    }
    Tensor t(shape);
    for (int64_t i = 0; i < t.size(); ++i) t[i] = r.f64();
    return t;
}

}  // namespace

void save_model(const ModelArtifact& model, const std::filesystem::path& path) {
    Writer w(path);
    w.bytes(kMagic, 4);
    w.u32(kFormatVersion);
    w.u8(static_cast<uint8_t>(model.kind));
    w.u64(model.training_seed);
    w.bytes(model.dataset_manifest_hash.data(), 32);

    if (model.kind == ModelKind::Knn) {
        w.u32(static_cast<uint32_t>(model.knn.k));
        w.u8(static_cast<uint8_t>(model.knn.weighting));
        w.u64(model.knn.table.size());
        for (const FeatureVector& fv : model.knn.table) {
            for (double c : fv.chi) w.f64(c);
            w.u8(static_cast<uint8_t>(fv.label == 1 ? 1 : 0));
        }
    } else {
        const Network& net = model.net.net;
        w.u8(static_cast<uint8_t>(net.input_shape().size()));
        for (int d : net.input_shape()) w.u32(static_cast<uint32_t>(d));
        w.u32(static_cast<uint32_t>(net.layers().size()));
        for (const LayerSpec& l : net.layers()) {
            w.u8(static_cast<uint8_t>(l.kind));
            w.u32(static_cast<uint32_t>(l.units));
            w.u32(static_cast<uint32_t>(l.filters));
            w.u32(static_cast<uint32_t>(l.kernel_size));
            w.u32(static_cast<uint32_t>(l.pool_size));
        }
        w.u32(static_cast<uint32_t>(net.params().size()));
        for (const Tensor& t : net.params()) write_tensor(w, t);
    }
    if (!w.good()) throw std::runtime_error("save_model: write failed for " + path.string());
}

ModelArtifact load_model(const std::filesystem::path& path) {
    Reader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("load_model: bad magic (not a model file)");
    const uint32_t version = r.u32();
    if (version != kFormatVersion)
        throw std::runtime_error("load_model: unsupported format version " +
                                 std::to_string(version));

    ModelArtifact model;
    const uint8_t kind = r.u8();
    if (kind > 2) throw std::runtime_error("load_model: bad model kind tag");
    model.kind = static_cast<ModelKind>(kind);
    model.training_seed = r.u64();
    r.bytes(model.dataset_manifest_hash.data(), 32);

    if (model.kind == ModelKind::Knn) {
        model.knn.k = static_cast<int>(r.u32());
        const uint8_t weighting = r.u8();
        if (weighting > 1) throw std::runtime_error("load_model: bad kNN weighting tag");
        model.knn.weighting = static_cast<KnnWeighting>(weighting);
        const uint64_t rows = r.u64();
        model.knn.table.reserve(rows);
        for (uint64_t i = 0; i < rows; ++i) {
            FeatureVector fv;
            for (double& c : fv.chi) c = r.f64();
            fv.label = r.u8() ? 1 : 0;
            model.knn.table.push_back(fv);
        }
    } else {
        const int input_rank = r.u8();
        if (input_rank < 1 || input_rank > 2)
            throw std::runtime_error("load_model: bad input rank");
        std::vector<int> input_shape(static_cast<size_t>(input_rank));
        for (int& d : input_shape) d = static_cast<int>(r.u32());
        const uint32_t layer_count = r.u32();
        std::vector<LayerSpec> specs;
        specs.reserve(layer_count);
        for (uint32_t i = 0; i < layer_count; ++i) {
            LayerSpec l;
            const uint8_t k = r.u8();
            if (k > static_cast<uint8_t>(LayerKind::Flatten))
                throw std::runtime_error("load_model: bad layer kind tag at offset " +
                                         std::to_string(r.offset()));
            l.kind = static_cast<LayerKind>(k);
            l.units = static_cast<int>(r.u32());
            l.filters = static_cast<int>(r.u32());
            l.kernel_size = static_cast<int>(r.u32());
            l.pool_size = static_cast<int>(r.u32());
            specs.push_back(l);
        }
        model.net.kind = model.kind;
        model.net.net = Network(input_shape, specs);
        const uint32_t param_count = r.u32();
        if (param_count != model.net.net.params().size())
            throw std::runtime_error("load_model: parameter count mismatch");
        for (uint32_t i = 0; i < param_count; ++i) {
            Tensor t = read_tensor(r);
            if (!t.same_shape(model.net.net.params()[i]))
                throw std::runtime_error("load_model: parameter shape mismatch at index " +
                                         std::to_string(i));
            model.net.net.params()[i] = std::move(t);
        }
    }
    return model;
}

}  // namespace pktclass
