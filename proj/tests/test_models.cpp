#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "pktclass/features.hpp"
#include "pktclass/models.hpp"
#include "pktclass/rng.hpp"

using namespace pktclass;
namespace fs = std::filesystem;

namespace {

// Independent kNN oracle: naive full sort of (distance, index), identical
// vote rule, accumulation in sorted order.
Prediction knn_oracle(const KnnModel& model, const FeatureVector& query) {
    std::vector<std::pair<double, size_t>> dist;
    for (size_t i = 0; i < model.table.size(); ++i) {
        double d2 = 0.0;
        for (size_t j = 0; j < 4; ++j) {
            const double d = model.table[i].chi[j] - query.chi[j];
            d2 += d * d;
        }
        dist.emplace_back(std::sqrt(d2), i);
    }
    std::sort(dist.begin(), dist.end());
    const size_t k = static_cast<size_t>(model.k);
    for (size_t i = 0; i < k; ++i)
        if (dist[i].first == 0.0) {
            const int label = model.table[dist[i].second].label;
            return {static_cast<uint8_t>(label), label == 1 ? 1.0 : 0.0};
        }
    double total = 0.0, compressed = 0.0;
    for (size_t i = 0; i < k; ++i) {
        const double w =
            model.weighting == KnnWeighting::InverseDistance ? 1.0 / dist[i].first : 1.0;
        total += w;
        if (model.table[dist[i].second].label == 1) compressed += w;
    }
    const double score = compressed / total;
    return {static_cast<uint8_t>(score > 0.5 ? 1 : 0), score};
}

FeatureVector fv(double a, double b, double c, double d, int label = -1) {
    FeatureVector v;
    v.chi = {a, b, c, d};
    v.label = label;
    return v;
}

// Toy separable set: near-constant payloads labeled 0, near-uniform-random
// payloads labeled 1.
Dataset make_toy_set(int per_class, uint64_t seed) {
    Dataset ds;
    ds.mode = PacketMode::Fixed1024;
    Rng rng(seed);
    for (int i = 0; i < per_class; ++i) {
        Sample s;
        s.payload.assign(1024, static_cast<uint8_t>(rng.below(256)));
        for (int j = 0; j < 8; ++j)
            s.payload[rng.below(1024)] = static_cast<uint8_t>(rng.below(256));
        s.label = 0;
        s.chunk_index = static_cast<uint32_t>(i);
        ds.samples.push_back(std::move(s));
    }
    for (int i = 0; i < per_class; ++i) {
        Sample s;
        s.payload.resize(1024);
        rng.fill_bytes(s.payload);
        s.label = 1;
        s.chunk_index = static_cast<uint32_t>(per_class + i);
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

Dataset flip_labels(const Dataset& ds) {
    Dataset out = ds;
    for (Sample& s : out.samples) s.label = s.label == 1 ? 0 : 1;
    return out;
}

}  // namespace

TEST_SUITE("models") {

TEST_CASE("knn basics: nearer neighbour wins, exact match wins outright") {
    KnnModel model;
    model.k = 1;
    model.table = {fv(0, 0, 0, 0, 0), fv(100, 100, 100, 100, 1)};
    const Prediction p = knn_predict(model, fv(1, 1, 1, 1));
    CHECK(p.label == 0);

    model.k = 2;
    const Prediction q = knn_predict(model, fv(100, 100, 100, 100));
    CHECK(q.label == 1);
    CHECK(q.score == 1.0);
}

TEST_CASE("knn rejects invalid k") {
    KnnModel model;
    model.k = 5;
    model.table = {fv(0, 0, 0, 0, 0), fv(1, 1, 1, 1, 1)};
    CHECK_THROWS_AS(knn_predict(model, fv(0, 0, 0, 1)), std::invalid_argument);
    model.table.clear();
    CHECK_THROWS_AS(knn_predict(model, fv(0, 0, 0, 1)), std::invalid_argument);
}

TEST_CASE("knn matches the brute-force oracle on random configurations") {
    Rng rng(2024);
    for (int config = 0; config < 20; ++config) {
        KnnModel model;
        model.weighting = config % 2 == 0 ? KnnWeighting::InverseDistance : KnnWeighting::Uniform;
        const int n = 20;
        for (int i = 0; i < n; ++i)
            model.table.push_back(fv(rng.uniform01() * 1000, rng.uniform01() * 1000,
                                     rng.uniform01() * 1000, rng.uniform01() * 1000,
                                     static_cast<int>(rng.below(2))));
        model.k = 5;
        for (int q = 0; q < 100; ++q) {
            FeatureVector query = fv(rng.uniform01() * 1000, rng.uniform01() * 1000,
                                     rng.uniform01() * 1000, rng.uniform01() * 1000);
            if (q % 10 == 0) query = model.table[rng.below(n)];  // exercise d = 0
            const Prediction got = knn_predict(model, query);
            const Prediction want = knn_oracle(model, query);
            CHECK(got.label == want.label);
            CHECK(got.score == want.score);
        }
    }
}

TEST_CASE("knn label is invariant under uniform feature scaling") {
    Rng rng(55);
    KnnModel model;
    for (int i = 0; i < 30; ++i)
        model.table.push_back(fv(rng.uniform01() * 500, rng.uniform01() * 500,
                                 rng.uniform01() * 500, rng.uniform01() * 500,
                                 static_cast<int>(rng.below(2))));
    model.k = 9;
    for (int q = 0; q < 50; ++q) {
        const FeatureVector query = fv(rng.uniform01() * 500, rng.uniform01() * 500,
                                       rng.uniform01() * 500, rng.uniform01() * 500);
        const Prediction base = knn_predict(model, query);
        for (double c : {0.25, 3.0, 1000.0}) {
            KnnModel scaled = model;
            for (auto& row : scaled.table)
                for (auto& x : row.chi) x *= c;
            FeatureVector sq = query;
            for (auto& x : sq.chi) x *= c;
            CHECK(knn_predict(scaled, sq).label == base.label);
        }
    }
}

TEST_CASE("knn tie at score 0.5 resolves to encrypted") {
    KnnModel model;
    model.weighting = KnnWeighting::Uniform;
    model.k = 2;
    model.table = {fv(0, 0, 0, 1, 0), fv(0, 0, 0, 3, 1)};
    const Prediction p = knn_predict(model, fv(0, 0, 0, 2));
    CHECK(p.score == doctest::Approx(0.5));
    CHECK(p.label == 0);
}

TEST_CASE("toy set is separable by an entropy threshold (oracle)") {
    const Dataset toy = make_toy_set(50, 31);
    double max_constant = 0.0, min_random = 8.0;
    for (const Sample& s : toy.samples) {
        const double h = shannon_entropy(s.payload);
        if (s.label == 0)
            max_constant = std::max(max_constant, h);
        else
            min_random = std::min(min_random, h);
    }
    CHECK(max_constant < min_random);  // a single threshold separates the classes
}

TEST_CASE("mlp reaches 100% training accuracy on the toy set within 50 epochs") {
    const Dataset toy = make_toy_set(50, 31);
    TrainConfig config;
    config.epochs = 50;
    config.batch_size = 5;
    config.seed = 7;
    config.stop_at_full_train_accuracy = true;
    const NetModel model = train_mlp(toy, config);
    REQUIRE_FALSE(model.log.empty());
    CHECK(model.log.back().accuracy == doctest::Approx(1.0));
    CHECK(model.log.size() <= 50);
}

TEST_CASE("cnn reaches 100% training accuracy on the toy set within 30 epochs") {
    const Dataset toy = make_toy_set(50, 32);
    TrainConfig config;
    config.epochs = 30;
    config.batch_size = 50;
    config.seed = 8;
    config.stop_at_full_train_accuracy = true;
    const NetModel model = train_cnn(toy, config);
    REQUIRE_FALSE(model.log.empty());
    CHECK(model.log.back().accuracy == doctest::Approx(1.0));
    CHECK(model.log.size() <= 30);
}

TEST_CASE("epoch 0 training returns the initialized model at chance level") {
    const Dataset toy = make_toy_set(50, 33);
    TrainConfig config;
    config.epochs = 0;
    config.batch_size = 5;
    config.seed = 9;
    const NetModel model = train_mlp(toy, config);
    CHECK(model.log.empty());
    Workspace ws;
    int correct = 0;
    for (const Sample& s : toy.samples)
        if (net_predict(model, s.payload, ws).label == s.label) ++correct;
    const double acc = static_cast<double>(correct) / static_cast<double>(toy.samples.size());
    CHECK(acc > 0.2);
    CHECK(acc < 0.8);
}

TEST_CASE("training is deterministic: identical seed, identical weights and loss log") {
    const Dataset toy = make_toy_set(20, 34);
    TrainConfig config;
    config.epochs = 3;
    config.batch_size = 5;
    config.seed = 77;
    const NetModel a = train_mlp(toy, config);
    const NetModel b = train_mlp(toy, config);
    REQUIRE(a.log.size() == b.log.size());
    for (size_t e = 0; e < a.log.size(); ++e) {
        CHECK(a.log[e].loss == b.log[e].loss);  // bit-identical trajectory
        CHECK(a.log[e].accuracy == b.log[e].accuracy);
    }
    for (size_t p = 0; p < a.net.params().size(); ++p)
        for (int64_t i = 0; i < a.net.params()[p].size(); ++i)
            CHECK(a.net.params()[p][i] == b.net.params()[p][i]);

    // Different seed diverges.
    config.seed = 78;
    const NetModel c = train_mlp(toy, config);
    bool differs = false;
    for (size_t p = 0; p < a.net.params().size() && !differs; ++p)
        for (int64_t i = 0; i < a.net.params()[p].size() && !differs; ++i)
            differs = a.net.params()[p][i] != c.net.params()[p][i];
    CHECK(differs);
}

TEST_CASE("class-flipped training yields label-flipped behavior on the toy set") {
    const Dataset toy = make_toy_set(30, 35);
    TrainConfig config;
    config.epochs = 50;
    config.batch_size = 5;
    config.seed = 10;
    config.stop_at_full_train_accuracy = true;
    const NetModel a = train_mlp(toy, config);
    const NetModel b = train_mlp(flip_labels(toy), config);
    Workspace ws;
    for (const Sample& s : toy.samples) {
        const Prediction pa = net_predict(a, s.payload, ws);
        const Prediction pb = net_predict(b, s.payload, ws);
        CHECK(pa.label == (pb.label == 1 ? 0 : 1));
    }
}

TEST_CASE("zero output layer gives score exactly 0.5") {
    NetModel model;
    model.kind = ModelKind::Mlp;
    model.net = make_mlp_network();
    model.net.init_params(3);
    // Zero the final dense layer (last two parameter tensors).
    model.net.params()[model.net.params().size() - 2].fill(0.0);
    model.net.params()[model.net.params().size() - 1].fill(0.0);
    Workspace ws;
    const std::vector<uint8_t> payload(1024, 123);
    CHECK(net_predict(model, payload, ws).score == 0.5);
}

TEST_CASE("predict validates payload length for networks") {
    ModelArtifact art;
    art.kind = ModelKind::Mlp;
    art.net.kind = ModelKind::Mlp;
    art.net.net = make_mlp_network();
    art.net.net.init_params(1);
    const std::vector<uint8_t> short_payload(100, 1);
    CHECK_THROWS_AS(predict(art, short_payload), std::invalid_argument);
}

TEST_CASE("knn artifact path equals quadrant_features composition and scores stay in [0,1]") {
    const Dataset toy = make_toy_set(25, 36);
    ModelArtifact art;
    art.kind = ModelKind::Knn;
    art.knn = train_knn(toy, 9);
    Rng rng(12);
    for (int i = 0; i < 50; ++i) {
        std::vector<uint8_t> payload(1024);
        rng.fill_bytes(payload);
        const Prediction direct = knn_predict(art.knn, quadrant_features(payload));
        const Prediction via = predict(art, payload);
        CHECK(direct.label == via.label);
        CHECK(direct.score == via.score);
        CHECK(via.score >= 0.0);
        CHECK(via.score <= 1.0);
    }
}

TEST_CASE("artifact round trip preserves predictions bit-exactly") {
    const auto dir = fs::temp_directory_path();
    const Dataset toy = make_toy_set(20, 37);
    Rng rng(13);

    {  // kNN
        ModelArtifact art;
        art.kind = ModelKind::Knn;
        art.knn = train_knn(toy, 5);
        art.training_seed = 99;
        art.dataset_manifest_hash.fill(0xab);
        const auto path = dir / "pktclass_knn.model";
        save_model(art, path);
        const ModelArtifact back = load_model(path);
        CHECK(back.kind == ModelKind::Knn);
        CHECK(back.training_seed == 99);
        CHECK(back.dataset_manifest_hash == art.dataset_manifest_hash);
        CHECK(back.knn.k == 5);
        for (int i = 0; i < 30; ++i) {
            std::vector<uint8_t> payload(64);
            rng.fill_bytes(payload);
            const Prediction a = predict(art, payload);
            const Prediction b = predict(back, payload);
            CHECK(a.label == b.label);
            CHECK(a.score == b.score);
        }
        fs::remove(path);
    }

    {  // MLP
        TrainConfig config;
        config.epochs = 2;
        config.batch_size = 5;
        config.seed = 3;
        ModelArtifact art;
        art.kind = ModelKind::Mlp;
        art.net = train_mlp(toy, config);
        const auto path = dir / "pktclass_mlp.model";
        save_model(art, path);
        const ModelArtifact back = load_model(path);
        Workspace ws1, ws2;
        for (int i = 0; i < 20; ++i) {
            std::vector<uint8_t> payload(1024);
            rng.fill_bytes(payload);
            const Prediction a = predict(art, payload, ws1);
            const Prediction b = predict(back, payload, ws2);
            CHECK(a.label == b.label);
            CHECK(a.score == b.score);
        }
        fs::remove(path);
    }
}

TEST_CASE("artifact loader rejects corruption") {
    const auto dir = fs::temp_directory_path();
    const Dataset toy = make_toy_set(10, 38);
    ModelArtifact art;
    art.kind = ModelKind::Knn;
    art.knn = train_knn(toy, 3);
    const auto path = dir / "pktclass_corrupt.model";
    save_model(art, path);

    // Wrong magic.
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.write("XXXX", 4);
    }
    CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("magic"), std::runtime_error);
    save_model(art, path);

    // Truncation sweep: every prefix must fail cleanly.
    std::ifstream in(path, std::ios::binary);
    std::vector<char> full((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    bool saw_offset_message = false;
    for (size_t cut : {size_t(0), size_t(3), size_t(4), size_t(8), size_t(9), size_t(20),
                       full.size() / 2, full.size() - 1}) {
        const auto trunc_path = dir / "pktclass_trunc.model";
        std::ofstream out(trunc_path, std::ios::binary);
        out.write(full.data(), static_cast<std::streamsize>(cut));
        out.close();
        try {
            load_model(trunc_path);
            CHECK_MESSAGE(false, "truncated file at ", cut, " bytes unexpectedly loaded");
        } catch (const std::runtime_error& e) {
            if (std::string(e.what()).find("offset") != std::string::npos)
                saw_offset_message = true;
        }
        fs::remove(trunc_path);
    }
    CHECK(saw_offset_message);
    fs::remove(path);
}

TEST_CASE("training rejects variable-length datasets") {
    Dataset bad;
    bad.mode = PacketMode::Variable;
    Sample s;
    s.payload.assign(700, 1);
    s.label = 0;
    bad.samples.push_back(s);
    s.label = 1;
    bad.samples.push_back(s);
    TrainConfig config;
    config.epochs = 1;
    CHECK_THROWS_AS(train_mlp(bad, config), std::invalid_argument);
}

}  // TEST_SUITE
