#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pktclass/features.hpp"
#include "pktclass/network.hpp"
#include "pktclass/optim.hpp"
#include "pktclass/packetize.hpp"

namespace pktclass {

enum class ModelKind : uint8_t { Knn = 0, Mlp = 1, Cnn = 2 };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

struct Prediction {
    uint8_t label = 0;
    double score = 0.0;  // compressed-class share / sigmoid output
};

enum class KnnWeighting : uint8_t { InverseDistance = 0, Uniform = 1 };

struct KnnModel {
    int k = 9;
    KnnWeighting weighting = KnnWeighting::InverseDistance;
    std::vector<FeatureVector> table;  // labeled training features
};

// Distance-weighted vote among the k nearest neighbours in the 4-dim
// chi-square space. Ties in distance resolve by training index; an exact
// match (d = 0) wins outright; score 0.5 maps to label 0.
Prediction knn_predict(const KnnModel& model, const FeatureVector& query);

KnnModel train_knn(const Dataset& dataset, int k = 9,
                   KnnWeighting weighting = KnnWeighting::InverseDistance);

// The two fixed architectures: input length 1024, bytes scaled by 1/255.
Network make_mlp_network();
Network make_cnn_network();

struct EpochStats {
    double loss = 0.0;
    double accuracy = 0.0;
};

struct TrainConfig {
    int epochs = -1;      // < 0 = architecture default; 0 = return untrained
    int batch_size = -1;  // < 1 = architecture default
    OptimizerKind optimizer = OptimizerKind::Adam;
    double learning_rate = 1e-3;
    uint64_t seed = 0;
    // When set, training evaluates full train accuracy after each epoch and
    // stops once it reaches 100%.
    bool stop_at_full_train_accuracy = false;
};

constexpr int kMlpDefaultEpochs = 60;
constexpr int kMlpDefaultBatch = 5;
constexpr int kCnnDefaultEpochs = 80;
constexpr int kCnnDefaultBatch = 50;

struct NetModel {
    ModelKind kind = ModelKind::Mlp;
    Network net;
    std::vector<EpochStats> log;
};

NetModel train_mlp(const Dataset& dataset, TrainConfig config);
NetModel train_cnn(const Dataset& dataset, TrainConfig config);

// Forward pass on a frozen network; payload must be exactly 1024 bytes.
Prediction net_predict(const NetModel& model, std::span<const uint8_t> payload, Workspace& ws);

// Serialized trained model: kind tag, hyperparameters, weights or the kNN
// feature table, training seed, dataset manifest hash.
struct ModelArtifact {
    ModelKind kind = ModelKind::Knn;
    KnnModel knn;        // kind == Knn
    NetModel net;        // kind != Knn
    uint64_t training_seed = 0;
    Digest256 dataset_manifest_hash{};
};

// Shared inference entry point. Networks need exactly 1024 payload bytes;
// kNN accepts any payload of at least 4 bytes.
Prediction predict(const ModelArtifact& model, std::span<const uint8_t> payload);
Prediction predict(const ModelArtifact& model, std::span<const uint8_t> payload, Workspace& ws);

void save_model(const ModelArtifact& model, const std::filesystem::path& path);
ModelArtifact load_model(const std::filesystem::path& path);

}  // namespace pktclass
