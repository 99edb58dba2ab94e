#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "pktclass/features.hpp"
#include "pktclass/models.hpp"
#include "pktclass/packetize.hpp"

namespace pktclass {

enum class FoldProtocol { PaperSubsample, StratifiedKfold };

std::string to_string(FoldProtocol p);
FoldProtocol fold_protocol_from_string(const std::string& s);

struct FoldPlan {
    FoldProtocol protocol = FoldProtocol::StratifiedKfold;
    int folds = 10;
    // PaperSubsample draws per fold and per class:
    int train_per_class = 3000;
    int test_per_class = 700;
    uint64_t seed = 0;
};

struct FoldSplit {
    std::vector<size_t> train;  // dataset indices
    std::vector<size_t> test;
};

// Deterministic per (dataset contents, plan): samples are canonically
// ordered by origin before any seeded draw, so input row order is
// irrelevant. StratifiedKfold partitions the dataset with per-fold class
// imbalance <= 1; PaperSubsample draws disjoint train/test sets per fold,
// independently across folds.
std::vector<FoldSplit> make_folds(const Dataset& dataset, const FoldPlan& plan);

struct ConfusionCounts {
    int64_t tp = 0;  // compressed predicted compressed
    int64_t fp = 0;  // encrypted predicted compressed
    int64_t tn = 0;
    int64_t fn = 0;

    int64_t total() const { return tp + fp + tn + fn; }
};

struct FoldMetrics {
    double accuracy = 0.0;
    ConfusionCounts confusion;
    double encrypted_misrate = 0.0;   // encrypted classified compressed
    double compressed_misrate = 0.0;  // compressed classified encrypted
};

struct Metrics {
    std::vector<FoldMetrics> folds;
    ConfusionCounts total;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;
    double accuracy = 0.0;  // pooled over all folds
};

FoldMetrics score_predictions(const std::vector<uint8_t>& truth,
                              const std::vector<uint8_t>& predicted);

// Trainer: train split + fold seed -> per-sample predictor.
using PredictorFn = std::function<Prediction(const Sample&)>;
using TrainerFn = std::function<PredictorFn(const Dataset& train, uint64_t fold_seed)>;

// Runs the protocol with an arbitrary trainer (tests inject oracles here).
Metrics evaluate_with(const TrainerFn& trainer, const Dataset& dataset, const FoldPlan& plan);

// Trains a fresh model of the given kind per fold and aggregates.
Metrics evaluate(ModelKind kind, const Dataset& dataset, const FoldPlan& plan,
                 const TrainConfig& config, int knn_k = 9);

// Plain-text summary + per-fold CSV; the summary carries the Fig.-3-style
// entropy section when stats are supplied.
void write_report(const Metrics& metrics, const EntropyStats* entropy,
                  const std::string& header, const std::filesystem::path& text_path,
                  const std::filesystem::path& folds_csv_path);

}  // namespace pktclass
