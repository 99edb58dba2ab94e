#include "pktclass/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "pktclass/rng.hpp"

namespace pktclass {

std::string to_string(FoldProtocol p) {
    return p == FoldProtocol::PaperSubsample ? "paper" : "stratified";
}

FoldProtocol fold_protocol_from_string(const std::string& s) {
    if (s == "paper" || s == "paper_subsample") return FoldProtocol::PaperSubsample;
    if (s == "stratified" || s == "stratified_kfold") return FoldProtocol::StratifiedKfold;
    throw std::invalid_argument("unknown protocol '" + s + "' (expected paper|stratified)");
}

namespace {

// Indices of each class in canonical (origin hash, chunk) order, so fold
// membership does not depend on dataset row order.
std::array<std::vector<size_t>, 2> canonical_class_indices(const Dataset& dataset) {
    std::vector<size_t> order(dataset.samples.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        const Sample& sa = dataset.samples[a];
        const Sample& sb = dataset.samples[b];
        const int c = std::memcmp(sa.origin_hash.data(), sb.origin_hash.data(), 32);
        if (c != 0) return c < 0;
        return sa.chunk_index < sb.chunk_index;
    });
    std::array<std::vector<size_t>, 2> by_class;
    for (size_t i : order) by_class[dataset.samples[i].label == 1 ? 1 : 0].push_back(i);
    return by_class;
}

}  // namespace

std::vector<FoldSplit> make_folds(const Dataset& dataset, const FoldPlan& plan) {
    if (plan.folds < 2) throw std::invalid_argument("make_folds: need at least 2 folds");
    auto by_class = canonical_class_indices(dataset);

    std::vector<FoldSplit> splits(static_cast<size_t>(plan.folds));

    if (plan.protocol == FoldProtocol::StratifiedKfold) {
        const size_t folds = static_cast<size_t>(plan.folds);
        if (dataset.samples.size() < folds)
            throw std::invalid_argument("make_folds: " + std::to_string(dataset.samples.size()) +
                                        " samples cannot fill " + std::to_string(folds) +
                                        " folds");
        for (int cls = 0; cls < 2; ++cls) {
            auto& indices = by_class[static_cast<size_t>(cls)];
            Rng rng(derive_seed(plan.seed, cls == 1 ? "stratified-c" : "stratified-e"));
            rng.shuffle(indices);
            for (size_t i = 0; i < indices.size(); ++i)
                splits[i % folds].test.push_back(indices[i]);
        }
        for (size_t f = 0; f < folds; ++f) {
            std::sort(splits[f].test.begin(), splits[f].test.end());
            for (size_t g = 0; g < folds; ++g) {
                if (g == f) continue;
                splits[f].train.insert(splits[f].train.end(), splits[g].test.begin(),
                                       splits[g].test.end());
            }
            std::sort(splits[f].train.begin(), splits[f].train.end());
        }
        return splits;
    }

    // PaperSubsample: per fold, 3000+3000 train and 700+700 test per class,
    // disjoint within the fold; draws are independent across folds.
    const size_t need =
        static_cast<size_t>(plan.train_per_class) + static_cast<size_t>(plan.test_per_class);
    if (by_class[0].size() < need || by_class[1].size() < need)
        throw std::invalid_argument(
            "make_folds: paper protocol requires " + std::to_string(need) +
            " samples per class (" + std::to_string(plan.train_per_class) + " train + " +
            std::to_string(plan.test_per_class) + " test), have " +
            std::to_string(by_class[1].size()) + " compressed / " +
            std::to_string(by_class[0].size()) + " encrypted");

    for (int f = 0; f < plan.folds; ++f) {
        FoldSplit& split = splits[static_cast<size_t>(f)];
        Rng rng(derive_seed(plan.seed, "paper-fold", static_cast<uint64_t>(f)));
        for (int cls = 0; cls < 2; ++cls) {
            // Partial Fisher-Yates: first `need` positions of a seeded
            // permutation of the class.
            std::vector<size_t> pool = by_class[static_cast<size_t>(cls)];
            for (size_t i = 0; i < need; ++i) {
                const size_t j = i + static_cast<size_t>(rng.below(pool.size() - i));
                std::swap(pool[i], pool[j]);
            }
            for (size_t i = 0; i < static_cast<size_t>(plan.train_per_class); ++i)
                split.train.push_back(pool[i]);
            for (size_t i = 0; i < static_cast<size_t>(plan.test_per_class); ++i)
                split.test.push_back(pool[static_cast<size_t>(plan.train_per_class) + i]);
        }
        std::sort(split.train.begin(), split.train.end());
        std::sort(split.test.begin(), split.test.end());
    }
    return splits;
}

FoldMetrics score_predictions(const std::vector<uint8_t>& truth,
                              const std::vector<uint8_t>& predicted) {
    if (truth.size() != predicted.size())
        throw std::invalid_argument("score_predictions: size mismatch");
    FoldMetrics m;
    for (size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == 1)
            predicted[i] == 1 ? ++m.confusion.tp : ++m.confusion.fn;
        else
            predicted[i] == 1 ? ++m.confusion.fp : ++m.confusion.tn;
    }
    const int64_t total = m.confusion.total();
    m.accuracy = total > 0 ? static_cast<double>(m.confusion.tp + m.confusion.tn) /
                                 static_cast<double>(total)
                           : 0.0;
    const int64_t enc = m.confusion.fp + m.confusion.tn;
    const int64_t comp = m.confusion.tp + m.confusion.fn;
    m.encrypted_misrate = enc > 0 ? static_cast<double>(m.confusion.fp) /
                                        static_cast<double>(enc)
                                  : 0.0;
    m.compressed_misrate = comp > 0 ? static_cast<double>(m.confusion.fn) /
                                          static_cast<double>(comp)
                                    : 0.0;
    return m;
}

Metrics evaluate_with(const TrainerFn& trainer, const Dataset& dataset, const FoldPlan& plan) {
    const auto splits = make_folds(dataset, plan);
    Metrics metrics;

    for (size_t f = 0; f < splits.size(); ++f) {
        Dataset train;
        train.mode = dataset.mode;
        train.seed = dataset.seed;
        train.samples.reserve(splits[f].train.size());
        for (size_t i : splits[f].train) train.samples.push_back(dataset.samples[i]);

        PredictorFn predictor;
        try {
            predictor = trainer(train, derive_seed(plan.seed, "fold-train", f));
        } catch (const std::exception& e) {
            throw std::runtime_error("fold " + std::to_string(f) + ": " + e.what());
        }

        std::vector<uint8_t> truth, predicted;
        truth.reserve(splits[f].test.size());
        predicted.reserve(splits[f].test.size());
        for (size_t i : splits[f].test) {
            truth.push_back(dataset.samples[i].label);
            predicted.push_back(predictor(dataset.samples[i]).label);
        }
        FoldMetrics fm = score_predictions(truth, predicted);
        metrics.total.tp += fm.confusion.tp;
        metrics.total.fp += fm.confusion.fp;
        metrics.total.tn += fm.confusion.tn;
        metrics.total.fn += fm.confusion.fn;
        metrics.folds.push_back(std::move(fm));
    }

    double sum = 0.0;
    for (const FoldMetrics& fm : metrics.folds) sum += fm.accuracy;
    metrics.mean_accuracy = sum / static_cast<double>(metrics.folds.size());
    double ss = 0.0;
    for (const FoldMetrics& fm : metrics.folds) {
        const double d = fm.accuracy - metrics.mean_accuracy;
        ss += d * d;
    }
    metrics.std_accuracy = metrics.folds.size() > 1
                               ? std::sqrt(ss / static_cast<double>(metrics.folds.size() - 1))
                               : 0.0;
    metrics.accuracy = metrics.total.total() > 0
                           ? static_cast<double>(metrics.total.tp + metrics.total.tn) /
                                 static_cast<double>(metrics.total.total())
                           : 0.0;
    return metrics;
}

Metrics evaluate(ModelKind kind, const Dataset& dataset, const FoldPlan& plan,
                 const TrainConfig& config, int knn_k) {
    TrainerFn trainer;
    if (kind == ModelKind::Knn) {
        trainer = [knn_k](const Dataset& train, uint64_t) -> PredictorFn {
            auto model = std::make_shared<KnnModel>(train_knn(train, knn_k));
            return [model](const Sample& s) { return knn_predict(*model, quadrant_features(s)); };
        };
    } else {
        trainer = [kind, config](const Dataset& train, uint64_t fold_seed) -> PredictorFn {
            TrainConfig fold_config = config;
            fold_config.seed = fold_seed;
            auto model = std::make_shared<NetModel>(kind == ModelKind::Mlp
                                                        ? train_mlp(train, fold_config)
                                                        : train_cnn(train, fold_config));
            auto ws = std::make_shared<Workspace>();
            return [model, ws](const Sample& s) { return net_predict(*model, s.payload, *ws); };
        };
    }
    return evaluate_with(trainer, dataset, plan);
}

void write_report(const Metrics& metrics, const EntropyStats* entropy,
                  const std::string& header, const std::filesystem::path& text_path,
                  const std::filesystem::path& folds_csv_path) {
    char buf[256];
    {
        std::ofstream out(text_path, std::ios::binary);
        if (!out) throw std::runtime_error("write_report: cannot open " + text_path.string());
        out << header << '\n';
        std::snprintf(buf, sizeof(buf), "accuracy: %.1f%% (pooled over %zu folds)\n",
                      metrics.accuracy * 100.0, metrics.folds.size());
        out << buf;
        std::snprintf(buf, sizeof(buf), "per-fold accuracy: %.4f +/- %.4f\n",
                      metrics.mean_accuracy, metrics.std_accuracy);
        out << buf;
        std::snprintf(buf, sizeof(buf),
                      "confusion (positive = compressed): TP=%lld FP=%lld TN=%lld FN=%lld\n",
                      static_cast<long long>(metrics.total.tp),
                      static_cast<long long>(metrics.total.fp),
                      static_cast<long long>(metrics.total.tn),
                      static_cast<long long>(metrics.total.fn));
        out << buf;
        const int64_t enc = metrics.total.fp + metrics.total.tn;
        const int64_t comp = metrics.total.tp + metrics.total.fn;
        std::snprintf(buf, sizeof(buf),
                      "misclassified encrypted->compressed: %.1f%%\n"
                      "misclassified compressed->encrypted: %.1f%%\n",
                      enc > 0 ? 100.0 * static_cast<double>(metrics.total.fp) /
                                    static_cast<double>(enc)
                              : 0.0,
                      comp > 0 ? 100.0 * static_cast<double>(metrics.total.fn) /
                                     static_cast<double>(comp)
                               : 0.0);
        out << buf;
        if (entropy) {
            out << "\nentropy study (per-packet Shannon entropy, bits)\n";
            std::snprintf(buf, sizeof(buf),
                          "  compressed: mean %.4f std %.4f (n=%zu)\n"
                          "  encrypted:  mean %.4f std %.4f (n=%zu)\n",
                          entropy->mean_compressed, entropy->std_compressed,
                          entropy->n_compressed, entropy->mean_encrypted,
                          entropy->std_encrypted, entropy->n_encrypted);
            out << buf;
            std::snprintf(buf, sizeof(buf),
                          "  compressed/encrypted mean ratio: %.4f\n"
                          "  |mean gap| / pooled std: %.4f\n",
                          entropy->mean_ratio, entropy->gap_over_pooled_std);
            out << buf;
        }
        if (!out) throw std::runtime_error("write_report: write failed");
    }
    {
        std::ofstream out(folds_csv_path, std::ios::binary);
        if (!out)
            throw std::runtime_error("write_report: cannot open " + folds_csv_path.string());
        out << "fold,accuracy,tp,fp,tn,fn,encrypted_misrate,compressed_misrate\n";
        for (size_t f = 0; f < metrics.folds.size(); ++f) {
            const FoldMetrics& fm = metrics.folds[f];
            std::snprintf(buf, sizeof(buf), "%zu,%.6f,%lld,%lld,%lld,%lld,%.6f,%.6f\n", f,
                          fm.accuracy, static_cast<long long>(fm.confusion.tp),
                          static_cast<long long>(fm.confusion.fp),
                          static_cast<long long>(fm.confusion.tn),
                          static_cast<long long>(fm.confusion.fn), fm.encrypted_misrate,
                          fm.compressed_misrate);
            out << buf;
        }
        if (!out) throw std::runtime_error("write_report: write failed");
    }
}

}  // namespace pktclass
