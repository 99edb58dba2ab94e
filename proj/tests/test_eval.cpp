#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "pktclass/eval.hpp"
#include "pktclass/rng.hpp"

using namespace pktclass;
namespace fs = std::filesystem;

namespace {

Dataset make_dataset(size_t n_compressed, size_t n_encrypted, uint64_t seed = 1,
                     size_t len = 16) {
    Dataset ds;
    ds.mode = PacketMode::Variable;
    Rng rng(seed);
    for (size_t i = 0; i < n_compressed + n_encrypted; ++i) {
        Sample s;
        s.payload.resize(len);
        rng.fill_bytes(s.payload);
        s.label = i < n_compressed ? 1 : 0;
        rng.fill_bytes(s.origin_hash);
        s.chunk_index = 0;
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

TrainerFn oracle_trainer() {
    return [](const Dataset&, uint64_t) -> PredictorFn {
        return [](const Sample& s) -> Prediction {
            return {s.label, s.label == 1 ? 1.0 : 0.0};
        };
    };
}

TrainerFn constant_trainer(uint8_t label) {
    return [label](const Dataset&, uint64_t) -> PredictorFn {
        return [label](const Sample&) -> Prediction {
            return {label, label == 1 ? 1.0 : 0.0};
        };
    };
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("stratified folds partition the dataset with imbalance <= 1") {
    const Dataset ds = make_dataset(50, 50);
    FoldPlan plan;
    plan.protocol = FoldProtocol::StratifiedKfold;
    plan.folds = 10;
    plan.seed = 4;
    const auto folds = make_folds(ds, plan);
    REQUIRE(folds.size() == 10);

    std::set<size_t> seen;
    for (const auto& f : folds) {
        CHECK(f.test.size() == 10);
        CHECK(f.train.size() == 90);
        size_t c = 0;
        for (size_t i : f.test) {
            CHECK(seen.insert(i).second);  // pairwise disjoint
            if (ds.samples[i].label == 1) ++c;
        }
        CHECK(std::abs(static_cast<long>(c) - static_cast<long>(f.test.size() - c)) <= 1);
        // train = complement of test
        std::set<size_t> test_set(f.test.begin(), f.test.end());
        for (size_t i : f.train) CHECK(test_set.count(i) == 0);
    }
    CHECK(seen.size() == ds.samples.size());  // union = dataset
}

TEST_CASE("stratified membership is invariant under dataset row shuffling") {
    Dataset ds = make_dataset(40, 40, 9);
    FoldPlan plan;
    plan.protocol = FoldProtocol::StratifiedKfold;
    plan.folds = 5;
    plan.seed = 12;
    const auto before = make_folds(ds, plan);

    // Shuffle rows, track positions by origin hash.
    Dataset shuffled = ds;
    shuffle_samples(shuffled, 333);
    const auto after = make_folds(shuffled, plan);

    auto fold_origins = [](const Dataset& d, const std::vector<FoldSplit>& folds) {
        std::vector<std::set<std::string>> out;
        for (const auto& f : folds) {
            std::set<std::string> origins;
            for (size_t i : f.test)
                origins.insert(std::string(d.samples[i].origin_hash.begin(),
                                           d.samples[i].origin_hash.end()));
            out.push_back(std::move(origins));
        }
        return out;
    };
    CHECK(fold_origins(ds, before) == fold_origins(shuffled, after));
}

TEST_CASE("paper protocol sizes and disjointness") {
    const Dataset ds = make_dataset(4000, 4000, 2, 8);
    FoldPlan plan;
    plan.protocol = FoldProtocol::PaperSubsample;
    plan.folds = 10;
    plan.seed = 3;
    const auto folds = make_folds(ds, plan);
    REQUIRE(folds.size() == 10);
    for (const auto& f : folds) {
        CHECK(f.train.size() == 6000);
        CHECK(f.test.size() == 1400);
        std::set<size_t> train_set(f.train.begin(), f.train.end());
        CHECK(train_set.size() == 6000);
        for (size_t i : f.test) CHECK(train_set.count(i) == 0);
        size_t train_c = 0, test_c = 0;
        for (size_t i : f.train) train_c += ds.samples[i].label;
        for (size_t i : f.test) test_c += ds.samples[i].label;
        CHECK(train_c == 3000);
        CHECK(test_c == 700);
    }
}

TEST_CASE("paper protocol on an undersized dataset names the required counts") {
    const Dataset ds = make_dataset(25, 25, 5, 8);
    FoldPlan plan;
    plan.protocol = FoldProtocol::PaperSubsample;
    plan.seed = 1;
    CHECK_THROWS_WITH_AS(make_folds(ds, plan), doctest::Contains("3700"),
                         std::invalid_argument);
}

TEST_CASE("make_folds is deterministic per seed") {
    const Dataset ds = make_dataset(60, 60, 8);
    FoldPlan plan;
    plan.protocol = FoldProtocol::StratifiedKfold;
    plan.folds = 6;
    plan.seed = 77;
    const auto a = make_folds(ds, plan);
    const auto b = make_folds(ds, plan);
    for (size_t f = 0; f < a.size(); ++f) {
        CHECK(a[f].test == b[f].test);
        CHECK(a[f].train == b[f].train);
    }
    plan.seed = 78;
    const auto c = make_folds(ds, plan);
    bool differs = false;
    for (size_t f = 0; f < a.size() && !differs; ++f) differs = a[f].test != c[f].test;
    CHECK(differs);
}

TEST_CASE("oracle model scores accuracy 1.0 with a clean confusion matrix") {
    const Dataset ds = make_dataset(100, 100, 6);
    FoldPlan plan;
    plan.protocol = FoldProtocol::StratifiedKfold;
    plan.folds = 10;
    plan.seed = 5;
    const Metrics m = evaluate_with(oracle_trainer(), ds, plan);
    CHECK(m.accuracy == doctest::Approx(1.0));
    CHECK(m.mean_accuracy == doctest::Approx(1.0));
    CHECK(m.total.fp == 0);
    CHECK(m.total.fn == 0);
    CHECK(m.total.total() == 200);
}

TEST_CASE("constant model on balanced data sits at 0.5 with one class fully misclassified") {
    const Dataset ds = make_dataset(100, 100, 7);
    FoldPlan plan;
    plan.protocol = FoldProtocol::StratifiedKfold;
    plan.folds = 10;
    plan.seed = 5;
    const Metrics m = evaluate_with(constant_trainer(1), ds, plan);
    CHECK(m.accuracy == doctest::Approx(0.5));
    CHECK(m.total.tn == 0);
    CHECK(m.total.fn == 0);
    for (const auto& fm : m.folds) {
        CHECK(fm.encrypted_misrate == doctest::Approx(1.0));
        CHECK(fm.compressed_misrate == doctest::Approx(0.0));
    }
}

TEST_CASE("accuracy identity: accuracy = 1 - (FP+FN)/total") {
    const Dataset ds = make_dataset(64, 64, 11);
    FoldPlan plan;
    plan.protocol = FoldProtocol::StratifiedKfold;
    plan.folds = 4;
    plan.seed = 2;
    // Half-random predictor driven by payload parity.
    TrainerFn flaky = [](const Dataset&, uint64_t) -> PredictorFn {
        return [](const Sample& s) -> Prediction {
            const uint8_t label = s.payload[0] & 1;
            return {label, label == 1 ? 0.9 : 0.1};
        };
    };
    const Metrics m = evaluate_with(flaky, ds, plan);
    const double identity =
        1.0 - static_cast<double>(m.total.fp + m.total.fn) / static_cast<double>(m.total.total());
    CHECK(m.accuracy == doctest::Approx(identity).epsilon(1e-12));
}

TEST_CASE("training errors are annotated with the fold index") {
    const Dataset ds = make_dataset(30, 30, 12);
    FoldPlan plan;
    plan.protocol = FoldProtocol::StratifiedKfold;
    plan.folds = 3;
    plan.seed = 2;
    TrainerFn broken = [](const Dataset&, uint64_t) -> PredictorFn {
        throw std::runtime_error("synthetic failure");
    };
    CHECK_THROWS_WITH_AS(evaluate_with(broken, ds, plan), doctest::Contains("fold 0"),
                         std::runtime_error);
}

TEST_CASE("report renders percentages and fold rows") {
    const Dataset ds = make_dataset(50, 50, 13);
    FoldPlan plan;
    plan.protocol = FoldProtocol::StratifiedKfold;
    plan.folds = 5;
    plan.seed = 3;
    const Metrics m = evaluate_with(oracle_trainer(), ds, plan);

    const auto dir = fs::temp_directory_path();
    const auto text_path = dir / "pktclass_report.txt";
    const auto csv_path = dir / "pktclass_folds.csv";
    const EntropyStats entropy = entropy_study(ds);
    write_report(m, &entropy, "model=oracle seed=3", text_path, csv_path);

    std::ifstream t(text_path);
    std::string text((std::istreambuf_iterator<char>(t)), std::istreambuf_iterator<char>());
    CHECK(text.find("100.0%") != std::string::npos);
    CHECK(text.find("entropy study") != std::string::npos);

    std::ifstream c(csv_path);
    std::string line;
    size_t rows = 0;
    size_t checked = 0;
    while (std::getline(c, line)) {
        if (rows > 0) {
            // fold,accuracy,tp,fp,tn,fn,...: confusion cells sum to test size
            long tp, fp, tn, fn;
            double acc;
            size_t fold;
            REQUIRE(std::sscanf(line.c_str(), "%zu,%lf,%ld,%ld,%ld,%ld", &fold, &acc, &tp, &fp,
                                &tn, &fn) == 6);
            CHECK(tp + fp + tn + fn == 20);
            ++checked;
        }
        ++rows;
    }
    CHECK(rows == 6);  // header + 5 folds
    CHECK(checked == 5);
    fs::remove(text_path);
    fs::remove(csv_path);
}

}  // TEST_SUITE
