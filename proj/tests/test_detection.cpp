#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "vtwin/baselines.hpp"
#include "vtwin/clustering.hpp"
#include "vtwin/feature_selection.hpp"
#include "vtwin/metrics.hpp"
#include "vtwin/mlp.hpp"
#include "vtwin/pipeline.hpp"

using namespace vtwin;

namespace {

// Two Gaussian blobs in `dims` dimensions, planted labels attached.
FeatureTable blob_table(std::size_t n_benign, std::size_t n_attack, std::size_t dims,
                        double separation, std::uint64_t seed, double sigma = 0.5) {
    Rng rng(seed);
    FeatureTable t;
    for (std::size_t j = 0; j < dims; ++j) t.column_names.push_back("f" + std::to_string(j));
    std::vector<int> labels;
    for (std::size_t i = 0; i < n_benign + n_attack; ++i) {
        const bool attack = i >= n_benign;
        std::vector<double> row(dims);
        for (std::size_t j = 0; j < dims; ++j)
            row[j] = rng.normal(attack ? separation : 0.0, sigma);
        t.rows.push_back(std::move(row));
        labels.push_back(attack ? kAttack : kBenign);
    }
    t.labels = std::move(labels);
    return t;
}

// One decisive indicator column between two constant fillers.
FeatureTable indicator_table() {
    FeatureTable t;
    t.column_names = {"pad_low", "signal", "pad_high"};
    std::vector<int> labels;
    for (int i = 0; i < 20; ++i) {
        const int y = i % 2;
        t.rows.push_back({0.5, static_cast<double>(y), 0.25});
        labels.push_back(y);
    }
    t.labels = std::move(labels);
    return t;
}

} // namespace

// ---- per-column scoring ----

TEST_CASE("fisher and anova vanish when class means coincide") {
    FeatureTable t;
    t.column_names = {"x"};
    std::vector<int> labels;
    for (int i = 0; i < 12; ++i) {
        t.rows.push_back({static_cast<double>(1 + (i / 2) % 2)});
        labels.push_back(i % 2);
    }
    t.labels = labels;
    CHECK(fs_scores(t, FsMethod::fisher)[0] == 0.0);
    CHECK(fs_scores(t, FsMethod::anova)[0] == 0.0);
}

TEST_CASE("perfect separation outranks noise") {
    FeatureTable t;
    t.column_names = {"clean", "noisy"};
    Rng rng(5);
    std::vector<int> labels;
    for (int i = 0; i < 40; ++i) {
        const int y = i % 2;
        t.rows.push_back({static_cast<double>(y), rng.normal()});
        labels.push_back(y);
    }
    t.labels = labels;
    for (FsMethod m : {FsMethod::fisher, FsMethod::anova, FsMethod::chi2}) {
        const auto s = fs_scores(t, m);
        CHECK(s[0] > s[1]);
    }
}

TEST_CASE("chi-square is zero for a label-independent column") {
    FeatureTable t;
    t.column_names = {"x"};
    std::vector<int> labels;
    for (int v : {0, 1})
        for (int y : {0, 1})
            for (int rep = 0; rep < 5; ++rep) {
                t.rows.push_back({static_cast<double>(v)});
                labels.push_back(y);
            }
    t.labels = labels;
    CHECK(fs_scores(t, FsMethod::chi2)[0] == 0.0);
}

TEST_CASE("filter selections are invariant under column rescaling") {
    FeatureTable t = blob_table(30, 20, 4, 2.0, 17);
    FeatureTable scaled = t;
    for (auto& row : scaled.rows) {
        row[0] *= 1e-3;
        row[2] *= 1e3;
    }
    for (FsMethod m : {FsMethod::chi2, FsMethod::fisher, FsMethod::anova}) {
        CHECK(fs_score(t, m, 2).selected == fs_score(scaled, m, 2).selected);
    }
}

TEST_CASE("scoring is deterministic") {
    const FeatureTable t = blob_table(40, 20, 5, 1.5, 23);
    for (FsMethod m : kAllFsMethods) {
        const auto a = fs_scores(t, m, 11);
        const auto b = fs_scores(t, m, 11);
        CHECK(a == b);
    }
}

TEST_CASE("score ties select the lower column index") {
    FeatureTable t;
    t.column_names = {"a", "a_copy", "b"};
    Rng rng(31);
    std::vector<int> labels;
    for (int i = 0; i < 30; ++i) {
        const int y = i % 2;
        const double v = y + rng.normal(0.0, 0.1);
        t.rows.push_back({v, v, rng.normal()});
        labels.push_back(y);
    }
    t.labels = labels;
    for (FsMethod m : {FsMethod::chi2, FsMethod::fisher, FsMethod::anova}) {
        const FsResult r = fs_score(t, m, 1);
        CHECK(r.scores[0] == r.scores[1]);
        CHECK(r.selected == std::vector<std::size_t>{0});
        CHECK(fs_score(t, m, 2).selected == std::vector<std::size_t>{0, 1});
    }
}

TEST_CASE("every method finds the one informative column") {
    const FeatureTable t = indicator_table();
    for (FsMethod m : kAllFsMethods) {
        const FsResult r = fs_score(t, m, 1, 3);
        INFO("method " << fs_method_name(m));
        CHECK(r.selected == std::vector<std::size_t>{1});
    }
}

TEST_CASE("scoring input checks") {
    FeatureTable small = blob_table(4, 4, 2, 3.0, 1);
    CHECK_THROWS_AS(fs_scores(small, FsMethod::fisher), insufficient_data_error);

    FeatureTable single = blob_table(20, 20, 2, 3.0, 1);
    single.labels = std::vector<int>(40, kBenign);
    CHECK_THROWS_AS(fs_scores(single, FsMethod::fisher), single_class_error);

    FeatureTable unlabeled = blob_table(20, 20, 2, 3.0, 1);
    unlabeled.labels.reset();
    CHECK_THROWS_AS(fs_scores(unlabeled, FsMethod::fisher), invalid_parameter_error);

    FeatureTable ok = blob_table(20, 20, 2, 3.0, 1);
    CHECK_THROWS_AS(fs_score(ok, FsMethod::fisher, 0), invalid_parameter_error);
    CHECK_THROWS_AS(fs_score(ok, FsMethod::fisher, 3), invalid_parameter_error);
}

// ---- adaptive selector ----

TEST_CASE("default subset size") {
    CHECK(autofs_default_k(2) == 2);
    CHECK(autofs_default_k(3) == 3);
    CHECK(autofs_default_k(4) == 4);
    CHECK(autofs_default_k(7) == 4);
    CHECK(autofs_default_k(8) == 4);
    CHECK(autofs_default_k(9) == 5);
    CHECK(autofs_default_k(16) == 8);
}

TEST_CASE("equal subsets fall back to the first method") {
    const FeatureTable t = indicator_table();
    const AutoFsReport rep = autofs_select(t, t, 1, 3);
    REQUIRE(rep.candidates.size() == 5);
    // every method proposes the same single column, so the probe scores tie
    for (const auto& c : rep.candidates) {
        CHECK(c.result.selected == std::vector<std::size_t>{1});
        CHECK(c.validation_f_measure == rep.best_f_measure);
    }
    CHECK(rep.chosen == FsMethod::rfe);
    CHECK(rep.selected == std::vector<std::size_t>{1});
}

TEST_CASE("selector rejects unusable inputs") {
    FeatureTable train = blob_table(30, 20, 3, 3.0, 7);
    FeatureTable val = blob_table(12, 8, 3, 3.0, 8);
    CHECK_NOTHROW(autofs_select(train, val, 2, 1));

    FeatureTable one_class = val;
    one_class.labels = std::vector<int>(val.n_rows(), kAttack);
    CHECK_THROWS_AS(autofs_select(train, one_class, 2, 1), single_class_error);
    CHECK_THROWS_AS(autofs_select(one_class, val, 2, 1), single_class_error);

    FeatureTable renamed = val;
    renamed.column_names[0] = "other";
    CHECK_THROWS_AS(autofs_select(train, renamed, 2, 1), dimension_mismatch_error);
    CHECK_THROWS_AS(autofs_select(train, val, 9, 1), invalid_parameter_error);
}

// ---- unsupervised labelling ----

TEST_CASE("minority cluster becomes the attack class") {
    const FeatureTable t = blob_table(90, 10, 3, 5.0, 13);
    const std::vector<int> labels = label_unsupervised(t, 2);
    std::size_t agree = 0;
    for (std::size_t i = 0; i < t.n_rows(); ++i)
        if (labels[i] == (*t.labels)[i]) ++agree;
    CHECK(agree >= 95);
}

TEST_CASE("equal clusters break the tie by arrival volume") {
    FeatureTable t;
    t.column_names = {"arrival_count", "w"};
    Rng rng(41);
    for (int i = 0; i < 10; ++i) t.rows.push_back({10.0 + rng.normal(0.0, 0.1), rng.normal()});
    for (int i = 0; i < 10; ++i) t.rows.push_back({2.0 + rng.normal(0.0, 0.1), rng.normal()});
    const std::vector<int> labels = label_unsupervised(t, 4);
    for (std::size_t i = 0; i < 10; ++i) CHECK(labels[i] == kAttack);
    for (std::size_t i = 10; i < 20; ++i) CHECK(labels[i] == kBenign);
}

TEST_CASE("labelling needs enough rows and two real clusters") {
    FeatureTable tiny;
    tiny.column_names = {"x"};
    for (int i = 0; i < 5; ++i) tiny.rows.push_back({static_cast<double>(i)});
    CHECK_THROWS_AS(label_unsupervised(tiny, 1), insufficient_data_error);

    FeatureTable lone;
    lone.column_names = {"x", "y"};
    for (int i = 0; i < 11; ++i) lone.rows.push_back({1.0, 1.0});
    lone.rows.push_back({500.0, 500.0});
    CHECK_THROWS_AS(label_unsupervised(lone, 1), degenerate_cluster_error);
}

// ---- classifier ----

TEST_CASE("analytic gradients match finite differences") {
    const std::size_t dim = 5;
    MlpModel model(dim, {8, 6, 4}, 0.05, 12345);
    Rng rng(777);
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (int i = 0; i < 20; ++i) {
        std::vector<double> r(dim);
        for (auto& v : r) v = rng.normal();
        rows.push_back(std::move(r));
        labels.push_back(static_cast<int>(rng.uniform_int(0, 1)));
    }
    const auto [loss, grads] = mlp_loss_and_gradients(model, rows, labels);
    REQUIRE(std::isfinite(loss));

    const double h = 1e-5;
    double max_rel = 0.0;
    for (int probe = 0; probe < 100; ++probe) {
        const std::size_t layer = static_cast<std::size_t>(rng.uniform_int(0, 3));
        const bool is_bias = rng.uniform01() < 0.2;
        auto& params = is_bias ? model.biases()[layer] : model.weights()[layer];
        const std::size_t idx =
            static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(params.size()) - 1));
        const double a = is_bias ? grads.d_biases[layer][idx] : grads.d_weights[layer][idx];

        const double saved = params[idx];
        params[idx] = saved + h;
        const double up = mlp_batch_loss(model, rows, labels);
        params[idx] = saved - h;
        const double down = mlp_batch_loss(model, rows, labels);
        params[idx] = saved;

        const double numeric = (up - down) / (2.0 * h);
        const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
        max_rel = std::max(max_rel, rel);
    }
    CHECK(max_rel < 1e-4);
}

TEST_CASE("output layer is a proper distribution") {
    MlpModel model(4, {8, 6, 4}, 0.05, 99);
    Rng rng(55);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> row(4);
        for (auto& v : row) v = rng.normal(0.0, 3.0);
        const Prediction p = mlp_predict(model, row);
        CHECK(p.prob_benign + p.prob_attack == Catch::Approx(1.0).margin(1e-9));
        CHECK(p.prob_benign >= 0.0);
        CHECK(p.prob_attack >= 0.0);
    }
}

TEST_CASE("an all-zero network is maximally unsure") {
    MlpModel model(3, {4, 4, 4}, 0.1, 1);
    for (auto& layer : model.weights()) std::fill(layer.begin(), layer.end(), 0.0);
    for (auto& layer : model.biases()) std::fill(layer.begin(), layer.end(), 0.0);
    const Prediction p = mlp_predict(model, std::vector<double>{1.0, -2.0, 3.0});
    CHECK(p.prob_benign == 0.5);
    CHECK(p.prob_attack == 0.5);
    CHECK(p.label == kBenign);
}

TEST_CASE("training separates well-separated classes") {
    const FeatureTable t = blob_table(60, 40, 2, 6.0, 21);
    MlpModel model(2, {16, 8, 4}, 0.05, 9);
    mlp_fit(model, t, 100, 9);
    const DetectionReport rep = evaluate(mlp_predict_all(model, t), *t.labels);
    CHECK(rep.f_measure >= 0.99);
}

TEST_CASE("a zero learning rate freezes the weights") {
    const FeatureTable t = blob_table(30, 20, 2, 2.0, 3);
    MlpModel model(2, {8, 6, 4}, 0.0, 77);
    const MlpModel before = model;
    mlp_fit(model, t, 5, 77);
    CHECK(model == before);
}

TEST_CASE("training input checks") {
    MlpModel model(2, {4, 4, 4}, 0.05, 1);
    FeatureTable unlabeled = blob_table(10, 10, 2, 2.0, 1);
    unlabeled.labels.reset();
    CHECK_THROWS_AS(mlp_fit(model, unlabeled, 1, 1), invalid_parameter_error);
    CHECK_THROWS_AS(MlpModel(0, {4, 4, 4}, 0.05, 1), invalid_parameter_error);
    CHECK_THROWS_AS(MlpModel(2, {4, 4, 4}, -0.1, 1), invalid_parameter_error);
    CHECK_THROWS_AS(mlp_predict(model, std::vector<double>{1.0, 2.0, 3.0}),
                    dimension_mismatch_error);
}

TEST_CASE("weight files round-trip") {
    const FeatureTable t = blob_table(30, 20, 3, 3.0, 8);
    MlpModel model(3, {8, 6, 4}, 0.05, 1234);
    mlp_fit(model, t, 10, 1234);
    std::stringstream ss;
    save_mlp(model, ss);
    const MlpModel back = load_mlp(ss);
    CHECK(back == model);

    std::stringstream junk("not-a-model 7\n");
    CHECK_THROWS_AS(load_mlp(junk), schema_error);
    std::stringstream wrong_version("vtwin-mlp 2\n");
    CHECK_THROWS_AS(load_mlp(wrong_version), schema_error);
}

// ---- reference baselines ----

TEST_CASE("nearest neighbour basics") {
    FeatureTable train;
    train.column_names = {"x"};
    train.rows = {{0.0}, {0.1}, {10.0}};
    train.labels = std::vector<int>{kBenign, kBenign, kAttack};

    CHECK(knn_predict(train, std::vector<double>{0.05}, 3) == kBenign);
    CHECK(knn_predict(train, std::vector<double>{9.0}, 1) == kAttack);
    // each training row is its own nearest neighbour
    for (std::size_t i = 0; i < train.n_rows(); ++i)
        CHECK(knn_predict(train, train.rows[i], 1) == (*train.labels)[i]);
}

TEST_CASE("equidistant neighbours resolve to the earlier row") {
    FeatureTable train;
    train.column_names = {"x"};
    train.rows = {{0.0}, {1.0}};
    train.labels = std::vector<int>{kBenign, kAttack};
    CHECK(knn_predict(train, std::vector<double>{0.5}, 1) == kBenign);
}

TEST_CASE("nearest neighbour input checks") {
    FeatureTable train = blob_table(10, 10, 2, 3.0, 2);
    const std::vector<double> q{0.0, 0.0};
    CHECK_THROWS_AS(knn_predict(train, q, 2), invalid_parameter_error);
    CHECK_THROWS_AS(knn_predict(train, q, 0), invalid_parameter_error);
    CHECK_THROWS_AS(knn_predict(train, q, 21), invalid_parameter_error);
    CHECK_THROWS_AS(knn_predict(train, std::vector<double>{1.0}, 1), dimension_mismatch_error);
    FeatureTable empty;
    empty.column_names = {"x", "y"};
    CHECK_THROWS_AS(knn_predict(empty, q, 1), empty_input_error);
    FeatureTable unlabeled = train;
    unlabeled.labels.reset();
    CHECK_THROWS_AS(knn_predict(unlabeled, q, 1), invalid_parameter_error);
}

TEST_CASE("baselines solve the blob benchmark") {
    const FeatureTable train = blob_table(120, 80, 3, 4.0, 6);
    const FeatureTable test = blob_table(60, 40, 3, 4.0, 60);
    const DetectionReport knn = evaluate(knn_predict_all(train, test, 5), *test.labels);
    CHECK(knn.f_measure >= 0.95);
    const SvmModel svm = svm_train(train);
    const DetectionReport sv = evaluate(svm_predict_all(svm, test), *test.labels);
    CHECK(sv.f_measure >= 0.95);
}

TEST_CASE("linear separability gives a perfect margin fit") {
    const FeatureTable t = blob_table(50, 50, 2, 8.0, 14);
    const SvmModel model = svm_train(t);
    CHECK(evaluate(svm_predict_all(model, t), *t.labels).f_measure == 1.0);
}

TEST_CASE("heavy regularization crushes the weights") {
    const FeatureTable t = blob_table(50, 50, 2, 4.0, 15);
    const SvmModel model = svm_train(t, 200, 1e6);
    for (double w : model.weights) CHECK(std::abs(w) < 1e-2);
}

TEST_CASE("margin trainer input checks") {
    FeatureTable empty;
    empty.column_names = {"x"};
    CHECK_THROWS_AS(svm_train(empty), empty_input_error);
    FeatureTable single = blob_table(20, 10, 2, 3.0, 4);
    single.labels = std::vector<int>(30, kBenign);
    CHECK_THROWS_AS(svm_train(single), single_class_error);
    FeatureTable ok = blob_table(20, 10, 2, 3.0, 4);
    CHECK_THROWS_AS(svm_train(ok, 10, 0.0), invalid_parameter_error);
    ok.labels.reset();
    CHECK_THROWS_AS(svm_train(ok), invalid_parameter_error);
}

// ---- evaluation ----

TEST_CASE("confusion metrics satisfy their formulas on random draws") {
    Rng rng(314159);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, 100));
        std::vector<int> pred(n), truth(n);
        for (std::size_t i = 0; i < n; ++i) {
            pred[i] = static_cast<int>(rng.uniform_int(0, 1));
            truth[i] = static_cast<int>(rng.uniform_int(0, 1));
        }
        std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (truth[i] == 1 && pred[i] == 1) ++tp;
            if (truth[i] == 0 && pred[i] == 1) ++fp;
            if (truth[i] == 0 && pred[i] == 0) ++tn;
            if (truth[i] == 1 && pred[i] == 0) ++fn;
        }
        const DetectionReport r = evaluate(pred, truth);
        CHECK(r.tp == tp);
        CHECK(r.fp == fp);
        CHECK(r.tn == tn);
        CHECK(r.fn == fn);
        const double precision = tp + fp ? double(tp) / double(tp + fp) : 0.0;
        const double sensitivity = tp + fn ? double(tp) / double(tp + fn) : 0.0;
        const double f = precision + sensitivity > 0.0
                             ? 2.0 * precision * sensitivity / (precision + sensitivity)
                             : 0.0;
        CHECK(r.precision == precision);
        CHECK(r.sensitivity == sensitivity);
        CHECK(r.f_measure == f);
        CHECK(r.detection_rate == r.sensitivity);
    }
}

TEST_CASE("zero denominators report zero") {
    const DetectionReport r = evaluate(std::vector<int>{0, 0, 0}, std::vector<int>{0, 0, 0});
    CHECK(r.precision == 0.0);
    CHECK(r.sensitivity == 0.0);
    CHECK(r.f_measure == 0.0);
    CHECK(r.tn == 3);
}

TEST_CASE("balanced ninety percent confusion") {
    const DetectionReport r = DetectionReport::from_counts(90, 10, 90, 10);
    CHECK(r.precision == Catch::Approx(0.9).margin(1e-12));
    CHECK(r.sensitivity == Catch::Approx(0.9).margin(1e-12));
    CHECK(r.f_measure == Catch::Approx(0.9).margin(1e-12));
}

TEST_CASE("evaluation input checks") {
    CHECK_THROWS_AS(evaluate(std::vector<int>{}, std::vector<int>{}), empty_input_error);
    CHECK_THROWS_AS(evaluate(std::vector<int>{1}, std::vector<int>{1, 0}),
                    dimension_mismatch_error);
}

// ---- end-to-end pipeline ----

TEST_CASE("the pipeline learns labels it was never given") {
    FeatureTable t = blob_table(140, 60, 4, 5.0, 77);
    const std::vector<int> planted = *t.labels;
    t.labels.reset();

    PipelineConfig cfg;
    cfg.epochs = 40;
    const PsModel model = ps_train(t, 5, cfg);
    const std::vector<int> pred = ps_predict(model, t);
    const DetectionReport rep = evaluate(pred, planted);
    CHECK(rep.f_measure >= 0.95);
    CHECK(model.selected.size() == autofs_default_k(4));
    CHECK(model.input_columns == t.column_names);
}

TEST_CASE("ground-truth columns cannot leak into training") {
    for (const char* name : {"label", "label_hint", "attack"}) {
        FeatureTable t = blob_table(20, 20, 2, 3.0, 1);
        t.column_names[1] = name;
        t.labels.reset();
        CHECK_THROWS_AS(ps_train(t, 1), invalid_parameter_error);
    }
}

TEST_CASE("pipeline needs a minimum of data") {
    FeatureTable t = blob_table(4, 4, 2, 3.0, 1);
    t.labels.reset();
    CHECK_THROWS_AS(ps_train(t, 1), insufficient_data_error);
}

TEST_CASE("supervised mode uses the provided labels") {
    FeatureTable t = blob_table(60, 40, 3, 4.0, 19);
    PipelineConfig cfg;
    cfg.supervised_labels = true;
    cfg.epochs = 30;
    const PsModel model = ps_train(t, 7, cfg);
    CHECK(model.training_labels == *t.labels);
    FeatureTable missing = t;
    missing.labels.reset();
    CHECK_THROWS_AS(ps_train(missing, 7, cfg), invalid_parameter_error);
}

TEST_CASE("pipeline files round-trip") {
    FeatureTable t = blob_table(80, 40, 4, 4.0, 29);
    t.labels.reset();
    PipelineConfig cfg;
    cfg.epochs = 20;
    const PsModel model = ps_train(t, 11, cfg);

    std::stringstream ss;
    save_ps(model, ss);
    const PsModel back = load_ps(ss);
    CHECK(back.input_columns == model.input_columns);
    CHECK(back.selected == model.selected);
    CHECK(back.fs_method == model.fs_method);
    CHECK(back.scaler.mean == model.scaler.mean);
    CHECK(back.scaler.stdev == model.scaler.stdev);
    CHECK(back.classifier == model.classifier);
    CHECK(ps_predict(back, t) == ps_predict(model, t));

    std::stringstream junk("hello\n");
    CHECK_THROWS_AS(load_ps(junk), parse_error);
}

TEST_CASE("prediction rejects mismatched rows") {
    FeatureTable t = blob_table(30, 20, 3, 4.0, 2);
    t.labels.reset();
    const PsModel model = ps_train(t, 1);
    CHECK_THROWS_AS(ps_predict_row(model, std::vector<double>{1.0}), dimension_mismatch_error);
}
