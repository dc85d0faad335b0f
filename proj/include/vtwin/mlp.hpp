#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "vtwin/csv.hpp"
#include "vtwin/errors.hpp"
#include "vtwin/features.hpp"
#include "vtwin/rng.hpp"

namespace vtwin {

/// Five-layer perceptron: input, three relu hidden layers, two-way softmax
/// output. Trained online with mini-batch SGD on cross-entropy so the
/// detector keeps adapting as traffic shifts.
class MlpModel {
  public:
    MlpModel() = default;

    MlpModel(std::size_t input_dim, std::array<std::size_t, 3> hidden, double learning_rate,
             std::uint64_t seed)
        : learning_rate_(learning_rate), seed_(seed) {
        if (input_dim == 0) throw invalid_parameter_error("mlp: input dimension must be positive");
        if (!(learning_rate >= 0.0))
            throw invalid_parameter_error("mlp: learning rate must be non-negative");
        sizes_ = {input_dim, hidden[0], hidden[1], hidden[2], 2};
        Rng rng(derive_seed(seed, 0x4d4c50));
        weights_.resize(kLayers);
        biases_.resize(kLayers);
        for (std::size_t l = 0; l < kLayers; ++l) {
            const std::size_t fan_in = sizes_[l], fan_out = sizes_[l + 1];
            weights_[l].assign(fan_in * fan_out, 0.0);
            // small positive offset so no rectifier starts exactly on its
            // kink (zero biases put units with all-dead inputs right there,
            // where the loss is one-sided)
            biases_[l].assign(fan_out, 0.01);
            const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
            for (auto& w : weights_[l]) w = rng.normal(0.0, scale);
        }
    }

    static constexpr std::size_t kLayers = 4; // weight matrices between the 5 layers

    const std::array<std::size_t, 5>& layer_sizes() const { return sizes_; }
    std::size_t input_dim() const { return sizes_[0]; }
    double learning_rate() const { return learning_rate_; }
    void set_learning_rate(double lr) { learning_rate_ = lr; }
    std::uint64_t seed() const { return seed_; }

    std::vector<std::vector<double>>& weights() { return weights_; }
    std::vector<std::vector<double>>& biases() { return biases_; }
    const std::vector<std::vector<double>>& weights() const { return weights_; }
    const std::vector<std::vector<double>>& biases() const { return biases_; }

    bool operator==(const MlpModel&) const = default;

  private:
    std::array<std::size_t, 5> sizes_{};
    std::vector<std::vector<double>> weights_; // [l]: fan_out x fan_in, row-major
    std::vector<std::vector<double>> biases_;
    double learning_rate_ = 0.01;
    std::uint64_t seed_ = 0;
};

struct Prediction {
    int label = 0;
    double prob_benign = 0.0;
    double prob_attack = 0.0;
};

namespace detail {

struct ForwardPass {
    // activations[0] is the input row; the last entry holds the softmax pair
    std::vector<std::vector<double>> activations;
    std::vector<std::vector<double>> pre_activations;
};

inline ForwardPass mlp_forward(const MlpModel& model, std::span<const double> input) {
    if (input.size() != model.input_dim())
        throw dimension_mismatch_error("mlp: input has " + std::to_string(input.size()) +
                                       " features, expected " + std::to_string(model.input_dim()));
    ForwardPass fp;
    fp.activations.resize(MlpModel::kLayers + 1);
    fp.pre_activations.resize(MlpModel::kLayers);
    fp.activations[0].assign(input.begin(), input.end());
    const auto& sizes = model.layer_sizes();
    for (std::size_t l = 0; l < MlpModel::kLayers; ++l) {
        const std::size_t nin = sizes[l], nout = sizes[l + 1];
        const auto& w = model.weights()[l];
        const auto& b = model.biases()[l];
        auto& z = fp.pre_activations[l];
        z.assign(nout, 0.0);
        const auto& x = fp.activations[l];
        for (std::size_t o = 0; o < nout; ++o) {
            double acc = b[o];
            const double* wrow = w.data() + o * nin;
            for (std::size_t i = 0; i < nin; ++i) acc += wrow[i] * x[i];
            z[o] = acc;
        }
        auto& a = fp.activations[l + 1];
        if (l != MlpModel::kLayers - 1) {
            a.resize(nout);
            for (std::size_t o = 0; o < nout; ++o) a[o] = z[o] > 0.0 ? z[o] : 0.0;
        } else {
            // softmax with max-shift
            a.resize(nout);
            const double mx = std::max(z[0], z[1]);
            const double e0 = std::exp(z[0] - mx), e1 = std::exp(z[1] - mx);
            const double sum = e0 + e1;
            a[0] = e0 / sum;
            a[1] = e1 / sum;
        }
    }
    return fp;
}

struct Gradients {
    std::vector<std::vector<double>> d_weights;
    std::vector<std::vector<double>> d_biases;
};

inline Gradients zero_gradients(const MlpModel& model) {
    Gradients g;
    g.d_weights.resize(MlpModel::kLayers);
    g.d_biases.resize(MlpModel::kLayers);
    for (std::size_t l = 0; l < MlpModel::kLayers; ++l) {
        g.d_weights[l].assign(model.weights()[l].size(), 0.0);
        g.d_biases[l].assign(model.biases()[l].size(), 0.0);
    }
    return g;
}

// Cross-entropy on one sample; accumulates parameter gradients.
inline double mlp_backward(const MlpModel& model, std::span<const double> input, int label,
                           Gradients& grads) {
    const ForwardPass fp = mlp_forward(model, input);
    const auto& probs = fp.activations[MlpModel::kLayers];
    const double p_true = probs[label == 1 ? 1 : 0];
    const double loss = -std::log(p_true > 1e-300 ? p_true : 1e-300);

    const auto& sizes = model.layer_sizes();
    // delta at the softmax/cross-entropy output
    std::vector<double> delta = {probs[0] - (label == 1 ? 0.0 : 1.0),
                                 probs[1] - (label == 1 ? 1.0 : 0.0)};
    for (std::size_t l = MlpModel::kLayers; l-- > 0;) {
        const std::size_t nin = sizes[l], nout = sizes[l + 1];
        const auto& x = fp.activations[l];
        auto& dw = grads.d_weights[l];
        auto& db = grads.d_biases[l];
        for (std::size_t o = 0; o < nout; ++o) {
            db[o] += delta[o];
            double* dwrow = dw.data() + o * nin;
            for (std::size_t i = 0; i < nin; ++i) dwrow[i] += delta[o] * x[i];
        }
        if (l == 0) break;
        std::vector<double> prev(nin, 0.0);
        const auto& w = model.weights()[l];
        for (std::size_t i = 0; i < nin; ++i) {
            double acc = 0.0;
            for (std::size_t o = 0; o < nout; ++o) acc += w[o * nin + i] * delta[o];
            prev[i] = fp.pre_activations[l - 1][i] > 0.0 ? acc : 0.0;
        }
        delta = std::move(prev);
    }
    return loss;
}

} // namespace detail

/// Mean loss and mean parameter gradients over a batch; shared by training
/// and by the finite-difference checks.
inline std::pair<double, detail::Gradients> mlp_loss_and_gradients(
    const MlpModel& model, std::span<const std::vector<double>> batch_rows,
    std::span<const int> batch_labels) {
    if (batch_rows.empty()) throw empty_input_error("mlp: empty batch");
    if (batch_rows.size() != batch_labels.size())
        throw dimension_mismatch_error("mlp: batch rows/labels mismatch");
    auto grads = detail::zero_gradients(model);
    double loss = 0.0;
    for (std::size_t i = 0; i < batch_rows.size(); ++i)
        loss += detail::mlp_backward(model, batch_rows[i], batch_labels[i], grads);
    const double inv = 1.0 / static_cast<double>(batch_rows.size());
    loss *= inv;
    for (auto& v : grads.d_weights)
        for (auto& x : v) x *= inv;
    for (auto& v : grads.d_biases)
        for (auto& x : v) x *= inv;
    return {loss, std::move(grads)};
}

inline double mlp_batch_loss(const MlpModel& model, std::span<const std::vector<double>> rows,
                             std::span<const int> labels) {
    double loss = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto fp = detail::mlp_forward(model, rows[i]);
        const double p = fp.activations[MlpModel::kLayers][labels[i] == 1 ? 1 : 0];
        loss += -std::log(p > 1e-300 ? p : 1e-300);
    }
    return loss / static_cast<double>(rows.size());
}

/// Consumes the sample stream in order, one SGD step per mini-batch (default
/// size 32, trailing partial batch included). Deterministic given the model
/// seed and the stream order. Throws nonfinite_error when the loss diverges;
/// the caller may retry with a lower learning rate.
inline void mlp_train_online(MlpModel& model, std::span<const std::vector<double>> rows,
                             std::span<const int> labels, std::size_t batch_size = 32) {
    if (rows.size() != labels.size())
        throw dimension_mismatch_error("mlp: rows/labels length mismatch");
    if (batch_size == 0) throw invalid_parameter_error("mlp: batch size must be positive");
    for (std::size_t start = 0; start < rows.size(); start += batch_size) {
        const std::size_t len = std::min(batch_size, rows.size() - start);
        auto [loss, grads] =
            mlp_loss_and_gradients(model, rows.subspan(start, len), labels.subspan(start, len));
        if (!std::isfinite(loss))
            throw nonfinite_error("mlp: non-finite training loss, reduce the learning rate");
        const double lr = model.learning_rate();
        for (std::size_t l = 0; l < MlpModel::kLayers; ++l) {
            auto& w = model.weights()[l];
            auto& b = model.biases()[l];
            for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * grads.d_weights[l][i];
            for (std::size_t i = 0; i < b.size(); ++i) b[i] -= lr * grads.d_biases[l][i];
        }
    }
}

/// Epoch-style wrapper: shuffles row order each epoch with a seeded stream,
/// then feeds the stream to the online trainer.
inline void mlp_fit(MlpModel& model, const FeatureTable& table, std::size_t epochs,
                    std::uint64_t seed, std::size_t batch_size = 32) {
    if (!table.labels) throw invalid_parameter_error("mlp: training table has no labels");
    Rng rng(derive_seed(seed, 0x534755));
    std::vector<std::size_t> order(table.n_rows());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<std::vector<double>> rows(table.n_rows());
    std::vector<int> labels(table.n_rows());
    for (std::size_t e = 0; e < epochs; ++e) {
        rng.shuffle(order);
        for (std::size_t i = 0; i < order.size(); ++i) {
            rows[i] = table.rows[order[i]];
            labels[i] = (*table.labels)[order[i]];
        }
        mlp_train_online(model, rows, labels, batch_size);
    }
}

inline Prediction mlp_predict(const MlpModel& model, std::span<const double> features) {
    const auto fp = detail::mlp_forward(model, features);
    const auto& probs = fp.activations[MlpModel::kLayers];
    Prediction p;
    p.prob_benign = probs[0];
    p.prob_attack = probs[1];
    p.label = probs[1] > probs[0] ? kAttack : kBenign;
    return p;
}

inline std::vector<int> mlp_predict_all(const MlpModel& model, const FeatureTable& table) {
    std::vector<int> out;
    out.reserve(table.n_rows());
    for (const auto& row : table.rows) out.push_back(mlp_predict(model, row).label);
    return out;
}

// ---- versioned text weight file ----

inline void save_mlp(const MlpModel& model, std::ostream& os) {
    os << "vtwin-mlp 1\n";
    os << "layers";
    for (auto s : model.layer_sizes()) os << ' ' << s;
    os << '\n';
    os << "learning_rate " << csv::format_double(model.learning_rate()) << '\n';
    os << "seed " << model.seed() << '\n';
    for (std::size_t l = 0; l < MlpModel::kLayers; ++l) {
        os << "W" << l;
        for (double w : model.weights()[l]) os << ' ' << csv::format_double(w);
        os << '\n';
        os << "b" << l;
        for (double b : model.biases()[l]) os << ' ' << csv::format_double(b);
        os << '\n';
    }
}

inline void save_mlp(const MlpModel& model, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot write " + path);
    save_mlp(model, os);
}

inline MlpModel load_mlp(std::istream& in) {
    std::string word;
    in >> word;
    if (word != "vtwin-mlp") throw schema_error("mlp file: bad magic");
    int version = 0;
    in >> version;
    if (version != 1) throw schema_error("mlp file: unsupported version");
    in >> word;
    if (word != "layers") throw schema_error("mlp file: expected layer sizes");
    std::array<std::size_t, 5> sizes{};
    for (auto& s : sizes) in >> s;
    double lr = 0.0;
    std::uint64_t seed = 0;
    in >> word >> lr;
    in >> word >> seed;
    if (!in) throw schema_error("mlp file: truncated header");
    MlpModel model(sizes[0], {sizes[1], sizes[2], sizes[3]}, lr, seed);
    if (model.layer_sizes() != sizes) throw schema_error("mlp file: inconsistent layer sizes");
    for (std::size_t l = 0; l < MlpModel::kLayers; ++l) {
        in >> word; // W<l>
        for (auto& w : model.weights()[l]) in >> w;
        in >> word; // b<l>
        for (auto& b : model.biases()[l]) in >> b;
    }
    if (!in) throw schema_error("mlp file: truncated weights");
    return model;
}

inline MlpModel load_mlp_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path);
    return load_mlp(in);
}

} // namespace vtwin
