#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rffp/errors.hpp"
#include "rffp/nn/layers.hpp"
#include "rffp/nn/recurrent.hpp"
#include "rffp/nn/tensor.hpp"
#include "rffp/rng.hpp"

// Model assembly from declarative layer specs, plus the four canonical
// classifier configurations.

namespace rffp::nn {

enum class ArchKind { Cnn, BiLstm, BiGru, CnnBiGru };

inline std::string arch_name(ArchKind kind) {
    switch (kind) {
        case ArchKind::Cnn: return "cnn";
        case ArchKind::BiLstm: return "bi-lstm";
        case ArchKind::BiGru: return "bi-gru";
        case ArchKind::CnnBiGru: return "cnn-bi-gru";
    }
    errors::parameter("unknown architecture kind");
}

inline ArchKind arch_from_name(const std::string& name) {
    if (name == "cnn") return ArchKind::Cnn;
    if (name == "bi-lstm" || name == "bilstm" || name == "lstm") return ArchKind::BiLstm;
    if (name == "bi-gru" || name == "bigru" || name == "gru") return ArchKind::BiGru;
    if (name == "cnn-bi-gru" || name == "cnn-bigru" || name == "hybrid") return ArchKind::CnnBiGru;
    errors::parameter("unknown architecture name: " + name);
}

struct LayerSpec {
    enum class Kind { Reshape, Conv1D, ReLU, MaxPool2, Flatten, Dropout, Dense, BiGru, BiLstm };
    Kind kind;
    std::size_t a = 0;          // Conv1D: kernel; Dense: units; Reshape: steps; BiX: hidden
    std::size_t b = 0;          // Conv1D: out channels; Reshape: features
    double rate = 0.0;          // Dropout rate / recurrent dropout rate
    bool return_sequence = false;

    static LayerSpec reshape(std::size_t steps, std::size_t features) {
        return {Kind::Reshape, steps, features, 0.0, false};
    }
    static LayerSpec conv1d(std::size_t kernel, std::size_t out_ch) {
        return {Kind::Conv1D, kernel, out_ch, 0.0, false};
    }
    static LayerSpec relu() { return {Kind::ReLU, 0, 0, 0.0, false}; }
    static LayerSpec maxpool2() { return {Kind::MaxPool2, 0, 0, 0.0, false}; }
    static LayerSpec flatten() { return {Kind::Flatten, 0, 0, 0.0, false}; }
    static LayerSpec dropout(double rate) { return {Kind::Dropout, 0, 0, rate, false}; }
    static LayerSpec dense(std::size_t units) { return {Kind::Dense, units, 0, 0.0, false}; }
    static LayerSpec bigru(std::size_t hidden, bool seq, double rec_dropout = 0.0) {
        return {Kind::BiGru, hidden, 0, rec_dropout, seq};
    }
    static LayerSpec bilstm(std::size_t hidden, bool seq, double rec_dropout = 0.0) {
        return {Kind::BiLstm, hidden, 0, rec_dropout, seq};
    }
};

enum class OptimizerKind { Adam, RmsProp };

struct ModelConfig {
    ArchKind architecture = ArchKind::Cnn;
    std::vector<LayerSpec> layers;
    OptimizerKind optimizer = OptimizerKind::Adam;
    double learning_rate = 1e-3;
    int max_epochs = 30;
    double early_stop_min_delta = 1e-4;
    int early_stop_patience = 5;
    int batch_size = 32;
    std::uint64_t seed = 42;
    std::size_t input_length = 900;
    std::size_t num_classes = 9;

    void validate() const {
        if (!(learning_rate > 0.0)) errors::parameter("learning_rate must be > 0");
        if (batch_size < 1) errors::parameter("batch_size must be >= 1");
        if (max_epochs < 0) errors::parameter("max_epochs must be >= 0");
        if (early_stop_patience < 1) errors::parameter("early_stop_patience must be >= 1");
        for (const LayerSpec& s : layers)
            if (s.kind == LayerSpec::Kind::Dropout && (s.rate < 0.0 || s.rate >= 1.0))
                errors::parameter("dropout rates must be in [0, 1)");
    }
};

// The canonical configurations. Widths follow the published layer counts and
// optimizer/learning-rate/min-delta settings for each architecture.
inline ModelConfig architecture_config(ArchKind kind) {
    ModelConfig cfg;
    cfg.architecture = kind;
    using LS = LayerSpec;
    switch (kind) {
        case ArchKind::Cnn:
            cfg.layers = {LS::reshape(900, 1), LS::conv1d(7, 8),  LS::relu(), LS::maxpool2(),
                          LS::conv1d(5, 16),   LS::relu(),        LS::maxpool2(), LS::flatten(),
                          LS::dropout(0.3),    LS::dense(32),     LS::relu(), LS::dense(9)};
            cfg.optimizer = OptimizerKind::Adam;
            cfg.learning_rate = 3e-3;
            cfg.early_stop_min_delta = 1e-4;
            break;
        case ArchKind::BiLstm:
            cfg.layers = {LS::reshape(30, 30), LS::bilstm(64, true),  LS::dropout(0.3),
                          LS::bilstm(32, false), LS::dropout(0.3),    LS::dense(32),
                          LS::relu(),          LS::dense(9)};
            cfg.optimizer = OptimizerKind::RmsProp;
            cfg.learning_rate = 1e-3;
            cfg.early_stop_min_delta = 1e-2;
            break;
        case ArchKind::BiGru:
            cfg.layers = {LS::reshape(30, 30), LS::bigru(64, true),  LS::dropout(0.3),
                          LS::bigru(32, false), LS::dropout(0.3),    LS::dense(32),
                          LS::relu(),          LS::dense(9)};
            cfg.optimizer = OptimizerKind::RmsProp;
            cfg.learning_rate = 1e-3;
            cfg.early_stop_min_delta = 1e-2;
            break;
        case ArchKind::CnnBiGru:
            cfg.layers = {LS::reshape(900, 1),        LS::conv1d(5, 16), LS::relu(),
                          LS::maxpool2(),             LS::bigru(32, true, 0.2),
                          LS::dropout(0.3),           LS::bigru(16, false, 0.2),
                          LS::dropout(0.3),           LS::dense(32),     LS::relu(),
                          LS::dense(9)};
            cfg.optimizer = OptimizerKind::Adam;
            cfg.learning_rate = 1e-3;
            cfg.early_stop_min_delta = 1e-4;
            break;
    }
    return cfg;
}

template <typename T>
class Model {
public:
    explicit Model(const ModelConfig& config) : config_(config) {
        config_.validate();
        Shape shape = Shape::of(1, config_.input_length);  // batch dim is dynamic
        for (const LayerSpec& spec : config_.layers) {
            layers_.push_back(instantiate(spec));
            shape = layers_.back()->output_shape(shape);
        }
        if (shape.rank != 2 || shape.dims[1] != config_.num_classes)
            errors::shape("model must end in a dense layer with one unit per class");
        offsets_.reserve(layers_.size());
        std::size_t total = 0;
        for (const auto& layer : layers_) {
            offsets_.push_back(total);
            total += layer->param_count();
        }
        params_.assign(total, T(0));
        grads_.assign(total, T(0));
    }

    std::size_t param_count() const { return params_.size(); }
    std::span<T> params() { return params_; }
    std::span<const T> params() const { return params_; }
    std::span<T> grads() { return grads_; }
    const ModelConfig& config() const { return config_; }

    void init(std::uint64_t seed) {
        rng::Xoshiro256pp gen(seed);
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            auto span = std::span<T>(params_).subspan(offsets_[i], layers_[i]->param_count());
            layers_[i]->init_params(span, gen);
        }
    }

    void zero_grads() { std::fill(grads_.begin(), grads_.end(), T(0)); }

    Tensor<T> forward(const Tensor<T>& x, bool training, rng::Xoshiro256pp* drop_rng) {
        Tensor<T> h = x;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            auto span = std::span<const T>(params_).subspan(offsets_[i], layers_[i]->param_count());
            h = layers_[i]->forward(h, span, training, drop_rng);
        }
        return h;
    }

    // Accumulates parameter gradients for the most recent forward pass.
    Tensor<T> backward(const Tensor<T>& dlogits) {
        Tensor<T> g = dlogits;
        for (std::size_t i = layers_.size(); i-- > 0;) {
            auto pspan = std::span<const T>(params_).subspan(offsets_[i], layers_[i]->param_count());
            auto gspan = std::span<T>(grads_).subspan(offsets_[i], layers_[i]->param_count());
            g = layers_[i]->backward(g, pspan, gspan);
        }
        return g;
    }

    std::vector<std::string> layer_names() const {
        std::vector<std::string> names;
        for (const auto& l : layers_) names.push_back(l->name());
        return names;
    }

private:
    static std::unique_ptr<Layer<T>> instantiate(const LayerSpec& spec) {
        using K = LayerSpec::Kind;
        switch (spec.kind) {
            case K::Reshape: return std::make_unique<Reshape<T>>(spec.a, spec.b);
            case K::Conv1D: return std::make_unique<Conv1D<T>>(spec.a, spec.b);
            case K::ReLU: return std::make_unique<ReLU<T>>();
            case K::MaxPool2: return std::make_unique<MaxPool2<T>>();
            case K::Flatten: return std::make_unique<Flatten<T>>();
            case K::Dropout: return std::make_unique<Dropout<T>>(spec.rate);
            case K::Dense: return std::make_unique<Dense<T>>(spec.a);
            case K::BiGru:
                return std::make_unique<BiGru<T>>(spec.a, spec.return_sequence, spec.rate);
            case K::BiLstm:
                return std::make_unique<BiLstm<T>>(spec.a, spec.return_sequence, spec.rate);
        }
        errors::parameter("unknown layer spec");
    }

    ModelConfig config_;
    std::vector<std::unique_ptr<Layer<T>>> layers_;
    std::vector<std::size_t> offsets_;
    std::vector<T> params_;
    std::vector<T> grads_;
};

}  // namespace rffp::nn
