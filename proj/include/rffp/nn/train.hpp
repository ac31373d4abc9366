#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "rffp/errors.hpp"
#include "rffp/features.hpp"
#include "rffp/nn/model.hpp"
#include "rffp/nn/optim.hpp"
#include "rffp/rng.hpp"

// Loss, the mini-batch training loop with early stopping, and the
// finite-difference gradient checker.

namespace rffp::nn {

template <typename T>
struct SoftmaxCeResult {
    double loss = 0.0;
    Tensor<T> dlogits;
};

// Mean cross entropy of integer-labeled rows, stabilized by row-max
// subtraction; dlogits = (softmax - onehot) / batch.
template <typename T>
inline SoftmaxCeResult<T> softmax_ce(const Tensor<T>& logits, std::span<const int> labels) {
    if (logits.shape.rank != 2) errors::shape("softmax_ce expects rank-2 logits");
    const std::size_t batch = logits.shape.dims[0];
    const std::size_t classes = logits.shape.dims[1];
    if (labels.size() != batch) errors::shape("label count does not match the batch");

    SoftmaxCeResult<T> res;
    res.dlogits = Tensor<T>(logits.shape);
    double loss = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
        const int label = labels[i];
        if (label < 0 || static_cast<std::size_t>(label) >= classes)
            errors::label("class label out of range");
        T rowmax = logits.at(i, 0);
        for (std::size_t j = 1; j < classes; ++j) rowmax = std::max(rowmax, logits.at(i, j));
        double denom = 0.0;
        for (std::size_t j = 0; j < classes; ++j)
            denom += std::exp(static_cast<double>(logits.at(i, j) - rowmax));
        const double log_denom = std::log(denom);
        loss += log_denom - static_cast<double>(logits.at(i, label) - rowmax);
        for (std::size_t j = 0; j < classes; ++j) {
            const double p =
                std::exp(static_cast<double>(logits.at(i, j) - rowmax) - log_denom);
            res.dlogits.at(i, j) =
                static_cast<T>((p - (static_cast<std::size_t>(label) == j ? 1.0 : 0.0)) /
                               static_cast<double>(batch));
        }
    }
    res.loss = loss / static_cast<double>(batch);
    return res;
}

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainedModel {
    ModelConfig config;
    std::vector<double> parameters;
    std::size_t param_count = 0;
    std::vector<EpochLog> train_log;
};

template <typename T>
inline Tensor<T> rows_to_tensor(const std::vector<std::vector<double>>& rows,
                                std::span<const std::size_t> idx) {
    const std::size_t width = rows.empty() ? 0 : rows[0].size();
    Tensor<T> out(Shape::of(idx.size(), width));
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < width; ++j)
            out.at(i, j) = static_cast<T>(rows[idx[i]][j]);
    return out;
}

template <typename T>
inline Tensor<T> dataset_to_tensor(const LabeledDataset& ds) {
    std::vector<std::size_t> idx(ds.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return rows_to_tensor<T>(ds.features, idx);
}

template <typename T>
inline std::vector<int> predict(Model<T>& model, const Tensor<T>& x, int batch_size) {
    const std::size_t n = x.shape.dims[0];
    const std::size_t width = x.shape.dims[1];
    std::vector<int> out(n);
    for (std::size_t begin = 0; begin < n; begin += static_cast<std::size_t>(batch_size)) {
        const std::size_t count = std::min(n - begin, static_cast<std::size_t>(batch_size));
        Tensor<T> xb(Shape::of(count, width));
        std::copy_n(x.data.data() + begin * width, count * width, xb.data.data());
        const Tensor<T> logits = model.forward(xb, false, nullptr);
        for (std::size_t i = 0; i < count; ++i) {
            int best = 0;
            for (std::size_t j = 1; j < logits.shape.dims[1]; ++j)
                if (logits.at(i, j) > logits.at(i, static_cast<std::size_t>(best)))
                    best = static_cast<int>(j);
            out[begin + i] = best;
        }
    }
    return out;
}

template <typename T>
inline std::pair<double, double> evaluate(Model<T>& model, const Tensor<T>& x,
                                          std::span<const int> labels, int batch_size) {
    const std::size_t n = x.shape.dims[0];
    const std::size_t width = x.shape.dims[1];
    double loss_acc = 0.0;
    std::size_t correct = 0;
    for (std::size_t begin = 0; begin < n; begin += static_cast<std::size_t>(batch_size)) {
        const std::size_t count = std::min(n - begin, static_cast<std::size_t>(batch_size));
        Tensor<T> xb(Shape::of(count, width));
        std::copy_n(x.data.data() + begin * width, count * width, xb.data.data());
        const Tensor<T> logits = model.forward(xb, false, nullptr);
        const auto ce = softmax_ce(logits, labels.subspan(begin, count));
        loss_acc += ce.loss * static_cast<double>(count);
        for (std::size_t i = 0; i < count; ++i) {
            std::size_t best = 0;
            for (std::size_t j = 1; j < logits.shape.dims[1]; ++j)
                if (logits.at(i, j) > logits.at(i, best)) best = j;
            if (static_cast<int>(best) == labels[begin + i]) ++correct;
        }
    }
    return {loss_acc / static_cast<double>(n), static_cast<double>(correct) / static_cast<double>(n)};
}

// Mini-batch training with validation-loss early stopping. Returns the
// parameters of the best-validation-loss epoch. Deterministic given
// config.seed: initialization, shuffling and dropout each use a derived
// substream.
template <typename T = float>
inline TrainedModel train_model(const ModelConfig& config, const LabeledDataset& train_ds,
                                const LabeledDataset& val_ds) {
    if (val_ds.size() == 0) errors::parameter("validation set must be non-empty");
    if (train_ds.size() == 0) errors::parameter("training set must be non-empty");

    Model<T> model(config);
    model.init(rng::derive_stream(config.seed, {1}));
    rng::Xoshiro256pp shuffle_rng(rng::derive_stream(config.seed, {2}));
    rng::Xoshiro256pp dropout_rng(rng::derive_stream(config.seed, {3}));

    const Tensor<T> x_train = dataset_to_tensor<T>(train_ds);
    const Tensor<T> x_val = dataset_to_tensor<T>(val_ds);
    const std::size_t n = train_ds.size();
    const std::size_t width = x_train.shape.dims[1];

    AdamState<T> adam(model.param_count());
    RmsPropState<T> rms(model.param_count());

    TrainedModel out;
    out.config = config;
    out.param_count = model.param_count();

    std::vector<T> best_params(model.params().begin(), model.params().end());
    double best_restore = std::numeric_limits<double>::infinity();
    double best_stop = std::numeric_limits<double>::infinity();
    int bad_epochs = 0;
    bool restored_any = false;

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        for (std::size_t i = n; i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.below(i)]);

        double train_loss = 0.0;
        for (std::size_t begin = 0; begin < n; begin += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t count =
                std::min(n - begin, static_cast<std::size_t>(config.batch_size));
            Tensor<T> xb(Shape::of(count, width));
            std::vector<int> yb(count);
            for (std::size_t i = 0; i < count; ++i) {
                const std::size_t src = order[begin + i];
                std::copy_n(x_train.data.data() + src * width, width,
                            xb.data.data() + i * width);
                yb[i] = train_ds.labels[src];
            }
            model.zero_grads();
            const Tensor<T> logits = model.forward(xb, true, &dropout_rng);
            const auto ce = softmax_ce(logits, yb);
            model.backward(ce.dlogits);
            if (config.optimizer == OptimizerKind::Adam) {
                adam_step(model.params(), std::span<const T>(model.grads()), adam,
                          static_cast<T>(config.learning_rate));
            } else {
                rmsprop_step(model.params(), std::span<const T>(model.grads()), rms,
                             static_cast<T>(config.learning_rate));
            }
            train_loss += ce.loss * static_cast<double>(count);
        }
        train_loss /= static_cast<double>(n);

        const auto [val_loss, val_acc] = evaluate(model, x_val, val_ds.labels, config.batch_size);
        if (!std::isfinite(train_loss) || !std::isfinite(val_loss))
            errors::training_diverged("non-finite loss at epoch " + std::to_string(epoch));
        out.train_log.push_back({epoch, train_loss, val_loss, val_acc});

        if (val_loss < best_restore) {
            best_restore = val_loss;
            std::copy(model.params().begin(), model.params().end(), best_params.begin());
            restored_any = true;
        }
        if (best_stop - val_loss > config.early_stop_min_delta) {
            best_stop = val_loss;
            bad_epochs = 0;
        } else if (++bad_epochs >= config.early_stop_patience) {
            break;
        }
    }

    if (restored_any)
        std::copy(best_params.begin(), best_params.end(), model.params().begin());
    out.parameters.assign(model.params().begin(), model.params().end());
    return out;
}

// Central-difference gradient verification on a small batch. Dropout is
// disabled (evaluation-mode forward), everything else follows the training
// path. Returns max over parameters of |analytic - numeric| / max(|a|,|n|,1e-12).
inline double grad_check(const ModelConfig& config, const std::vector<std::vector<double>>& rows,
                         std::span<const int> labels, double h = 1e-5) {
    Model<double> model(config);
    model.init(rng::derive_stream(config.seed, {1}));

    std::vector<std::size_t> idx(rows.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    const Tensor<double> x = rows_to_tensor<double>(rows, idx);

    auto loss_at = [&]() {
        const Tensor<double> logits = model.forward(x, false, nullptr);
        return softmax_ce(logits, labels).loss;
    };

    model.zero_grads();
    const Tensor<double> logits = model.forward(x, false, nullptr);
    const auto ce = softmax_ce(logits, labels);
    model.backward(ce.dlogits);
    std::vector<double> analytic(model.grads().begin(), model.grads().end());

    double worst = 0.0;
    auto params = model.params();
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double keep = params[i];
        params[i] = keep + h;
        const double up = loss_at();
        params[i] = keep - h;
        const double down = loss_at();
        params[i] = keep;
        const double numeric = (up - down) / (2.0 * h);
        const double err = std::abs(analytic[i] - numeric) /
                           std::max({std::abs(analytic[i]), std::abs(numeric), 1e-12});
        worst = std::max(worst, err);
    }
    return worst;
}

}  // namespace rffp::nn
