#include "occupancy/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace occupancy::training {

void TrainConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("train config: learning_rate must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw std::invalid_argument("train config: beta1 and beta2 must lie in [0, 1)");
    }
    if (!(adam_eps > 0.0)) throw std::invalid_argument("train config: adam_eps must be > 0");
    if (clip_norm && !(*clip_norm > 0.0)) throw std::invalid_argument("train config: clip_norm must be > 0");
    if (patience && *patience < 1) throw std::invalid_argument("train config: patience must be >= 1");
}

std::string TrainTrace::to_csv(bool include_timing) const {
    std::string out = include_timing ? "epoch,train_loss,val_loss,val_acc,seconds\n" : "epoch,train_loss,val_loss,val_acc\n";
    char buf[64];
    for (const auto& e : epochs) {
        out += std::to_string(e.epoch);
        std::snprintf(buf, sizeof buf, ",%.17g", e.train_loss);
        out += buf;
        if (e.val_loss) {
            std::snprintf(buf, sizeof buf, ",%.17g", *e.val_loss);
            out += buf;
        } else {
            out += ",";
        }
        if (e.val_accuracy) {
            std::snprintf(buf, sizeof buf, ",%.17g", *e.val_accuracy);
            out += buf;
        } else {
            out += ",";
        }
        if (include_timing) {
            std::snprintf(buf, sizeof buf, ",%.3f", e.seconds);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

Var bce_per_sample(Var probs, std::span<const int> labels) {
    if (probs.value().size() != labels.size()) {
        throw ShapeError("bce: " + std::to_string(probs.value().size()) + " probabilities vs " +
                         std::to_string(labels.size()) + " labels");
    }
    Tape& tape = *probs.tape;
    const std::size_t T = labels.size();
    Tensor y({T}), not_y({T});
    for (std::size_t t = 0; t < T; ++t) {
        y[t] = labels[t];
        not_y[t] = 1.0 - labels[t];
    }
    Var p = ad::clamp(ad::reshape(probs, {T}), kProbClamp, 1.0 - kProbClamp);
    Var pos = ad::mul(tape.constant(std::move(y)), ad::log(p));
    Var neg = ad::mul(tape.constant(std::move(not_y)), ad::log(ad::add_scalar(ad::scale(p, -1.0), 1.0)));
    return ad::scale(ad::mean(ad::add(pos, neg)), -1.0);
}

double dataset_loss(models::Model& model, std::span<const data::Sample> samples) {
    if (samples.empty()) throw std::invalid_argument("dataset_loss: empty sample set");
    double total = 0.0;
    for (const auto& s : samples) {
        Tape tape;
        total += bce_per_sample(model.forward(tape, s.x), s.y).value().item();
    }
    return total / static_cast<double>(samples.size());
}

double dataset_accuracy(models::Model& model, std::span<const data::Sample> samples, double threshold) {
    std::size_t correct = 0, n = 0;
    for (const auto& s : samples) {
        const auto pred = model.predict(s.x, threshold);
        for (std::size_t t = 0; t < pred.size(); ++t) correct += pred[t] == s.y[t];
        n += pred.size();
    }
    return n ? static_cast<double>(correct) / static_cast<double>(n) : 0.0;
}

void optimizer_step(const std::vector<NamedTensor>& params, AdamState& state, const TrainConfig& config) {
    if (state.m.size() != params.size()) {
        state.m.assign(params.size(), {});
        state.v.assign(params.size(), {});
        for (std::size_t k = 0; k < params.size(); ++k) {
            state.m[k].assign(params[k].tensor->size(), 0.0);
            state.v[k].assign(params[k].tensor->size(), 0.0);
        }
    }
    double norm_sq = 0.0;
    for (const auto& p : params) {
        for (double g : p.tensor->grad()) {
            if (!std::isfinite(g)) throw NumericAbort("non-finite gradient in parameter " + p.name);
            norm_sq += g * g;
        }
    }
    double clip_scale = 1.0;
    if (config.clip_norm) {
        const double norm = std::sqrt(norm_sq);
        if (norm > *config.clip_norm) clip_scale = *config.clip_norm / norm;
    }
    ++state.step;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor& t = *params[k].tensor;
        if (!t.has_grad()) continue;
        const auto g = t.grad();
        auto& m = state.m[k];
        auto& v = state.v[k];
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double gi = g[i] * clip_scale;
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * gi;
            v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * gi * gi;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            t[i] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.adam_eps);
        }
    }
}

TrainTrace fit(models::Model& model, std::span<const data::Sample> train, std::span<const data::Sample> validation,
               const TrainConfig& config) {
    config.validate();
    if (train.empty()) throw std::invalid_argument("fit: empty training set");
    Rng shuffle_rng(config.seed);
    Rng dropout_rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
    const auto params = model.parameters();
    AdamState adam;
    TrainTrace trace;

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    double best_val = INFINITY;
    std::size_t since_best = 0;
    std::vector<std::vector<double>> best_params;

    models::ForwardOptions fopts;
    fopts.training = true;
    fopts.dropout_rng = &dropout_rng;

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            const double inv_b = 1.0 / static_cast<double>(end - start);
            model.zero_grads();
            for (std::size_t k = start; k < end; ++k) {
                const auto& s = train[order[k]];
                Tape tape;
                Var loss = bce_per_sample(model.forward(tape, s.x, fopts), s.y);
                const double lv = loss.value().item();
                if (!std::isfinite(lv)) {
                    throw NumericAbort("non-finite loss on sample " + s.household + "/" + s.date + " in epoch " +
                                       std::to_string(epoch));
                }
                loss_sum += lv;
                tape.backward(ad::scale(loss, inv_b));
            }
            optimizer_step(params, adam, config);
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(train.size());
        bool stop = false;
        if (!validation.empty()) {
            rec.val_loss = dataset_loss(model, validation);
            rec.val_accuracy = dataset_accuracy(model, validation);
            if (*rec.val_loss < best_val) {
                best_val = *rec.val_loss;
                since_best = 0;
                best_params.clear();
                for (const auto& p : params) best_params.emplace_back(p.tensor->data().begin(), p.tensor->data().end());
            } else if (config.patience && ++since_best >= *config.patience) {
                stop = true;
            }
        }
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        trace.epochs.push_back(rec);
        if (stop) {
            trace.early_stopped = true;
            break;
        }
    }
    if (!best_params.empty()) {
        for (std::size_t k = 0; k < params.size(); ++k)
            std::copy(best_params[k].begin(), best_params[k].end(), params[k].tensor->data().begin());
    }
    model.zero_grads();
    return trace;
}

} // namespace occupancy::training
