#include "occupancy/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <thread>

namespace fs = std::filesystem;

namespace occupancy::eval {

Confusion confusion(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size()) {
        throw std::invalid_argument("confusion: " + std::to_string(predicted.size()) + " predictions vs " +
                                    std::to_string(truth.size()) + " labels");
    }
    Confusion c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (predicted[i] == 1) {
            (truth[i] == 1 ? c.tp : c.fp)++;
        } else {
            (truth[i] == 1 ? c.fn : c.tn)++;
        }
    }
    return c;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels, bool* degenerate) {
    if (scores.size() != labels.size()) throw std::invalid_argument("roc_auc: length mismatch");
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    // Sum of (1-based, tie-averaged) ranks of positives.
    double pos_rank_sum = 0.0;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            if (labels[idx[k]] == 1) {
                pos_rank_sum += avg_rank;
                ++pos;
            }
        }
        i = j;
    }
    const std::size_t neg = labels.size() - pos;
    if (pos == 0 || neg == 0) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    if (degenerate) *degenerate = false;
    const double p = static_cast<double>(pos), n = static_cast<double>(neg);
    return (pos_rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

MetricsReport metrics(const Confusion& c, std::span<const double> scores, std::span<const int> labels) {
    MetricsReport r;
    r.counts = c;
    r.n = c.total();
    auto ratio = [&](std::size_t num, std::size_t den, const char* name) {
        if (den == 0) {
            r.undefined.emplace_back(name);
            return 0.0;
        }
        return static_cast<double>(num) / static_cast<double>(den);
    };
    r.accuracy = ratio(c.tp + c.tn, r.n, "accuracy");
    r.precision = ratio(c.tp, c.tp + c.fp, "precision");
    r.recall = ratio(c.tp, c.tp + c.fn, "recall");
    if (r.precision + r.recall > 0.0) {
        r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
    } else {
        r.undefined.emplace_back("f1");
    }
    bool degenerate = false;
    r.roc_auc = roc_auc(scores, labels, &degenerate);
    if (degenerate) r.undefined.emplace_back("roc_auc");
    return r;
}

MetricsReport evaluate(std::span<const double> scores, std::span<const int> labels, double threshold) {
    const auto pred = models::threshold_labels(scores, threshold);
    return metrics(confusion(pred, labels), scores, labels);
}

std::vector<std::size_t> FoldPlan::validation_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i)
        if (assignment[i] == fold) out.push_back(i);
    return out;
}

std::vector<std::size_t> FoldPlan::training_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i)
        if (assignment[i] != fold) out.push_back(i);
    return out;
}

FoldPlan kfold_plan(std::size_t n_samples, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("kfold_plan: k must be >= 2");
    if (n_samples < k) {
        throw std::invalid_argument("kfold_plan: " + std::to_string(n_samples) + " samples cannot fill " +
                                    std::to_string(k) + " folds");
    }
    std::vector<std::size_t> order(n_samples);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);
    FoldPlan plan{k, seed, std::vector<std::size_t>(n_samples)};
    for (std::size_t pos = 0; pos < n_samples; ++pos) plan.assignment[order[pos]] = pos % k;
    return plan;
}

std::size_t CrossvalResult::failed_folds() const {
    return static_cast<std::size_t>(std::count_if(folds.begin(), folds.end(), [](const FoldResult& f) { return !f.ok; }));
}

namespace {

FoldResult run_fold(const models::ModelConfig& base, const training::TrainConfig& tc_base,
                    std::span<const data::Sample> samples, const FoldPlan& plan, std::size_t fold,
                    const CrossvalOptions& opts) {
    FoldResult res;
    res.fold = fold;
    std::vector<data::Sample> train, val;
    for (auto i : plan.training_indices(fold)) train.push_back(samples[i]);
    for (auto i : plan.validation_indices(fold)) val.push_back(samples[i]);
    res.n_train = train.size();
    res.n_validation = val.size();
    try {
        const auto stats = data::normalize_fit(train);
        train = data::normalize_apply(stats, train);
        val = data::normalize_apply(stats, val);
        models::ModelConfig mc = base;
        mc.seed = base.seed + fold;
        training::TrainConfig tc = tc_base;
        tc.seed = tc_base.seed + fold;
        auto model = models::Model::build(mc);
        if (opts.on_build) opts.on_build(model, fold);
        training::fit(model, train, {}, tc);
        for (const auto& s : val) {
            const auto p = model.predict_proba(s.x);
            res.scores.insert(res.scores.end(), p.begin(), p.end());
            res.labels.insert(res.labels.end(), s.y.begin(), s.y.end());
        }
        res.report = evaluate(res.scores, res.labels, opts.threshold);
        res.ok = true;
    } catch (const std::exception& e) {
        res.ok = false;
        res.error = e.what();
    }
    return res;
}

} // namespace

CrossvalResult crossval(models::ModelConfig model_config, const training::TrainConfig& train_config,
                        std::span<const data::Sample> samples, const FoldPlan& plan, const CrossvalOptions& opts) {
    if (plan.assignment.size() != samples.size()) throw std::invalid_argument("crossval: plan does not cover samples");
    if (samples.empty()) throw std::invalid_argument("crossval: no samples");
    model_config.input_features = samples.front().features();
    model_config.seq_len = samples.front().length();
    model_config.validate();
    train_config.validate();

    CrossvalResult out;
    out.folds.resize(plan.k);
    const std::size_t jobs = std::max<std::size_t>(1, std::min(opts.jobs, plan.k));
    if (jobs == 1) {
        for (std::size_t f = 0; f < plan.k; ++f)
            out.folds[f] = run_fold(model_config, train_config, samples, plan, f, opts);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        for (std::size_t j = 0; j < jobs; ++j) {
            workers.emplace_back([&] {
                for (std::size_t f; (f = next.fetch_add(1)) < plan.k;)
                    out.folds[f] = run_fold(model_config, train_config, samples, plan, f, opts);
            });
        }
        for (auto& w : workers) w.join();
    }

    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& f : out.folds) {
        if (!f.ok) continue;
        scores.insert(scores.end(), f.scores.begin(), f.scores.end());
        labels.insert(labels.end(), f.labels.begin(), f.labels.end());
    }
    out.aggregate = evaluate(scores, labels, opts.threshold);
    return out;
}

// ---- reports -----------------------------------------------------------------

std::string display_name(models::Variant v, bool manual_features) {
    using models::Variant;
    const char* data = manual_features ? " with Feature Extracted Data" : " with Original Data";
    switch (v) {
    case Variant::hybrid_concat: return std::string("Bi-LSTM & Transformers Concatenation") + data;
    case Variant::bilstm_then_transformer: return std::string("Bi-LSTM + Transformers") + data;
    case Variant::transformer_then_bilstm: return std::string("Transformers + Bi-LSTM") + data;
    case Variant::bilstm_attention: return std::string("Bi-LSTM + Attention") + data;
    }
    return "unknown";
}

namespace {

std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string full(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw std::runtime_error("failed writing " + path.string());
}

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

} // namespace

std::string summary_csv(std::span<const VariantResult> results) {
    std::string out = "variant,model,accuracy,precision,recall,f1,roc_auc\n";
    for (const auto& r : results) {
        const auto& a = r.result.aggregate;
        out += r.id + "," + csv_quote(r.display) + "," + fixed4(a.accuracy) + "," + fixed4(a.precision) + "," +
               fixed4(a.recall) + "," + fixed4(a.f1) + "," + fixed4(a.roc_auc) + "\n";
    }
    return out;
}

std::string summary_text(std::span<const VariantResult> results) {
    std::size_t w = 5;
    for (const auto& r : results) w = std::max(w, r.display.size());
    std::string out;
    char buf[512];
    std::snprintf(buf, sizeof buf, "%-*s  %8s  %9s  %8s  %8s  %8s\n", static_cast<int>(w), "Model", "Accuracy",
                  "Precision", "Recall", "F1 score", "ROC AUC");
    out += buf;
    for (const auto& r : results) {
        const auto& a = r.result.aggregate;
        std::snprintf(buf, sizeof buf, "%-*s  %8.4f  %9.4f  %8.4f  %8.4f  %8.4f\n", static_cast<int>(w),
                      r.display.c_str(), a.accuracy, a.precision, a.recall, a.f1, a.roc_auc);
        out += buf;
    }
    for (const auto& r : results) {
        for (const auto& f : r.result.folds) {
            if (!f.ok) out += "! " + r.id + " fold " + std::to_string(f.fold) + " failed: " + f.error + "\n";
        }
        if (!r.result.aggregate.undefined.empty()) {
            out += "! " + r.id + " undefined metrics reported as 0:";
            for (const auto& u : r.result.aggregate.undefined) out += " " + u;
            out += "\n";
        }
    }
    return out;
}

std::string folds_long_csv(std::span<const VariantResult> results) {
    std::string out = "variant,fold,metric,value\n";
    for (const auto& r : results) {
        for (const auto& f : r.result.folds) {
            if (!f.ok) continue;
            const std::pair<const char*, double> rows[] = {{"accuracy", f.report.accuracy},
                                                           {"precision", f.report.precision},
                                                           {"recall", f.report.recall},
                                                           {"f1", f.report.f1},
                                                           {"roc_auc", f.report.roc_auc}};
            for (const auto& [name, v] : rows) out += r.id + "," + std::to_string(f.fold) + "," + name + "," + full(v) + "\n";
        }
    }
    return out;
}

ReportFiles emit_report(std::span<const VariantResult> results, const fs::path& dir, const nlohmann::json& manifest) {
    if (results.empty()) throw std::invalid_argument("emit_report: no results");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create report directory " + dir.string() + ": " + ec.message());
    ReportFiles files{dir / "summary.csv", dir / "summary.txt", dir / "folds_long.csv", dir / "manifest.json"};
    write_text(files.summary_csv, summary_csv(results));
    write_text(files.summary_txt, summary_text(results));
    write_text(files.folds_csv, folds_long_csv(results));

    nlohmann::json m = manifest;
    nlohmann::json variants = nlohmann::json::array();
    for (const auto& r : results) {
        nlohmann::json v;
        v["id"] = r.id;
        v["display"] = r.display;
        v["config"] = to_json(r.config);
        v["aggregate"] = to_json(r.result.aggregate);
        nlohmann::json failures = nlohmann::json::array();
        for (const auto& f : r.result.folds)
            if (!f.ok) failures.push_back({{"fold", f.fold}, {"error", f.error}});
        v["failed_folds"] = failures;
        variants.push_back(v);
    }
    m["variants"] = variants;
    write_text(files.manifest, m.dump(2) + "\n");
    return files;
}

nlohmann::json to_json(const models::ModelConfig& c) {
    nlohmann::json j;
    for (const auto& [k, v] : models::config_entries(c)) j[k] = v;
    return j;
}

nlohmann::json to_json(const training::TrainConfig& c) {
    return {{"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"learning_rate", c.learning_rate},
            {"beta1", c.beta1},
            {"beta2", c.beta2},
            {"adam_eps", c.adam_eps},
            {"clip_norm", c.clip_norm ? nlohmann::json(*c.clip_norm) : nlohmann::json(nullptr)},
            {"seed", c.seed},
            {"patience", c.patience ? nlohmann::json(*c.patience) : nlohmann::json(nullptr)}};
}

nlohmann::json to_json(const MetricsReport& r) {
    return {{"tp", r.counts.tp},     {"fp", r.counts.fp},       {"tn", r.counts.tn},     {"fn", r.counts.fn},
            {"accuracy", r.accuracy}, {"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1},
            {"roc_auc", r.roc_auc},  {"n", r.n},                 {"undefined", r.undefined}};
}

} // namespace occupancy::eval
