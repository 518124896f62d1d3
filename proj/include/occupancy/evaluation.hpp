#pragma once

#include "occupancy/data.hpp"
#include "occupancy/models.hpp"
#include "occupancy/training.hpp"

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace occupancy::eval {

// Class 1 (occupied) is the positive class.
struct Confusion {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
    Confusion& operator+=(const Confusion& o) {
        tp += o.tp;
        fp += o.fp;
        tn += o.tn;
        fn += o.fn;
        return *this;
    }
    bool operator==(const Confusion&) const = default;
};

Confusion confusion(std::span<const int> predicted, std::span<const int> truth);

struct MetricsReport {
    Confusion counts;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double roc_auc = 0.0;
    std::size_t n = 0;
    // Metrics whose denominator vanished and were reported as 0, e.g. "precision".
    std::vector<std::string> undefined;
};

// Probability that a random positive outscores a random negative, ties
// counted one half. Sets *degenerate (and returns 0) when a class is absent.
double roc_auc(std::span<const double> scores, std::span<const int> labels, bool* degenerate = nullptr);

MetricsReport metrics(const Confusion& counts, std::span<const double> scores, std::span<const int> labels);
MetricsReport evaluate(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

// ---- cross-validation ----------------------------------------------------------

struct FoldPlan {
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::vector<std::size_t> assignment;  // sample index -> fold

    std::vector<std::size_t> validation_indices(std::size_t fold) const;
    std::vector<std::size_t> training_indices(std::size_t fold) const;
};

// Seeded shuffle of sample indices, then round-robin into k folds.
FoldPlan kfold_plan(std::size_t n_samples, std::size_t k, std::uint64_t seed);

struct CrossvalOptions {
    std::size_t jobs = 1;
    double threshold = 0.5;
    // Called on each freshly built fold model before training.
    std::function<void(models::Model&, std::size_t fold)> on_build;
};

struct FoldResult {
    std::size_t fold = 0;
    bool ok = false;
    std::string error;
    MetricsReport report;
    std::size_t n_train = 0;
    std::size_t n_validation = 0;
    std::vector<double> scores;  // pooled validation probabilities
    std::vector<int> labels;
};

struct CrossvalResult {
    std::vector<FoldResult> folds;
    MetricsReport aggregate;  // over the pooled predictions of all successful folds
    std::size_t failed_folds() const;
};

// For each fold: fresh model (seed + fold) trained on the other folds with
// normalisation fitted on those folds only, then scored on the held-out
// fold. Input width and sequence length of `model_config` are taken from
// the samples. Training failures are recorded per fold.
CrossvalResult crossval(models::ModelConfig model_config, const training::TrainConfig& train_config,
                        std::span<const data::Sample> samples, const FoldPlan& plan, const CrossvalOptions& opts = {});

// ---- reports -----------------------------------------------------------------

struct VariantResult {
    std::string id;       // e.g. "hybrid_concat", "bilstm_attention_features"
    std::string display;  // table row label
    models::ModelConfig config;
    CrossvalResult result;
};

std::string display_name(models::Variant v, bool manual_features);

struct ReportFiles {
    std::filesystem::path summary_csv;
    std::filesystem::path summary_txt;
    std::filesystem::path folds_csv;
    std::filesystem::path manifest;
};

std::string summary_csv(std::span<const VariantResult> results);
std::string summary_text(std::span<const VariantResult> results);
std::string folds_long_csv(std::span<const VariantResult> results);

// Writes summary.csv, summary.txt, folds_long.csv and manifest.json into dir.
ReportFiles emit_report(std::span<const VariantResult> results, const std::filesystem::path& dir,
                        const nlohmann::json& manifest);

nlohmann::json to_json(const models::ModelConfig& c);
nlohmann::json to_json(const training::TrainConfig& c);
nlohmann::json to_json(const MetricsReport& r);

} // namespace occupancy::eval
