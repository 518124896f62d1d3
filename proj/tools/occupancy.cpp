// occupancy: preprocess, synth, train, crossval and gradcheck subcommands.
//
// Exit codes: 0 success, 1 check failure, 2 usage or input error,
// 3 numeric abort.

#include "occupancy/autodiff.hpp"
#include "occupancy/config_file.hpp"
#include "occupancy/data.hpp"
#include "occupancy/evaluation.hpp"
#include "occupancy/gradcheck_suite.hpp"
#include "occupancy/models.hpp"
#include "occupancy/synth.hpp"
#include "occupancy/training.hpp"
#include "occupancy/version.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace occupancy;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheck = 1;
constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json base_manifest(const std::string& subcommand, std::uint64_t seed) {
    return {{"subcommand", subcommand}, {"artifact_version", std::string(kVersion)}, {"timestamp", utc_now()},
            {"seed", seed}};
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw InputError("cannot write " + path.string());
    f << text;
    if (!f) throw InputError("failed writing " + path.string());
}

void write_manifest(const fs::path& path, const json& m) { write_text(path, m.dump(2) + "\n"); }

fs::path sidecar(const fs::path& out, const std::string& suffix) { return fs::path(out.string() + suffix); }

json summary_json(const data::DatasetSummary& s) {
    json hh = json::array();
    for (const auto& h : s.households)
        hh.push_back({{"household", h.household}, {"days", h.days}, {"occupancy_ratio", h.occupancy_ratio}});
    return {{"households", hh}, {"total_days", s.total_days}, {"overall_ratio", s.overall_ratio}};
}

json config_json(const RunConfig& c) {
    json j;
    for (const auto& [k, v] : run_config_entries(c)) j[k] = v;
    return j;
}

std::vector<data::Sample> read_dataset(const fs::path& path) {
    if (!fs::exists(path)) throw InputError("no such dataset: " + path.string());
    auto samples = data::read_processed(path);
    if (samples.empty()) throw InputError("dataset has no samples: " + path.string());
    return samples;
}

std::vector<std::size_t> parse_columns(const std::string& text) {
    std::vector<std::size_t> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        const std::string item = text.substr(pos, comma - pos);
        try {
            std::size_t used = 0;
            const auto v = std::stoul(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw InputError("bad column index '" + item + "'");
        }
        pos = comma + 1;
    }
    return out;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        if (comma > pos) out.push_back(text.substr(pos, comma - pos));
        pos = comma + 1;
    }
    return out;
}

// ---- preprocess

struct PreprocessArgs {
    std::string raw;
    std::string out;
    double min_complete = 0.95;
    std::string columns;
};

int cmd_preprocess(const PreprocessArgs& a) {
    std::string raw = a.raw;
    if (raw.empty()) {
        if (const char* env = std::getenv("OCCUPANCY_DATA_DIR")) raw = env;
    }
    if (raw.empty()) throw InputError("no raw directory: pass --raw or set OCCUPANCY_DATA_DIR");
    if (!fs::is_directory(raw)) throw InputError("raw directory does not exist: " + raw);
    if (!(a.min_complete > 0.0 && a.min_complete <= 1.0)) throw InputError("--min-complete must lie in (0, 1]");

    data::LoadOptions lo;
    if (!a.columns.empty()) lo.columns = parse_columns(a.columns);
    data::ResampleOptions ro;
    ro.min_complete = a.min_complete;

    std::vector<data::Sample> samples;
    std::size_t raw_days = 0, excluded = 0;
    for (const auto& hh : data::list_households(raw)) {
        data::for_each_raw_day(raw, hh, lo, [&](data::RawDay&& day) {
            ++raw_days;
            if (auto s = data::resample_hourly(day, ro)) samples.push_back(std::move(*s));
            else ++excluded;
        });
    }
    if (raw_days == 0) throw InputError("no raw day files found under " + raw);

    const auto summary = data::summarize(samples);
    std::cout << data::format_summary_table(summary);
    std::cout << raw_days << " raw days, " << excluded << " excluded as incomplete\n";
    if (samples.empty()) throw InputError("every day was excluded as incomplete");
    data::write_processed(a.out, samples);

    json m = base_manifest("preprocess", 0);
    m["inputs"] = {{"raw", raw}};
    m["outputs"] = {{"data", a.out}};
    m["config"] = {{"min_complete", a.min_complete}, {"tie_label", ro.tie_label}, {"columns", lo.columns}};
    m["raw_days"] = raw_days;
    m["excluded_days"] = excluded;
    m["summary"] = summary_json(summary);
    write_manifest(sidecar(a.out, ".manifest.json"), m);
    return kExitOk;
}

// ---- synth

struct SynthArgs {
    std::size_t households = 5;
    std::size_t days = 60;
    std::uint64_t seed = 0;
    double boost = 1.0;
    std::string out;
};

int cmd_synth(const SynthArgs& a) {
    if (a.households == 0 || a.days == 0) throw InputError("--households and --days must be >= 1");
    data::SynthOptions so;
    so.occupied_boost = a.boost;
    const auto samples = data::synth_generate(a.households, a.days, a.seed, so);
    data::write_processed(a.out, samples);
    const auto summary = data::summarize(samples);
    std::cout << data::format_summary_table(summary);

    json m = base_manifest("synth", a.seed);
    m["outputs"] = {{"data", a.out}};
    m["config"] = {{"households", a.households}, {"days", a.days},
                   {"occupied_boost", so.occupied_boost}, {"min_occupancy", so.min_occupancy},
                   {"max_occupancy", so.max_occupancy}, {"activity_prob", so.activity_prob},
                   {"appliance_prob", so.appliance_prob}, {"noise", so.noise}, {"start_date", so.start_date}};
    m["summary"] = summary_json(summary);
    write_manifest(sidecar(a.out, ".manifest.json"), m);
    return kExitOk;
}

// ---- train

struct TrainArgs {
    std::string data;
    std::string variant;
    std::string config;
    std::string out;
};

RunConfig resolve_config(const std::string& path) {
    RunConfig rc;
    if (!path.empty()) rc = load_run_config(path, rc);
    return rc;
}

int cmd_train(const TrainArgs& a) {
    RunConfig rc = resolve_config(a.config);
    if (!a.variant.empty()) {
        try {
            rc.model.variant = models::parse_variant(a.variant);
        } catch (const std::invalid_argument& e) {
            throw InputError(e.what());
        }
    }
    auto samples = read_dataset(a.data);
    rc.model.input_features = samples.front().features();
    rc.model.seq_len = samples.front().length();
    rc.model.validate();

    const auto stats = data::normalize_fit(samples);
    samples = data::normalize_apply(stats, samples);
    auto model = models::Model::build(rc.model);
    const auto trace = training::fit(model, samples, {}, rc.train);
    const double acc = training::dataset_accuracy(model, samples, rc.threshold);

    models::TrainingMeta meta;
    meta.epochs = trace.epochs.size();
    meta.final_loss = trace.final_loss();
    meta.norm_mean = stats.mean;
    meta.norm_std = stats.std;
    if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
    models::save_checkpoint(model, meta, a.out);
    write_text(sidecar(a.out, ".trace.csv"), trace.to_csv(false));

    double seconds = 0.0;
    for (const auto& e : trace.epochs) seconds += e.seconds;
    std::printf("variant %s, %zu parameters, %zu samples\n", std::string(models::variant_name(rc.model.variant)).c_str(),
                model.parameter_count(), samples.size());
    std::printf("epochs %zu, final loss %.6f, %.1f s\n", trace.epochs.size(), trace.final_loss(), seconds);
    std::printf("train accuracy %.4f\n", acc);

    json m = base_manifest("train", rc.model.seed);
    m["inputs"] = {{"data", a.data}, {"config", a.config}};
    m["outputs"] = {{"checkpoint", a.out}, {"trace", sidecar(a.out, ".trace.csv").string()}};
    m["config"] = config_json(rc);
    m["model"] = eval::to_json(rc.model);
    m["train_accuracy"] = acc;
    m["final_loss"] = trace.final_loss();
    write_manifest(sidecar(a.out, ".manifest.json"), m);
    return kExitOk;
}

// ---- crossval

struct CrossvalArgs {
    std::string data;
    std::string variants = "hybrid_concat,bilstm_then_transformer,transformer_then_bilstm,bilstm_attention";
    std::size_t k = 10;
    std::uint64_t seed = 0;
    std::string out;
    bool manual_features = false;
    std::string config;
    std::size_t jobs = 1;
};

int cmd_crossval(const CrossvalArgs& a) {
    const RunConfig rc = resolve_config(a.config);
    std::vector<models::Variant> variants;
    for (const auto& name : split_list(a.variants)) {
        try {
            variants.push_back(models::parse_variant(name));
        } catch (const std::invalid_argument& e) {
            throw InputError(e.what());
        }
    }
    if (variants.empty()) throw InputError("--variants is empty");
    if (a.jobs == 0) throw InputError("--jobs must be >= 1");
    const auto samples = read_dataset(a.data);
    eval::FoldPlan plan;
    try {
        plan = eval::kfold_plan(samples.size(), a.k, a.seed);
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }

    std::vector<data::Sample> featured;
    if (a.manual_features) {
        for (const auto& s : samples) featured.push_back(data::manual_features(s));
    }

    eval::CrossvalOptions co;
    co.jobs = a.jobs;
    co.threshold = rc.threshold;

    std::vector<eval::VariantResult> results;
    auto run = [&](models::Variant v, bool manual) {
        models::ModelConfig mc = rc.model;
        mc.variant = v;
        eval::VariantResult r;
        r.id = std::string(models::variant_name(v)) + (manual ? "_features" : "");
        r.display = eval::display_name(v, manual);
        const auto& set = manual ? featured : samples;
        const auto t0 = std::chrono::steady_clock::now();
        r.result = eval::crossval(mc, rc.train, set, plan, co);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        r.config = mc;
        r.config.input_features = set.front().features();
        r.config.seq_len = set.front().length();
        const auto& agg = r.result.aggregate;
        std::printf("%-34s acc %.4f  f1 %.4f  auc %.4f  (%zu/%zu folds ok, %.1f s)\n", r.display.c_str(), agg.accuracy,
                    agg.f1, agg.roc_auc, plan.k - r.result.failed_folds(), plan.k, secs);
        std::fflush(stdout);
        results.push_back(std::move(r));
    };
    for (auto v : variants) run(v, false);
    if (a.manual_features) {
        bool has_attention = false;
        for (auto v : variants) has_attention |= v == models::Variant::bilstm_attention;
        if (has_attention) run(models::Variant::bilstm_attention, true);
    }

    json m = base_manifest("crossval", a.seed);
    m["inputs"] = {{"data", a.data}, {"config", a.config}};
    m["outputs"] = {{"dir", a.out}};
    m["config"] = config_json(rc);
    m["k"] = a.k;
    m["jobs"] = a.jobs;
    m["manual_features"] = a.manual_features;
    m["summary"] = summary_json(data::summarize(samples));
    eval::emit_report(results, a.out, m);
    std::cout << "\n" << eval::summary_text(results);

    std::size_t failed = 0;
    for (const auto& r : results) failed += r.result.failed_folds();
    if (failed) {
        std::fprintf(stderr, "%zu fold(s) failed; see %s/summary.txt\n", failed, a.out.c_str());
        return kExitNumeric;
    }
    return kExitOk;
}

// ---- gradcheck

struct GradcheckArgs {
    std::uint64_t seed = 0;
    std::string out;
    std::string corrupt_op;
};

int cmd_gradcheck(const GradcheckArgs& a) {
    if (!a.corrupt_op.empty()) ad::testing::corrupt_backward(a.corrupt_op);
    const auto t0 = std::chrono::steady_clock::now();
    const auto entries = run_gradcheck_suite(a.seed);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::vector<std::string> failing;
    json rows = json::array();
    for (const auto& e : entries) {
        std::printf("%-36s %.3e  (tol %.0e)  %s", e.component.c_str(), e.max_rel_error, e.tolerance,
                    e.passed() ? "ok  " : "FAIL  ");
        std::printf("worst %s\n", e.worst.c_str());
        rows.push_back({{"component", e.component}, {"max_rel_error", e.max_rel_error}, {"tolerance", e.tolerance},
                        {"worst", e.worst}, {"passed", e.passed()}});
        if (!e.passed()) failing.push_back(e.component);
    }
    std::fprintf(stderr, "%zu components checked in %.2f s\n", entries.size(), secs);
    if (!a.out.empty()) {
        json m = base_manifest("gradcheck", a.seed);
        m["outputs"] = {{"dir", a.out}};
        m["results"] = rows;
        write_manifest(fs::path(a.out) / "manifest.json", m);
    }
    if (!failing.empty()) {
        std::printf("gradient check failed:");
        for (const auto& f : failing) std::printf(" %s", f.c_str());
        std::printf("\n");
        return kExitCheck;
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Household occupancy detection from hourly smart meter data"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    PreprocessArgs pa;
    auto* pre = app.add_subcommand("preprocess", "Resample raw 1 Hz household data to hourly samples");
    pre->add_option("--raw", pa.raw, "Raw data directory (default: $OCCUPANCY_DATA_DIR)");
    pre->add_option("--out", pa.out, "Processed dataset file")->required();
    pre->add_option("--min-complete", pa.min_complete, "Minimum fraction of present entries per hour");
    pre->add_option("--columns", pa.columns, "Comma-separated zero-based columns of the day files to keep");

    SynthArgs sa;
    auto* syn = app.add_subcommand("synth", "Generate a synthetic processed dataset");
    syn->add_option("--households", sa.households, "Number of households");
    syn->add_option("--days", sa.days, "Days per household");
    syn->add_option("--seed", sa.seed, "Generator seed");
    syn->add_option("--boost", sa.boost, "Occupant activity strength; 0 gives label-independent features");
    syn->add_option("--out", sa.out, "Processed dataset file")->required();

    TrainArgs ta;
    auto* tr = app.add_subcommand("train", "Train one model on a processed dataset");
    tr->add_option("--data", ta.data, "Processed dataset file")->required();
    tr->add_option("--variant", ta.variant, "Model variant");
    tr->add_option("--config", ta.config, "key = value config file");
    tr->add_option("--out", ta.out, "Checkpoint path")->required();

    CrossvalArgs ca;
    auto* cv = app.add_subcommand("crossval", "K-fold cross-validation of one or more variants");
    cv->add_option("--data", ca.data, "Processed dataset file")->required();
    cv->add_option("--variants", ca.variants, "Comma-separated variant list");
    cv->add_option("--k", ca.k, "Fold count");
    cv->add_option("--seed", ca.seed, "Fold assignment seed");
    cv->add_option("--out", ca.out, "Report directory")->required();
    cv->add_flag("--manual-features", ca.manual_features, "Add the attention baseline on windowed features");
    cv->add_option("--config", ca.config, "key = value config file");
    cv->add_option("--jobs", ca.jobs, "Folds trained in parallel");

    GradcheckArgs ga;
    auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of every op, layer and model variant");
    gc->add_option("--seed", ga.seed, "Seed for the random test points");
    gc->add_option("--out", ga.out, "Directory for the run manifest");
    gc->add_option("--corrupt-op", ga.corrupt_op)->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInput;
    }

    try {
        if (*pre) return cmd_preprocess(pa);
        if (*syn) return cmd_synth(sa);
        if (*tr) return cmd_train(ta);
        if (*cv) return cmd_crossval(ca);
        if (*gc) return cmd_gradcheck(ga);
    } catch (const training::NumericAbort& e) {
        std::fprintf(stderr, "numeric abort: %s\n", e.what());
        return kExitNumeric;
    } catch (const InputError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInput;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitInput;
    } catch (const data::DataError& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return kExitInput;
    } catch (const models::CheckpointError& e) {
        std::fprintf(stderr, "checkpoint error: %s\n", e.what());
        return kExitInput;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInput;
    }
    return kExitInput;
}
