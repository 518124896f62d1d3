#include "occupancy/gradcheck.hpp"
#include "occupancy/models.hpp"
#include "occupancy/training.hpp"
#include "convert.hpp"
#include "test_common.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace occupancy;
using namespace occupancy::models;
using occupancy::test::random_tensor;
using occupancy::test::scratch_dir;

namespace {

ModelConfig tiny(Variant v, std::size_t T = 4, std::size_t F = 3) {
    ModelConfig c;
    c.variant = v;
    c.input_features = F;
    c.seq_len = T;
    c.lstm_hidden = 3;
    c.model_width = 4;
    c.heads = 2;
    c.head_dim = 2;
    c.ffn_width = 5;
    c.seed = 42;
    return c;
}

std::string read_bytes(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_bytes(const std::filesystem::path& p, const std::string& s) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f << s;
}

} // namespace

TEST(Variants, NamesRoundTripAndUnknownListsAll) {
    for (auto v : all_variants()) EXPECT_EQ(parse_variant(variant_name(v)), v);
    try {
        parse_variant("lstm");
        FAIL();
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        for (auto v : all_variants()) EXPECT_NE(msg.find(variant_name(v)), std::string::npos) << msg;
    }
}

TEST(Build, DeterministicForSameSeed) {
    for (auto v : all_variants()) {
        auto a = Model::build(tiny(v));
        auto b = Model::build(tiny(v));
        auto pa = a.parameters();
        auto pb = b.parameters();
        ASSERT_EQ(pa.size(), pb.size());
        for (std::size_t k = 0; k < pa.size(); ++k) {
            EXPECT_EQ(pa[k].name, pb[k].name);
            EXPECT_EQ(pa[k].tensor->storage(), pb[k].tensor->storage());
        }
        auto cfg = tiny(v);
        cfg.seed = 43;
        auto c = Model::build(cfg);
        EXPECT_NE(c.parameters().front().tensor->storage(), pa.front().tensor->storage());
    }
}

TEST(Build, HeadInputWidths) {
    const std::size_t H = 3, W = 4;
    EXPECT_EQ(Model::build(tiny(Variant::hybrid_concat)).head_input_width(), 2 * H + W);
    EXPECT_EQ(Model::build(tiny(Variant::bilstm_then_transformer)).head_input_width(), W);
    EXPECT_EQ(Model::build(tiny(Variant::transformer_then_bilstm)).head_input_width(), 2 * H);
    EXPECT_EQ(Model::build(tiny(Variant::bilstm_attention)).head_input_width(), 4 * H);
}

TEST(Build, ParameterCountHandComputed) {
    ModelConfig c;
    c.variant = Variant::hybrid_concat;
    c.input_features = 9;
    c.lstm_hidden = 4;
    c.model_width = 8;
    c.heads = 2;
    c.head_dim = 4;
    c.ffn_width = 16;
    // Bi-LSTM 2*4*(9*4 + 4*4 + 4) = 448; projection 9*8 + 8 = 80;
    // encoder 2*3*8*4 + 8*8 + (8*16 + 16) + (16*8 + 8) + 4*8 = 568; head 16 + 1 = 17.
    EXPECT_EQ(Model::build(c).parameter_count(), 1113u);
}

TEST(Build, RejectsInvalidConfig) {
    auto c = tiny(Variant::hybrid_concat);
    c.heads = 0;
    EXPECT_THROW(Model::build(c), std::invalid_argument);
    c = tiny(Variant::hybrid_concat);
    c.dropout = 1.0;
    EXPECT_THROW(Model::build(c), std::invalid_argument);
}

TEST(Forward, ShapeAndRangeForAllVariants) {
    Rng rng(1);
    for (auto v : all_variants()) {
        auto m = Model::build(tiny(v, 5, 3));
        const auto p = m.predict_proba(random_tensor({5, 3}, rng, -3, 3));
        ASSERT_EQ(p.size(), 5u);
        for (double x : p) {
            EXPECT_GT(x, 0.0);
            EXPECT_LT(x, 1.0);
        }
        EXPECT_THROW(m.predict_proba(random_tensor({4, 3}, rng)), ShapeError);
    }
}

TEST(Forward, ZeroHeadGivesOneHalf) {
    Rng rng(2);
    for (auto v : all_variants()) {
        auto m = Model::build(tiny(v));
        for (auto& w : m.head().weight.data()) w = 0.0;
        for (auto& b : m.head().bias.data()) b = 0.0;
        for (double x : m.predict_proba(random_tensor({4, 3}, rng))) EXPECT_EQ(x, 0.5);
    }
}

TEST(Forward, HybridMatchesCompositionOracle) {
    Rng rng(3);
    for (int rep = 0; rep < 10; ++rep) {
        auto cfg = tiny(Variant::hybrid_concat, 4, 2);
        cfg.seed = 100 + rep;
        auto m = Model::build(cfg);
        const Tensor x = random_tensor({4, 2}, rng, -2, 2);
        const auto p = m.predict_proba(x);

        const auto X = oracle::to_mat(x);
        const auto rnn = oracle::bilstm(X, oracle::from(m.bilstm()->fwd), oracle::from(m.bilstm()->bwd));
        auto xp = oracle::add_row(oracle::matmul(X, oracle::to_mat(m.input_projection()->weight)),
                                  oracle::to_vec(m.input_projection()->bias));
        for (std::size_t t = 0; t < 4; ++t)
            for (std::size_t c = 0; c < 4; ++c) xp[t][c] += oracle::positional_encoding(t, c, 4);
        const auto trans = oracle::encoder_block(xp, oracle::from(m.encoder().at(0)));
        const auto w = oracle::to_vec(m.head().weight);
        for (std::size_t t = 0; t < 4; ++t) {
            std::vector<double> feat = rnn[t];
            feat.insert(feat.end(), trans[t].begin(), trans[t].end());
            double z = m.head().bias[0];
            for (std::size_t j = 0; j < feat.size(); ++j) z += feat[j] * w[j];
            EXPECT_NEAR(p[t], oracle::sigmoid(z), 1e-10);
        }
    }
}

TEST(Forward, BranchAblationEqualsBiLstmClassifier) {
    Rng rng(4);
    auto m = Model::build(tiny(Variant::hybrid_concat));
    const std::size_t rnn_width = 6;
    for (std::size_t j = rnn_width; j < m.head().weight.size(); ++j) m.head().weight[j] = 0.0;
    const Tensor x = random_tensor({4, 3}, rng);
    const auto p = m.predict_proba(x);
    ad::Tape tape;
    const Tensor h = m.bilstm()->forward(tape, tape.constant(x)).value();
    for (std::size_t t = 0; t < 4; ++t) {
        double z = m.head().bias[0];
        for (std::size_t j = 0; j < rnn_width; ++j) z += h.at(t, j) * m.head().weight[j];
        EXPECT_NEAR(p[t], 1.0 / (1.0 + std::exp(-z)), 1e-14);
    }
}

TEST(Forward, TransformerThenBiLstmFeedsEncoderWidth) {
    auto m = Model::build(tiny(Variant::transformer_then_bilstm));
    EXPECT_EQ(m.bilstm()->fwd.input(), 4u);
}

TEST(Forward, DropoutOnlyInTraining) {
    Rng rng(5);
    auto cfg = tiny(Variant::hybrid_concat);
    cfg.dropout = 0.5;
    auto m = Model::build(cfg);
    const Tensor x = random_tensor({4, 3}, rng);
    const auto eval1 = m.predict_proba(x);
    const auto eval2 = m.predict_proba(x);
    EXPECT_EQ(eval1, eval2);
    Rng drop(6);
    ForwardOptions opts;
    opts.training = true;
    opts.dropout_rng = &drop;
    ad::Tape tape;
    const Tensor train = m.forward(tape, x, opts).value();
    EXPECT_NE(std::vector<double>(train.data().begin(), train.data().end()), eval1);
    opts.dropout_rng = nullptr;
    ad::Tape tape2;
    EXPECT_THROW(m.forward(tape2, x, opts), std::invalid_argument);
}

TEST(Forward, FullModelGradients) {
    Rng rng(7);
    for (auto v : all_variants()) {
        auto m = Model::build(tiny(v));
        const Tensor x = random_tensor({4, 3}, rng);
        const std::vector<int> y = {1, 0, 1, 1};
        auto r = ad::grad_check_params(
            [&](ad::Tape& tape) { return training::bce_per_sample(m.forward(tape, x), y); }, m.parameters());
        EXPECT_LT(r.max_rel_error, 1e-4) << variant_name(v) << " " << r.worst;
    }
}

TEST(Predict, Thresholds) {
    EXPECT_EQ(threshold_labels(std::vector<double>{0.4, 0.6}), (std::vector<int>{0, 1}));
    EXPECT_EQ(threshold_labels(std::vector<double>{0.5}), (std::vector<int>{1}));
    EXPECT_EQ(threshold_labels(std::vector<double>{0.99, 0.9995}, 0.999), (std::vector<int>{0, 1}));
    EXPECT_THROW(threshold_labels(std::vector<double>{0.5}, 0.0), std::invalid_argument);
    EXPECT_THROW(threshold_labels(std::vector<double>{0.5}, 1.0), std::invalid_argument);
}

TEST(Predict, MonotoneInThreshold) {
    Rng rng(8);
    std::vector<double> p(200);
    for (auto& v : p) v = rng.uniform(0, 1);
    auto prev = threshold_labels(p, 0.01);
    for (double thr = 0.02; thr < 1.0; thr += 0.01) {
        auto cur = threshold_labels(p, thr);
        for (std::size_t i = 0; i < p.size(); ++i) EXPECT_LE(cur[i], prev[i]);
        prev = cur;
    }
}

TEST(Checkpoint, RoundTripIsBitIdentical) {
    Rng rng(9);
    const auto dir = scratch_dir("ckpt_roundtrip");
    for (auto v : all_variants()) {
        auto cfg = tiny(v);
        cfg.dropout = 0.25;
        auto m = Model::build(cfg);
        TrainingMeta meta{7, 0.123456789, {1.0, 2.0, 3.0}, {0.5, 0.25, 2.0}};
        const auto path = dir / (std::string(variant_name(v)) + ".ckpt");
        save_checkpoint(m, meta, path);
        auto loaded = load_checkpoint(path, v);
        EXPECT_EQ(loaded.model.config(), cfg);
        EXPECT_EQ(loaded.meta.epochs, 7u);
        EXPECT_EQ(loaded.meta.final_loss, 0.123456789);
        EXPECT_EQ(loaded.meta.norm_mean, meta.norm_mean);
        EXPECT_EQ(loaded.meta.norm_std, meta.norm_std);
        const Tensor x = random_tensor({4, 3}, rng);
        EXPECT_EQ(m.predict_proba(x), loaded.model.predict_proba(x));
        const auto again = dir / "again.ckpt";
        save_checkpoint(loaded.model, loaded.meta, again);
        EXPECT_EQ(read_bytes(path), read_bytes(again));
    }
}

TEST(Checkpoint, TruncatedFileIsRejected) {
    const auto dir = scratch_dir("ckpt_truncated");
    auto m = Model::build(tiny(Variant::hybrid_concat));
    save_checkpoint(m, {}, dir / "m.ckpt");
    const auto bytes = read_bytes(dir / "m.ckpt");
    for (std::size_t cut : {bytes.size() - 1, bytes.size() / 2, std::size_t{10}}) {
        write_bytes(dir / "cut.ckpt", bytes.substr(0, cut));
        EXPECT_THROW(load_checkpoint(dir / "cut.ckpt"), CheckpointError) << cut;
    }
    write_bytes(dir / "long.ckpt", bytes + "x");
    EXPECT_THROW(load_checkpoint(dir / "long.ckpt"), CheckpointError);
    EXPECT_THROW(load_checkpoint(dir / "missing.ckpt"), CheckpointError);
}

TEST(Checkpoint, VariantMismatchIsRejected) {
    const auto dir = scratch_dir("ckpt_variant");
    auto m = Model::build(tiny(Variant::bilstm_attention));
    save_checkpoint(m, {}, dir / "m.ckpt");
    EXPECT_THROW(load_checkpoint(dir / "m.ckpt", Variant::hybrid_concat), CheckpointError);
    EXPECT_NO_THROW(load_checkpoint(dir / "m.ckpt", Variant::bilstm_attention));
}

TEST(Checkpoint, VersionAndShapeErrors) {
    const auto dir = scratch_dir("ckpt_version");
    auto m = Model::build(tiny(Variant::hybrid_concat));
    save_checkpoint(m, {}, dir / "m.ckpt");
    const auto bytes = read_bytes(dir / "m.ckpt");

    auto bumped = bytes;
    bumped.replace(bumped.find("version = 1"), 11, "version = 9");
    write_bytes(dir / "v.ckpt", bumped);
    EXPECT_THROW(load_checkpoint(dir / "v.ckpt"), CheckpointError);

    // Same byte length, different architecture: stored shapes no longer fit.
    auto reshaped = bytes;
    reshaped.replace(reshaped.find("lstm_hidden = 3"), 15, "lstm_hidden = 5");
    write_bytes(dir / "s.ckpt", reshaped);
    EXPECT_THROW(load_checkpoint(dir / "s.ckpt"), CheckpointError);

    auto renamed = bytes;
    renamed.replace(renamed.find("head.weight"), 11, "head.wei9ht");
    write_bytes(dir / "n.ckpt", renamed);
    EXPECT_THROW(load_checkpoint(dir / "n.ckpt"), CheckpointError);
}
