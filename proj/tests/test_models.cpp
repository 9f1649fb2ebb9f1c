#include "vqa/autodiff/grad_check.hpp"
#include "vqa/autodiff/ops.hpp"
#include "vqa/errors.hpp"
#include "vqa/models.hpp"
#include "vqa/train.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <sstream>

using namespace vqa;
using namespace vqa::model;
using ad::Tape;
using ad::Tensor;

namespace {

ModelConfig small_config(std::size_t v = 10, std::size_t k = 3) {
    ModelConfig c;
    c.input_dim = v;
    c.output_dim = k;
    c.textual_embedding_dim = 4;
    c.hidden_state_dim = 5;
    c.seed = 17;
    return c;
}

Batch question_batch(std::vector<int> values, std::size_t rows, std::size_t cols) {
    Batch b;
    b.questions.rows = rows;
    b.questions.cols = cols;
    b.questions.values = std::move(values);
    return b;
}

features::FeatureMatrix visual(std::size_t rows, std::size_t cols, Rng& rng) {
    features::FeatureMatrix m;
    m.rows = rows;
    m.cols = cols;
    for (std::size_t i = 0; i < rows * cols; ++i) m.values.push_back(rng.uniform(-1, 1));
    return m;
}

std::vector<double> snapshot(const Model& m) {
    std::vector<double> out;
    for (const auto& p : m.parameters()) out.insert(out.end(), p.tensor.data().begin(), p.tensor.data().end());
    return out;
}

}  // namespace

TEST_CASE("architecture and option names") {
    CHECK(parse_architecture("blind-bow") == Architecture::blind_bow);
    CHECK(parse_architecture("vl-rnn") == Architecture::vision_rnn);
    CHECK(to_string(Architecture::vision_bow) == "vl-bow");
    CHECK(parse_merge_mode("ave") == MergeMode::ave);
    CHECK(parse_cell("lstm") == CellKind::lstm);
    CHECK(parse_pooling("sum") == Pooling::sum);
    CHECK_THROWS_AS(parse_architecture("cnn"), ConfigError);
    CHECK_THROWS_AS(parse_merge_mode("max"), ConfigError);
}

TEST_CASE("blind BOW shape contract") {
    Rng rng(1);
    const Model m = build_blind_bow(small_config(), rng);
    const Batch b = question_batch({0, 0, 2, 3, 4, 0, 5, 6, 7, 9}, 2, 5);
    Tape tape;
    const Tensor s = m.forward(tape, b, false, rng);
    CHECK(s.shape() == ad::Shape{2, 3});

    const Batch pads = question_batch({0, 0, 0, 2, 3, 4}, 2, 3);
    CHECK_THROWS_AS(m.predict_scores(pads), EmptySequenceError);
}

TEST_CASE("zero recurrent parameters keep a zero state") {
    Rng rng(2);
    auto g = make_gru_params(3, 4, rng);
    auto l = make_lstm_params(3, 4, rng);
    for (Tensor t : {g.w_z, g.u_z, g.b_z, g.w_r, g.u_r, g.b_r, g.w_h, g.u_h, g.b_h, l.w_i, l.u_i, l.b_i, l.w_f,
                     l.u_f, l.b_f, l.w_o, l.u_o, l.b_o, l.w_g, l.u_g, l.b_g}) {
        std::fill(t.data().begin(), t.data().end(), 0.0);
    }
    Tape tape;
    const Tensor h = Tensor::zeros({2, 4});
    const Tensor x = Tensor::from_data({2, 3}, {1, 2, 3, -1, -2, -3});
    for (double v : gru_step(tape, h, x, g).data()) CHECK(v == 0.0);
    const auto [h2, c2] = lstm_step(tape, h, Tensor::zeros({2, 4}), x, l);
    for (double v : h2.data()) CHECK(v == 0.0);
    for (double v : c2.data()) CHECK(v == 0.0);
}

TEST_CASE("LSTM forget bias starts at one") {
    Rng rng(3);
    const auto l = make_lstm_params(3, 4, rng);
    for (double v : l.b_f.data()) CHECK(v == 1.0);
    for (double v : l.b_i.data()) CHECK(v == 0.0);
}

TEST_CASE("initial weights respect the Glorot bound") {
    Rng rng(4);
    ModelConfig c = small_config(50, 7);
    const Model m = build_blind_bow(c, rng);
    const auto& w = m.parameter("classifier.W");
    const double bound = std::sqrt(6.0 / (4.0 + 7.0));
    for (double v : w.data()) CHECK(std::abs(v) <= bound);
    CHECK_THROWS_AS(m.parameter("nope"), LookupError);
}

TEST_CASE("fusion dimension rule") {
    Rng rng(5);
    ModelConfig c = small_config();
    c.visual_dim = 6;

    c.merge = MergeMode::concat;
    c.visual_embedding_dim = 6;
    const Model cat = build_vision_bow(c, rng);
    CHECK(cat.fused_dim() == 10);
    Batch b = question_batch({0, 2, 3, 4, 5, 6}, 2, 3);
    b.visual = visual(2, 6, rng);
    Tape tape;
    CHECK(cat.fused_representation(tape, b).shape() == ad::Shape{2, 10});

    c.merge = MergeMode::mul;
    c.visual_embedding_dim = 0;
    CHECK_THROWS_AS(build_vision_bow(c, rng), ConfigError);
    c.visual_embedding_dim = 4;
    CHECK_NOTHROW(build_vision_bow(c, rng));

    ModelConfig r = small_config();
    r.visual_dim = 4;
    r.merge = MergeMode::sum;
    CHECK_THROWS_AS(build_vision_rnn(r, rng), ConfigError);  // d_h = 5 vs 4
}

TEST_CASE("sum merge with a zero visual vector leaves the language vector") {
    Rng rng(6);
    ModelConfig c = small_config();
    c.visual_dim = 4;
    c.merge = MergeMode::sum;
    const Model vis = build_vision_bow(c, rng);
    Batch b = question_batch({0, 2, 3, 4, 5, 6}, 2, 3);
    b.visual.rows = 2;
    b.visual.cols = 4;
    b.visual.values.assign(8, 0.0);
    Tape tape;
    const Tensor fused = vis.fused_representation(tape, b);
    const Tensor table = vis.parameter("embedding.W");
    const Tensor emb = ad::embedding_lookup(tape, table, b.questions.values, 2, 3);
    const std::uint8_t mask[] = {0, 1, 1, 1, 1, 1};
    const Tensor lang = ad::masked_temporal_average(tape, emb, mask);
    for (std::size_t i = 0; i < 8; ++i) CHECK(fused.data()[i] == lang.data()[i]);
}

TEST_CASE("ave merge is the elementwise mean") {
    Rng rng(7);
    ModelConfig c = small_config();
    c.visual_dim = 4;
    c.merge = MergeMode::ave;
    const Model ave = build_vision_bow(c, rng);
    c.merge = MergeMode::sum;
    Rng rng2(7);
    const Model sum = build_vision_bow(c, rng2);
    Batch b = question_batch({2, 3, 4, 5}, 2, 2);
    b.visual = visual(2, 4, rng);
    Tape tape;
    const Tensor a = ave.fused_representation(tape, b);
    const Tensor s = sum.fused_representation(tape, b);
    for (std::size_t i = 0; i < 8; ++i) CHECK(a.data()[i] == doctest::Approx(0.5 * s.data()[i]));
}

TEST_CASE("every model produces distributions") {
    Rng rng(8);
    const std::vector<int> q{0, 2, 3, 4, 5, 6, 7, 8, 0, 0, 0, 9};
    for (auto arch : {Architecture::blind_bow, Architecture::blind_rnn, Architecture::vision_bow,
                      Architecture::vision_rnn}) {
        for (auto cell : {CellKind::gru, CellKind::lstm}) {
            ModelConfig c = small_config(10, 6);
            c.cell = cell;
            c.visual_dim = is_vision(arch) ? 3 : 0;
            Rng build_rng(9);
            const Model m(arch, c, build_rng);
            Batch b = question_batch(q, 3, 4);
            if (is_vision(arch)) b.visual = visual(3, 3, rng);
            const Tensor s = m.predict_scores(b);
            for (std::size_t r = 0; r < 3; ++r) {
                double total = 0.0;
                for (std::size_t k = 0; k < 6; ++k) {
                    CHECK(s.data()[r * 6 + k] >= 0.0);
                    total += s.data()[r * 6 + k];
                }
                CHECK(std::abs(total - 1.0) < 1e-9);
            }
        }
    }
}

TEST_CASE("BOW ignores word order, the RNN does not") {
    Rng rng(10);
    const Model bow = build_blind_bow(small_config(), rng);
    const Model rnn = build_blind_rnn(small_config(), rng);
    const Batch a = question_batch({0, 2, 3, 4}, 1, 4);
    const Batch b = question_batch({0, 4, 2, 3}, 1, 4);
    const auto sa = bow.predict_scores(a), sb = bow.predict_scores(b);
    for (std::size_t k = 0; k < 3; ++k) CHECK(sa.data()[k] == doctest::Approx(sb.data()[k]).epsilon(1e-12));
    const auto ra = rnn.predict_scores(a), rb = rnn.predict_scores(b);
    bool differs = false;
    for (std::size_t k = 0; k < 3; ++k) differs |= ra.data()[k] != rb.data()[k];
    CHECK(differs);
}

TEST_CASE("pad steps leave the recurrent state unchanged") {
    Rng rng(11);
    const Model rnn = build_blind_rnn(small_config(), rng);
    const auto short_q = rnn.predict_scores(question_batch({2, 3}, 1, 2));
    const auto padded = rnn.predict_scores(question_batch({0, 0, 0, 2, 3}, 1, 5));
    CHECK(std::memcmp(short_q.data().data(), padded.data().data(), 3 * sizeof(double)) == 0);
}

TEST_CASE("pad embedding row receives no gradient") {
    for (auto arch : {Architecture::blind_bow, Architecture::blind_rnn}) {
        Rng rng(12);
        Model m(arch, small_config(), rng);
        m.zero_grad();
        const Batch b = question_batch({0, 0, 2, 3, 0, 4, 5, 6}, 2, 4);
        Tape tape;
        const int targets[] = {0, 2};
        tape.backward(train::cross_entropy(tape, m.forward(tape, b, true, rng), targets));
        const auto g = m.parameter("embedding.W").grad();
        for (std::size_t j = 0; j < 4; ++j) CHECK(g[j] == 0.0);
        bool nonzero = false;
        for (std::size_t j = 8; j < 12; ++j) nonzero |= g[j] != 0.0;
        CHECK(nonzero);
    }
}

TEST_CASE("same seed builds identical parameters") {
    ModelConfig c = small_config();
    c.visual_dim = 3;
    c.visual_embedding_dim = 2;
    const auto a = snapshot(build_model(Architecture::vision_rnn, c));
    const auto b = snapshot(build_model(Architecture::vision_rnn, c));
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
    c.seed += 1;
    CHECK(snapshot(build_model(Architecture::vision_rnn, c)) != a);
}

TEST_CASE("decoding") {
    const Tensor s = Tensor::from_data({3, 3}, {0.1, 0.7, 0.2, 0.4, 0.4, 0.2, 0.2, 0.3, 0.5});
    CHECK(argmax_rows(s) == std::vector<int>{1, 0, 2});

    Rng rng(13);
    const Model m = build_blind_bow(small_config(10, 3), rng);
    const auto answers = text::Vocabulary::from_words({"a"});
    const auto words = decode_predictions(m, question_batch({2, 3}, 2, 1), answers);
    CHECK(words.size() == 2);
    CHECK_THROWS_AS(decode_predictions(m, question_batch({2}, 1, 1), text::Vocabulary::from_words({"a", "b"})),
                    ContractError);
}

TEST_CASE("visual inputs carry no gradient and stay unchanged") {
    Rng rng(14);
    ModelConfig c = small_config();
    c.visual_dim = 3;
    c.visual_embedding_dim = 4;
    c.merge = MergeMode::mul;
    Model m(Architecture::vision_bow, c, rng);
    Batch b = question_batch({2, 3, 4, 5}, 2, 2);
    b.visual = visual(2, 3, rng);
    const auto before = b.visual.values;
    const int targets[] = {1, 2};
    train::TrainingConfig tc;
    tc.epochs = 3;
    tc.batch_size = 2;
    tc.validation_split = 0.0;
    train::fit(m, b, targets, tc);
    CHECK(b.visual.values == before);
    for (const auto& p : m.parameters()) CHECK(p.name.find("features") == std::string::npos);
}

TEST_CASE("checkpoint round trip") {
    ModelConfig c = small_config();
    c.cell = CellKind::lstm;
    const Model a = build_model(Architecture::blind_rnn, c);
    std::stringstream s;
    write_checkpoint(a, s);
    const std::string text = s.str();

    c.seed = 99;
    Model b = build_model(Architecture::blind_rnn, c);
    std::istringstream in(text);
    read_checkpoint(b, in);
    const auto sa = snapshot(a), sb = snapshot(b);
    CHECK(std::memcmp(sa.data(), sb.data(), sa.size() * sizeof(double)) == 0);

    std::istringstream layout_in(text);
    const auto layout = checkpoint_layout(layout_in);
    CHECK(layout.front().first == "embedding.W");
    CHECK(layout.front().second == ad::Shape{10, 4});

    Model bow = build_model(Architecture::blind_bow, small_config());
    std::istringstream wrong(text);
    CHECK_THROWS_AS(read_checkpoint(bow, wrong), FormatError);
    std::istringstream truncated(text.substr(0, text.size() / 2));
    CHECK_THROWS_AS(read_checkpoint(b, truncated), FormatError);
}
