#include "vqa/models.hpp"

#include "vqa/autodiff/ops.hpp"
#include "vqa/errors.hpp"

#include <algorithm>
#include <cmath>

namespace vqa::model {

using ad::Shape;
using ad::Tape;
using ad::Tensor;

std::string_view to_string(Architecture a) {
    switch (a) {
        case Architecture::blind_bow: return "blind-bow";
        case Architecture::blind_rnn: return "blind-rnn";
        case Architecture::vision_bow: return "vl-bow";
        case Architecture::vision_rnn: return "vl-rnn";
    }
    return "?";
}

std::string_view to_string(MergeMode m) {
    switch (m) {
        case MergeMode::concat: return "concat";
        case MergeMode::mul: return "mul";
        case MergeMode::sum: return "sum";
        case MergeMode::ave: return "ave";
    }
    return "?";
}

std::string_view to_string(CellKind c) { return c == CellKind::gru ? "gru" : "lstm"; }

std::string_view to_string(Pooling p) { return p == Pooling::average ? "ave" : "sum"; }

Architecture parse_architecture(std::string_view s) {
    for (auto a : {Architecture::blind_bow, Architecture::blind_rnn, Architecture::vision_bow,
                   Architecture::vision_rnn}) {
        if (s == to_string(a)) return a;
    }
    throw ConfigError("unknown model '" + std::string(s) + "'");
}

MergeMode parse_merge_mode(std::string_view s) {
    for (auto m : {MergeMode::concat, MergeMode::mul, MergeMode::sum, MergeMode::ave}) {
        if (s == to_string(m)) return m;
    }
    throw ConfigError("unknown merge mode '" + std::string(s) + "'");
}

CellKind parse_cell(std::string_view s) {
    if (s == "gru") return CellKind::gru;
    if (s == "lstm") return CellKind::lstm;
    throw ConfigError("unknown cell '" + std::string(s) + "'");
}

Pooling parse_pooling(std::string_view s) {
    if (s == "ave") return Pooling::average;
    if (s == "sum") return Pooling::sum;
    throw ConfigError("unknown pooling '" + std::string(s) + "'");
}

bool is_vision(Architecture a) {
    return a == Architecture::vision_bow || a == Architecture::vision_rnn;
}

bool is_recurrent(Architecture a) {
    return a == Architecture::blind_rnn || a == Architecture::vision_rnn;
}

std::size_t language_dim(Architecture arch, const ModelConfig& cfg) {
    return is_recurrent(arch) ? cfg.hidden_state_dim : cfg.textual_embedding_dim;
}

std::size_t visual_branch_dim(Architecture arch, const ModelConfig& cfg) {
    if (!is_vision(arch)) return 0;
    return cfg.visual_embedding_dim > 0 ? cfg.visual_embedding_dim : cfg.visual_dim;
}

std::size_t fused_dim(Architecture arch, const ModelConfig& cfg) {
    const std::size_t lang = language_dim(arch, cfg);
    if (!is_vision(arch)) return lang;
    return cfg.merge == MergeMode::concat ? lang + visual_branch_dim(arch, cfg) : lang;
}

void ModelConfig::validate(Architecture arch) const {
    if (input_dim < 2) throw ConfigError("input_dim must be at least 2 (<pad> and <unk>)");
    if (output_dim < 1) throw ConfigError("output_dim must be at least 1");
    if (textual_embedding_dim < 1) throw ConfigError("textual_embedding_dim must be positive");
    if (is_recurrent(arch) && hidden_state_dim < 1) {
        throw ConfigError("hidden_state_dim must be positive for recurrent models");
    }
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
        throw ConfigError("dropout rate must lie in [0, 1)");
    }
    if (!is_vision(arch)) return;
    if (visual_dim == 0) throw ConfigError(std::string(to_string(arch)) + " needs visual_dim > 0");
    const std::size_t lang = language_dim(arch, *this);
    const std::size_t vis = visual_branch_dim(arch, *this);
    if (merge != MergeMode::concat && lang != vis) {
        throw ConfigError("merge mode '" + std::string(to_string(merge)) +
                          "' needs equal branch lengths, got language " + std::to_string(lang) +
                          " and visual " + std::to_string(vis));
    }
}

Batch Batch::select(std::span<const std::size_t> rows) const {
    Batch out;
    out.questions = {rows.size(), questions.cols, {}};
    out.questions.values.reserve(rows.size() * questions.cols);
    for (std::size_t r : rows) {
        const auto src = questions.row(r);
        out.questions.values.insert(out.questions.values.end(), src.begin(), src.end());
    }
    if (visual.rows > 0) {
        out.visual = {rows.size(), visual.cols, {}};
        out.visual.values.reserve(rows.size() * visual.cols);
        for (std::size_t r : rows) {
            const auto src = visual.row(r);
            out.visual.values.insert(out.visual.values.end(), src.begin(), src.end());
        }
    }
    return out;
}

namespace {

// Uniform in +-sqrt(6 / (fan_in + fan_out)).
Tensor glorot(Shape shape, Rng& rng) {
    const std::size_t fan_in = shape.front();
    const std::size_t fan_out = shape.size() > 1 ? shape[1] : shape.front();
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor t = Tensor::zeros(std::move(shape), true);
    for (double& v : t.data()) v = rng.uniform(-limit, limit);
    return t;
}

Tensor constant(Shape shape, double value) {
    Tensor t = Tensor::zeros(std::move(shape), true);
    std::fill(t.data().begin(), t.data().end(), value);
    return t;
}

// x W + h U + b
Tensor gate_input(Tape& tape, const Tensor& x, const Tensor& h, const Tensor& w, const Tensor& u,
                  const Tensor& b) {
    return ad::add_bias(tape, ad::add(tape, ad::matmul(tape, x, w), ad::matmul(tape, h, u)), b);
}

std::vector<std::uint8_t> nonpad_mask(const text::IndexMatrix& q) {
    std::vector<std::uint8_t> mask(q.values.size());
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = q.values[i] != text::kPadIndex ? 1 : 0;
    return mask;
}

}  // namespace

Tensor gru_step(Tape& tape, const Tensor& h, const Tensor& x, const GruParams& p) {
    if (h.rank() != 2 || x.rank() != 2 || h.dim(0) != x.dim(0) || p.u_z.dim(0) != h.dim(1) ||
        p.w_z.dim(0) != x.dim(1)) {
        throw DimensionError("gru_step: state " + ad::to_string(h.shape()) + " and input " +
                             ad::to_string(x.shape()) + " do not fit the cell");
    }
    const Tensor z = ad::sigmoid(tape, gate_input(tape, x, h, p.w_z, p.u_z, p.b_z));
    const Tensor r = ad::sigmoid(tape, gate_input(tape, x, h, p.w_r, p.u_r, p.b_r));
    const Tensor candidate =
        ad::tanh(tape, gate_input(tape, x, ad::mul(tape, r, h), p.w_h, p.u_h, p.b_h));
    const Tensor keep = ad::affine(tape, z, -1.0, 1.0);
    return ad::add(tape, ad::mul(tape, keep, h), ad::mul(tape, z, candidate));
}

std::pair<Tensor, Tensor> lstm_step(Tape& tape, const Tensor& h, const Tensor& c, const Tensor& x,
                                    const LstmParams& p) {
    if (h.rank() != 2 || x.rank() != 2 || h.shape() != c.shape() || h.dim(0) != x.dim(0) ||
        p.u_i.dim(0) != h.dim(1) || p.w_i.dim(0) != x.dim(1)) {
        throw DimensionError("lstm_step: state " + ad::to_string(h.shape()) + " and input " +
                             ad::to_string(x.shape()) + " do not fit the cell");
    }
    const Tensor i = ad::sigmoid(tape, gate_input(tape, x, h, p.w_i, p.u_i, p.b_i));
    const Tensor f = ad::sigmoid(tape, gate_input(tape, x, h, p.w_f, p.u_f, p.b_f));
    const Tensor o = ad::sigmoid(tape, gate_input(tape, x, h, p.w_o, p.u_o, p.b_o));
    const Tensor g = ad::tanh(tape, gate_input(tape, x, h, p.w_g, p.u_g, p.b_g));
    Tensor c_next = ad::add(tape, ad::mul(tape, f, c), ad::mul(tape, i, g));
    Tensor h_next = ad::mul(tape, o, ad::tanh(tape, c_next));
    return {std::move(h_next), std::move(c_next)};
}

GruParams make_gru_params(std::size_t input_dim, std::size_t hidden_dim, Rng& rng) {
    GruParams p;
    for (auto [w, u, b] : {std::tie(p.w_z, p.u_z, p.b_z), std::tie(p.w_r, p.u_r, p.b_r),
                           std::tie(p.w_h, p.u_h, p.b_h)}) {
        w = glorot({input_dim, hidden_dim}, rng);
        u = glorot({hidden_dim, hidden_dim}, rng);
        b = constant({hidden_dim}, 0.0);
    }
    return p;
}

LstmParams make_lstm_params(std::size_t input_dim, std::size_t hidden_dim, Rng& rng) {
    LstmParams p;
    for (auto [w, u, b] : {std::tie(p.w_i, p.u_i, p.b_i), std::tie(p.w_f, p.u_f, p.b_f),
                           std::tie(p.w_o, p.u_o, p.b_o), std::tie(p.w_g, p.u_g, p.b_g)}) {
        w = glorot({input_dim, hidden_dim}, rng);
        u = glorot({hidden_dim, hidden_dim}, rng);
        b = constant({hidden_dim}, 0.0);
    }
    std::fill(p.b_f.data().begin(), p.b_f.data().end(), 1.0);
    return p;
}

Tensor& Model::add_param(std::string name, Shape shape, Rng& rng, double fill, bool random) {
    params_.push_back({std::move(name), random ? glorot(std::move(shape), rng)
                                               : constant(std::move(shape), fill)});
    return params_.back().tensor;
}

Model::Model(Architecture arch, ModelConfig cfg, Rng& rng) : arch_(arch), cfg_(std::move(cfg)) {
    cfg_.validate(arch_);
    add_param("embedding.W", {cfg_.input_dim, cfg_.textual_embedding_dim}, rng);

    if (is_recurrent(arch_)) {
        const std::size_t in = cfg_.textual_embedding_dim, hid = cfg_.hidden_state_dim;
        if (cfg_.cell == CellKind::gru) {
            gru_ = make_gru_params(in, hid, rng);
            for (auto [name, t] : {std::pair{"W_z", gru_.w_z}, {"U_z", gru_.u_z}, {"b_z", gru_.b_z},
                                   {"W_r", gru_.w_r}, {"U_r", gru_.u_r}, {"b_r", gru_.b_r},
                                   {"W_h", gru_.w_h}, {"U_h", gru_.u_h}, {"b_h", gru_.b_h}}) {
                params_.push_back({std::string("gru.") + name, t});
            }
        } else {
            lstm_ = make_lstm_params(in, hid, rng);
            for (auto [name, t] :
                 {std::pair{"W_i", lstm_.w_i}, {"U_i", lstm_.u_i}, {"b_i", lstm_.b_i},
                  {"W_f", lstm_.w_f}, {"U_f", lstm_.u_f}, {"b_f", lstm_.b_f},
                  {"W_o", lstm_.w_o}, {"U_o", lstm_.u_o}, {"b_o", lstm_.b_o},
                  {"W_g", lstm_.w_g}, {"U_g", lstm_.u_g}, {"b_g", lstm_.b_g}}) {
                params_.push_back({std::string("lstm.") + name, t});
            }
        }
    }

    if (is_vision(arch_) && cfg_.visual_embedding_dim > 0) {
        add_param("visual.W", {cfg_.visual_dim, cfg_.visual_embedding_dim}, rng);
        add_param("visual.b", {cfg_.visual_embedding_dim}, rng, 0.0, false);
    }

    add_param("classifier.W", {fused_dim(), cfg_.output_dim}, rng);
    add_param("classifier.b", {cfg_.output_dim}, rng, 0.0, false);
}

std::vector<Tensor> Model::parameter_tensors() const {
    std::vector<Tensor> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.tensor);
    return out;
}

const Tensor& Model::parameter(std::string_view name) const {
    for (const auto& p : params_) {
        if (p.name == name) return p.tensor;
    }
    throw LookupError("model has no parameter '" + std::string(name) + "'");
}

void Model::zero_grad() {
    for (auto& p : params_) p.tensor.zero_grad();
}

Tensor Model::language_branch(Tape& tape, const text::IndexMatrix& q) const {
    const Tensor& table = parameter("embedding.W");
    const Tensor embedded = ad::embedding_lookup(tape, table, q.values, q.rows, q.cols);
    const auto mask = nonpad_mask(q);

    if (!is_recurrent(arch_)) {
        return cfg_.pooling == Pooling::average ? ad::masked_temporal_average(tape, embedded, mask)
                                                : ad::masked_temporal_sum(tape, embedded, mask);
    }

    // Pad steps carry the state through unchanged.
    Tensor h = Tensor::zeros({q.rows, cfg_.hidden_state_dim});
    Tensor c = Tensor::zeros({q.rows, cfg_.hidden_state_dim});
    std::vector<std::uint8_t> step_mask(q.rows);
    for (std::size_t t = 0; t < q.cols; ++t) {
        bool any = false;
        for (std::size_t n = 0; n < q.rows; ++n) {
            step_mask[n] = mask[n * q.cols + t];
            any = any || step_mask[n] != 0;
        }
        if (!any) continue;
        const Tensor x = ad::time_step(tape, embedded, t);
        if (cfg_.cell == CellKind::gru) {
            h = ad::select_rows(tape, step_mask, gru_step(tape, h, x, gru_), h);
        } else {
            auto [h_next, c_next] = lstm_step(tape, h, c, x, lstm_);
            h = ad::select_rows(tape, step_mask, h_next, h);
            c = ad::select_rows(tape, step_mask, c_next, c);
        }
    }
    return h;
}

Tensor Model::visual_branch(Tape& tape, const features::FeatureMatrix& v) const {
    // Features are data: no gradient flows back into them.
    Tensor raw = Tensor::from_data({v.rows, v.cols}, v.values, false);
    if (cfg_.visual_embedding_dim == 0) return raw;
    return ad::add_bias(tape, ad::matmul(tape, raw, parameter("visual.W")), parameter("visual.b"));
}

Tensor Model::fused_representation(Tape& tape, const Batch& batch) const {
    if (batch.size() == 0) throw ContractError("empty batch");
    Tensor language = language_branch(tape, batch.questions);
    if (!is_vision(arch_)) return language;

    if (batch.visual.rows != batch.size() || batch.visual.cols != cfg_.visual_dim) {
        throw DimensionError("visual input is " + std::to_string(batch.visual.rows) + "x" +
                             std::to_string(batch.visual.cols) + ", expected " +
                             std::to_string(batch.size()) + "x" + std::to_string(cfg_.visual_dim));
    }
    Tensor visual = visual_branch(tape, batch.visual);
    switch (cfg_.merge) {
        case MergeMode::concat: return ad::concat(tape, language, visual);
        case MergeMode::mul: return ad::mul(tape, language, visual);
        case MergeMode::sum: return ad::add(tape, language, visual);
        case MergeMode::ave: return ad::affine(tape, ad::add(tape, language, visual), 0.5, 0.0);
    }
    throw ConfigError("unhandled merge mode");
}

Tensor Model::forward(Tape& tape, const Batch& batch, bool training, Rng& rng) const {
    Tensor fused = fused_representation(tape, batch);
    fused = ad::dropout(tape, fused, cfg_.dropout_rate, training, rng);
    const Tensor logits = ad::add_bias(tape, ad::matmul(tape, fused, parameter("classifier.W")),
                                       parameter("classifier.b"));
    return ad::softmax(tape, logits);
}

Tensor Model::predict_scores(const Batch& batch) const {
    Tape scratch;
    Rng unused(0);
    return forward(scratch, batch, false, unused).detached();
}

Model build_blind_bow(const ModelConfig& cfg, Rng& rng) { return Model(Architecture::blind_bow, cfg, rng); }
Model build_blind_rnn(const ModelConfig& cfg, Rng& rng) { return Model(Architecture::blind_rnn, cfg, rng); }
Model build_vision_bow(const ModelConfig& cfg, Rng& rng) { return Model(Architecture::vision_bow, cfg, rng); }
Model build_vision_rnn(const ModelConfig& cfg, Rng& rng) { return Model(Architecture::vision_rnn, cfg, rng); }

Model build_model(Architecture arch, const ModelConfig& cfg) {
    Rng rng(cfg.seed);
    return Model(arch, cfg, rng);
}

std::vector<int> argmax_rows(const Tensor& scores) {
    const std::size_t k = scores.shape().back();
    const std::size_t rows = scores.size() / k;
    std::vector<int> out(rows);
    const auto d = scores.data();
    for (std::size_t r = 0; r < rows; ++r) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < k; ++j) {
            if (d[r * k + j] > d[r * k + best]) best = j;
        }
        out[r] = static_cast<int>(best);
    }
    return out;
}

std::vector<std::string> decode_predictions(const Model& model, const Batch& batch,
                                            const text::Vocabulary& answers) {
    if (batch.size() == 0) return {};
    if (answers.size() != model.config().output_dim) {
        throw ContractError("answer vocabulary has " + std::to_string(answers.size()) +
                          " entries but the model predicts " +
                          std::to_string(model.config().output_dim) + " classes");
    }
    std::vector<std::string> words;
    for (int index : argmax_rows(model.predict_scores(batch))) words.push_back(answers.word_at(index));
    return words;
}

}  // namespace vqa::model
