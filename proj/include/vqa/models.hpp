#pragma once

// Blind and vision+language question-answering models over the autodiff
// engine, and maximum-likelihood decoding.

#include "vqa/autodiff/tensor.hpp"
#include "vqa/features.hpp"
#include "vqa/random.hpp"
#include "vqa/textpipe.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vqa::model {

enum class Architecture { blind_bow, blind_rnn, vision_bow, vision_rnn };
enum class MergeMode { concat, mul, sum, ave };
enum class CellKind { gru, lstm };
// How the BOW branch pools word embeddings over time.
enum class Pooling { average, sum };

std::string_view to_string(Architecture a);
std::string_view to_string(MergeMode m);
std::string_view to_string(CellKind c);
std::string_view to_string(Pooling p);
// Throw ConfigError on unknown names. Architecture accepts the CLI spellings
// blind-bow, blind-rnn, vl-bow, vl-rnn.
Architecture parse_architecture(std::string_view s);
MergeMode parse_merge_mode(std::string_view s);
CellKind parse_cell(std::string_view s);
Pooling parse_pooling(std::string_view s);

bool is_vision(Architecture a);
bool is_recurrent(Architecture a);

struct ModelConfig {
    std::size_t input_dim = 0;               // question vocabulary size
    std::size_t output_dim = 0;              // answer classes
    std::size_t textual_embedding_dim = 500;
    std::size_t visual_embedding_dim = 0;    // 0: raw features go straight to the merge
    std::size_t hidden_state_dim = 500;      // recurrent models only
    std::size_t visual_dim = 0;              // raw feature length; 0 for blind models
    MergeMode merge = MergeMode::concat;
    CellKind cell = CellKind::gru;
    Pooling pooling = Pooling::average;
    double dropout_rate = 0.5;
    std::uint64_t seed = 0;

    // Throws ConfigError. For vision models with mul/sum/ave the language
    // vector and the visual vector must have equal length.
    void validate(Architecture arch) const;
};

// Length of the language branch output (d_t for BOW, d_h for RNN).
std::size_t language_dim(Architecture arch, const ModelConfig& cfg);
// Length of the visual branch output (d_v, or D when d_v == 0); 0 for blind.
std::size_t visual_branch_dim(Architecture arch, const ModelConfig& cfg);
// Length of the vector fed to the classifier.
std::size_t fused_dim(Architecture arch, const ModelConfig& cfg);

// Encoded questions plus, for vision models, aligned visual features.
struct Batch {
    text::IndexMatrix questions;
    features::FeatureMatrix visual;  // rows == 0 for blind models

    std::size_t size() const noexcept { return questions.rows; }
    Batch select(std::span<const std::size_t> rows) const;
};

struct NamedTensor {
    std::string name;
    ad::Tensor tensor;
};

struct GruParams {
    ad::Tensor w_z, u_z, b_z;
    ad::Tensor w_r, u_r, b_r;
    ad::Tensor w_h, u_h, b_h;
};

struct LstmParams {
    ad::Tensor w_i, u_i, b_i;
    ad::Tensor w_f, u_f, b_f;
    ad::Tensor w_o, u_o, b_o;
    ad::Tensor w_g, u_g, b_g;
};

// h [N x d_h], x [N x d_in] -> h' [N x d_h]
//   z = sig(x W_z + h U_z + b_z), r = sig(x W_r + h U_r + b_r)
//   h~ = tanh(x W_h + (r . h) U_h + b_h), h' = (1 - z) . h + z . h~
ad::Tensor gru_step(ad::Tape& tape, const ad::Tensor& h, const ad::Tensor& x, const GruParams& p);

// Returns (h', c') with c' = f . c + i . g and h' = o . tanh(c').
std::pair<ad::Tensor, ad::Tensor> lstm_step(ad::Tape& tape, const ad::Tensor& h,
                                            const ad::Tensor& c, const ad::Tensor& x,
                                            const LstmParams& p);

// Fresh cell parameters; the LSTM forget bias starts at 1, other biases at 0.
GruParams make_gru_params(std::size_t input_dim, std::size_t hidden_dim, Rng& rng);
LstmParams make_lstm_params(std::size_t input_dim, std::size_t hidden_dim, Rng& rng);

class Model {
public:
    Model(Architecture arch, ModelConfig cfg, Rng& rng);

    Architecture architecture() const noexcept { return arch_; }
    const ModelConfig& config() const noexcept { return cfg_; }
    std::size_t fused_dim() const { return model::fused_dim(arch_, cfg_); }

    // Trainable tensors in a fixed order.
    const std::vector<NamedTensor>& parameters() const noexcept { return params_; }
    std::vector<ad::Tensor> parameter_tensors() const;
    // Throws LookupError.
    const ad::Tensor& parameter(std::string_view name) const;

    void zero_grad();

    // Class distribution per question, [N x K]. Dropout draws from `rng`
    // only when training is true.
    ad::Tensor forward(ad::Tape& tape, const Batch& batch, bool training, Rng& rng) const;

    // Vector handed to the classifier (after the merge, before dropout),
    // [N x fused_dim()].
    ad::Tensor fused_representation(ad::Tape& tape, const Batch& batch) const;

    // Inference-mode forward without gradient recording.
    ad::Tensor predict_scores(const Batch& batch) const;

private:
    ad::Tensor& add_param(std::string name, ad::Shape shape, Rng& rng, double fill = 0.0,
                          bool random = true);
    ad::Tensor language_branch(ad::Tape& tape, const text::IndexMatrix& q) const;
    ad::Tensor visual_branch(ad::Tape& tape, const features::FeatureMatrix& v) const;

    Architecture arch_;
    ModelConfig cfg_;
    std::vector<NamedTensor> params_;
    GruParams gru_;
    LstmParams lstm_;
};

// Convenience builders; each validates the config and seeds from the rng.
Model build_blind_bow(const ModelConfig& cfg, Rng& rng);
Model build_blind_rnn(const ModelConfig& cfg, Rng& rng);
Model build_vision_bow(const ModelConfig& cfg, Rng& rng);
Model build_vision_rnn(const ModelConfig& cfg, Rng& rng);
// Seeds from cfg.seed.
Model build_model(Architecture arch, const ModelConfig& cfg);

// Row-wise argmax, ties to the lowest index.
std::vector<int> argmax_rows(const ad::Tensor& scores);

// Predicted answer word per question (dropout off).
std::vector<std::string> decode_predictions(const Model& model, const Batch& batch,
                                            const text::Vocabulary& answers);

// Checkpoint: for each parameter a header line "name d1 d2 ..." followed by
// one line of space-separated decimal values (round-trip precision).
void write_checkpoint(const Model& model, std::ostream& out);
// Loads values into a model of matching architecture; names and shapes must
// match exactly. Throws FormatError.
void read_checkpoint(Model& model, std::istream& in);
// Name and shape of every tensor in a checkpoint, without values checked
// against a model.
std::vector<std::pair<std::string, ad::Shape>> checkpoint_layout(std::istream& in);

}  // namespace vqa::model
