#include "vqa/cli.hpp"

#include "vqa/errors.hpp"
#include "vqa/features.hpp"
#include "vqa/metrics.hpp"
#include "vqa/models.hpp"
#include "vqa/ontology.hpp"
#include "vqa/textpipe.hpp"
#include "vqa/train.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace vqa::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class UsageError : public Error {
public:
    using Error::Error;
};

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open '" + path + "'");
    return in;
}

// Collects outputs in memory; commit() writes each to "<path>.tmp" and then
// renames, so a failing command leaves no partial files behind.
class OutputSet {
public:
    std::ostringstream& add(const std::string& path) {
        files_.emplace_back(path, std::make_unique<std::ostringstream>());
        return *files_.back().second;
    }

    std::vector<std::string> paths() const {
        std::vector<std::string> out;
        for (const auto& f : files_) out.push_back(f.first);
        return out;
    }

    void commit() const {
        std::vector<std::pair<fs::path, fs::path>> staged;
        for (const auto& [path, buffer] : files_) {
            const fs::path tmp = path + ".tmp";
            std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
            const std::string bytes = buffer->str();
            f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
            f.close();
            if (!f) {
                for (const auto& s : staged) fs::remove(s.first);
                fs::remove(tmp);
                throw UsageError("cannot write '" + path + "'");
            }
            staged.emplace_back(tmp, path);
        }
        for (const auto& [tmp, path] : staged) fs::rename(tmp, path);
    }

private:
    std::vector<std::pair<std::string, std::unique_ptr<std::ostringstream>>> files_;
};

// Manifest written next to the primary output as "<primary>.manifest.json".
void add_manifest(OutputSet& outputs, const std::string& primary, const std::string& command,
                  const json& options, std::uint64_t seed, const std::vector<std::string>& inputs) {
    json m;
    m["command"] = command;
    m["options"] = options;
    m["seed"] = seed;
    json digests = json::object();
    for (const auto& path : inputs) {
        if (!path.empty()) digests[path] = "fnv1a64:" + file_digest(path);
    }
    m["inputs"] = digests;
    const std::string manifest_path = primary + ".manifest.json";
    auto out_paths = outputs.paths();
    out_paths.push_back(manifest_path);
    m["outputs"] = out_paths;
    outputs.add(manifest_path) << m.dump(2) << '\n';
}

std::vector<text::QARecord> read_triples(const std::string& path) {
    auto in = open_input(path);
    return text::parse_triple_file(in);
}

text::Vocabulary read_vocab(const std::string& path) {
    auto in = open_input(path);
    return text::Vocabulary::read(in);
}

features::FeatureTable read_features(const std::string& path, bool l2) {
    auto in = open_input(path);
    auto table = features::load_feature_table(in);
    return l2 ? table.l2_normalized() : table;
}

std::vector<std::string> read_lines(const std::string& path) {
    auto in = open_input(path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

model::Batch encode_inputs(const std::vector<text::QARecord>& records, const text::Vocabulary& vocab_q,
                           std::size_t maxlen, const features::FeatureTable* table) {
    std::vector<std::string> questions;
    for (const auto& r : records) questions.push_back(r.question);
    model::Batch batch;
    batch.questions = text::pad_sequences(text::encode_questions(questions, vocab_q), maxlen);
    if (table != nullptr) batch.visual = features::align(records, *table);
    return batch;
}

// ---------------------------------------------------------------------------

struct BuildVocabArgs {
    std::string train;
    std::size_t truncate = 0;
    std::string out_q;
    std::string out_a;
    bool whole_answer = false;
    std::size_t keep_top_pairs = 0;
};

int build_vocab(const BuildVocabArgs& a, std::ostream& out) {
    text::PipelineConfig pcfg;
    pcfg.truncate_to_most_frequent = a.truncate;
    pcfg.only_first_answer_word = !a.whole_answer;
    pcfg.keep_top_qa_pairs = a.keep_top_pairs;

    const auto records = text::filter_top_pairs(read_triples(a.train), pcfg.keep_top_qa_pairs);
    std::vector<std::string> questions, answers;
    for (const auto& r : records) {
        questions.push_back(r.question);
        answers.push_back(r.answer);
    }
    const auto vocab_q = text::build_vocabulary(text::word_frequencies(questions), pcfg.truncate_to_most_frequent);
    const auto vocab_a = text::build_vocabulary(text::answer_frequencies(answers, pcfg), 0);

    OutputSet outputs;
    vocab_q.write(outputs.add(a.out_q));
    vocab_a.write(outputs.add(a.out_a));
    json options{{"train", a.train},       {"truncate", a.truncate},
                 {"out_q", a.out_q},       {"out_a", a.out_a},
                 {"whole_answer", a.whole_answer}, {"keep_top_pairs", a.keep_top_pairs}};
    add_manifest(outputs, a.out_q, "build-vocab", options, 0, {a.train});
    outputs.commit();
    out << "question vocabulary: " << vocab_q.size() << " entries -> " << a.out_q << '\n'
        << "answer vocabulary: " << vocab_a.size() << " entries -> " << a.out_a << '\n';
    return kOk;
}

// ---------------------------------------------------------------------------

struct ModelArgs {
    std::string model = "blind-bow";
    std::string cell = "gru";
    std::string merge = "concat";
    std::string pool = "ave";
    std::string features;
    bool l2_normalize = false;
    std::size_t maxlen = 30;
};

struct TrainArgs {
    ModelArgs m;
    std::string train;
    std::string vocab_q;
    std::string vocab_a;
    std::size_t embed_dim = 500;
    std::size_t hidden_dim = 500;
    std::size_t visual_embed_dim = 0;
    double dropout = 0.5;
    std::string optimizer = "adam";
    double lr = 0.0;
    std::size_t batch = 512;
    std::size_t epochs = 40;
    double val_split = 0.1;
    std::uint64_t seed = 0;
    bool whole_answer = false;
    std::size_t keep_top_pairs = 0;
    std::string out;
};

int train_cmd(const TrainArgs& a, std::ostream& out) {
    const auto arch = model::parse_architecture(a.m.model);
    if (model::is_vision(arch) && a.m.features.empty()) {
        throw UsageError(std::string(model::to_string(arch)) + " needs --features");
    }
    const auto optimizer = train::parse_optimizer(a.optimizer);

    text::PipelineConfig pcfg;
    pcfg.maxlen = a.m.maxlen;
    pcfg.only_first_answer_word = !a.whole_answer;
    pcfg.keep_top_qa_pairs = a.keep_top_pairs;
    pcfg.validate();

    const auto vocab_q = read_vocab(a.vocab_q);
    const auto vocab_a = read_vocab(a.vocab_a);
    const auto records = text::filter_top_pairs(read_triples(a.train), pcfg.keep_top_qa_pairs);
    if (records.empty()) throw UsageError("training file has no records");

    std::optional<features::FeatureTable> table;
    if (model::is_vision(arch)) table = read_features(a.m.features, a.m.l2_normalize);

    model::ModelConfig mcfg;
    mcfg.input_dim = vocab_q.size();
    mcfg.output_dim = vocab_a.size();
    mcfg.textual_embedding_dim = a.embed_dim;
    mcfg.hidden_state_dim = a.hidden_dim;
    mcfg.visual_embedding_dim = a.visual_embed_dim;
    mcfg.visual_dim = table ? table->dim() : 0;
    mcfg.merge = model::parse_merge_mode(a.m.merge);
    mcfg.cell = model::parse_cell(a.m.cell);
    mcfg.pooling = model::parse_pooling(a.m.pool);
    mcfg.dropout_rate = a.dropout;
    mcfg.seed = a.seed;
    mcfg.validate(arch);

    train::TrainingConfig tcfg;
    tcfg.batch_size = a.batch;
    tcfg.epochs = a.epochs;
    tcfg.validation_split = a.val_split;
    tcfg.optimizer = optimizer;
    tcfg.learning_rate = a.lr;
    tcfg.seed = a.seed;
    tcfg.validate();

    const model::Batch inputs = encode_inputs(records, vocab_q, pcfg.maxlen, table ? &*table : nullptr);
    std::vector<std::string> answers;
    for (const auto& r : records) answers.push_back(r.answer);
    const auto targets = text::encode_answers(answers, vocab_a, pcfg);

    model::Model net = model::build_model(arch, mcfg);
    OutputSet outputs;
    auto& checkpoint = outputs.add(a.out);
    auto& log = outputs.add(a.out + ".log");
    train::fit(net, inputs, targets, tcfg, [&](const train::EpochReport& r) {
        const std::string line = r.format();
        out << line << '\n' << std::flush;
        log << line << '\n';
    });
    model::write_checkpoint(net, checkpoint);

    json options{{"model", a.m.model},
                 {"cell", a.m.cell},
                 {"merge", a.m.merge},
                 {"pool", a.m.pool},
                 {"features", a.m.features},
                 {"l2_normalize", a.m.l2_normalize},
                 {"maxlen", a.m.maxlen},
                 {"train", a.train},
                 {"vocab_q", a.vocab_q},
                 {"vocab_a", a.vocab_a},
                 {"embed_dim", a.embed_dim},
                 {"hidden_dim", a.hidden_dim},
                 {"visual_embed_dim", a.visual_embed_dim},
                 {"dropout", a.dropout},
                 {"optimizer", a.optimizer},
                 {"lr", tcfg.effective_learning_rate()},
                 {"batch", a.batch},
                 {"epochs", a.epochs},
                 {"val_split", a.val_split},
                 {"whole_answer", a.whole_answer},
                 {"keep_top_pairs", a.keep_top_pairs},
                 {"out", a.out}};
    add_manifest(outputs, a.out, "train", options, a.seed,
                 {a.train, a.vocab_q, a.vocab_a, a.m.features});
    outputs.commit();
    return kOk;
}

// ---------------------------------------------------------------------------

struct PredictArgs {
    ModelArgs m;
    std::string checkpoint;
    std::string test;
    std::string vocab_q;
    std::string vocab_a;
    std::string out;
};

// Dimensions a checkpoint implies for the declared architecture.
model::ModelConfig config_from_layout(model::Architecture arch,
                                      const std::vector<std::pair<std::string, ad::Shape>>& layout) {
    model::ModelConfig cfg;
    bool have_embedding = false;
    bool have_cell = !model::is_recurrent(arch);
    for (const auto& [name, shape] : layout) {
        if (name == "embedding.W" && shape.size() == 2) {
            cfg.textual_embedding_dim = shape[1];
            have_embedding = true;
        } else if ((name == "gru.U_z" || name == "lstm.U_i") && shape.size() == 2) {
            cfg.hidden_state_dim = shape[0];
            cfg.cell = name == "gru.U_z" ? model::CellKind::gru : model::CellKind::lstm;
            have_cell = true;
        } else if (name == "visual.W" && shape.size() == 2) {
            cfg.visual_embedding_dim = shape[1];
        }
    }
    if (!have_embedding || !have_cell) {
        throw FormatError("checkpoint does not describe a " + std::string(model::to_string(arch)) +
                          " model");
    }
    return cfg;
}

int predict_cmd(const PredictArgs& a, std::ostream& out) {
    const auto arch = model::parse_architecture(a.m.model);
    if (model::is_vision(arch) && a.m.features.empty()) {
        throw UsageError(std::string(model::to_string(arch)) + " needs --features");
    }
    const auto vocab_q = read_vocab(a.vocab_q);
    const auto vocab_a = read_vocab(a.vocab_a);
    const auto records = read_triples(a.test);

    std::optional<features::FeatureTable> table;
    if (model::is_vision(arch)) table = read_features(a.m.features, a.m.l2_normalize);

    std::vector<std::pair<std::string, ad::Shape>> layout;
    {
        auto in = open_input(a.checkpoint);
        layout = model::checkpoint_layout(in);
    }
    model::ModelConfig mcfg = config_from_layout(arch, layout);
    mcfg.input_dim = vocab_q.size();
    mcfg.output_dim = vocab_a.size();
    mcfg.visual_dim = table ? table->dim() : 0;
    mcfg.merge = model::parse_merge_mode(a.m.merge);
    mcfg.pooling = model::parse_pooling(a.m.pool);
    mcfg.validate(arch);
    model::Model net = model::build_model(arch, mcfg);
    {
        auto in = open_input(a.checkpoint);
        model::read_checkpoint(net, in);
    }

    OutputSet outputs;
    auto& answers = outputs.add(a.out);
    if (!records.empty()) {
        const model::Batch batch = encode_inputs(records, vocab_q, a.m.maxlen, table ? &*table : nullptr);
        for (const auto& word : model::decode_predictions(net, batch, vocab_a)) answers << word << '\n';
    }
    json options{{"model", a.m.model},       {"merge", a.m.merge},     {"pool", a.m.pool},
                 {"features", a.m.features}, {"l2_normalize", a.m.l2_normalize},
                 {"maxlen", a.m.maxlen},     {"checkpoint", a.checkpoint},
                 {"test", a.test},           {"vocab_q", a.vocab_q},   {"vocab_a", a.vocab_a},
                 {"out", a.out}};
    add_manifest(outputs, a.out, "predict", options, 0,
                 {a.checkpoint, a.test, a.vocab_q, a.vocab_a, a.m.features});
    outputs.commit();
    out << "wrote " << records.size() << " predictions to " << a.out << '\n';
    return kOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
    std::string pred;
    std::string truth;
    std::string metric = "wups";
    double tau = 0.9;
    std::string taxonomy;
    std::string lexicon;
    std::string out;
};

int eval_cmd(const EvalArgs& a, std::ostream& out) {
    const auto preds = read_lines(a.pred);
    const auto truths = read_lines(a.truth);
    if (preds.size() != truths.size()) {
        throw ContractError("prediction file has " + std::to_string(preds.size()) +
                            " lines, truth file has " + std::to_string(truths.size()));
    }

    std::string report;
    if (a.metric == "acc") {
        report = metrics::format_report("acc", metrics::kAccuracyMode, metrics::accuracy_corpus(preds, truths));
    } else if (a.metric == "wups") {
        metrics::WupsConfig wcfg;
        wcfg.threshold = a.tau;
        wcfg.validate();
        double value = 0.0;
        if (wcfg.accuracy_mode()) {
            value = metrics::accuracy_corpus(preds, truths, wcfg.delimiter);
        } else {
            if (a.taxonomy.empty() || a.lexicon.empty()) {
                throw UsageError("--metric wups needs --taxonomy and --lexicon");
            }
            auto tin = open_input(a.taxonomy);
            const auto taxonomy = onto::Taxonomy::parse(tin);
            auto lin = open_input(a.lexicon);
            const auto lexicon = onto::Lexicon::parse(lin, taxonomy);
            value = metrics::wups_corpus(preds, truths, {taxonomy, lexicon, wcfg});
        }
        report = metrics::format_report("wups", a.tau, value);
    } else {
        throw UsageError("unknown metric '" + a.metric + "'");
    }

    out << report << '\n';
    if (!a.out.empty()) {
        OutputSet outputs;
        outputs.add(a.out) << report << '\n';
        json options{{"pred", a.pred},         {"truth", a.truth},     {"metric", a.metric},
                     {"tau", a.tau},           {"taxonomy", a.taxonomy}, {"lexicon", a.lexicon},
                     {"out", a.out}};
        add_manifest(outputs, a.out, "eval", options, 0, {a.pred, a.truth, a.taxonomy, a.lexicon});
        outputs.commit();
    }
    return kOk;
}

void add_model_flags(CLI::App* cmd, ModelArgs& m) {
    cmd->add_option("--model", m.model, "blind-bow | blind-rnn | vl-bow | vl-rnn")
        ->check(CLI::IsMember({"blind-bow", "blind-rnn", "vl-bow", "vl-rnn"}));
    cmd->add_option("--merge", m.merge, "multimodal fusion: concat | mul | sum | ave")
        ->check(CLI::IsMember({"concat", "mul", "sum", "ave"}));
    cmd->add_option("--pool", m.pool, "BOW temporal pooling: ave | sum")
        ->check(CLI::IsMember({"ave", "sum"}));
    cmd->add_option("--features", m.features, "visual feature CSV (vl-* models)");
    cmd->add_flag("--l2-normalize", m.l2_normalize, "l2-normalize visual features on load");
    cmd->add_option("--maxlen", m.maxlen, "question time steps")->check(CLI::PositiveNumber);
}

}  // namespace

std::string file_digest(const std::string& path) {
    auto in = open_input(path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Visual question answering toolkit: build vocabularies, train, predict, evaluate."};
    app.name("vqa");
    app.require_subcommand(1);

    BuildVocabArgs bv;
    auto* bv_cmd = app.add_subcommand("build-vocab", "Build question and answer vocabularies");
    bv_cmd->add_option("--train", bv.train, "training triples")->required();
    bv_cmd->add_option("--truncate", bv.truncate, "keep only the k most frequent question words (0 = all)");
    bv_cmd->add_option("--out-q", bv.out_q, "question vocabulary output")->required();
    bv_cmd->add_option("--out-a", bv.out_a, "answer vocabulary output")->required();
    bv_cmd->add_flag("--whole-answer", bv.whole_answer, "use whole answer strings as classes");
    bv_cmd->add_option("--keep-top-pairs", bv.keep_top_pairs, "keep records of the k most frequent answers (0 = all)");

    TrainArgs tr;
    auto* tr_cmd = app.add_subcommand("train", "Train a model");
    add_model_flags(tr_cmd, tr.m);
    tr_cmd->add_option("--cell", tr.m.cell, "recurrent cell: gru | lstm")->check(CLI::IsMember({"gru", "lstm"}));
    tr_cmd->add_option("--train", tr.train, "training triples")->required();
    tr_cmd->add_option("--vocab-q", tr.vocab_q, "question vocabulary")->required();
    tr_cmd->add_option("--vocab-a", tr.vocab_a, "answer vocabulary")->required();
    tr_cmd->add_option("--embed-dim", tr.embed_dim, "textual embedding dimension")->check(CLI::PositiveNumber);
    tr_cmd->add_option("--hidden-dim", tr.hidden_dim, "recurrent state dimension")->check(CLI::PositiveNumber);
    tr_cmd->add_option("--visual-embed-dim", tr.visual_embed_dim, "visual embedding dimension (0 = raw features)");
    tr_cmd->add_option("--dropout", tr.dropout, "dropout rate before the classifier");
    tr_cmd->add_option("--optimizer", tr.optimizer, "sgd | adam")->check(CLI::IsMember({"sgd", "adam"}));
    tr_cmd->add_option("--lr", tr.lr, "learning rate (default: sgd 0.01, adam 0.001)");
    tr_cmd->add_option("--batch", tr.batch, "batch size")->check(CLI::PositiveNumber);
    tr_cmd->add_option("--epochs", tr.epochs, "number of epochs");
    tr_cmd->add_option("--val-split", tr.val_split, "fraction held out from the end for validation");
    tr_cmd->add_option("--seed", tr.seed, "random seed");
    tr_cmd->add_flag("--whole-answer", tr.whole_answer, "use whole answer strings as classes");
    tr_cmd->add_option("--keep-top-pairs", tr.keep_top_pairs, "keep records of the k most frequent answers (0 = all)");
    tr_cmd->add_option("--out", tr.out, "checkpoint output")->required();

    PredictArgs pr;
    auto* pr_cmd = app.add_subcommand("predict", "Predict one answer per test question");
    add_model_flags(pr_cmd, pr.m);
    pr_cmd->add_option("--checkpoint", pr.checkpoint, "trained checkpoint")->required();
    pr_cmd->add_option("--test", pr.test, "test triples")->required();
    pr_cmd->add_option("--vocab-q", pr.vocab_q, "question vocabulary")->required();
    pr_cmd->add_option("--vocab-a", pr.vocab_a, "answer vocabulary")->required();
    pr_cmd->add_option("--out", pr.out, "answer file output")->required();

    EvalArgs ev;
    auto* ev_cmd = app.add_subcommand("eval", "Score predicted answers against the truth");
    ev_cmd->add_option("--pred", ev.pred, "predicted answers, one line per record")->required();
    ev_cmd->add_option("--truth", ev.truth, "true answers, one line per record")->required();
    ev_cmd->add_option("--metric", ev.metric, "wups | acc")->check(CLI::IsMember({"wups", "acc"}));
    ev_cmd->add_option("--tau", ev.tau, "WUPS threshold in [0, 1], or -1 for set accuracy");
    ev_cmd->add_option("--taxonomy", ev.taxonomy, "taxonomy file (concept<TAB>parent)");
    ev_cmd->add_option("--lexicon", ev.lexicon, "lexicon file (word<TAB>concepts)");
    ev_cmd->add_option("--out", ev.out, "also write the report here");

    std::vector<const char*> argv{"vqa"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*bv_cmd) return build_vocab(bv, out);
        if (*tr_cmd) return train_cmd(tr, out);
        if (*pr_cmd) return predict_cmd(pr, out);
        if (*ev_cmd) return eval_cmd(ev, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kUsage;
    } catch (const FormatError& e) {
        err << "format error: " << e.what() << '\n';
        return kFormat;
    } catch (const LookupError& e) {
        err << "lookup error: " << e.what() << '\n';
        return kFormat;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kNumeric;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kNumeric;
    }
    return kUsage;
}

}  // namespace vqa::cli
