#include "vqa/metrics.hpp"

#include "vqa/errors.hpp"
#include "vqa/textpipe.hpp"

#include <algorithm>
#include <cstdio>

namespace vqa::metrics {
namespace {

void require_nonempty(const AnswerSet& pred, const AnswerSet& truth) {
    if (pred.empty() || truth.empty()) throw ContractError("answer sets must be nonempty");
}

void require_aligned(std::size_t preds, std::size_t truths) {
    if (preds != truths) {
        throw ContractError("prediction/truth length mismatch: " + std::to_string(preds) + " vs " +
                            std::to_string(truths));
    }
}

// prod over `from` of the best match in `to`.
double directed_product(const AnswerSet& from, const AnswerSet& to, const WupsContext& ctx) {
    double product = 1.0;
    for (const auto& a : from.words()) {
        double best = 0.0;
        for (const auto& t : to.words()) best = std::max(best, thresholded_wup(a, t, ctx));
        product *= best;
    }
    return product;
}

}  // namespace

void WupsConfig::validate() const {
    if (!accuracy_mode() && !(threshold >= 0.0 && threshold <= 1.0)) {
        throw ConfigError("WUPS threshold must be in [0, 1] or -1, got " + std::to_string(threshold));
    }
    if (delimiter.empty()) throw ConfigError("answer delimiter must be nonempty");
}

AnswerSet::AnswerSet(std::vector<std::string> words) : words_(std::move(words)) {
    std::sort(words_.begin(), words_.end());
    words_.erase(std::unique(words_.begin(), words_.end()), words_.end());
}

AnswerSet AnswerSet::parse(std::string_view line, std::string_view delimiter) {
    return AnswerSet(text::split_answer_words(line, delimiter));
}

double thresholded_wup(std::string_view a, std::string_view b, const WupsContext& ctx) {
    const double s = onto::word_wup(a, b, ctx.lexicon, ctx.taxonomy);
    return s >= ctx.config.threshold ? s : ctx.config.penalty * s;
}

double wups_pair(const AnswerSet& pred, const AnswerSet& truth, const WupsContext& ctx) {
    require_nonempty(pred, truth);
    return std::min(directed_product(pred, truth, ctx), directed_product(truth, pred, ctx));
}

double set_accuracy(const AnswerSet& pred, const AnswerSet& truth) {
    require_nonempty(pred, truth);
    return pred == truth ? 1.0 : 0.0;
}

double wups_corpus(const std::vector<std::string>& preds, const std::vector<std::string>& truths,
                   const WupsContext& ctx) {
    ctx.config.validate();
    require_aligned(preds.size(), truths.size());
    if (ctx.config.accuracy_mode()) return accuracy_corpus(preds, truths, ctx.config.delimiter);
    if (preds.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        total += wups_pair(AnswerSet::parse(preds[i], ctx.config.delimiter),
                           AnswerSet::parse(truths[i], ctx.config.delimiter), ctx);
    }
    return total / static_cast<double>(preds.size());
}

double accuracy_corpus(const std::vector<std::string>& preds, const std::vector<std::string>& truths,
                       std::string_view delimiter) {
    require_aligned(preds.size(), truths.size());
    if (preds.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        total += set_accuracy(AnswerSet::parse(preds[i], delimiter), AnswerSet::parse(truths[i], delimiter));
    }
    return total / static_cast<double>(preds.size());
}

std::string format_report(std::string_view metric, double tau, double value) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "metric=%.*s tau=%g value=%.6f", static_cast<int>(metric.size()),
                  metric.data(), tau, value);
    return buf;
}

}  // namespace vqa::metrics
