#pragma once

// Set accuracy and the thresholded Wu-Palmer set score (WUPS).

#include "vqa/ontology.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace vqa::metrics {

// Threshold value that switches corpus scoring to plain set accuracy.
inline constexpr double kAccuracyMode = -1.0;

struct WupsConfig {
    double threshold = 0.9;
    double penalty = 0.1;
    std::string delimiter = ", ";

    bool accuracy_mode() const { return threshold == kAccuracyMode; }

    // Throws ConfigError unless threshold is in [0, 1] or the sentinel.
    void validate() const;
};

// Unique answer words of one answer line, sorted.
class AnswerSet {
public:
    // Splits on the delimiter, trims, drops empty fragments, collapses duplicates.
    static AnswerSet parse(std::string_view line, std::string_view delimiter = ", ");

    explicit AnswerSet(std::vector<std::string> words);

    const std::vector<std::string>& words() const noexcept { return words_; }
    bool empty() const noexcept { return words_.empty(); }
    bool operator==(const AnswerSet&) const = default;

private:
    std::vector<std::string> words_;
};

// Everything a WUPS computation needs besides the two answers.
struct WupsContext {
    const onto::Taxonomy& taxonomy;
    const onto::Lexicon& lexicon;
    WupsConfig config;
};

// s = word_wup(a, b); s if s >= threshold, else penalty * s.
double thresholded_wup(std::string_view a, std::string_view b, const WupsContext& ctx);

// min( prod_{a in pred} max_{t in truth} s(a,t), prod_{t in truth} max_{a in pred} s(t,a) ).
// Throws ContractError if either set is empty.
double wups_pair(const AnswerSet& pred, const AnswerSet& truth, const WupsContext& ctx);

// 1 if the sets are equal, else 0. Throws ContractError if either set is empty.
double set_accuracy(const AnswerSet& pred, const AnswerSet& truth);

// Mean of wups_pair (or set_accuracy in accuracy mode) over aligned answer
// lines, summed in order. Throws ContractError on a length mismatch.
double wups_corpus(const std::vector<std::string>& preds, const std::vector<std::string>& truths,
                   const WupsContext& ctx);

// Mean set accuracy; needs no taxonomy.
double accuracy_corpus(const std::vector<std::string>& preds, const std::vector<std::string>& truths,
                       std::string_view delimiter = ", ");

// "metric=<name> tau=<tau> value=<v>" with a 6-decimal value.
std::string format_report(std::string_view metric, double tau, double value);

}  // namespace vqa::metrics
