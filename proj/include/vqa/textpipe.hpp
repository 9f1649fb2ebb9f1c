#pragma once

// Question/answer/image triples and their integer encodings.

#include <cstddef>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vqa::text {

inline constexpr int kPadIndex = 0;
inline constexpr int kUnkIndex = 1;
inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kUnkToken = "<unk>";

struct QARecord {
    std::string question;
    std::string answer;
    std::string image_name;
};

struct PipelineConfig {
    std::size_t maxlen = 30;
    std::size_t truncate_to_most_frequent = 0;  // 0 keeps every word
    bool only_first_answer_word = true;
    std::string answer_word_delimiter = ", ";
    std::size_t keep_top_qa_pairs = 0;  // 0 keeps every record

    void validate() const;
};

// Bidirectional word <-> index map. Index 0 is <pad>, 1 is <unk>, everything
// else is contiguous from 2. Immutable once built.
class Vocabulary {
public:
    // Only the two special tokens.
    Vocabulary();

    // Words must be distinct and must not be the special tokens; they get
    // indices 2, 3, ... in the given order.
    static Vocabulary from_words(const std::vector<std::string>& words);

    std::size_t size() const noexcept { return index2word_.size(); }

    // <unk>'s index for unknown words.
    int index_of(std::string_view word) const;
    bool contains(std::string_view word) const;

    // Throws IndexError when out of range.
    const std::string& word_at(int index) const;

    const std::vector<std::string>& words() const noexcept { return index2word_; }

    // "word<TAB>index" per line, sorted by index.
    void write(std::ostream& out) const;
    static Vocabulary read(std::istream& in);

private:
    std::vector<std::string> index2word_;
    std::unordered_map<std::string, int> word2index_;
};

// Three lines per record: question, answer, image name. Trailing blank lines
// are ignored. Throws FormatError.
std::vector<QARecord> parse_triple_file(std::istream& in);
std::vector<QARecord> parse_triples(std::string_view text);

// Single-space tokenization; empty tokens are dropped.
std::vector<std::string> tokenize(std::string_view text);

std::map<std::string, std::size_t> word_frequencies(const std::vector<std::string>& texts);

// Descending count, ties by ascending word; keep the top `truncate` words if
// truncate > 0.
Vocabulary build_vocabulary(const std::map<std::string, std::size_t>& counts,
                            std::size_t truncate_to_most_frequent);

std::vector<std::vector<int>> encode_questions(const std::vector<std::string>& questions,
                                               const Vocabulary& vocab);

// Inverse of encode for in-vocabulary tokens.
std::string decode_question(const std::vector<int>& sequence, const Vocabulary& vocab);

// Row-major [N x maxlen] index matrix.
struct IndexMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<int> values;

    std::span<const int> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
};

// Pre-pads with <pad>; longer sequences keep their last maxlen entries.
IndexMatrix pad_sequences(const std::vector<std::vector<int>>& sequences, std::size_t maxlen);

// Splits an answer line into its answer words (split on the delimiter, trim,
// drop empties).
std::vector<std::string> split_answer_words(std::string_view answer, std::string_view delimiter);

// The class token an answer is trained on: its first answer word, or the
// whole answer string when only_first_answer_word is false.
std::string answer_class_token(std::string_view answer, const PipelineConfig& cfg);

// Counts answer_class_token over the answers; feed to build_vocabulary.
std::map<std::string, std::size_t> answer_frequencies(const std::vector<std::string>& answers,
                                                      const PipelineConfig& cfg);

std::vector<int> encode_answers(const std::vector<std::string>& answers, const Vocabulary& vocab,
                                const PipelineConfig& cfg);

// Keeps the records whose full answer string is among the k most frequent
// (ties by ascending answer); k == 0 keeps all. Order is preserved.
std::vector<QARecord> filter_top_pairs(const std::vector<QARecord>& records, std::size_t k);

}  // namespace vqa::text
