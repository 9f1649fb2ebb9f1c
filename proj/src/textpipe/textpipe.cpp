#include "vqa/textpipe.hpp"

#include "vqa/errors.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace vqa::text {
namespace {

std::string_view trim(std::string_view s) {
    constexpr std::string_view kSpace = " \t\r\n\v\f";
    const auto first = s.find_first_not_of(kSpace);
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(kSpace);
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        const auto end = text.find('\n', start);
        if (end == std::string_view::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return lines;
}

// Order used by build_vocabulary and filter_top_pairs.
template <class Count>
std::vector<std::pair<std::string, Count>> by_frequency(const std::map<std::string, Count>& counts) {
    std::vector<std::pair<std::string, Count>> sorted(counts.begin(), counts.end());
    std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return sorted;
}

}  // namespace

void PipelineConfig::validate() const {
    if (maxlen < 1) throw ConfigError("maxlen must be at least 1");
    if (answer_word_delimiter.empty()) throw ConfigError("answer word delimiter must be nonempty");
}

Vocabulary::Vocabulary() {
    index2word_ = {std::string(kPadToken), std::string(kUnkToken)};
    word2index_ = {{std::string(kPadToken), kPadIndex}, {std::string(kUnkToken), kUnkIndex}};
}

Vocabulary Vocabulary::from_words(const std::vector<std::string>& words) {
    Vocabulary v;
    for (const auto& w : words) {
        if (w == kPadToken || w == kUnkToken) {
            throw ConfigError("vocabulary word '" + w + "' collides with a special token");
        }
        const int index = static_cast<int>(v.index2word_.size());
        if (!v.word2index_.emplace(w, index).second) {
            throw ConfigError("duplicate vocabulary word '" + w + "'");
        }
        v.index2word_.push_back(w);
    }
    return v;
}

int Vocabulary::index_of(std::string_view word) const {
    const auto it = word2index_.find(std::string(word));
    return it == word2index_.end() ? kUnkIndex : it->second;
}

bool Vocabulary::contains(std::string_view word) const {
    return word2index_.contains(std::string(word));
}

const std::string& Vocabulary::word_at(int index) const {
    if (index < 0 || static_cast<std::size_t>(index) >= index2word_.size()) {
        throw IndexError("vocabulary index " + std::to_string(index) + " outside [0, " +
                         std::to_string(index2word_.size()) + ")");
    }
    return index2word_[static_cast<std::size_t>(index)];
}

void Vocabulary::write(std::ostream& out) const {
    for (std::size_t i = 0; i < index2word_.size(); ++i) out << index2word_[i] << '\t' << i << '\n';
}

Vocabulary Vocabulary::read(std::istream& in) {
    std::vector<std::string> words;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.rfind('\t');
        if (tab == std::string::npos) throw FormatError("expected 'word<TAB>index'", line_no);
        const std::string_view idx_text = std::string_view(line).substr(tab + 1);
        std::size_t index = 0;
        const auto [ptr, ec] = std::from_chars(idx_text.data(), idx_text.data() + idx_text.size(), index);
        if (ec != std::errc() || ptr != idx_text.data() + idx_text.size()) {
            throw FormatError("bad index '" + std::string(idx_text) + "'", line_no);
        }
        if (index != words.size()) {
            throw FormatError("expected index " + std::to_string(words.size()) + ", got " +
                              std::to_string(index), line_no);
        }
        words.push_back(line.substr(0, tab));
    }
    if (words.size() < 2 || words[0] != kPadToken || words[1] != kUnkToken) {
        throw FormatError("vocabulary must start with <pad> at 0 and <unk> at 1");
    }
    try {
        return from_words({words.begin() + 2, words.end()});
    } catch (const ConfigError& e) {
        throw FormatError(e.what());
    }
}

std::vector<QARecord> parse_triples(std::string_view text) {
    auto lines = split_lines(text);
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    if (lines.size() % 3 != 0) {
        throw FormatError("incomplete record: " + std::to_string(lines.size()) +
                              " lines is not a multiple of 3", lines.size());
    }
    std::vector<QARecord> records;
    records.reserve(lines.size() / 3);
    for (std::size_t i = 0; i < lines.size(); i += 3) {
        QARecord r{std::string(trim(lines[i])), std::string(trim(lines[i + 1])),
                   std::string(trim(lines[i + 2]))};
        if (r.question.empty()) throw FormatError("empty question", i + 1);
        if (r.image_name.empty()) throw FormatError("empty image name", i + 3);
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<QARecord> parse_triple_file(std::istream& in) {
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_triples(buffer.str());
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find(' ', start);
        if (end == std::string_view::npos) end = text.size();
        if (end > start) tokens.emplace_back(text.substr(start, end - start));
        start = end + 1;
    }
    return tokens;
}

std::map<std::string, std::size_t> word_frequencies(const std::vector<std::string>& texts) {
    std::map<std::string, std::size_t> counts;
    for (const auto& t : texts) {
        for (auto& token : tokenize(t)) ++counts[std::move(token)];
    }
    return counts;
}

Vocabulary build_vocabulary(const std::map<std::string, std::size_t>& counts,
                            std::size_t truncate_to_most_frequent) {
    std::vector<std::string> words;
    for (auto& [word, count] : by_frequency(counts)) {
        if (word == kPadToken || word == kUnkToken) continue;
        if (truncate_to_most_frequent > 0 && words.size() == truncate_to_most_frequent) break;
        words.push_back(word);
    }
    return Vocabulary::from_words(words);
}

std::vector<std::vector<int>> encode_questions(const std::vector<std::string>& questions,
                                               const Vocabulary& vocab) {
    std::vector<std::vector<int>> out;
    out.reserve(questions.size());
    for (const auto& q : questions) {
        std::vector<int> seq;
        for (const auto& token : tokenize(q)) seq.push_back(vocab.index_of(token));
        out.push_back(std::move(seq));
    }
    return out;
}

std::string decode_question(const std::vector<int>& sequence, const Vocabulary& vocab) {
    std::string out;
    for (int index : sequence) {
        if (index == kPadIndex) continue;
        if (!out.empty()) out += ' ';
        out += vocab.word_at(index);
    }
    return out;
}

IndexMatrix pad_sequences(const std::vector<std::vector<int>>& sequences, std::size_t maxlen) {
    if (maxlen < 1) throw ConfigError("maxlen must be at least 1");
    IndexMatrix m{sequences.size(), maxlen, std::vector<int>(sequences.size() * maxlen, kPadIndex)};
    for (std::size_t r = 0; r < sequences.size(); ++r) {
        const auto& seq = sequences[r];
        const std::size_t kept = std::min(seq.size(), maxlen);
        std::copy(seq.end() - static_cast<std::ptrdiff_t>(kept), seq.end(),
                  m.values.begin() + static_cast<std::ptrdiff_t>(r * maxlen + (maxlen - kept)));
    }
    return m;
}

std::vector<std::string> split_answer_words(std::string_view answer, std::string_view delimiter) {
    std::vector<std::string> words;
    std::size_t start = 0;
    while (true) {
        const auto end = answer.find(delimiter, start);
        const auto piece = trim(answer.substr(start, end == std::string_view::npos ? answer.npos : end - start));
        if (!piece.empty()) words.emplace_back(piece);
        if (end == std::string_view::npos) break;
        start = end + delimiter.size();
    }
    return words;
}

std::string answer_class_token(std::string_view answer, const PipelineConfig& cfg) {
    if (!cfg.only_first_answer_word) return std::string(trim(answer));
    auto words = split_answer_words(answer, cfg.answer_word_delimiter);
    return words.empty() ? std::string() : std::move(words.front());
}

std::map<std::string, std::size_t> answer_frequencies(const std::vector<std::string>& answers,
                                                      const PipelineConfig& cfg) {
    std::map<std::string, std::size_t> counts;
    for (const auto& a : answers) {
        auto token = answer_class_token(a, cfg);
        if (!token.empty()) ++counts[std::move(token)];
    }
    return counts;
}

std::vector<int> encode_answers(const std::vector<std::string>& answers, const Vocabulary& vocab,
                                const PipelineConfig& cfg) {
    std::vector<int> out;
    out.reserve(answers.size());
    for (const auto& a : answers) out.push_back(vocab.index_of(answer_class_token(a, cfg)));
    return out;
}

std::vector<QARecord> filter_top_pairs(const std::vector<QARecord>& records, std::size_t k) {
    if (k == 0) return records;
    std::map<std::string, std::size_t> counts;
    for (const auto& r : records) ++counts[r.answer];
    std::map<std::string, bool> kept;
    for (const auto& [answer, count] : by_frequency(counts)) {
        if (kept.size() == k) break;
        kept[answer] = true;
    }
    std::vector<QARecord> out;
    for (const auto& r : records) {
        if (kept.contains(r.answer)) out.push_back(r);
    }
    return out;
}

}  // namespace vqa::text
