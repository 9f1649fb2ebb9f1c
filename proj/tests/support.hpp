#pragma once

// Fixtures and independent oracles shared by the unit tests and the
// acceptance runner.

#include "vqa/models.hpp"
#include "vqa/random.hpp"
#include "vqa/textpipe.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <utility>
#include <vector>

namespace vqa::testing {

namespace fs = std::filesystem;

class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("vqa-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    fs::path path_;
};

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    f << text;
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

inline std::string triples_text(const std::vector<text::QARecord>& records) {
    std::string out;
    for (const auto& r : records) out += r.question + "\n" + r.answer + "\n" + r.image_name + "\n";
    return out;
}

// Ten questions, each with one distinguishing token mapped to its own answer.
inline std::vector<text::QARecord> separable_corpus() {
    std::vector<text::QARecord> out;
    for (int i = 0; i < 10; ++i) {
        const std::string k = std::to_string(i);
        out.push_back({"what is object" + k + " ?", "answer" + k, "image" + k});
    }
    return out;
}

// Every unordered pair of distinct tokens appears in both orders; the answer
// is the token that comes first. A bag of tokens therefore maps to two
// equally frequent answers that only word order can tell apart.
inline std::vector<text::QARecord> order_corpus(int n_tokens) {
    std::vector<text::QARecord> out;
    for (int i = 0; i < n_tokens; ++i) {
        for (int j = i + 1; j < n_tokens; ++j) {
            const std::string a = "t" + std::to_string(i), b = "t" + std::to_string(j);
            out.push_back({a + " " + b, a, "none"});
            out.push_back({b + " " + a, b, "none"});
        }
    }
    return out;
}

struct Encoded {
    text::Vocabulary vocab_q;
    text::Vocabulary vocab_a;
    model::Batch batch;
    std::vector<int> targets;
};

inline Encoded encode(const std::vector<text::QARecord>& records, std::size_t maxlen) {
    std::vector<std::string> qs, as;
    for (const auto& r : records) {
        qs.push_back(r.question);
        as.push_back(r.answer);
    }
    text::PipelineConfig cfg;
    Encoded e;
    e.vocab_q = text::build_vocabulary(text::word_frequencies(qs), 0);
    e.vocab_a = text::build_vocabulary(text::answer_frequencies(as, cfg), 0);
    e.batch.questions = text::pad_sequences(text::encode_questions(qs, e.vocab_q), maxlen);
    e.targets = text::encode_answers(as, e.vocab_a, cfg);
    return e;
}

// animal{dog{dalmatian}, horse}
inline std::string toy_taxonomy_text() {
    return "animal\t-\ndog\tanimal\nhorse\tanimal\ndalmatian\tdog\n";
}

// Random tree over n concepts: concept i > 0 hangs under a uniformly chosen
// earlier concept. Edges are emitted in shuffled order.
inline std::vector<std::pair<std::string, std::string>> random_tree(std::size_t n, Rng& rng) {
    std::vector<std::pair<std::string, std::string>> edges;
    edges.emplace_back("c0", "-");
    for (std::size_t i = 1; i < n; ++i) {
        edges.emplace_back("c" + std::to_string(i), "c" + std::to_string(rng.below(i)));
    }
    rng.shuffle(edges);
    return edges;
}

// Brute-force tree oracle over an edge list.
class TreeOracle {
public:
    explicit TreeOracle(const std::vector<std::pair<std::string, std::string>>& edges) {
        for (const auto& [c, p] : edges) parent_[c] = p;
    }

    std::vector<std::string> chain(const std::string& c) const {
        std::vector<std::string> out{c};
        while (parent_.at(out.back()) != "-") out.push_back(parent_.at(out.back()));
        return out;
    }

    std::size_t depth(const std::string& c) const { return chain(c).size(); }

    // Deepest member of the intersection of the two ancestor sets.
    std::string lca(const std::string& a, const std::string& b) const {
        const auto ca = chain(a);
        const auto cb = chain(b);
        const std::set<std::string> sb(cb.begin(), cb.end());
        std::string best;
        std::size_t best_depth = 0;
        for (const auto& x : ca) {
            if (sb.count(x) && depth(x) > best_depth) {
                best = x;
                best_depth = depth(x);
            }
        }
        return best;
    }

    double wup(const std::string& a, const std::string& b) const {
        return 2.0 * static_cast<double>(depth(lca(a, b))) /
               static_cast<double>(depth(a) + depth(b));
    }

private:
    std::map<std::string, std::string> parent_;
};

}  // namespace vqa::testing
