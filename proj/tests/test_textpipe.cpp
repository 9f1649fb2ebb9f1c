#include "vqa/errors.hpp"
#include "vqa/random.hpp"
#include "vqa/textpipe.hpp"

#include <doctest.h>

#include <map>
#include <set>
#include <sstream>

using namespace vqa;
using namespace vqa::text;

TEST_CASE("parse_triples") {
    const auto one = parse_triples("what is on the desk ?\nbook, scissor, papers, tape_dispenser\nimage3\n");
    REQUIRE(one.size() == 1);
    CHECK(one[0].question == "what is on the desk ?");
    CHECK(one[0].image_name == "image3");
    CHECK(split_answer_words(one[0].answer, ", ").size() == 4);

    CHECK(parse_triples("").empty());
    CHECK(parse_triples("\n\n").empty());

    try {
        parse_triples("q ?\na\nimg\nq2 ?\n");
        FAIL("expected a format error");
    } catch (const FormatError& e) {
        CHECK(e.line() == 4);
    }
    CHECK_THROWS_AS(parse_triples("\nanswer\nimg\n"), FormatError);
    CHECK_THROWS_AS(parse_triples("q ?\nanswer\n \n"), FormatError);

    std::istringstream in("a ?\nb\nc\r\nd ?\ne\nf\n");
    const auto two = parse_triple_file(in);
    REQUIRE(two.size() == 2);
    CHECK(two[0].image_name == "c");
}

TEST_CASE("word_frequencies") {
    CHECK(word_frequencies({"a b a"}) == std::map<std::string, std::size_t>{{"a", 2}, {"b", 1}});
    CHECK(word_frequencies({"", ""}).empty());

    const std::vector<std::string> qs{"what is on the table ?", "what is behind the table ?",
                                      "how many chairs are at the table ?"};
    // Independent recount over the raw characters.
    std::map<std::string, std::size_t> oracle;
    for (const auto& q : qs) {
        std::string word;
        for (char c : q + " ") {
            if (c == ' ') {
                if (!word.empty()) ++oracle[word];
                word.clear();
            } else {
                word += c;
            }
        }
    }
    CHECK(word_frequencies(qs) == oracle);
}

TEST_CASE("build_vocabulary") {
    const auto v = build_vocabulary({{"what", 5}, {"is", 5}, {"table", 1}}, 0);
    CHECK(v.words() == std::vector<std::string>{"<pad>", "<unk>", "is", "what", "table"});
    CHECK(v.index_of("is") == 2);
    CHECK(v.index_of("what") == 3);
    CHECK(v.index_of("table") == 4);

    CHECK(build_vocabulary({}, 0).size() == 2);

    const auto t = build_vocabulary({{"a", 3}, {"b", 2}, {"c", 1}}, 1);
    CHECK(t.size() == 3);
    CHECK(t.contains("a"));
    CHECK_FALSE(t.contains("b"));
}

TEST_CASE("vocabulary is a bijection and deterministic") {
    Rng rng(4);
    std::map<std::string, std::size_t> counts;
    for (int i = 0; i < 200; ++i) counts["w" + std::to_string(i)] = 1 + rng.below(5);
    const auto a = build_vocabulary(counts, 0);
    const auto b = build_vocabulary(counts, 0);
    CHECK(a.words() == b.words());
    std::set<int> seen;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const int idx = a.index_of(a.word_at(static_cast<int>(i)));
        CHECK(idx == static_cast<int>(i));
        seen.insert(idx);
    }
    CHECK(seen.size() == a.size());
    CHECK_THROWS_AS(a.word_at(static_cast<int>(a.size())), IndexError);
}

TEST_CASE("vocabulary file round trip") {
    const auto v = build_vocabulary({{"what", 5}, {"is", 5}, {"table", 1}}, 0);
    std::stringstream s;
    v.write(s);
    CHECK(s.str() == "<pad>\t0\n<unk>\t1\nis\t2\nwhat\t3\ntable\t4\n");
    CHECK(Vocabulary::read(s).words() == v.words());

    std::istringstream skipped("<pad>\t0\n<unk>\t1\nis\t3\n");
    CHECK_THROWS_AS(Vocabulary::read(skipped), FormatError);
    std::istringstream no_specials("is\t0\n");
    CHECK_THROWS_AS(Vocabulary::read(no_specials), FormatError);
}

TEST_CASE("encode_questions") {
    // Indices 0 and 1 are the reserved tokens, so a six-token sentence maps to
    // [0,1,4,2,7,3] when it opens with a literal pad token and an unknown word.
    const auto v = Vocabulary::from_words({"is", "?", "what", "x", "y", "table"});
    const auto enc = encode_questions({"<pad> zebra what is table ?"}, v);
    CHECK(enc[0] == std::vector<int>{0, 1, 4, 2, 7, 3});

    CHECK(encode_questions({"foo bar"}, v)[0] == std::vector<int>{kUnkIndex, kUnkIndex});
    CHECK(encode_questions({""}, v)[0].empty());

    const auto before = v.words();
    encode_questions({"entirely new words"}, v);
    CHECK(v.words() == before);

    const std::string q = "what is x ?";
    CHECK(decode_question(encode_questions({q}, v)[0], v) == q);
}

TEST_CASE("pad_sequences") {
    CHECK(pad_sequences({{2, 3}}, 5).values == std::vector<int>{0, 0, 0, 2, 3});
    CHECK(pad_sequences({{1, 2, 3, 4, 5, 6}}, 4).values == std::vector<int>{3, 4, 5, 6});
    CHECK(pad_sequences({{}}, 5).values == std::vector<int>(5, 0));
    CHECK_THROWS_AS(pad_sequences({{1}}, 0), ConfigError);

    Rng rng(2);
    std::vector<std::vector<int>> seqs;
    for (int i = 0; i < 50; ++i) {
        std::vector<int> s(rng.below(12));
        for (auto& x : s) x = 2 + static_cast<int>(rng.below(20));
        seqs.push_back(s);
    }
    const auto m = pad_sequences(seqs, 7);
    CHECK(m.rows == 50);
    CHECK(m.cols == 7);
    for (std::size_t r = 0; r < 50; ++r) {
        const auto row = m.row(r);
        const std::size_t kept = std::min<std::size_t>(7, seqs[r].size());
        for (std::size_t c = 0; c < 7 - kept; ++c) CHECK(row[c] == 0);
        for (std::size_t c = 0; c < kept; ++c) CHECK(row[7 - kept + c] == seqs[r][seqs[r].size() - kept + c]);
    }
}

TEST_CASE("encode_answers") {
    PipelineConfig first;
    const auto v = Vocabulary::from_words({"knife", "fork"});
    CHECK(encode_answers({"knife, fork"}, v, first) == std::vector<int>{v.index_of("knife")});
    CHECK(encode_answers({"spoon"}, v, first) == std::vector<int>{kUnkIndex});

    PipelineConfig whole;
    whole.only_first_answer_word = false;
    CHECK(answer_class_token("knife, fork", whole) == "knife, fork");
    CHECK(answer_frequencies({"knife, fork", "knife"}, first).at("knife") == 2);
}

TEST_CASE("filter_top_pairs") {
    auto recs = [](std::vector<std::string> answers) {
        std::vector<QARecord> out;
        for (auto& a : answers) out.push_back({"q ?", a, "img"});
        return out;
    };
    const auto one = filter_top_pairs(recs({"a", "a", "b", "c"}), 1);
    REQUIRE(one.size() == 2);
    CHECK(one[0].answer == "a");
    CHECK(one[1].answer == "a");
    CHECK(filter_top_pairs(recs({"a", "b", "c"}), 0).size() == 3);
    const auto two = filter_top_pairs(recs({"a", "a", "b", "b", "c"}), 2);
    CHECK(two.size() == 4);
    for (const auto& r : two) CHECK(r.answer != "c");
}
