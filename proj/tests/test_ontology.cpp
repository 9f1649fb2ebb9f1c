#include "vqa/errors.hpp"
#include "vqa/ontology.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <sstream>

using namespace vqa;
using namespace vqa::onto;

namespace {

Taxonomy parse_taxonomy(const std::string& text) {
    std::istringstream in(text);
    return Taxonomy::parse(in);
}

Lexicon parse_lexicon(const std::string& text, const Taxonomy& t) {
    std::istringstream in(text);
    return Lexicon::parse(in, t);
}

std::size_t error_line(const std::string& text) {
    try {
        parse_taxonomy(text);
    } catch (const FormatError& e) {
        return e.line();
    }
    return 0;
}

}  // namespace

TEST_CASE("parse taxonomy") {
    const auto t = parse_taxonomy("entity\t-\nanimal\tentity\ndog\tanimal\n");
    CHECK(t.size() == 3);
    CHECK(t.root() == "entity");
    CHECK(t.depth("entity") == 1);
    CHECK(t.depth("animal") == 2);
    CHECK(t.depth("dog") == 3);
    CHECK(t.parent("entity") == "entity");

    // Children may precede their parents.
    CHECK(parse_taxonomy("dog\tanimal\nanimal\t-\n").depth("dog") == 2);

    CHECK(error_line("a\t-\nb\t-\n") == 2);
    CHECK(error_line("a\t-\nb\tzzz\n") == 2);
    CHECK(error_line("a\t-\nb\ta\nb\ta\n") == 3);
    CHECK(error_line("a\t-\nb\tc\nc\tb\n") != 0);
    CHECK(error_line("no tab here\n") == 1);
    CHECK_THROWS_AS(parse_taxonomy(""), FormatError);
    CHECK_THROWS_AS(t.depth("cat"), LookupError);
}

TEST_CASE("parse lexicon") {
    const auto t = parse_taxonomy("furniture\t-\nchair.n.01\tfurniture\nchair.n.03\tfurniture\n");
    const auto lex = parse_lexicon("chair\tchair.n.01,chair.n.03\n", t);
    CHECK(lex.senses("chair").size() == 2);
    CHECK(lex.senses("table").empty());
    try {
        parse_lexicon("chair\tchair.n.01\nstool\tstool.n.01\n", t);
        FAIL("expected a format error");
    } catch (const FormatError& e) {
        CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(parse_lexicon("chair\tchair.n.01\nchair\tchair.n.03\n", t), FormatError);
}

TEST_CASE("toy ontology") {
    const auto t = parse_taxonomy(testing::toy_taxonomy_text());
    CHECK(t.lca("dog", "dog") == "dog");
    CHECK(t.lca("dog", "horse") == "animal");
    CHECK(t.lca("dalmatian", "horse") == "animal");
    CHECK(t.wup("dog", "horse") == 0.5);
    CHECK(t.wup("dog", "dalmatian") == 0.8);
    CHECK(t.wup("horse", "dalmatian") == 0.4);
    for (const char* c : {"animal", "dog", "horse", "dalmatian"}) CHECK(t.wup(c, c) == 1.0);
    CHECK(t.ancestors("dalmatian") == std::vector<std::string>{"dalmatian", "dog", "animal"});
}

TEST_CASE("word_wup") {
    const auto t = parse_taxonomy(testing::toy_taxonomy_text());
    Lexicon lex;
    lex.add("pet", {"dog", "horse"}, t);
    lex.add("spotty", {"dalmatian"}, t);
    lex.add("dog", {"dog"}, t);
    CHECK(word_wup("pet", "spotty", lex, t) == 0.8);
    CHECK(word_wup("spotty", "pet", lex, t) == 0.8);
    CHECK(word_wup("dog", "dog", lex, t) == 1.0);
    CHECK(word_wup("zebra", "zebra", lex, t) == 1.0);
    CHECK(word_wup("zebra", "okapi", lex, t) == 0.0);
    CHECK(word_wup("zebra", "dog", lex, t) == 0.0);
    CHECK_THROWS_AS(lex.add("cat", {"cat"}, t), ConfigError);
    CHECK_THROWS_AS(lex.add("none", {}, t), ConfigError);
}

TEST_CASE("lca and wup agree with the brute-force oracle on random trees") {
    Rng rng(77);
    for (int trial = 0; trial < 3; ++trial) {
        const auto edges = testing::random_tree(60, rng);
        const auto t = Taxonomy::from_edges(edges);
        const testing::TreeOracle oracle(edges);
        for (std::size_t i = 0; i < 60; ++i) {
            for (std::size_t j = 0; j < 60; ++j) {
                const std::string a = "c" + std::to_string(i), b = "c" + std::to_string(j);
                const std::string l = t.lca(a, b);
                CHECK(l == oracle.lca(a, b));
                const auto aa = t.ancestors(a), ab = t.ancestors(b);
                CHECK(std::find(aa.begin(), aa.end(), l) != aa.end());
                CHECK(std::find(ab.begin(), ab.end(), l) != ab.end());
                const double w = t.wup(a, b);
                CHECK(w == oracle.wup(a, b));
                CHECK(w == t.wup(b, a));
                CHECK(w > 0.0);
                CHECK((w == 1.0) == (a == b));
            }
        }
        for (std::size_t i = 1; i < 60; ++i) {
            const std::string c = "c" + std::to_string(i);
            CHECK(t.depth(c) == t.depth(t.parent(c)) + 1);
        }
    }
}
