#pragma once

// Rooted concept taxonomy, word senses, and Wu-Palmer similarity.

#include <cstddef>
#include <istream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vqa::onto {

// Tree of concepts. The root is its own parent and has depth 1.
class Taxonomy {
public:
    // Lines "concept<TAB>parent"; the root's parent is "-". Lines may come in
    // any order. Throws FormatError naming the line on a second root, an
    // unknown parent, a duplicate concept, or a cycle.
    static Taxonomy parse(std::istream& in);

    // Builds from (concept, parent) pairs with the same rules as parse();
    // line numbers in errors are 1-based positions in `edges`.
    static Taxonomy from_edges(const std::vector<std::pair<std::string, std::string>>& edges);

    std::size_t size() const noexcept { return names_.size(); }
    bool contains(std::string_view concept_name) const;
    const std::string& root() const { return names_[root_]; }

    // Throw LookupError for unknown concepts.
    std::size_t depth(std::string_view concept_name) const;
    const std::string& parent(std::string_view concept_name) const;

    // Deepest concept on both ancestor chains (a chain includes its start).
    const std::string& lca(std::string_view a, std::string_view b) const;

    // Concept followed by its ancestors, ending at the root.
    std::vector<std::string> ancestors(std::string_view concept_name) const;

    // 2 * depth(lca) / (depth(a) + depth(b)), in (0, 1].
    double wup(std::string_view a, std::string_view b) const;

private:
    static Taxonomy build(const std::vector<std::pair<std::string, std::string>>& edges,
                          const std::vector<std::size_t>& line_of);
    std::size_t id_of(std::string_view concept_name) const;
    std::size_t lca_id(std::size_t a, std::size_t b) const;

    std::vector<std::string> names_;
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> depth_;
    std::unordered_map<std::string, std::size_t> ids_;
    std::size_t root_ = 0;
};

// word -> candidate senses (concepts in a Taxonomy).
class Lexicon {
public:
    // Lines "word<TAB>concept[,concept...]". Throws FormatError naming the line
    // for concepts missing from the taxonomy, empty sense lists, or repeated words.
    static Lexicon parse(std::istream& in, const Taxonomy& taxonomy);

    // Same checks; throws ConfigError.
    void add(std::string word, std::vector<std::string> senses, const Taxonomy& taxonomy);

    bool contains(std::string_view word) const;

    // Empty if the word is unknown.
    const std::vector<std::string>& senses(std::string_view word) const;

    std::size_t size() const noexcept { return senses_.size(); }

private:
    std::unordered_map<std::string, std::vector<std::string>> senses_;
};

// Best Wu-Palmer similarity over all sense pairs. When either word has no
// senses the result is 1 for identical strings and 0 otherwise.
double word_wup(std::string_view w1, std::string_view w2, const Lexicon& lexicon,
                const Taxonomy& taxonomy);

}  // namespace vqa::onto
