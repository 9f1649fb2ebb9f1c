#include "vqa/ontology.hpp"

#include "vqa/errors.hpp"

#include <algorithm>
#include <deque>

namespace vqa::onto {
namespace {

std::string_view trim(std::string_view s) {
    constexpr std::string_view kSpace = " \t\r";
    const auto first = s.find_first_not_of(kSpace);
    if (first == std::string_view::npos) return {};
    return s.substr(first, s.find_last_not_of(kSpace) - first + 1);
}

constexpr std::string_view kNoParent = "-";
constexpr std::size_t kUnset = static_cast<std::size_t>(-1);

}  // namespace

Taxonomy Taxonomy::from_edges(const std::vector<std::pair<std::string, std::string>>& edges) {
    std::vector<std::size_t> lines(edges.size());
    for (std::size_t i = 0; i < lines.size(); ++i) lines[i] = i + 1;
    return build(edges, lines);
}

Taxonomy Taxonomy::build(const std::vector<std::pair<std::string, std::string>>& edges,
                         const std::vector<std::size_t>& line_of) {
    Taxonomy t;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const auto& name = edges[i].first;
        if (name.empty() || name == kNoParent) throw FormatError("invalid concept name", line_of[i]);
        if (!t.ids_.emplace(name, t.names_.size()).second) {
            throw FormatError("duplicate concept '" + name + "'", line_of[i]);
        }
        t.names_.push_back(name);
    }

    bool have_root = false;
    t.parent_.assign(t.names_.size(), kUnset);
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const auto& parent = edges[i].second;
        if (parent == kNoParent) {
            if (have_root) {
                throw FormatError("multiple roots ('" + t.names_[t.root_] + "' and '" +
                                      edges[i].first + "')", line_of[i]);
            }
            have_root = true;
            t.root_ = i;
            t.parent_[i] = i;
            continue;
        }
        const auto it = t.ids_.find(parent);
        if (it == t.ids_.end()) throw FormatError("unknown parent '" + parent + "'", line_of[i]);
        t.parent_[i] = it->second;
    }
    if (!have_root) {
        throw FormatError(t.names_.empty() ? "taxonomy is empty" : "taxonomy has no root (cycle)");
    }

    // Root-down breadth-first traversal; whatever it misses sits on a cycle.
    std::vector<std::vector<std::size_t>> children(t.names_.size());
    for (std::size_t i = 0; i < t.names_.size(); ++i) {
        if (i != t.root_) children[t.parent_[i]].push_back(i);
    }
    t.depth_.assign(t.names_.size(), 0);
    t.depth_[t.root_] = 1;
    std::deque<std::size_t> queue{t.root_};
    while (!queue.empty()) {
        const std::size_t node = queue.front();
        queue.pop_front();
        for (std::size_t child : children[node]) {
            t.depth_[child] = t.depth_[node] + 1;
            queue.push_back(child);
        }
    }
    for (std::size_t i = 0; i < t.names_.size(); ++i) {
        if (t.depth_[i] == 0) {
            throw FormatError("concept '" + t.names_[i] + "' is on a cycle", line_of[i]);
        }
    }
    return t;
}

Taxonomy Taxonomy::parse(std::istream& in) {
    std::vector<std::pair<std::string, std::string>> edges;
    std::vector<std::size_t> line_numbers;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw FormatError("expected 'concept<TAB>parent'", line_no);
        edges.emplace_back(std::string(trim(std::string_view(line).substr(0, tab))),
                           std::string(trim(std::string_view(line).substr(tab + 1))));
        line_numbers.push_back(line_no);
    }
    return build(edges, line_numbers);
}

bool Taxonomy::contains(std::string_view concept_name) const {
    return ids_.contains(std::string(concept_name));
}

std::size_t Taxonomy::id_of(std::string_view concept_name) const {
    const auto it = ids_.find(std::string(concept_name));
    if (it == ids_.end()) throw LookupError("unknown concept '" + std::string(concept_name) + "'");
    return it->second;
}

std::size_t Taxonomy::depth(std::string_view concept_name) const {
    return depth_[id_of(concept_name)];
}

const std::string& Taxonomy::parent(std::string_view concept_name) const {
    return names_[parent_[id_of(concept_name)]];
}

std::size_t Taxonomy::lca_id(std::size_t a, std::size_t b) const {
    while (depth_[a] > depth_[b]) a = parent_[a];
    while (depth_[b] > depth_[a]) b = parent_[b];
    while (a != b) {
        a = parent_[a];
        b = parent_[b];
    }
    return a;
}

const std::string& Taxonomy::lca(std::string_view a, std::string_view b) const {
    return names_[lca_id(id_of(a), id_of(b))];
}

std::vector<std::string> Taxonomy::ancestors(std::string_view concept_name) const {
    std::vector<std::string> chain;
    std::size_t id = id_of(concept_name);
    chain.push_back(names_[id]);
    while (id != root_) {
        id = parent_[id];
        chain.push_back(names_[id]);
    }
    return chain;
}

double Taxonomy::wup(std::string_view a, std::string_view b) const {
    const std::size_t ia = id_of(a), ib = id_of(b);
    const double common = static_cast<double>(depth_[lca_id(ia, ib)]);
    return 2.0 * common / static_cast<double>(depth_[ia] + depth_[ib]);
}

void Lexicon::add(std::string word, std::vector<std::string> senses, const Taxonomy& taxonomy) {
    if (word.empty()) throw ConfigError("empty lexicon word");
    if (senses.empty()) throw ConfigError("word '" + word + "' has no senses");
    for (const auto& s : senses) {
        if (!taxonomy.contains(s)) {
            throw ConfigError("sense '" + s + "' of word '" + word + "' is not in the taxonomy");
        }
    }
    const std::string key = word;
    if (!senses_.emplace(std::move(word), std::move(senses)).second) {
        throw ConfigError("word '" + key + "' listed twice");
    }
}

Lexicon Lexicon::parse(std::istream& in, const Taxonomy& taxonomy) {
    Lexicon lex;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw FormatError("expected 'word<TAB>concept[,...]'", line_no);
        std::vector<std::string> senses;
        std::string_view rest = std::string_view(line).substr(tab + 1);
        while (true) {
            const auto comma = rest.find(',');
            const auto piece = trim(rest.substr(0, comma));
            if (!piece.empty()) senses.emplace_back(piece);
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        try {
            lex.add(std::string(trim(std::string_view(line).substr(0, tab))), std::move(senses),
                    taxonomy);
        } catch (const ConfigError& e) {
            throw FormatError(e.what(), line_no);
        }
    }
    return lex;
}

bool Lexicon::contains(std::string_view word) const { return senses_.contains(std::string(word)); }

const std::vector<std::string>& Lexicon::senses(std::string_view word) const {
    static const std::vector<std::string> kNone;
    const auto it = senses_.find(std::string(word));
    return it == senses_.end() ? kNone : it->second;
}

double word_wup(std::string_view w1, std::string_view w2, const Lexicon& lexicon,
                const Taxonomy& taxonomy) {
    const auto& s1 = lexicon.senses(w1);
    const auto& s2 = lexicon.senses(w2);
    if (s1.empty() || s2.empty()) return w1 == w2 ? 1.0 : 0.0;
    double best = 0.0;
    for (const auto& a : s1) {
        for (const auto& b : s2) best = std::max(best, taxonomy.wup(a, b));
    }
    return best;
}

}  // namespace vqa::onto
