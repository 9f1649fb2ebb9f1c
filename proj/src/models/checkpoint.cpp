#include "vqa/errors.hpp"
#include "vqa/models.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

namespace vqa::model {
namespace {

struct Entry {
    std::string name;
    ad::Shape shape;
    std::vector<double> values;
};

std::vector<Entry> parse_entries(std::istream& in, bool with_values) {
    std::vector<Entry> entries;
    std::string header;
    std::string data;
    std::size_t line_no = 0;
    while (std::getline(in, header)) {
        ++line_no;
        if (header.empty()) continue;
        std::istringstream hs(header);
        Entry e;
        hs >> e.name;
        std::size_t extent = 0;
        while (hs >> extent) e.shape.push_back(extent);
        if (e.name.empty() || e.shape.empty() || !hs.eof()) {
            throw FormatError("expected 'name d1 d2 ...'", line_no);
        }
        if (!std::getline(in, data)) throw FormatError("missing values for '" + e.name + "'", line_no + 1);
        ++line_no;
        if (with_values) {
            const std::size_t expected = ad::element_count(e.shape);
            e.values.reserve(expected);
            const char* p = data.data();
            const char* end = data.data() + data.size();
            while (p < end) {
                while (p < end && *p == ' ') ++p;
                if (p == end) break;
                double v = 0.0;
                const auto [next, ec] = std::from_chars(p, end, v);
                if (ec != std::errc()) throw FormatError("bad value in '" + e.name + "'", line_no);
                e.values.push_back(v);
                p = next;
            }
            if (e.values.size() != expected) {
                throw FormatError("'" + e.name + "' has " + std::to_string(e.values.size()) +
                                      " values, shape needs " + std::to_string(expected), line_no);
            }
        }
        entries.push_back(std::move(e));
    }
    return entries;
}

}  // namespace

void write_checkpoint(const Model& model, std::ostream& out) {
    char buf[32];
    for (const auto& [name, tensor] : model.parameters()) {
        out << name;
        for (std::size_t extent : tensor.shape()) out << ' ' << extent;
        out << '\n';
        bool first = true;
        for (double v : tensor.data()) {
            // Shortest representation that round-trips exactly.
            const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
            if (!first) out << ' ';
            out.write(buf, end - buf);
            first = false;
        }
        out << '\n';
    }
}

void read_checkpoint(Model& model, std::istream& in) {
    auto entries = parse_entries(in, true);
    const auto& params = model.parameters();
    if (entries.size() != params.size()) {
        throw FormatError("checkpoint holds " + std::to_string(entries.size()) +
                          " tensors, the " + std::string(to_string(model.architecture())) +
                          " model has " + std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (entries[i].name != params[i].name || entries[i].shape != params[i].tensor.shape()) {
            throw FormatError("checkpoint tensor " + entries[i].name + " " +
                              ad::to_string(entries[i].shape) + " does not match model tensor " +
                              params[i].name + " " + ad::to_string(params[i].tensor.shape()));
        }
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        ad::Tensor t = params[i].tensor;
        std::copy(entries[i].values.begin(), entries[i].values.end(), t.data().begin());
    }
}

std::vector<std::pair<std::string, ad::Shape>> checkpoint_layout(std::istream& in) {
    std::vector<std::pair<std::string, ad::Shape>> layout;
    for (auto& e : parse_entries(in, false)) layout.emplace_back(std::move(e.name), std::move(e.shape));
    return layout;
}

}  // namespace vqa::model
