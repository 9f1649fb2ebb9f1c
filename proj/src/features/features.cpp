#include "vqa/features.hpp"

#include "vqa/errors.hpp"

#include <charconv>
#include <cmath>
#include <string_view>

namespace vqa::features {
namespace {

std::string_view trim(std::string_view s) {
    constexpr std::string_view kSpace = " \t\r";
    const auto first = s.find_first_not_of(kSpace);
    if (first == std::string_view::npos) return {};
    return s.substr(first, s.find_last_not_of(kSpace) - first + 1);
}

double parse_double(std::string_view text, std::size_t line_no) {
    text = trim(text);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
        throw FormatError("bad feature value '" + std::string(text) + "'", line_no);
    }
    return value;
}

}  // namespace

std::span<const double> FeatureTable::at(const std::string& name) const {
    const auto it = rows_.find(name);
    if (it == rows_.end()) throw LookupError("no visual features for image '" + name + "'");
    return it->second;
}

void FeatureTable::insert(std::string name, std::vector<double> vec) {
    if (vec.empty()) throw ConfigError("feature vector for '" + name + "' is empty");
    if (dim_ == 0) dim_ = vec.size();
    if (vec.size() != dim_) {
        throw ConfigError("feature vector for '" + name + "' has " + std::to_string(vec.size()) +
                          " values, expected " + std::to_string(dim_));
    }
    const std::string key = name;
    if (!rows_.emplace(std::move(name), std::move(vec)).second) {
        throw ConfigError("duplicate image name '" + key + "'");
    }
}

FeatureTable FeatureTable::l2_normalized() const {
    FeatureTable out;
    for (const auto& [name, vec] : rows_) out.insert(name, l2_normalize(vec));
    return out;
}

FeatureTable load_feature_table(std::istream& in) {
    FeatureTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::string_view rest = line;
        const auto comma = rest.find(',');
        if (comma == std::string_view::npos) throw FormatError("expected 'name,f1,...,fD'", line_no);
        std::string name(trim(rest.substr(0, comma)));
        if (name.empty()) throw FormatError("empty image name", line_no);
        rest.remove_prefix(comma + 1);
        std::vector<double> vec;
        while (true) {
            const auto next = rest.find(',');
            vec.push_back(parse_double(rest.substr(0, next), line_no));
            if (next == std::string_view::npos) break;
            rest.remove_prefix(next + 1);
        }
        if (table.size() > 0 && vec.size() != table.dim()) {
            throw FormatError("row has " + std::to_string(vec.size()) + " values, expected " +
                                  std::to_string(table.dim()), line_no);
        }
        if (table.contains(name)) throw FormatError("duplicate image name '" + name + "'", line_no);
        table.insert(std::move(name), std::move(vec));
    }
    if (table.size() == 0) throw FormatError("feature file has no rows; dimension is undetermined");
    return table;
}

FeatureMatrix align(const std::vector<text::QARecord>& records, const FeatureTable& table) {
    FeatureMatrix m{records.size(), table.dim(), {}};
    m.values.reserve(records.size() * table.dim());
    for (const auto& r : records) {
        const auto vec = table.at(r.image_name);
        m.values.insert(m.values.end(), vec.begin(), vec.end());
    }
    return m;
}

std::vector<double> l2_normalize(std::span<const double> v) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    const double norm = std::sqrt(sq);
    std::vector<double> out(v.begin(), v.end());
    if (norm > 1e-12) {
        for (double& x : out) x /= norm;
    }
    return out;
}

}  // namespace vqa::features
