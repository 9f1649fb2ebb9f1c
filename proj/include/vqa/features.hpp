#pragma once

// Precomputed per-image visual features.

#include "vqa/textpipe.hpp"

#include <cstddef>
#include <istream>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace vqa::features {

// Row-major [rows x cols] matrix of plain data (not a tape tensor).
struct FeatureMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
};

class FeatureTable {
public:
    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return rows_.size(); }
    bool contains(const std::string& name) const { return rows_.contains(name); }

    // Throws LookupError naming the image.
    std::span<const double> at(const std::string& name) const;

    // Throws ConfigError on a wrong-length vector or a duplicate name.
    void insert(std::string name, std::vector<double> vec);

    // Returns a copy with every row l2-normalized.
    FeatureTable l2_normalized() const;

private:
    std::size_t dim_ = 0;
    std::map<std::string, std::vector<double>> rows_;
};

// CSV lines "name,f1,...,fD"; no header. Throws FormatError (empty input,
// ragged row, duplicate name, unparseable number) naming the line.
FeatureTable load_feature_table(std::istream& in);

// Row i is the feature vector of records[i].image_name.
FeatureMatrix align(const std::vector<text::QARecord>& records, const FeatureTable& table);

// v / ||v||_2, or v unchanged when the norm is at most 1e-12.
std::vector<double> l2_normalize(std::span<const double> v);

}  // namespace vqa::features
