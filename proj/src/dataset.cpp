#include "nids/dataset.hpp"

#include <algorithm>
#include <cmath>

namespace nids {

void Dataset::add(std::span<const double> row, Label label) {
    if (row.size() != dim) {
        throw Error("dataset: row of dimension " + std::to_string(row.size()) + ", expected " +
                    std::to_string(dim));
    }
    values.insert(values.end(), row.begin(), row.end());
    labels.push_back(label);
}

std::size_t Dataset::count(Label l) const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), l));
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset out(dim, spec_version);
    out.values.reserve(indices.size() * dim);
    out.labels.reserve(indices.size());
    for (std::size_t i : indices) out.add(row(i), labels.at(i));
    return out;
}

void Dataset::validate() const {
    if (labels.empty()) throw Error("dataset is empty");
    if (dim == 0) throw Error("dataset has zero dimension");
    if (values.size() != labels.size() * dim) throw Error("dataset storage is ragged");
    if (!std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); })) {
        throw Error("dataset contains non-finite values");
    }
}

}  // namespace nids
