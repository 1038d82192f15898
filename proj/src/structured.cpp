#include "diffres/structured.hpp"

namespace diffres {

std::vector<std::vector<int>> StructuredDataset::members() const {
    std::vector<std::vector<int>> out(num_subsets());
    for (int i = 0; i < static_cast<int>(subset.size()); ++i) out[subset[i]].push_back(i);
    return out;
}

std::vector<int> StructuredDataset::point_labels() const {
    std::vector<int> y(subset.size());
    for (size_t i = 0; i < subset.size(); ++i) y[i] = subset_class[subset[i]];
    return y;
}

void StructuredDataset::validate() const {
    if (static_cast<Eigen::Index>(subset.size()) != coords.rows()) throw Error("subset ids do not match point count");
    for (int s : subset)
        if (s < 0 || s >= num_subsets()) throw Error("subset id out of range");
    if (!coords.allFinite()) throw Error("structured dataset has non-finite coordinates");
}

}  // namespace diffres
