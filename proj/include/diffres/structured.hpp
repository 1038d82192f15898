#pragma once

#include "diffres/common.hpp"

namespace diffres {

// Points partitioned into subclasses S_{i,j}; subset_class[m] is the class of subset m.
struct StructuredDataset {
    Matrix coords;
    std::vector<int> subset;        // per point
    std::vector<int> subset_class;  // per subset

    int num_subsets() const { return static_cast<int>(subset_class.size()); }
    std::vector<std::vector<int>> members() const;
    std::vector<int> point_labels() const;
    void validate() const;
};

}  // namespace diffres
