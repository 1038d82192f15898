#include "diffres/common.hpp"

#include <algorithm>
#include <numeric>

namespace diffres {

int PointSet::num_classes() const {
    int k = 0;
    for (int y : labels) k = std::max(k, y + 1);
    return k;
}

void PointSet::validate() const {
    if (coords.rows() < 1 || coords.cols() < 1) throw Error("point set must have N >= 1 and d >= 1");
    if (!coords.allFinite()) throw Error("point set contains non-finite coordinates");
    if (!labels.empty() && static_cast<Eigen::Index>(labels.size()) != coords.rows())
        throw Error("label count does not match point count");
    for (int y : labels)
        if (y < kUnlabeled) throw Error("invalid label " + std::to_string(y));
}

std::vector<int> iota_indices(int n) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

Matrix select_rows(const Matrix& m, const std::vector<int>& rows) {
    Matrix out(rows.size(), m.cols());
    for (size_t i = 0; i < rows.size(); ++i) out.row(i) = m.row(rows[i]);
    return out;
}

}  // namespace diffres
