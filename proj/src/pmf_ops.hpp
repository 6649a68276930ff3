#pragma once

// Truncated polynomial arithmetic on pmfs, shared by the embedding and
// oracle modules. Scalar is double or an exact rational type.

#include <algorithm>
#include <cstddef>
#include <vector>

namespace bpsre::detail {

/// (a * b) truncated to degree `cutoff`.
template <class Scalar>
std::vector<Scalar> truncated_product(const std::vector<Scalar>& a, const std::vector<Scalar>& b,
                                      std::size_t cutoff) {
    if (a.empty() || b.empty()) {
        return {};
    }
    const std::size_t len = std::min(a.size() + b.size() - 1, cutoff + 1);
    std::vector<Scalar> out(len, Scalar(0));
    for (std::size_t i = 0; i < a.size() && i < len; ++i) {
        if (a[i] == Scalar(0)) {
            continue;
        }
        const std::size_t jmax = std::min(b.size(), len - i);
        for (std::size_t j = 0; j < jmax; ++j) {
            out[i + j] += a[i] * b[j];
        }
    }
    return out;
}

/// pmf of sum_{i=1}^{K} X_i with K ~ outer and X_i iid ~ inner, truncated
/// at `cutoff`: sum_k outer[k] * inner^{*k}, evaluated by Horner's scheme.
template <class Scalar>
std::vector<Scalar> compound(const std::vector<Scalar>& outer, const std::vector<Scalar>& inner,
                             std::size_t cutoff) {
    std::vector<Scalar> acc;
    for (std::size_t k = outer.size(); k-- > 0;) {
        acc = truncated_product(acc, inner, cutoff);
        if (acc.empty()) {
            acc.assign(1, Scalar(0));
        }
        acc[0] += outer[k];
    }
    return acc;
}

}  // namespace bpsre::detail
