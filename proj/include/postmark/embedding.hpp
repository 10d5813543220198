#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "postmark/errors.hpp"

namespace postmark {

using Embedding = std::vector<float>;

// Accumulation happens in doubles, left to right, so scores are identical
// across runs on the same inputs.
inline double dot(const Embedding& a, const Embedding& b) {
    if (a.size() != b.size()) {
        throw InputError("dot: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return sum;
}

inline double l2_norm(const Embedding& v) {
    double sum = 0.0;
    for (float x : v) sum += static_cast<double>(x) * static_cast<double>(x);
    return std::sqrt(sum);
}

inline void l2_normalize(Embedding& v) {
    const double norm = l2_norm(v);
    if (norm <= 0.0) throw Error("cannot normalize zero-length vector");
    for (float& x : v) x = static_cast<float>(static_cast<double>(x) / norm);
}

inline bool is_normalized(const Embedding& v, double eps = 1e-6) {
    return std::fabs(l2_norm(v) - 1.0) <= eps;
}

// Cosine similarity of two unit vectors: their dot product, clamped to [-1, 1]
// against float round-off. Callers normalize at ingestion.
inline double cosine(const Embedding& a, const Embedding& b) {
    return std::clamp(dot(a, b), -1.0, 1.0);
}

}  // namespace postmark
