#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace phraseqa {

/// Read-only row-major view over `rows` vectors of length `dim`.
struct MatrixView {
    std::span<const float> data;
    std::size_t rows = 0;
    std::size_t dim = 0;

    std::span<const float> row(std::size_t i) const { return data.subspan(i * dim, dim); }
};

struct KMeansResult {
    std::vector<float> centroids; // k x dim, row-major
    std::vector<std::uint32_t> assignments;
    std::size_t k = 0;
    std::size_t dim = 0;
    std::size_t iterations = 0;
};

/// k-means++ seeding followed by at most `iters` Lloyd rounds (stops early
/// once no assignment changes). Empty clusters take the member of the
/// largest cluster farthest from its centroid. On return every point is
/// assigned to its nearest centroid (Euclidean, ties to the lower index).
///
/// Throws Error when k == 0 or k > rows.
KMeansResult kmeans(const MatrixView& points, std::size_t k, std::size_t iters, std::uint64_t seed);

/// Nearest centroid by squared L2, ties to the lower index.
std::uint32_t nearest_centroid(std::span<const float> point, std::span<const float> centroids, std::size_t k);

} // namespace phraseqa
