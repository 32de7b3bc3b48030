#include "phraseqa/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <random>

#include "phraseqa/error.hpp"
#include "phraseqa/hashing.hpp"
#include "phraseqa/simd/kernels.hpp"

namespace phraseqa {

std::uint32_t nearest_centroid(std::span<const float> point, std::span<const float> centroids, std::size_t k) {
    const auto& kern = simd::active_kernels();
    const std::size_t dim = point.size();
    std::uint32_t best = 0;
    float best_d = std::numeric_limits<float>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
        const float d = kern.l2sq(point.data(), centroids.data() + c * dim, dim);
        if (d < best_d) {
            best_d = d;
            best = static_cast<std::uint32_t>(c);
        }
    }
    return best;
}

namespace {

std::vector<float> seed_plus_plus(const MatrixView& pts, std::size_t k, std::mt19937_64& rng) {
    const auto& kern = simd::active_kernels();
    const std::size_t n = pts.rows;
    const std::size_t dim = pts.dim;
    std::vector<float> centroids;
    centroids.reserve(k * dim);

    auto add = [&](std::size_t idx) {
        const auto r = pts.row(idx);
        centroids.insert(centroids.end(), r.begin(), r.end());
    };

    add(rng() % n);
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) {
        d2[i] = kern.l2sq(pts.row(i).data(), centroids.data(), dim);
    }
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (double v : d2) {
            total += v;
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            const double target = unit_interval(rng()) * total;
            double cum = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                cum += d2[i];
                if (cum > target && d2[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = rng() % n;
        }
        add(pick);
        const float* newest = centroids.data() + c * dim;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], double(kern.l2sq(pts.row(i).data(), newest, dim)));
        }
    }
    return centroids;
}

// Returns true when any assignment changed.
bool assign(const MatrixView& pts, std::span<const float> centroids, std::size_t k,
            std::vector<std::uint32_t>& assignments) {
    bool changed = false;
    for (std::size_t i = 0; i < pts.rows; ++i) {
        const auto c = nearest_centroid(pts.row(i), centroids, k);
        if (assignments[i] != c) {
            assignments[i] = c;
            changed = true;
        }
    }
    return changed;
}

void update_means(const MatrixView& pts, std::size_t k, std::vector<std::uint32_t>& assignments,
                  std::vector<float>& centroids) {
    const std::size_t dim = pts.dim;
    std::vector<double> sums(k * dim, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < pts.rows; ++i) {
        const auto c = assignments[i];
        ++counts[c];
        const auto r = pts.row(i);
        for (std::size_t d = 0; d < dim; ++d) {
            sums[c * dim + d] += r[d];
        }
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] == 0) {
            continue;
        }
        for (std::size_t d = 0; d < dim; ++d) {
            centroids[c * dim + d] = static_cast<float>(sums[c * dim + d] / double(counts[c]));
        }
    }

    // Split the largest cluster for each empty one.
    const auto& kern = simd::active_kernels();
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] != 0) {
            continue;
        }
        const auto largest = static_cast<std::uint32_t>(
            std::max_element(counts.begin(), counts.end()) - counts.begin());
        if (counts[largest] < 2) {
            break; // fewer distinct points than clusters
        }
        std::size_t far = pts.rows;
        float far_d = -1.0f;
        for (std::size_t i = 0; i < pts.rows; ++i) {
            if (assignments[i] != largest) {
                continue;
            }
            const float d = kern.l2sq(pts.row(i).data(), centroids.data() + largest * dim, dim);
            if (d > far_d) {
                far_d = d;
                far = i;
            }
        }
        const auto r = pts.row(far);
        std::copy(r.begin(), r.end(), centroids.begin() + static_cast<std::ptrdiff_t>(c * dim));
        assignments[far] = static_cast<std::uint32_t>(c);
        --counts[largest];
        counts[c] = 1;
    }
}

} // namespace

KMeansResult kmeans(const MatrixView& points, std::size_t k, std::size_t iters, std::uint64_t seed) {
    if (k == 0) {
        throw Error("kmeans: k must be positive");
    }
    if (k > points.rows) {
        throw Error("kmeans: k (" + std::to_string(k) + ") exceeds number of vectors (" +
                    std::to_string(points.rows) + ")");
    }
    if (points.data.size() != points.rows * points.dim) {
        throw Error("kmeans: matrix view size mismatch");
    }

    std::mt19937_64 rng(seed);
    KMeansResult res;
    res.k = k;
    res.dim = points.dim;
    res.centroids = seed_plus_plus(points, k, rng);
    res.assignments.assign(points.rows, std::numeric_limits<std::uint32_t>::max());
    assign(points, res.centroids, k, res.assignments);

    for (std::size_t it = 0; it < iters; ++it) {
        update_means(points, k, res.assignments, res.centroids);
        ++res.iterations;
        if (!assign(points, res.centroids, k, res.assignments)) {
            break;
        }
    }
    return res;
}

} // namespace phraseqa
