#ifndef RSEG_KMEANS_HPP
#define RSEG_KMEANS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <set>
#include <stdexcept>
#include <vector>

namespace rseg {

struct KMeansResult {
    std::vector<std::vector<double>> centroids;
    std::vector<int> assignment;
    double inertia = 0.0;
};

namespace detail {

inline double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline KMeansResult lloyd(const std::vector<std::vector<double>>& pts,
                          std::vector<std::vector<double>> centroids, int max_iter = 100) {
    const int k = static_cast<int>(centroids.size());
    KMeansResult res;
    res.assignment.assign(pts.size(), 0);
    for (int it = 0; it < max_iter; ++it) {
        bool changed = (it == 0);
        for (std::size_t p = 0; p < pts.size(); ++p) {
            int best = 0;
            double bd = sq_dist(pts[p], centroids[0]);
            for (int c = 1; c < k; ++c) {
                const double d = sq_dist(pts[p], centroids[static_cast<std::size_t>(c)]);
                if (d < bd) {
                    bd = d;
                    best = c;
                }
            }
            if (res.assignment[p] != best) changed = true;
            res.assignment[p] = best;
        }
        if (!changed && it > 0) break;
        std::vector<std::vector<double>> sums(static_cast<std::size_t>(k),
                                              std::vector<double>(pts[0].size(), 0.0));
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (std::size_t p = 0; p < pts.size(); ++p) {
            counts[static_cast<std::size_t>(res.assignment[p])]++;
            auto& s = sums[static_cast<std::size_t>(res.assignment[p])];
            for (std::size_t i = 0; i < s.size(); ++i) s[i] += pts[p][i];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] == 0) continue;  // empty cluster keeps its centroid
            auto& cc = centroids[static_cast<std::size_t>(c)];
            for (std::size_t i = 0; i < cc.size(); ++i)
                cc[i] = sums[static_cast<std::size_t>(c)][i] / counts[static_cast<std::size_t>(c)];
        }
    }
    res.inertia = 0.0;
    for (std::size_t p = 0; p < pts.size(); ++p)
        res.inertia += sq_dist(pts[p], centroids[static_cast<std::size_t>(res.assignment[p])]);
    res.centroids = std::move(centroids);
    return res;
}

}  // namespace detail

// Lloyd's algorithm with random-point initialization; best of `restarts`
// runs under the given seed.
inline KMeansResult kmeans(const std::vector<std::vector<double>>& pts, int k, int restarts,
                           std::uint64_t seed) {
    if (pts.empty()) throw std::invalid_argument("kmeans: no points");
    if (k < 1 || k > static_cast<int>(pts.size()))
        throw std::invalid_argument("kmeans: k out of range");
    std::mt19937_64 rng(seed);
    KMeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        std::vector<std::size_t> order(pts.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<std::vector<double>> init;
        for (std::size_t i = 0; i < order.size() && static_cast<int>(init.size()) < k; ++i) {
            bool dup = false;
            for (const auto& c : init)
                if (detail::sq_dist(c, pts[order[i]]) == 0.0) dup = true;
            if (!dup) init.push_back(pts[order[i]]);
        }
        while (static_cast<int>(init.size()) < k) init.push_back(pts[order[0]]);
        KMeansResult res = detail::lloyd(pts, std::move(init));
        if (res.inertia < best.inertia) best = std::move(res);
    }
    return best;
}

// Inertia as a function of k with a nested initialization: the k+1 run is
// seeded with the best k-run centroids plus the worst-fit point, which makes
// the curve non-increasing by construction. When k reaches the number of
// distinct points the exact zero-inertia solution is used directly.
inline std::vector<double> kmeans_inertia_curve(const std::vector<std::vector<double>>& pts,
                                                int k_max, int restarts, std::uint64_t seed) {
    if (k_max < 1 || k_max > static_cast<int>(pts.size()))
        throw std::invalid_argument("kmeans_inertia_curve: k_max out of range");
    std::vector<std::vector<double>> distinct;
    for (const auto& p : pts) {
        bool dup = false;
        for (const auto& d : distinct)
            if (detail::sq_dist(d, p) == 0.0) dup = true;
        if (!dup) distinct.push_back(p);
    }
    std::vector<double> curve;
    KMeansResult prev;
    for (int k = 1; k <= k_max; ++k) {
        if (k >= static_cast<int>(distinct.size())) {
            std::vector<std::vector<double>> cent(distinct.begin(), distinct.end());
            while (static_cast<int>(cent.size()) < k) cent.push_back(distinct[0]);
            prev = detail::lloyd(pts, std::move(cent));
            curve.push_back(prev.inertia);
            continue;
        }
        KMeansResult best = kmeans(pts, k, restarts, seed + static_cast<std::uint64_t>(k));
        if (k > 1) {
            // nested candidate: previous centroids + farthest point
            std::vector<std::vector<double>> cent = prev.centroids;
            std::size_t worst = 0;
            double worst_d = -1.0;
            for (std::size_t p = 0; p < pts.size(); ++p) {
                const double d =
                    detail::sq_dist(pts[p], prev.centroids[static_cast<std::size_t>(
                                                prev.assignment[p])]);
                if (d > worst_d) {
                    worst_d = d;
                    worst = p;
                }
            }
            cent.push_back(pts[worst]);
            KMeansResult nested = detail::lloyd(pts, std::move(cent));
            if (nested.inertia < best.inertia) best = std::move(nested);
        }
        prev = std::move(best);
        curve.push_back(prev.inertia);
    }
    return curve;
}

}  // namespace rseg

#endif
