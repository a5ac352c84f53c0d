#include "regmine/layout.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace regmine {

namespace {

double sq_dist(const BoundsPoint& p, const ColumnBounds& c)
{
    const double dl = p.left - c.left;
    const double dr = p.right - c.right;
    return dl * dl + dr * dr;
}

std::size_t nearest(const BoundsPoint& p, const std::vector<ColumnBounds>& centroids)
{
    std::size_t best = 0;
    double best_d = sq_dist(p, centroids[0]);
    for (std::size_t j = 1; j < centroids.size(); ++j) {
        const double d = sq_dist(p, centroids[j]);
        if (d < best_d) {  // strict: ties stay with the lower index
            best_d = d;
            best = j;
        }
    }
    return best;
}

bool same_bounds(const BoundsPoint& a, const BoundsPoint& b)
{
    return a.left == b.left && a.right == b.right;
}

std::vector<ColumnBounds> quantile_seeds(const std::vector<BoundsPoint>& points, std::size_t k)
{
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (points[a].left != points[b].left) return points[a].left < points[b].left;
        return points[a].right < points[b].right;
    });

    // Distinct groups over the sorted order, with the rank each group ends at.
    std::vector<std::size_t> group_first;
    std::vector<std::size_t> group_end;
    for (std::size_t r = 0; r < order.size(); ++r) {
        if (r == 0 || !same_bounds(points[order[r]], points[order[r - 1]])) {
            if (r) group_end.push_back(r);
            group_first.push_back(r);
        }
    }
    group_end.push_back(order.size());
    const std::size_t groups = group_first.size();
    if (k > groups) {
        throw std::invalid_argument("k = " + std::to_string(k) + " exceeds the " + std::to_string(groups) +
                                    " distinct points");
    }

    std::vector<char> used(groups, 0);
    std::vector<ColumnBounds> seeds;
    const std::size_t n = points.size();
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t rank = static_cast<std::size_t>(std::floor((i + 0.5) * static_cast<double>(n) / k));
        std::size_t g = static_cast<std::size_t>(
            std::upper_bound(group_end.begin(), group_end.end(), std::min(rank, n - 1)) - group_end.begin());
        if (used[g]) {
            std::size_t fwd = g;
            while (fwd < groups && used[fwd]) ++fwd;
            if (fwd < groups) {
                g = fwd;
            } else {
                while (used[g]) --g;
            }
        }
        used[g] = 1;
        const BoundsPoint& p = points[order[group_first[g]]];
        seeds.push_back({p.left, p.right});
    }
    return seeds;
}

} // namespace

double ColumnModel::widest_column() const
{
    double widest = 0;
    for (const auto& c : centroids) widest = std::max(widest, c.width());
    return widest;
}

std::vector<BoundsPoint> bounds_points(const std::vector<BBox>& boxes)
{
    std::vector<BoundsPoint> pts;
    pts.reserve(boxes.size());
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        pts.push_back({static_cast<double>(boxes[i].left), static_cast<double>(boxes[i].right), i});
    }
    return pts;
}

KMeansResult kmeans_run(const std::vector<BoundsPoint>& points, std::size_t k, const KMeansOptions& opts)
{
    if (points.empty()) throw std::invalid_argument("k-means needs at least one point");
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (opts.max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");

    std::vector<ColumnBounds> centroids = quantile_seeds(points, k);
    std::vector<std::size_t> assignment(points.size(), 0);
    KMeansResult result;

    auto assign = [&]() {
        bool changed = false;
        double objective = 0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const std::size_t j = nearest(points[i], centroids);
            changed = changed || j != assignment[i];
            assignment[i] = j;
            objective += sq_dist(points[i], centroids[j]);
        }
        result.objective.push_back(objective);
        return changed;
    };

    assign();
    for (int iter = 1; iter <= opts.max_iter; ++iter) {
        result.iterations = iter;
        std::vector<ColumnBounds> sums(k);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            sums[assignment[i]].left += points[i].left;
            sums[assignment[i]].right += points[i].right;
            ++counts[assignment[i]];
        }
        double movement = 0;
        for (std::size_t j = 0; j < k; ++j) {
            if (counts[j] == 0) continue;  // empty cluster keeps its centroid
            const ColumnBounds next{sums[j].left / counts[j], sums[j].right / counts[j]};
            movement = std::max(movement, std::hypot(next.left - centroids[j].left, next.right - centroids[j].right));
            centroids[j] = next;
        }
        const bool changed = assign();
        if (!changed || movement < opts.tol) break;
    }

    // Per-column population standard deviation of the member bounds.
    std::vector<ColumnBounds> var(k);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        const std::size_t j = assignment[i];
        const double dl = points[i].left - centroids[j].left;
        const double dr = points[i].right - centroids[j].right;
        var[j].left += dl * dl;
        var[j].right += dr * dr;
        ++counts[j];
    }

    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
        if (centroids[a].left != centroids[b].left) return centroids[a].left < centroids[b].left;
        return centroids[a].right < centroids[b].right;
    });
    std::vector<std::size_t> rank(k);
    for (std::size_t r = 0; r < k; ++r) rank[perm[r]] = r;

    for (std::size_t r = 0; r < k; ++r) {
        const std::size_t j = perm[r];
        result.model.centroids.push_back(centroids[j]);
        const double n = counts[j] ? static_cast<double>(counts[j]) : 1.0;
        result.model.stddevs.push_back({std::sqrt(var[j].left / n), std::sqrt(var[j].right / n)});
    }
    result.assignment.resize(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) result.assignment[i] = rank[assignment[i]];
    return result;
}

ColumnModel kmeans_fit(const std::vector<BoundsPoint>& points, std::size_t k, const KMeansOptions& opts)
{
    return kmeans_run(points, k, opts).model;
}

PageBlocks classify_blocks(const std::vector<BBox>& boxes, const ColumnModel& model, int page_width,
                           const ClassifyOptions& opts)
{
    if (opts.sigma_threshold <= 0) throw std::invalid_argument("sigma_threshold must be positive");
    PageBlocks pb;
    pb.column_blocks.resize(model.k());
    const double widest = model.widest_column();
    const double middle = 0.5 * page_width;

    for (const BBox& box : boxes) {
        const bool near_middle = std::abs(box.center_x() - middle) <= opts.center_tol * page_width;
        if (near_middle && box.width() > widest) {
            pb.centered_blocks.push_back(box);
            continue;
        }
        if (model.k() == 0) {
            pb.rejected.push_back(box);
            continue;
        }
        const BoundsPoint p{static_cast<double>(box.left), static_cast<double>(box.right), 0};
        const std::size_t j = nearest(p, model.centroids);
        const ColumnBounds& c = model.centroids[j];
        const ColumnBounds& s = model.stddevs[j];
        const bool left_ok = std::abs(p.left - c.left) <= opts.sigma_threshold * std::max(s.left, opts.sigma_floor);
        const bool right_ok =
            std::abs(p.right - c.right) <= opts.sigma_threshold * std::max(s.right, opts.sigma_floor);
        if (left_ok && right_ok) {
            pb.column_blocks[j].push_back(box);
        } else {
            pb.rejected.push_back(box);
        }
    }

    auto by_top = [](const BBox& a, const BBox& b) {
        if (a.top != b.top) return a.top < b.top;
        return a.left < b.left;
    };
    for (auto& col : pb.column_blocks) std::stable_sort(col.begin(), col.end(), by_top);
    std::stable_sort(pb.centered_blocks.begin(), pb.centered_blocks.end(), by_top);
    return pb;
}

std::vector<BBox> reading_order(const PageBlocks& pb)
{
    std::vector<BBox> out;
    for (const auto& col : pb.column_blocks) out.insert(out.end(), col.begin(), col.end());
    return out;
}

ColumnFit fit_columns(const std::vector<BBox>& boxes, std::size_t columns, int page_width,
                      const ClassifyOptions& classify, const KMeansOptions& kmeans)
{
    ColumnFit fit;
    if (boxes.empty() || columns == 0) {
        fit.blocks.rejected = boxes;
        return fit;
    }
    auto distinct = [](std::vector<BoundsPoint> pts) {
        std::sort(pts.begin(), pts.end(), [](const BoundsPoint& a, const BoundsPoint& b) {
            return a.left != b.left ? a.left < b.left : a.right < b.right;
        });
        return static_cast<std::size_t>(
            std::unique(pts.begin(), pts.end(), [](const BoundsPoint& a, const BoundsPoint& b) {
                return same_bounds(a, b);
            }) - pts.begin());
    };

    auto points = bounds_points(boxes);
    const std::size_t k = std::min(columns, distinct(points));
    fit.model = kmeans_fit(points, k, kmeans);
    fit.blocks = classify_blocks(boxes, fit.model, page_width, classify);

    const auto kept = reading_order(fit.blocks);
    if (!kept.empty()) {
        auto kept_points = bounds_points(kept);
        if (distinct(kept_points) >= k) {
            fit.model = kmeans_fit(kept_points, k, kmeans);
            fit.blocks = classify_blocks(boxes, fit.model, page_width, classify);
        }
    }
    return fit;
}

} // namespace regmine
