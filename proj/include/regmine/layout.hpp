#pragma once

#include <cstddef>
#include <vector>

#include "regmine/contours.hpp"

namespace regmine {

/// Horizontal extent of one block, the k-means feature vector.
struct BoundsPoint {
    double left = 0;
    double right = 0;
    std::size_t block_id = 0;
};

struct ColumnBounds {
    double left = 0;
    double right = 0;
    double width() const { return right - left; }
};

/// Column centroids sorted by left bound, with per-column population
/// standard deviations of the member bounds.
struct ColumnModel {
    std::vector<ColumnBounds> centroids;
    std::vector<ColumnBounds> stddevs;

    std::size_t k() const { return centroids.size(); }
    double widest_column() const;
};

/// Full k-means run, kept so callers can inspect convergence.
struct KMeansResult {
    ColumnModel model;
    /// Column (index into model.centroids) for each input point.
    std::vector<std::size_t> assignment;
    /// Sum of squared distances after each assignment step.
    std::vector<double> objective;
    int iterations = 0;
};

struct KMeansOptions {
    int max_iter = 100;
    double tol = 0.5;
};

/// Lloyd's algorithm in (left, right) space. Seeds are the k weighted
/// quantiles of the points sorted by left bound, so results never depend on
/// an RNG. Throws std::invalid_argument if k exceeds the distinct point count.
KMeansResult kmeans_run(const std::vector<BoundsPoint>& points, std::size_t k, const KMeansOptions& opts = {});

ColumnModel kmeans_fit(const std::vector<BoundsPoint>& points, std::size_t k, const KMeansOptions& opts = {});

/// Partition of a page's boxes.
struct PageBlocks {
    std::vector<std::vector<BBox>> column_blocks;  // per column, top to bottom
    std::vector<BBox> centered_blocks;             // top to bottom
    std::vector<BBox> rejected;
};

struct ClassifyOptions {
    double sigma_threshold = 2.0;
    double center_tol = 0.02;
    double sigma_floor = 1.5;
};

/// Centered test first (center within center_tol * page_width of the page
/// middle and wider than the widest column), then nearest-centroid column
/// assignment with a per-bound deviation limit of
/// sigma_threshold * max(sigma, sigma_floor).
PageBlocks classify_blocks(const std::vector<BBox>& boxes, const ColumnModel& model, int page_width,
                           const ClassifyOptions& opts = {});

/// Columns left to right, each top to bottom.
std::vector<BBox> reading_order(const PageBlocks& pb);

std::vector<BoundsPoint> bounds_points(const std::vector<BBox>& boxes);

/// Fit, classify, then refit on the column-kept boxes and classify again so
/// page furniture (page numbers, centered headings) does not skew the column
/// statistics. Column count is clamped to the number of distinct boxes.
struct ColumnFit {
    ColumnModel model;
    PageBlocks blocks;
};
ColumnFit fit_columns(const std::vector<BBox>& boxes, std::size_t columns, int page_width,
                      const ClassifyOptions& classify = {}, const KMeansOptions& kmeans = {});

} // namespace regmine
