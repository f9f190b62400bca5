#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fracedge/edgepipe.hpp"
#include "fracedge/imgcore.hpp"

namespace fracedge {

// ---------------------------------------------------------------------------
// Signal fidelity

/// Mean of squared differences. Throws std::invalid_argument on a shape mismatch.
double mse(const RasterImage& reference, const RasterImage& processed);

/// PSNR in dB, or the infinite marker when the images are identical.
struct Psnr {
    double db = 0.0;
    bool infinite = false;
};

Psnr psnr(const RasterImage& reference, const RasterImage& processed, double peak = 255.0);

/// w = x - s under the additive degradation model x = s + w.
RasterImage noise_residual(const RasterImage& observed, const RasterImage& signal);

// ---------------------------------------------------------------------------
// Boundary matching

/// Squared Euclidean distance from every pixel to the nearest set pixel of
/// `mask`; +inf everywhere when the mask is empty.
Grid<double> squared_distance_transform(const BinaryBoundaryMap& mask);

/// Counts from tolerance matching. A predicted pixel is a true positive when
/// it lies within `tol` of any truth pixel; a truth pixel is covered when it
/// lies within `tol` of any predicted pixel. Both sides are matched
/// independently, so `true_positives` counts predicted pixels and
/// `covered_truth` counts truth pixels.
struct MatchResult {
    std::size_t true_positives = 0;
    std::size_t false_positives = 0;
    std::size_t covered_truth = 0;
    std::size_t false_negatives = 0;

    std::size_t predicted() const noexcept { return true_positives + false_positives; }
    std::size_t truth() const noexcept { return covered_truth + false_negatives; }

    MatchResult& operator+=(const MatchResult& o) noexcept {
        true_positives += o.true_positives;
        false_positives += o.false_positives;
        covered_truth += o.covered_truth;
        false_negatives += o.false_negatives;
        return *this;
    }
    friend bool operator==(const MatchResult&, const MatchResult&) = default;
};

MatchResult match_boundaries(const BinaryBoundaryMap& predicted, const BinaryBoundaryMap& truth, double tol);

/// Several annotators: a prediction counts as matched if any annotator
/// matches it; covered/missed truth counts are summed over annotators.
MatchResult match_boundaries(const BinaryBoundaryMap& predicted, std::span<const BinaryBoundaryMap> truths,
                             double tol);

/// 0.0075 of the image diagonal.
double default_tolerance(std::size_t width, std::size_t height) noexcept;

// ---------------------------------------------------------------------------
// Detection error and score

inline constexpr double kDetectionErrorFloor = 1e-6;

struct DetectionError {
    double pm = 0.0;  // missed detections / truth pixels
    double pf = 0.0;  // false positives / predicted pixels
    double de = 0.0;  // max(pm * pf, floor)
};

DetectionError detection_error(const MatchResult& m);

/// PSNR / DE. Throws std::invalid_argument for de <= 0.
double score_j(double psnr_db, double de);

// ---------------------------------------------------------------------------
// Precision / recall

struct PrPoint {
    double threshold = 0.0;
    double precision = 1.0;
    double recall = 0.0;
    double f_measure = 0.0;
    MatchResult counts;
};

double f_measure(double precision, double recall) noexcept;

/// Precision is 1 when nothing is predicted; recall is 0 when there is no truth.
PrPoint pr_point(double threshold, const MatchResult& counts);

/// thresholds i / levels for i in [0, levels).
std::vector<double> threshold_grid(std::size_t levels);

inline constexpr std::size_t kDefaultLevels = 33;

std::vector<PrPoint> pr_curve(const EdgeMap& edges, std::span<const BinaryBoundaryMap> truths, std::size_t levels,
                              double tol);
std::vector<PrPoint> pr_curve(const EdgeMap& edges, const BinaryBoundaryMap& truth, std::size_t levels, double tol);

struct SweepSummary {
    double ods = 0.0;
    double ods_threshold = 0.0;
    double ois = 0.0;
    double ap = 0.0;
    std::vector<PrPoint> aggregate;     // dataset-pooled counts per threshold
    std::vector<double> per_image_best_f;
    std::vector<std::size_t> per_image_best_index;
};

/// ODS: best F over thresholds of pooled counts. OIS: counts pooled at each
/// image's own best-F threshold, then F. AP: trapezoid area under the pooled
/// curve ordered by recall, held flat from recall 0 to the first point.
/// Throws std::invalid_argument on an empty input or mismatched grids.
SweepSummary summarize_sweep(std::span<const std::vector<PrPoint>> per_image_curves);

double average_precision(std::span<const PrPoint> curve);

// ---------------------------------------------------------------------------
// Per-image report

inline constexpr double kDefaultDeThreshold = 0.5;

struct EvalParams {
    std::size_t levels = kDefaultLevels;
    std::optional<double> tol;           // default_tolerance() when unset
    double de_threshold = kDefaultDeThreshold;
    double peak = 255.0;
};

struct EvalReport {
    std::string name;
    double order = 0.0;
    double sigma = 0.0;
    Psnr psnr;
    DetectionError error;
    double de_threshold = 0.0;
    std::optional<double> j;  // empty when PSNR is infinite
    std::vector<PrPoint> pr;
    double ods = 0.0;
    double ois = 0.0;
    double ap = 0.0;
};

/// PSNR compares `original` with the edge map rescaled to [0, 255]; DE uses
/// the edge map thresholded at `de_threshold`.
EvalReport evaluate_edges(const RasterImage& original, const EdgeMap& edges,
                          std::span<const BinaryBoundaryMap> truths, const EvalParams& params);

std::string report_to_json(const EvalReport& report, int indent = 2);

/// threshold,precision,recall,f
std::string pr_to_csv(std::span<const PrPoint> curve);

}  // namespace fracedge
