#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fracedge/edgepipe.hpp"
#include "fracedge/evalbench.hpp"

namespace fracedge {

struct DatasetItem {
    std::string name;
    RasterImage image;
    std::vector<BinaryBoundaryMap> truths;  // one per annotator
};

/// Order grid lo, lo + step, ..., hi (inclusive within 1e-9), values rounded
/// to 1e-10 so that a 0.1 step yields 0.1, 0.2, ... exactly as parsed.
std::vector<double> make_order_grid(double lo, double hi, double step);

/// Parses "lo:hi:step". Throws std::invalid_argument on malformed input.
std::vector<double> parse_order_grid(const std::string& spec);

/// 0.1, 0.2, ..., 2.0
std::vector<double> default_order_grid();

struct SweepOptions {
    DetectorConfig detector;  // `order` is overridden per grid point
    EvalParams eval;
    std::size_t jobs = 1;
};

struct OrderSweepResult {
    std::vector<double> grid;
    std::vector<double> mean_j;
    double best_order = 0.0;
    std::size_t best_index = 0;

    std::vector<std::string> image_names;
    /// per_image_j[order][image]; empty when that image could not be scored.
    std::vector<std::vector<std::optional<double>>> per_image_j;
    /// PR summary (ODS/OIS/AP) per order over all non-skipped images.
    std::vector<SweepSummary> pr;
    /// Images dropped before the sweep (e.g. empty ground truth).
    std::vector<std::string> skipped;
};

/// For every order: detect, score J per image, average over scored images in
/// ascending image order. best_order is the argmax, ties going to the smaller
/// order. Throws std::invalid_argument for an empty dataset or grid, a
/// non-increasing grid, or non-positive orders.
OrderSweepResult sweep_orders(std::span<const DatasetItem> dataset, std::span<const double> grid,
                              const SweepOptions& options);

/// Argmax with ties toward the lower index.
std::size_t best_index(std::span<const double> scores);

/// "order,mean_j" header followed by one row per grid order, ascending.
std::string sweep_report(const OrderSweepResult& result);

struct SweepCsvRow {
    double order;
    double mean_j;
};
std::vector<SweepCsvRow> parse_sweep_report(const std::string& csv);

/// "order,ods,ois,ap"
std::string sweep_table(const OrderSweepResult& result);

std::string sweep_to_json(const OrderSweepResult& result, int indent = 2);

}  // namespace fracedge
