#pragma once

#include <cstddef>
#include <filesystem>

#include "fracedge/fracgrad.hpp"
#include "fracedge/imgcore.hpp"

namespace fracedge {

/// Boundary strength in [0, 1].
using EdgeMap = Grid<double>;

struct DetectorConfig {
    double order = 0.6;
    std::size_t terms = kDefaultTerms;
    double sigma = 2.0;
    CombineMode combine = CombineMode::sum;
    bool nms = true;

    /// Throws std::invalid_argument unless order > 0, terms >= 2, sigma >= 0.
    void validate() const;
};

/// Wall-clock seconds spent in each detection stage.
struct StageTimings {
    double smooth = 0.0;
    double gradient = 0.0;
    double nms = 0.0;
};

/// Keeps |response| where it is >= both neighbours along the gradient
/// direction atan2(gy, gx), quantized to 0/45/90/135 degrees; 0 elsewhere.
/// Neighbours are read from the unsuppressed input.
RasterImage suppress_non_maxima(const RasterImage& response, const GradientField& field);

EdgeMap detect_edges(const RasterImage& img, const DetectorConfig& cfg, StageTimings* timings = nullptr);

/// mask = strength > t (strict). Throws std::invalid_argument for t outside [0, 1].
BinaryBoundaryMap threshold_map(const EdgeMap& edges, double t);

/// strength * 255, rounded.
void save_edge_pgm(const EdgeMap& edges, const std::filesystem::path& path);

/// "FEDG" magic, u32 width, u32 height, u32 reserved (0), then width*height
/// little-endian float32 values, row-major.
void save_edge_fedg(const EdgeMap& edges, const std::filesystem::path& path);
EdgeMap load_edge_fedg(const std::filesystem::path& path);

/// FEDG by magic, otherwise an 8-bit image scaled by 1/255.
EdgeMap load_edge_map(const std::filesystem::path& path);

}  // namespace fracedge
