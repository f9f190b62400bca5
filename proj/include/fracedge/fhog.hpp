#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "fracedge/fracgrad.hpp"
#include "fracedge/imgcore.hpp"

namespace fracedge {

enum class HogNormalization { none, cell_l2 };

/// Orientation histograms over square cells, stored cells_y x cells_x x bins.
struct HogDescriptor {
    std::size_t cell_size = 0;
    std::size_t bins = 0;
    std::size_t cells_x = 0;
    std::size_t cells_y = 0;
    HogNormalization normalization = HogNormalization::none;
    std::vector<double> histogram;

    double& at(std::size_t cy, std::size_t cx, std::size_t bin) noexcept {
        return histogram[(cy * cells_x + cx) * bins + bin];
    }
    double at(std::size_t cy, std::size_t cx, std::size_t bin) const noexcept {
        return histogram[(cy * cells_x + cx) * bins + bin];
    }
};

struct FhogOptions {
    std::size_t terms = kDefaultTerms;
    double sigma = 0.0;
    HogNormalization normalization = HogNormalization::none;
};

inline constexpr double kDefaultFhogOrder = 0.6;

/// Unsigned orientation atan2(gy, gx) mod pi with bin b centred on b*pi/bins;
/// each pixel's magnitude is split linearly between the two nearest centres
/// (cyclically). Partial border cells are kept. Throws std::invalid_argument
/// for cell_size < 2, bins < 2, order <= 0, or an image smaller than a cell.
HogDescriptor fhog_features(const RasterImage& img, double order, std::size_t cell_size, std::size_t bins,
                            const FhogOptions& options = {});

/// Histogram from precomputed gradients.
HogDescriptor hog_from_gradients(const GradientField& field, std::size_t cell_size, std::size_t bins,
                                 HogNormalization normalization = HogNormalization::none);

/// Row-major (cell_y, cell_x, bin).
std::vector<double> descriptor_flatten(const HogDescriptor& d);

/// Inverse of descriptor_flatten given the layout of `shape`.
HogDescriptor descriptor_reshape(const std::vector<double>& flat, const HogDescriptor& shape);

std::string descriptor_to_json(const HogDescriptor& d, int indent = 2);

/// "FHOG" magic, u32 cells_y, u32 cells_x, u32 bins, u32 cell_size, then
/// cells_y * cells_x * bins little-endian float32 values.
void save_descriptor_raw(const HogDescriptor& d, const std::filesystem::path& path);
HogDescriptor load_descriptor_raw(const std::filesystem::path& path);

}  // namespace fracedge
