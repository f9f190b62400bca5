#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fracedge/imgcore.hpp"

namespace fracedge {

/// Truncated Grünwald–Letnikov difference mask of order v.
///
/// coefficients[j] multiplies the sample j steps behind the current one, i.e.
/// the backward difference D^v s(x) ~ sum_j coefficients[j] * s(x - j).
struct FractionalKernel {
    double order = 1.0;
    std::vector<double> coefficients;

    std::size_t terms() const noexcept { return coefficients.size(); }
};

inline constexpr std::size_t kDefaultTerms = 3;

/// c_0 = 1, c_j = c_{j-1} * (j - 1 - v) / j, which equals
/// (-1)^j Γ(v+1) / (Γ(j+1) Γ(v-j+1)) and is exactly zero past an integer order.
/// Throws std::invalid_argument for v <= 0 (or non-finite) and terms < 2.
FractionalKernel gl_coefficients(double order, std::size_t terms = kDefaultTerms);

/// {"order": v, "terms": T, "coefficients": [...]}
std::string kernel_to_json(const FractionalKernel& kernel);

struct GaussianKernel {
    double sigma = 1.0;
    std::size_t radius = 0;
    std::vector<double> weights;  // 2 * radius + 1 taps, sums to 1
};

/// radius = ceil(3 sigma), weights proportional to exp(-i^2 / (2 sigma^2)).
GaussianKernel gaussian_kernel(double sigma);

/// 1-D convolution along rows with replicate borders:
///   out[y][x] = sum_i weights[i] * img[y][clamp(x - i + anchor)].
RasterImage convolve_rows(const RasterImage& img, std::span<const double> weights, std::size_t anchor);

/// Same as convolve_rows, along columns.
RasterImage convolve_cols(const RasterImage& img, std::span<const double> weights, std::size_t anchor);

/// Horizontal pass then vertical pass, each anchored at index len / 2,
/// replicate borders. Throws std::invalid_argument on an empty sequence.
RasterImage convolve_separable(const RasterImage& img, std::span<const double> horizontal,
                               std::span<const double> vertical);

/// Directional responses of the fractional operator.
struct GradientField {
    RasterImage gx;
    RasterImage gy;

    std::size_t width() const noexcept { return gx.width(); }
    std::size_t height() const noexcept { return gx.height(); }
};

/// Gaussian pre-smoothing (skipped when sigma == 0) followed by the backward
/// fractional difference along x and along y.
GradientField fractional_gradient(const RasterImage& img, const FractionalKernel& kernel, double sigma);

/// Applies only the difference stage to an already-smoothed image.
GradientField fractional_difference(const RasterImage& smoothed, const FractionalKernel& kernel);

RasterImage gaussian_smooth(const RasterImage& img, double sigma);

enum class CombineMode {
    sum,        // gx + gy
    magnitude,  // sqrt(gx^2 + gy^2)
};

CombineMode parse_combine_mode(const std::string& name);
const char* to_string(CombineMode mode) noexcept;

RasterImage combine_gradient(const GradientField& field, CombineMode mode = CombineMode::sum);

}  // namespace fracedge
