#include "fracedge/fracgrad.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fracedge {

FractionalKernel gl_coefficients(double order, std::size_t terms) {
    if (!std::isfinite(order) || order <= 0.0) {
        throw std::invalid_argument("gl_coefficients: order must be a finite positive number");
    }
    if (terms < 2) {
        throw std::invalid_argument("gl_coefficients: at least two terms are required");
    }
    FractionalKernel k;
    k.order = order;
    k.coefficients.resize(terms);
    k.coefficients[0] = 1.0;
    for (std::size_t j = 1; j < terms; ++j) {
        const double jd = static_cast<double>(j);
        k.coefficients[j] = k.coefficients[j - 1] * ((jd - 1.0 - order) / jd);
    }
    return k;
}

std::string kernel_to_json(const FractionalKernel& kernel) {
    nlohmann::ordered_json j;
    j["order"] = kernel.order;
    j["terms"] = kernel.terms();
    j["coefficients"] = kernel.coefficients;
    return j.dump(2);
}

GaussianKernel gaussian_kernel(double sigma) {
    if (!std::isfinite(sigma) || sigma <= 0.0) {
        throw std::invalid_argument("gaussian_kernel: sigma must be a finite positive number");
    }
    GaussianKernel g;
    g.sigma = sigma;
    g.radius = static_cast<std::size_t>(std::ceil(3.0 * sigma));
    g.weights.resize(2 * g.radius + 1);
    const double denom = 2.0 * sigma * sigma;
    for (std::size_t i = 0; i <= g.radius; ++i) {
        const double d = static_cast<double>(i);
        const double w = std::exp(-d * d / denom);
        g.weights[g.radius + i] = w;
        g.weights[g.radius - i] = w;
    }
    const double total = std::accumulate(g.weights.begin(), g.weights.end(), 0.0);
    for (double& w : g.weights) w /= total;
    return g;
}

namespace {

void require_weights(std::span<const double> weights, std::size_t anchor) {
    if (weights.empty()) {
        throw std::invalid_argument("convolution: weight sequence must be non-empty");
    }
    if (anchor >= weights.size()) {
        throw std::invalid_argument("convolution: anchor outside the weight sequence");
    }
}

// One output line: out[x] = sum_i w[i] * in[clamp(x - i + anchor)], taps in
// ascending i for every pixel.
void convolve_line(const double* in, std::ptrdiff_t in_stride, double* out, std::ptrdiff_t out_stride,
                   std::ptrdiff_t n, std::span<const double> w, std::ptrdiff_t anchor) {
    const auto taps = static_cast<std::ptrdiff_t>(w.size());
    // Interior: x - i + anchor stays within [0, n) for all i.
    const std::ptrdiff_t lo = taps - 1 - anchor;
    const std::ptrdiff_t hi = n - anchor;
    for (std::ptrdiff_t x = 0; x < n; ++x) {
        double acc = 0.0;
        if (x >= lo && x < hi) {
            const double* base = in + (x + anchor) * in_stride;
            for (std::ptrdiff_t i = 0; i < taps; ++i) acc += w[i] * base[-i * in_stride];
        } else {
            for (std::ptrdiff_t i = 0; i < taps; ++i) {
                const std::ptrdiff_t src = std::clamp<std::ptrdiff_t>(x - i + anchor, 0, n - 1);
                acc += w[i] * in[src * in_stride];
            }
        }
        out[x * out_stride] = acc;
    }
}

}  // namespace

RasterImage convolve_rows(const RasterImage& img, std::span<const double> weights, std::size_t anchor) {
    require_weights(weights, anchor);
    RasterImage out(img.width(), img.height());
    const auto w = static_cast<std::ptrdiff_t>(img.width());
    for (std::size_t y = 0; y < img.height(); ++y) {
        convolve_line(img.row(y).data(), 1, out.row(y).data(), 1, w, weights, static_cast<std::ptrdiff_t>(anchor));
    }
    return out;
}

RasterImage convolve_cols(const RasterImage& img, std::span<const double> weights, std::size_t anchor) {
    require_weights(weights, anchor);
    RasterImage out(img.width(), img.height());
    const auto stride = static_cast<std::ptrdiff_t>(img.width());
    const auto h = static_cast<std::ptrdiff_t>(img.height());
    const double* src = img.values().data();
    double* dst = out.values().data();
    for (std::size_t x = 0; x < img.width(); ++x) {
        convolve_line(src + x, stride, dst + x, stride, h, weights, static_cast<std::ptrdiff_t>(anchor));
    }
    return out;
}

RasterImage convolve_separable(const RasterImage& img, std::span<const double> horizontal,
                               std::span<const double> vertical) {
    if (horizontal.empty() || vertical.empty()) {
        throw std::invalid_argument("convolve_separable: weight sequences must be non-empty");
    }
    const RasterImage rows = convolve_rows(img, horizontal, horizontal.size() / 2);
    return convolve_cols(rows, vertical, vertical.size() / 2);
}

RasterImage gaussian_smooth(const RasterImage& img, double sigma) {
    if (sigma == 0.0) {
        return img;
    }
    const GaussianKernel g = gaussian_kernel(sigma);
    return convolve_separable(img, g.weights, g.weights);
}

GradientField fractional_difference(const RasterImage& smoothed, const FractionalKernel& kernel) {
    // Anchor 0: coefficient j lands on the sample j pixels behind.
    return {convolve_rows(smoothed, kernel.coefficients, 0), convolve_cols(smoothed, kernel.coefficients, 0)};
}

GradientField fractional_gradient(const RasterImage& img, const FractionalKernel& kernel, double sigma) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw std::invalid_argument("fractional_gradient: sigma must be >= 0");
    }
    return fractional_difference(gaussian_smooth(img, sigma), kernel);
}

CombineMode parse_combine_mode(const std::string& name) {
    if (name == "sum") return CombineMode::sum;
    if (name == "magnitude") return CombineMode::magnitude;
    throw std::invalid_argument("unknown combine mode: " + name);
}

const char* to_string(CombineMode mode) noexcept {
    return mode == CombineMode::sum ? "sum" : "magnitude";
}

RasterImage combine_gradient(const GradientField& field, CombineMode mode) {
    RasterImage out(field.width(), field.height());
    const auto gx = field.gx.values();
    const auto gy = field.gy.values();
    auto dst = out.values();
    if (mode == CombineMode::sum) {
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = gx[i] + gy[i];
    } else {
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = std::hypot(gx[i], gy[i]);
    }
    return out;
}

}  // namespace fracedge
