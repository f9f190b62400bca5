#include "fracedge/fhog.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <stdexcept>

#include "fracedge/serialize.hpp"

namespace fracedge {

namespace fs = std::filesystem;

HogDescriptor hog_from_gradients(const GradientField& field, std::size_t cell_size, std::size_t bins,
                                 HogNormalization normalization) {
    if (cell_size < 2) throw std::invalid_argument("fhog: cell_size must be >= 2");
    if (bins < 2) throw std::invalid_argument("fhog: bins must be >= 2");
    const std::size_t w = field.width();
    const std::size_t h = field.height();
    if (w < cell_size || h < cell_size) {
        throw std::invalid_argument("fhog: image is smaller than one cell");
    }

    HogDescriptor d;
    d.cell_size = cell_size;
    d.bins = bins;
    d.cells_x = (w + cell_size - 1) / cell_size;
    d.cells_y = (h + cell_size - 1) / cell_size;
    d.normalization = normalization;
    d.histogram.assign(d.cells_x * d.cells_y * bins, 0.0);

    const double bin_width = std::numbers::pi / static_cast<double>(bins);
    for (std::size_t y = 0; y < h; ++y) {
        const std::size_t cy = y / cell_size;
        for (std::size_t x = 0; x < w; ++x) {
            const double gx = field.gx(x, y);
            const double gy = field.gy(x, y);
            const double mag = std::hypot(gx, gy);
            if (mag == 0.0) continue;
            double theta = std::atan2(gy, gx);
            if (theta < 0.0) theta += std::numbers::pi;
            // Position in bin-centre units; centre b sits at b * bin_width.
            double pos = theta / bin_width;
            if (pos >= static_cast<double>(bins)) pos -= static_cast<double>(bins);
            const auto lower = static_cast<std::size_t>(std::floor(pos));
            const double frac = pos - static_cast<double>(lower);
            const std::size_t b0 = lower % bins;
            const std::size_t b1 = (lower + 1) % bins;
            const std::size_t cx = x / cell_size;
            d.at(cy, cx, b0) += mag * (1.0 - frac);
            d.at(cy, cx, b1) += mag * frac;
        }
    }

    if (normalization == HogNormalization::cell_l2) {
        for (std::size_t c = 0; c < d.cells_x * d.cells_y; ++c) {
            double* cell = d.histogram.data() + c * bins;
            double norm = 0.0;
            for (std::size_t b = 0; b < bins; ++b) norm += cell[b] * cell[b];
            norm = std::sqrt(norm);
            if (norm > 0.0) {
                for (std::size_t b = 0; b < bins; ++b) cell[b] /= norm;
            }
        }
    }
    return d;
}

HogDescriptor fhog_features(const RasterImage& img, double order, std::size_t cell_size, std::size_t bins,
                            const FhogOptions& options) {
    if (cell_size < 2) throw std::invalid_argument("fhog: cell_size must be >= 2");
    if (bins < 2) throw std::invalid_argument("fhog: bins must be >= 2");
    if (img.width() < cell_size || img.height() < cell_size) {
        throw std::invalid_argument("fhog: image is smaller than one cell");
    }
    const FractionalKernel kernel = gl_coefficients(order, options.terms);
    const GradientField field = fractional_gradient(img, kernel, options.sigma);
    return hog_from_gradients(field, cell_size, bins, options.normalization);
}

std::vector<double> descriptor_flatten(const HogDescriptor& d) { return d.histogram; }

HogDescriptor descriptor_reshape(const std::vector<double>& flat, const HogDescriptor& shape) {
    if (flat.size() != shape.cells_x * shape.cells_y * shape.bins) {
        throw std::invalid_argument("descriptor_reshape: length does not match layout");
    }
    HogDescriptor d = shape;
    d.histogram = flat;
    return d;
}

std::string descriptor_to_json(const HogDescriptor& d, int indent) { return descriptor_json(d).dump(indent); }

namespace {

constexpr std::array<char, 4> kFhogMagic{'F', 'H', 'O', 'G'};
constexpr std::size_t kFhogHeader = 20;

void put_u32(std::string& out, std::uint32_t v) {
    char buf[4];
    std::memcpy(buf, &v, 4);
    out.append(buf, 4);
}

std::uint32_t get_u32(const std::vector<char>& bytes, std::size_t offset) {
    std::uint32_t v;
    std::memcpy(&v, bytes.data() + offset, 4);
    return v;
}

}  // namespace

void save_descriptor_raw(const HogDescriptor& d, const fs::path& path) {
    std::string out(kFhogMagic.begin(), kFhogMagic.end());
    put_u32(out, static_cast<std::uint32_t>(d.cells_y));
    put_u32(out, static_cast<std::uint32_t>(d.cells_x));
    put_u32(out, static_cast<std::uint32_t>(d.bins));
    put_u32(out, static_cast<std::uint32_t>(d.cell_size));
    for (double v : d.histogram) {
        const float f = static_cast<float>(v);
        char buf[4];
        std::memcpy(buf, &f, 4);
        out.append(buf, 4);
    }
    write_file_atomically(path, out);
}

HogDescriptor load_descriptor_raw(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageIoError(ImageIoErrc::missing_file, path, "");
    const std::vector<char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    if (bytes.size() < kFhogHeader || !std::equal(kFhogMagic.begin(), kFhogMagic.end(), bytes.begin())) {
        throw ImageIoError(ImageIoErrc::corrupt_header, path, "not an FHOG file");
    }
    HogDescriptor d;
    d.cells_y = get_u32(bytes, 4);
    d.cells_x = get_u32(bytes, 8);
    d.bins = get_u32(bytes, 12);
    d.cell_size = get_u32(bytes, 16);
    const std::size_t n = d.cells_y * d.cells_x * d.bins;
    if (bytes.size() != kFhogHeader + 4 * n) {
        throw ImageIoError(ImageIoErrc::corrupt_data, path, "payload size mismatch");
    }
    d.histogram.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        float f;
        std::memcpy(&f, bytes.data() + kFhogHeader + 4 * i, 4);
        d.histogram[i] = f;
    }
    return d;
}

}  // namespace fracedge
