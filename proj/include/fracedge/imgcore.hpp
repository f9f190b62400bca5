#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracedge {

/// Dense row-major grid. Rows are `height` (M), columns are `width` (N).
template <typename T>
class Grid {
public:
    Grid() = default;

    Grid(std::size_t width, std::size_t height, T fill = T{})
        : width_(width), height_(height), data_(checked_area(width, height), fill) {}

    Grid(std::size_t width, std::size_t height, std::vector<T> values)
        : width_(width), height_(height), data_(std::move(values)) {
        if (data_.size() != checked_area(width, height)) {
            throw std::invalid_argument("grid: value count does not match width*height");
        }
    }

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(std::size_t x, std::size_t y) noexcept { return data_[y * width_ + x]; }
    const T& operator()(std::size_t x, std::size_t y) const noexcept { return data_[y * width_ + x]; }

    /// Replicate-border access.
    const T& at_clamped(std::ptrdiff_t x, std::ptrdiff_t y) const noexcept {
        const auto w = static_cast<std::ptrdiff_t>(width_);
        const auto h = static_cast<std::ptrdiff_t>(height_);
        x = x < 0 ? 0 : (x >= w ? w - 1 : x);
        y = y < 0 ? 0 : (y >= h ? h - 1 : y);
        return data_[static_cast<std::size_t>(y) * width_ + static_cast<std::size_t>(x)];
    }

    std::span<T> row(std::size_t y) noexcept { return {data_.data() + y * width_, width_}; }
    std::span<const T> row(std::size_t y) const noexcept { return {data_.data() + y * width_, width_}; }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }

    bool same_shape(const Grid& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_;
    }
    template <typename U>
    bool same_shape(const Grid<U>& other) const noexcept {
        return width_ == other.width() && height_ == other.height();
    }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    static std::size_t checked_area(std::size_t width, std::size_t height) {
        if (width == 0 || height == 0) {
            throw std::invalid_argument("grid: width and height must be >= 1");
        }
        return width * height;
    }

    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<T> data_;
};

/// Grayscale intensities, nominally [0, 255] after loading.
using RasterImage = Grid<double>;

/// Class IDs per pixel; `kUnlabeled` marks pixels without a class.
using LabelMap = Grid<std::uint32_t>;
inline constexpr std::uint32_t kUnlabeled = 255;

/// Values are 0 or 1.
using BinaryBoundaryMap = Grid<std::uint8_t>;

enum class ImageIoErrc {
    missing_file,
    unsupported_format,
    corrupt_header,
    corrupt_data,
    write_failed,
};

const char* to_string(ImageIoErrc code) noexcept;

class ImageIoError : public std::runtime_error {
public:
    ImageIoError(ImageIoErrc code, const std::filesystem::path& path, const std::string& detail);

    ImageIoErrc code() const noexcept { return code_; }
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    ImageIoErrc code_;
    std::filesystem::path path_;
};

/// Reads binary PGM (P5, maxval <= 255) or 8-bit PNG (gray, gray+alpha, RGB,
/// RGBA). Color is reduced with Rec.601 luma; alpha is ignored.
RasterImage load_image(const std::filesystem::path& path);

/// Pixel value is the class ID; 255 is the unlabeled sentinel.
LabelMap load_label_map(const std::filesystem::path& path);

/// Any nonzero pixel is a boundary pixel.
BinaryBoundaryMap load_boundary_map(const std::filesystem::path& path);

/// 8-bit output. Values are rounded half away from zero and clamped to [0, 255].
/// Files are written to a temporary sibling and renamed into place.
void save_pgm(const RasterImage& img, const std::filesystem::path& path);
void save_png(const RasterImage& img, const std::filesystem::path& path);
void save_label_map(const LabelMap& labels, const std::filesystem::path& path);
void save_boundary_map(const BinaryBoundaryMap& mask, const std::filesystem::path& path);

/// Writes `bytes` to `path` via temp file + rename.
void write_file_atomically(const std::filesystem::path& path, std::span<const std::byte> bytes);
void write_file_atomically(const std::filesystem::path& path, const std::string& text);

std::uint8_t quantize_to_byte(double value) noexcept;

double luma(double r, double g, double b) noexcept;

/// Affine rescale so that min -> lo and max -> hi. A constant image maps to lo.
RasterImage normalize(const RasterImage& img, double lo, double hi);

/// mask = 1 where a 4-neighbour carries a different labelled class.
/// Unlabeled pixels are never boundaries and never make a neighbour one.
BinaryBoundaryMap label_boundaries(const LabelMap& labels);

/// Fraction of annotators marking each pixel, in [0, 1].
RasterImage average_boundaries(std::span<const BinaryBoundaryMap> annotators);

std::size_t count_set(const BinaryBoundaryMap& mask) noexcept;

bool all_finite(const RasterImage& img) noexcept;

}  // namespace fracedge
