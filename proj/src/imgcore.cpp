#include "fracedge/imgcore.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <memory>
#include <random>
#include <sstream>
#include <system_error>

namespace fracedge {

namespace fs = std::filesystem;

const char* to_string(ImageIoErrc code) noexcept {
    switch (code) {
        case ImageIoErrc::missing_file: return "missing file";
        case ImageIoErrc::unsupported_format: return "unsupported format";
        case ImageIoErrc::corrupt_header: return "corrupt header";
        case ImageIoErrc::corrupt_data: return "corrupt data";
        case ImageIoErrc::write_failed: return "write failed";
    }
    return "unknown";
}

ImageIoError::ImageIoError(ImageIoErrc code, const fs::path& path, const std::string& detail)
    : std::runtime_error(path.string() + ": " + to_string(code) + (detail.empty() ? "" : " (" + detail + ")")),
      code_(code),
      path_(path) {}

namespace {

struct Gray8 {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t channels = 1;
    std::vector<std::uint8_t> pixels;
};

std::vector<std::uint8_t> read_all(const fs::path& path) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) {
        throw ImageIoError(ImageIoErrc::missing_file, path, "");
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ImageIoError(ImageIoErrc::missing_file, path, "cannot open");
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------------------
// PGM

class PgmHeaderReader {
public:
    PgmHeaderReader(const std::vector<std::uint8_t>& bytes, const fs::path& path) : bytes_(bytes), path_(path) {}

    std::size_t next_uint() {
        skip_space_and_comments();
        if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
            throw ImageIoError(ImageIoErrc::corrupt_header, path_, "expected integer");
        }
        std::size_t value = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            value = value * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
            if (value > (1u << 30)) {
                throw ImageIoError(ImageIoErrc::corrupt_header, path_, "integer out of range");
            }
            ++pos_;
        }
        return value;
    }

    // Exactly one whitespace byte separates maxval from the raster.
    std::size_t raster_offset() {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
            throw ImageIoError(ImageIoErrc::corrupt_header, path_, "missing raster separator");
        }
        return pos_ + 1;
    }

    void skip_magic() { pos_ = 2; }

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    const std::vector<std::uint8_t>& bytes_;
    const fs::path& path_;
    std::size_t pos_ = 0;
};

Gray8 decode_pgm(const std::vector<std::uint8_t>& bytes, const fs::path& path) {
    PgmHeaderReader reader(bytes, path);
    reader.skip_magic();
    Gray8 out;
    out.width = reader.next_uint();
    out.height = reader.next_uint();
    const std::size_t maxval = reader.next_uint();
    if (out.width == 0 || out.height == 0) {
        throw ImageIoError(ImageIoErrc::corrupt_header, path, "zero dimension");
    }
    if (maxval == 0 || maxval > 255) {
        throw ImageIoError(ImageIoErrc::unsupported_format, path, "maxval must be in [1, 255]");
    }
    const std::size_t offset = reader.raster_offset();
    const std::size_t count = out.width * out.height;
    if (bytes.size() < offset + count) {
        throw ImageIoError(ImageIoErrc::corrupt_data, path, "truncated raster");
    }
    out.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                      bytes.begin() + static_cast<std::ptrdiff_t>(offset + count));
    return out;
}

// ---------------------------------------------------------------------------
// PNG

struct PngReadState {
    const std::vector<std::uint8_t>* bytes = nullptr;
    std::size_t pos = 0;
};

void png_read_from_memory(png_structp png, png_bytep out, png_size_t length) {
    auto* state = static_cast<PngReadState*>(png_get_io_ptr(png));
    if (state->pos + length > state->bytes->size()) {
        png_error(png, "unexpected end of data");
    }
    std::memcpy(out, state->bytes->data() + state->pos, length);
    state->pos += length;
}

void png_error_handler(png_structp png, png_const_charp message) {
    auto* msg = static_cast<std::string*>(png_get_error_ptr(png));
    if (msg) *msg = message;
    png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

struct PngDecodeJob {
    png_structp png = nullptr;
    png_infop info = nullptr;
    PngReadState state;
    Gray8 out;
    std::vector<png_bytep> rows;
    bool header_done = false;
    bool unsupported = false;
};

// Everything touched after setjmp lives behind `job`, so a longjmp leaves no
// indeterminate locals in this frame.
bool run_png_decode(PngDecodeJob* job) {
    if (setjmp(png_jmpbuf(job->png))) {
        return false;
    }
    png_set_read_fn(job->png, &job->state, png_read_from_memory);
    png_read_info(job->png, job->info);

    const int bit_depth = png_get_bit_depth(job->png, job->info);
    const int color_type = png_get_color_type(job->png, job->info);
    if (bit_depth == 16) {
        job->unsupported = true;
        return false;
    }
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(job->png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(job->png);
    if (png_get_valid(job->png, job->info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(job->png);
    png_set_interlace_handling(job->png);
    png_read_update_info(job->png, job->info);

    job->out.width = png_get_image_width(job->png, job->info);
    job->out.height = png_get_image_height(job->png, job->info);
    job->out.channels = png_get_channels(job->png, job->info);
    job->header_done = true;

    const std::size_t stride = job->out.width * job->out.channels;
    job->out.pixels.resize(stride * job->out.height);
    job->rows.resize(job->out.height);
    for (std::size_t y = 0; y < job->out.height; ++y) {
        job->rows[y] = job->out.pixels.data() + y * stride;
    }
    png_read_image(job->png, job->rows.data());
    png_read_end(job->png, nullptr);
    return true;
}

Gray8 decode_png(const std::vector<std::uint8_t>& bytes, const fs::path& path) {
    std::string error;
    auto job = std::make_unique<PngDecodeJob>();
    job->state.bytes = &bytes;
    job->png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, png_error_handler, png_warning_handler);
    if (job->png) job->info = png_create_info_struct(job->png);
    if (!job->png || !job->info) {
        png_destroy_read_struct(&job->png, nullptr, nullptr);
        throw ImageIoError(ImageIoErrc::corrupt_data, path, "libpng init failed");
    }
    const bool ok = run_png_decode(job.get());
    png_destroy_read_struct(&job->png, &job->info, nullptr);
    if (!ok) {
        if (job->unsupported) throw ImageIoError(ImageIoErrc::unsupported_format, path, "16-bit PNG");
        throw ImageIoError(job->header_done ? ImageIoErrc::corrupt_data : ImageIoErrc::corrupt_header, path, error);
    }
    return std::move(job->out);
}

RasterImage gray8_to_raster(const Gray8& g) {
    RasterImage img(g.width, g.height);
    auto dst = img.values();
    for (std::size_t i = 0; i < g.pixels.size(); ++i) dst[i] = g.pixels[i];
    return img;
}

RasterImage png_to_raster(const Gray8& g) {
    RasterImage img(g.width, g.height);
    auto dst = img.values();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        const std::uint8_t* px = g.pixels.data() + i * g.channels;
        dst[i] = g.channels >= 3 ? luma(px[0], px[1], px[2]) : px[0];
    }
    return img;
}

enum class Format { pgm, png };

Format sniff(const std::vector<std::uint8_t>& bytes, const fs::path& path) {
    static constexpr std::array<std::uint8_t, 8> kPngMagic{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (bytes.size() >= 8 && std::equal(kPngMagic.begin(), kPngMagic.end(), bytes.begin())) {
        return Format::png;
    }
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') {
        return Format::pgm;
    }
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] >= '1' && bytes[1] <= '7') {
        throw ImageIoError(ImageIoErrc::unsupported_format, path, "only binary P5 PGM is supported");
    }
    if (bytes.size() < 2) {
        throw ImageIoError(ImageIoErrc::corrupt_header, path, "file too short");
    }
    throw ImageIoError(ImageIoErrc::unsupported_format, path, "not PGM or PNG");
}

// Raw 8-bit gray decode for formats where values carry meaning (labels).
Gray8 load_gray8(const fs::path& path) {
    const auto bytes = read_all(path);
    if (sniff(bytes, path) == Format::pgm) {
        return decode_pgm(bytes, path);
    }
    Gray8 g = decode_png(bytes, path);
    if (g.channels > 2) {
        throw ImageIoError(ImageIoErrc::unsupported_format, path, "expected single-channel image");
    }
    if (g.channels == 2) {  // drop alpha
        for (std::size_t i = 0; i < g.width * g.height; ++i) g.pixels[i] = g.pixels[2 * i];
        g.pixels.resize(g.width * g.height);
        g.channels = 1;
    }
    return g;
}

std::string pgm_bytes(std::size_t width, std::size_t height, std::span<const std::uint8_t> pixels) {
    std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(pixels.data()), pixels.size());
    return out;
}

void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + length);
}

void png_flush_noop(png_structp) {}

bool encode_png_gray(std::size_t width, std::size_t height, const std::vector<std::uint8_t>& pixels,
                     std::vector<std::uint8_t>& encoded, std::string& error) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, png_error_handler, png_warning_handler);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        return false;
    }
    std::vector<png_bytep> rows(height);
    for (std::size_t y = 0; y < height; ++y) {
        rows[y] = const_cast<png_bytep>(pixels.data() + y * width);
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        return false;
    }
    png_set_write_fn(png, &encoded, png_write_to_vector, png_flush_noop);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return true;
}

std::vector<std::uint8_t> quantize(const RasterImage& img) {
    std::vector<std::uint8_t> bytes(img.size());
    const auto src = img.values();
    std::transform(src.begin(), src.end(), bytes.begin(), quantize_to_byte);
    return bytes;
}

}  // namespace

void write_file_atomically(const fs::path& path, std::span<const std::byte> bytes) {
    std::error_code ec;
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path(), ec);
    }
    // Unique temp name so parallel writers into one directory do not collide.
    thread_local std::mt19937_64 rng{std::random_device{}()};
    fs::path tmp = path;
    tmp += ".tmp" + std::to_string(rng() % 1000000007ULL);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw ImageIoError(ImageIoErrc::write_failed, path, "cannot open temporary file");
        }
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            fs::remove(tmp, ec);
            throw ImageIoError(ImageIoErrc::write_failed, path, "write error");
        }
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw ImageIoError(ImageIoErrc::write_failed, path, "rename failed");
    }
}

void write_file_atomically(const fs::path& path, const std::string& text) {
    write_file_atomically(path, std::as_bytes(std::span(text.data(), text.size())));
}

std::uint8_t quantize_to_byte(double value) noexcept {
    if (!(value > 0.0)) return 0;  // also maps NaN to 0
    if (value >= 255.0) return 255;
    return static_cast<std::uint8_t>(std::lround(value));
}

double luma(double r, double g, double b) noexcept { return 0.299 * r + 0.587 * g + 0.114 * b; }

RasterImage load_image(const fs::path& path) {
    const auto bytes = read_all(path);
    switch (sniff(bytes, path)) {
        case Format::pgm: return gray8_to_raster(decode_pgm(bytes, path));
        case Format::png: return png_to_raster(decode_png(bytes, path));
    }
    throw ImageIoError(ImageIoErrc::unsupported_format, path, "");
}

LabelMap load_label_map(const fs::path& path) {
    const Gray8 g = load_gray8(path);
    LabelMap labels(g.width, g.height);
    std::copy(g.pixels.begin(), g.pixels.end(), labels.values().begin());
    return labels;
}

BinaryBoundaryMap load_boundary_map(const fs::path& path) {
    const Gray8 g = load_gray8(path);
    BinaryBoundaryMap mask(g.width, g.height);
    std::transform(g.pixels.begin(), g.pixels.end(), mask.values().begin(),
                   [](std::uint8_t v) { return static_cast<std::uint8_t>(v != 0); });
    return mask;
}

void save_pgm(const RasterImage& img, const fs::path& path) {
    const auto bytes = quantize(img);
    write_file_atomically(path, pgm_bytes(img.width(), img.height(), bytes));
}

void save_png(const RasterImage& img, const fs::path& path) {
    const auto bytes = quantize(img);
    std::vector<std::uint8_t> encoded;
    std::string error;
    if (!encode_png_gray(img.width(), img.height(), bytes, encoded, error)) {
        throw ImageIoError(ImageIoErrc::write_failed, path, error);
    }
    write_file_atomically(path, std::as_bytes(std::span(encoded)));
}

void save_label_map(const LabelMap& labels, const fs::path& path) {
    std::vector<std::uint8_t> bytes(labels.size());
    const auto src = labels.values();
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        if (src[i] > 255) {
            throw ImageIoError(ImageIoErrc::write_failed, path, "label id exceeds 255");
        }
        bytes[i] = static_cast<std::uint8_t>(src[i]);
    }
    write_file_atomically(path, pgm_bytes(labels.width(), labels.height(), bytes));
}

void save_boundary_map(const BinaryBoundaryMap& mask, const fs::path& path) {
    std::vector<std::uint8_t> bytes(mask.size());
    const auto src = mask.values();
    std::transform(src.begin(), src.end(), bytes.begin(), [](std::uint8_t v) { return v ? 255 : 0; });
    write_file_atomically(path, pgm_bytes(mask.width(), mask.height(), bytes));
}

RasterImage normalize(const RasterImage& img, double lo, double hi) {
    if (!(hi > lo)) {
        throw std::invalid_argument("normalize: hi must exceed lo");
    }
    const auto src = img.values();
    const auto [min_it, max_it] = std::minmax_element(src.begin(), src.end());
    const double min_v = *min_it;
    const double max_v = *max_it;
    RasterImage out(img.width(), img.height(), lo);
    if (!(max_v > min_v)) {
        return out;
    }
    const double scale = (hi - lo) / (max_v - min_v);
    auto dst = out.values();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = src[i] == max_v ? hi : lo + (src[i] - min_v) * scale;
    }
    return out;
}

BinaryBoundaryMap label_boundaries(const LabelMap& labels) {
    const std::size_t w = labels.width();
    const std::size_t h = labels.height();
    BinaryBoundaryMap mask(w, h, 0);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const std::uint32_t here = labels(x, y);
            if (here == kUnlabeled) continue;
            auto differs = [&](std::size_t nx, std::size_t ny) {
                const std::uint32_t other = labels(nx, ny);
                return other != kUnlabeled && other != here;
            };
            const bool edge = (x > 0 && differs(x - 1, y)) || (x + 1 < w && differs(x + 1, y)) ||
                              (y > 0 && differs(x, y - 1)) || (y + 1 < h && differs(x, y + 1));
            mask(x, y) = edge ? 1 : 0;
        }
    }
    return mask;
}

RasterImage average_boundaries(std::span<const BinaryBoundaryMap> annotators) {
    if (annotators.empty()) {
        throw std::invalid_argument("average_boundaries: no annotator maps");
    }
    RasterImage out(annotators.front().width(), annotators.front().height(), 0.0);
    for (const auto& m : annotators) {
        if (!m.same_shape(annotators.front())) {
            throw std::invalid_argument("average_boundaries: dimension mismatch");
        }
        const auto src = m.values();
        auto dst = out.values();
        for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
    }
    const double n = static_cast<double>(annotators.size());
    for (double& v : out.values()) v /= n;
    return out;
}

std::size_t count_set(const BinaryBoundaryMap& mask) noexcept {
    const auto v = mask.values();
    return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](std::uint8_t b) { return b != 0; }));
}

bool all_finite(const RasterImage& img) noexcept {
    const auto v = img.values();
    return std::all_of(v.begin(), v.end(), [](double d) { return std::isfinite(d); });
}

}  // namespace fracedge
