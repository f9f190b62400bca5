#include "fracedge/edgepipe.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <stdexcept>

namespace fracedge {

namespace fs = std::filesystem;

void DetectorConfig::validate() const {
    if (!std::isfinite(order) || order <= 0.0) {
        throw std::invalid_argument("detector: order must be > 0");
    }
    if (terms < 2) {
        throw std::invalid_argument("detector: terms must be >= 2");
    }
    if (!std::isfinite(sigma) || sigma < 0.0) {
        throw std::invalid_argument("detector: sigma must be >= 0");
    }
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Offset {
    int dx;
    int dy;
};

// Neighbour offset along the gradient for the four orientation bins.
// Rows grow downward, so direction (1, 1) is the 45 degree bin.
Offset orientation_offset(double gx, double gy) {
    double deg = std::atan2(gy, gx) * (180.0 / std::numbers::pi);
    if (deg < 0.0) deg += 180.0;
    if (deg >= 180.0) deg -= 180.0;
    if (deg < 22.5 || deg >= 157.5) return {1, 0};
    if (deg < 67.5) return {1, 1};
    if (deg < 112.5) return {0, 1};
    return {-1, 1};
}

}  // namespace

RasterImage suppress_non_maxima(const RasterImage& response, const GradientField& field) {
    if (!response.same_shape(field.gx) || !response.same_shape(field.gy)) {
        throw std::invalid_argument("suppress_non_maxima: dimension mismatch");
    }
    const std::size_t w = response.width();
    const std::size_t h = response.height();
    RasterImage out(w, h, 0.0);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const double here = std::abs(response(x, y));
            if (here == 0.0) continue;
            const auto [dx, dy] = orientation_offset(field.gx(x, y), field.gy(x, y));
            const auto xi = static_cast<std::ptrdiff_t>(x);
            const auto yi = static_cast<std::ptrdiff_t>(y);
            const double ahead = std::abs(response.at_clamped(xi + dx, yi + dy));
            const double behind = std::abs(response.at_clamped(xi - dx, yi - dy));
            if (here >= ahead && here >= behind) out(x, y) = here;
        }
    }
    return out;
}

EdgeMap detect_edges(const RasterImage& img, const DetectorConfig& cfg, StageTimings* timings) {
    cfg.validate();
    const FractionalKernel kernel = gl_coefficients(cfg.order, cfg.terms);

    auto t0 = Clock::now();
    const RasterImage smoothed = gaussian_smooth(img, cfg.sigma);
    const double t_smooth = seconds_since(t0);

    t0 = Clock::now();
    const GradientField field = fractional_difference(smoothed, kernel);
    RasterImage response = combine_gradient(field, cfg.combine);
    const double t_grad = seconds_since(t0);

    t0 = Clock::now();
    if (cfg.nms) {
        response = suppress_non_maxima(response, field);
    } else {
        for (double& v : response.values()) v = std::abs(v);
    }
    EdgeMap edges = normalize(response, 0.0, 1.0);
    const double t_nms = seconds_since(t0);

    if (timings) *timings = {t_smooth, t_grad, t_nms};
    return edges;
}

BinaryBoundaryMap threshold_map(const EdgeMap& edges, double t) {
    if (!(t >= 0.0 && t <= 1.0)) {
        throw std::invalid_argument("threshold_map: t must lie in [0, 1]");
    }
    BinaryBoundaryMap mask(edges.width(), edges.height(), 0);
    const auto src = edges.values();
    auto dst = mask.values();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > t ? 1 : 0;
    return mask;
}

void save_edge_pgm(const EdgeMap& edges, const fs::path& path) {
    RasterImage scaled = edges;
    for (double& v : scaled.values()) v *= 255.0;
    save_pgm(scaled, path);
}

namespace {

constexpr std::array<char, 4> kFedgMagic{'F', 'E', 'D', 'G'};
constexpr std::size_t kFedgHeader = 16;

static_assert(std::endian::native == std::endian::little, "FEDG I/O assumes a little-endian host");

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

void save_edge_fedg(const EdgeMap& edges, const fs::path& path) {
    std::string out(kFedgMagic.begin(), kFedgMagic.end());
    put_u32(out, static_cast<std::uint32_t>(edges.width()));
    put_u32(out, static_cast<std::uint32_t>(edges.height()));
    put_u32(out, 0);
    out.reserve(kFedgHeader + 4 * edges.size());
    for (double v : edges.values()) {
        const float f = static_cast<float>(v);
        char buf[4];
        std::memcpy(buf, &f, 4);
        out.append(buf, 4);
    }
    write_file_atomically(path, out);
}

EdgeMap load_edge_fedg(const fs::path& path) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) {
        throw ImageIoError(ImageIoErrc::missing_file, path, "");
    }
    std::ifstream in(path, std::ios::binary);
    const std::vector<char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    if (bytes.size() < kFedgHeader || !std::equal(kFedgMagic.begin(), kFedgMagic.end(), bytes.begin())) {
        throw ImageIoError(ImageIoErrc::corrupt_header, path, "not a FEDG file");
    }
    const std::size_t w = get_u32(bytes, 4);
    const std::size_t h = get_u32(bytes, 8);
    if (w == 0 || h == 0) {
        throw ImageIoError(ImageIoErrc::corrupt_header, path, "zero dimension");
    }
    if (bytes.size() != kFedgHeader + 4 * w * h) {
        throw ImageIoError(ImageIoErrc::corrupt_data, path, "payload size mismatch");
    }
    EdgeMap edges(w, h);
    auto dst = edges.values();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        float f;
        std::memcpy(&f, bytes.data() + kFedgHeader + 4 * i, 4);
        dst[i] = f;
    }
    return edges;
}

EdgeMap load_edge_map(const fs::path& path) {
    {
        std::ifstream in(path, std::ios::binary);
        char magic[4] = {};
        if (in.read(magic, 4) && std::equal(kFedgMagic.begin(), kFedgMagic.end(), magic)) {
            return load_edge_fedg(path);
        }
    }
    EdgeMap edges = load_image(path);
    for (double& v : edges.values()) v /= 255.0;
    return edges;
}

}  // namespace fracedge
