#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "fracedge/edgepipe.hpp"
#include "synthetic.hpp"
#include "tempdir.hpp"

namespace fracedge {
namespace {

using testing::TempDir;

bool all_in_unit_range(const EdgeMap& e) {
    for (double v : e.values()) {
        if (!(v >= 0.0 && v <= 1.0)) return false;
    }
    return true;
}

TEST(DetectorConfig, Validation) {
    DetectorConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.order = 0.0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.terms = 1;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.sigma = -0.5;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    EXPECT_THROW(detect_edges(RasterImage(4, 4), cfg), std::invalid_argument);
}

TEST(DetectEdges, StepGivesOnePixelLine) {
    const RasterImage img = testing::vertical_step(16, 16, 8, 0.0, 255.0);
    DetectorConfig cfg;
    cfg.order = 1.0;
    cfg.sigma = 1.0;
    const EdgeMap edges = detect_edges(img, cfg);
    for (std::size_t y = 0; y < 16; ++y) {
        EXPECT_DOUBLE_EQ(edges(8, y), 1.0) << y;
        for (std::size_t x = 0; x < 16; ++x) {
            if (x != 8) {
                EXPECT_EQ(edges(x, y), 0.0) << x << "," << y;
            }
        }
    }
}

TEST(DetectEdges, ConstantImageIntegerOrderIsZero) {
    for (double v : {1.0, 2.0}) {
        DetectorConfig cfg;
        cfg.order = v;
        const EdgeMap edges = detect_edges(RasterImage(9, 7, 123.0), cfg);
        for (double e : edges.values()) EXPECT_EQ(e, 0.0);
    }
}

TEST(DetectEdges, WithoutNmsIsNormalizedMagnitudeOfResponse) {
    const RasterImage img = testing::random_image(12, 10, 3, 0, 255);
    DetectorConfig cfg;
    cfg.nms = false;
    cfg.order = 1.3;
    const auto field = fractional_gradient(img, gl_coefficients(cfg.order, cfg.terms), cfg.sigma);
    RasterImage response = combine_gradient(field, cfg.combine);
    for (double& v : response.values()) v = std::abs(v);
    EXPECT_EQ(detect_edges(img, cfg), normalize(response, 0, 1));
}

TEST(DetectEdges, OutputInUnitRangeWithMaxOne) {
    for (auto mode : {CombineMode::sum, CombineMode::magnitude}) {
        DetectorConfig cfg;
        cfg.combine = mode;
        const EdgeMap e = detect_edges(testing::random_image(20, 15, 8, 0, 255), cfg);
        EXPECT_TRUE(all_in_unit_range(e));
        EXPECT_DOUBLE_EQ(*std::max_element(e.values().begin(), e.values().end()), 1.0);
    }
}

TEST(DetectEdges, InvariantUnderPositiveScaling) {
    const RasterImage img = testing::random_image(16, 16, 21, 0, 100);
    RasterImage scaled = img;
    for (double& v : scaled.values()) v *= 2.3;
    DetectorConfig cfg;
    const EdgeMap a = detect_edges(img, cfg), b = detect_edges(scaled, cfg);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.values()[i], b.values()[i], 1e-10);
}

TEST(DetectEdges, IntegerOrderInvariantUnderAffineRescale) {
    const RasterImage img = testing::random_image(16, 16, 22, 0, 100);
    RasterImage affine = img;
    for (double& v : affine.values()) v = 0.4 * v + 57.0;
    DetectorConfig cfg;
    cfg.order = 1.0;
    const EdgeMap a = detect_edges(img, cfg), b = detect_edges(affine, cfg);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.values()[i], b.values()[i], 1e-10);
}

TEST(DetectEdges, ReportsStageTimings) {
    StageTimings t;
    (void)detect_edges(testing::random_image(32, 32, 1), DetectorConfig{}, &t);
    EXPECT_GE(t.smooth, 0.0);
    EXPECT_GE(t.gradient, 0.0);
    EXPECT_GE(t.nms, 0.0);
}

TEST(Nms, NeverIncreasesAndIsMaskedCopy) {
    const RasterImage img = testing::random_image(24, 24, 4, 0, 255);
    const auto field = fractional_gradient(img, gl_coefficients(0.8), 1.0);
    RasterImage response = combine_gradient(field);
    for (double& v : response.values()) v = std::abs(v);
    const RasterImage s = suppress_non_maxima(response, field);
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_TRUE(s.values()[i] == 0.0 || s.values()[i] == response.values()[i]);
        EXPECT_LE(s.values()[i], response.values()[i]);
    }
}

TEST(Nms, Idempotent) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const RasterImage img = testing::random_image(24, 18, seed, 0, 255);
        const auto field = fractional_gradient(img, gl_coefficients(0.6), 2.0);
        const RasterImage once = suppress_non_maxima(combine_gradient(field), field);
        EXPECT_EQ(suppress_non_maxima(once, field), once);
    }
}

TEST(Nms, DiagonalBinUsesDiagonalNeighbours) {
    // Gradient along (1, 1): neighbours are (x-1, y-1) and (x+1, y+1).
    RasterImage response(3, 3, 0.0);
    response(1, 1) = 2.0;
    response(0, 0) = 3.0;
    response(2, 0) = 9.0;
    const GradientField field{RasterImage(3, 3, 1.0), RasterImage(3, 3, 1.0)};
    EXPECT_EQ(suppress_non_maxima(response, field)(1, 1), 0.0);
    response(0, 0) = 2.0;
    EXPECT_EQ(suppress_non_maxima(response, field)(1, 1), 2.0);
}

TEST(Threshold, Examples) {
    const EdgeMap e(2, 1, std::vector<double>{0.2, 0.6});
    EXPECT_EQ(threshold_map(e, 0.5), BinaryBoundaryMap(2, 1, std::vector<std::uint8_t>{0, 1}));
    EXPECT_EQ(count_set(threshold_map(EdgeMap(3, 3, 1.0), 1.0)), 0u);
    const EdgeMap z(3, 1, std::vector<double>{0.0, 1e-9, 0.4});
    EXPECT_EQ(threshold_map(z, 0.0), BinaryBoundaryMap(3, 1, std::vector<std::uint8_t>{0, 1, 1}));
}

TEST(Threshold, RejectsOutOfRange) {
    EXPECT_THROW(threshold_map(EdgeMap(1, 1), -0.01), std::invalid_argument);
    EXPECT_THROW(threshold_map(EdgeMap(1, 1), 1.01), std::invalid_argument);
}

TEST(Threshold, Antitone) {
    const EdgeMap e = detect_edges(testing::random_image(20, 20, 5, 0, 255), DetectorConfig{});
    for (int a = 0; a <= 10; ++a) {
        const auto lo = threshold_map(e, a / 10.0);
        for (int b = a; b <= 10; ++b) {
            const auto hi = threshold_map(e, b / 10.0);
            for (std::size_t i = 0; i < lo.size(); ++i) EXPECT_LE(hi.values()[i], lo.values()[i]);
        }
    }
}

TEST(EdgeIo, FedgRoundTripsAsFloat) {
    TempDir dir;
    const EdgeMap e = detect_edges(testing::random_image(11, 6, 2, 0, 255), DetectorConfig{});
    save_edge_fedg(e, dir / "e.fedg");
    const EdgeMap back = load_edge_fedg(dir / "e.fedg");
    ASSERT_TRUE(back.same_shape(e));
    for (std::size_t i = 0; i < e.size(); ++i) {
        EXPECT_EQ(back.values()[i], static_cast<double>(static_cast<float>(e.values()[i])));
    }
    EXPECT_EQ(load_edge_map(dir / "e.fedg"), back);
    EXPECT_EQ(std::filesystem::file_size(dir / "e.fedg"), 16u + 4u * e.size());
}

TEST(EdgeIo, PgmScalesBy255) {
    TempDir dir;
    const EdgeMap e(3, 1, std::vector<double>{0.0, 0.5, 1.0});
    save_edge_pgm(e, dir / "e.pgm");
    EXPECT_EQ(load_image(dir / "e.pgm"), RasterImage(3, 1, std::vector<double>{0, 128, 255}));
    const EdgeMap back = load_edge_map(dir / "e.pgm");
    EXPECT_NEAR(back(1, 0), 128.0 / 255.0, 1e-15);
}

TEST(EdgeIo, RejectsCorruptFedg) {
    TempDir dir;
    {
        std::ofstream f(dir / "bad.fedg", std::ios::binary);
        f << "FEDG" << std::string(12, '\0');
    }
    EXPECT_THROW(load_edge_fedg(dir / "bad.fedg"), ImageIoError);
    {
        std::ofstream f(dir / "short.fedg", std::ios::binary);
        const char header[16] = {'F', 'E', 'D', 'G', 2, 0, 0, 0, 2, 0, 0, 0, 0, 0, 0, 0};
        f.write(header, sizeof header);
        f << "abcd";
    }
    EXPECT_THROW(load_edge_fedg(dir / "short.fedg"), ImageIoError);
    EXPECT_THROW(load_edge_fedg(dir / "missing.fedg"), ImageIoError);
}

}  // namespace
}  // namespace fracedge
