#include <gtest/gtest.h>

#include <cmath>
#include "json.hpp"
#include <random>

#include "fracedge/fracgrad.hpp"
#include "synthetic.hpp"

namespace fracedge {
namespace {

double gamma_coefficient(double v, int j) {
    const double sign = (j % 2 == 0) ? 1.0 : -1.0;
    return sign * std::tgamma(v + 1.0) / (std::tgamma(j + 1.0) * std::tgamma(v - j + 1.0));
}

RasterImage dense_convolution(const RasterImage& img, const std::vector<double>& h, const std::vector<double>& v) {
    const auto ch = static_cast<std::ptrdiff_t>(h.size() / 2);
    const auto cv = static_cast<std::ptrdiff_t>(v.size() / 2);
    RasterImage out(img.width(), img.height());
    for (std::size_t y = 0; y < img.height(); ++y) {
        for (std::size_t x = 0; x < img.width(); ++x) {
            double acc = 0.0;
            for (std::size_t j = 0; j < v.size(); ++j) {
                for (std::size_t i = 0; i < h.size(); ++i) {
                    const auto sx = static_cast<std::ptrdiff_t>(x) - static_cast<std::ptrdiff_t>(i) + ch;
                    const auto sy = static_cast<std::ptrdiff_t>(y) - static_cast<std::ptrdiff_t>(j) + cv;
                    acc += v[j] * h[i] * img.at_clamped(sx, sy);
                }
            }
            out(x, y) = acc;
        }
    }
    return out;
}

double max_abs_diff(const RasterImage& a, const RasterImage& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
}

TEST(GlCoefficients, IntegerOrdersAreBinomialRows) {
    EXPECT_EQ(gl_coefficients(1.0, 3).coefficients, (std::vector<double>{1, -1, 0}));
    EXPECT_EQ(gl_coefficients(2.0, 3).coefficients, (std::vector<double>{1, -2, 1}));
    EXPECT_EQ(gl_coefficients(3.0, 6).coefficients, (std::vector<double>{1, -3, 3, -1, 0, 0}));
}

TEST(GlCoefficients, HalfOrderFourTerms) {
    const auto k = gl_coefficients(0.5, 4);
    const std::vector<double> expected = {1, -0.5, -0.125, -0.0625};
    ASSERT_EQ(k.terms(), 4u);
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(k.coefficients[j], expected[j], 1e-15);
}

TEST(GlCoefficients, DefaultOrderDefaultTerms) {
    const auto k = gl_coefficients(0.6);
    ASSERT_EQ(k.terms(), kDefaultTerms);
    EXPECT_EQ(k.coefficients[0], 1.0);
    EXPECT_NEAR(k.coefficients[1], -0.6, 1e-15);
    EXPECT_NEAR(k.coefficients[2], -0.12, 1e-15);
}

TEST(GlCoefficients, MatchesGammaFormula) {
    for (int step = 1; step <= 19; ++step) {
        const double v = step * 0.1 + 0.05;
        const auto k = gl_coefficients(v, 8);
        for (int j = 0; j < 8; ++j) {
            const double ref = gamma_coefficient(v, j);
            EXPECT_LE(std::abs(k.coefficients[j] - ref), 1e-12 * std::max(1.0, std::abs(ref))) << v << " " << j;
        }
    }
}

TEST(GlCoefficients, SatisfiesRecurrence) {
    const auto k = gl_coefficients(1.3, 10);
    for (std::size_t j = 1; j < 10; ++j) {
        const double next = k.coefficients[j - 1] * (static_cast<double>(j) - 1.0 - 1.3) / static_cast<double>(j);
        EXPECT_NEAR(k.coefficients[j], next, 1e-12 * std::abs(next) + 1e-300);
    }
}

TEST(GlCoefficients, RejectsInvalid) {
    EXPECT_THROW(gl_coefficients(0.0), std::invalid_argument);
    EXPECT_THROW(gl_coefficients(-1.0), std::invalid_argument);
    EXPECT_THROW(gl_coefficients(NAN), std::invalid_argument);
    EXPECT_THROW(gl_coefficients(0.5, 1), std::invalid_argument);
}

TEST(KernelJson, Fields) {
    const auto j = nlohmann::json::parse(kernel_to_json(gl_coefficients(0.5, 4)));
    EXPECT_DOUBLE_EQ(j.at("order").get<double>(), 0.5);
    EXPECT_EQ(j.at("terms").get<int>(), 4);
    EXPECT_EQ(j.at("coefficients").size(), 4u);
}

TEST(GaussianKernel, SigmaTwoTaps) {
    static const std::vector<double> kExpected = {
        0.0022181958546457657, 0.008773134791588384, 0.02702315760287952, 0.06482518513852682,
        0.12110939007484813,   0.17621312278855084,  0.1996756274979211,  0.17621312278855084,
        0.12110939007484813,   0.06482518513852682,  0.02702315760287952, 0.008773134791588384,
        0.0022181958546457657};
    const auto g = gaussian_kernel(2.0);
    EXPECT_EQ(g.radius, 6u);
    ASSERT_EQ(g.weights.size(), 13u);
    for (std::size_t i = 0; i < 13; ++i) EXPECT_NEAR(g.weights[i], kExpected[i], 1e-15);
}

TEST(GaussianKernel, NarrowIsDelta) {
    const auto g = gaussian_kernel(0.1);
    EXPECT_EQ(g.radius, 1u);
    EXPECT_GT(g.weights[1], 1.0 - 1e-10);
}

TEST(GaussianKernel, SymmetricAndNormalized) {
    for (double s : {0.3, 0.8, 1.0, 1.7, 3.2}) {
        const auto g = gaussian_kernel(s);
        double sum = 0.0;
        for (std::size_t i = 0; i < g.weights.size(); ++i) {
            EXPECT_EQ(g.weights[i], g.weights[g.weights.size() - 1 - i]);
            sum += g.weights[i];
        }
        EXPECT_NEAR(sum, 1.0, 1e-12);
    }
    EXPECT_THROW(gaussian_kernel(0.0), std::invalid_argument);
}

TEST(ConvolveSeparable, IdentityKernels) {
    const RasterImage img = testing::random_image(7, 5, 1);
    const std::vector<double> one = {1.0};
    EXPECT_EQ(convolve_separable(img, one, one), img);
}

TEST(ConvolveSeparable, ConstantImage) {
    const std::vector<double> h = {0.5, 2.0, 1.0}, v = {3.0, -1.0};
    const RasterImage out = convolve_separable(RasterImage(6, 6, 2.0), h, v);
    for (double x : out.values()) EXPECT_NEAR(x, 2.0 * 3.5 * 2.0, 1e-12);
}

TEST(ConvolveSeparable, BoxOnImpulse) {
    RasterImage img(3, 3, 0.0);
    img(1, 1) = 1.0;
    const std::vector<double> box = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    const RasterImage out = convolve_separable(img, box, box);
    for (double x : out.values()) EXPECT_NEAR(x, 1.0 / 9, 1e-15);
}

TEST(ConvolveSeparable, MatchesDenseOracle) {
    std::mt19937 rng(5);
    std::uniform_int_distribution<int> len(1, 6);
    std::uniform_real_distribution<double> w(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> h(static_cast<std::size_t>(len(rng))), v(static_cast<std::size_t>(len(rng)));
        for (double& x : h) x = w(rng);
        for (double& x : v) x = w(rng);
        const RasterImage img = testing::random_image(8, 8, 100 + trial, -5, 5);
        EXPECT_LT(max_abs_diff(convolve_separable(img, h, v), dense_convolution(img, h, v)), 1e-12);
    }
}

TEST(ConvolveSeparable, RejectsEmptyKernel) {
    const std::vector<double> one = {1.0}, none;
    EXPECT_THROW(convolve_separable(RasterImage(2, 2), none, one), std::invalid_argument);
    EXPECT_THROW(convolve_separable(RasterImage(2, 2), one, none), std::invalid_argument);
}

TEST(FractionalGradient, ConstantImageHasCoefficientSumResponse) {
    const auto field = fractional_gradient(RasterImage(5, 5, 8.0), gl_coefficients(0.5), 0.0);
    for (std::size_t i = 0; i < field.gx.size(); ++i) {
        EXPECT_NEAR(field.gx.values()[i], 0.375 * 8.0, 1e-12);
        EXPECT_NEAR(field.gy.values()[i], 0.375 * 8.0, 1e-12);
    }
}

TEST(FractionalGradient, IntegerOrderAnnihilatesConstants) {
    const auto field = fractional_gradient(RasterImage(5, 5, 8.0), gl_coefficients(1.0), 0.0);
    for (std::size_t i = 0; i < field.gx.size(); ++i) {
        EXPECT_EQ(field.gx.values()[i], 0.0);
        EXPECT_EQ(field.gy.values()[i], 0.0);
    }
}

TEST(FractionalGradient, FirstDifferenceOfRamp) {
    RasterImage ramp(8, 4);
    for (std::size_t y = 0; y < 4; ++y)
        for (std::size_t x = 0; x < 8; ++x) ramp(x, y) = static_cast<double>(x);
    const auto field = fractional_gradient(ramp, gl_coefficients(1.0), 0.0);
    for (std::size_t y = 0; y < 4; ++y) {
        for (std::size_t x = 1; x < 8; ++x) EXPECT_EQ(field.gx(x, y), 1.0);
        for (std::size_t x = 0; x < 8; ++x) EXPECT_EQ(field.gy(x, y), 0.0);
    }
}

TEST(FractionalGradient, MatchesLiteralThreeTermSum) {
    const auto k = gl_coefficients(0.7);
    const RasterImage img = testing::random_image(16, 16, 77, 0, 255);
    const auto field = fractional_gradient(img, k, 0.0);
    for (std::size_t y = 2; y < 16; ++y) {
        for (std::size_t x = 2; x < 16; ++x) {
            const double gx = img(x, y) - 0.7 * img(x - 1, y) + (0.7 * (0.7 - 1) / 2) * img(x - 2, y);
            const double gy = img(x, y) - 0.7 * img(x, y - 1) + (0.7 * (0.7 - 1) / 2) * img(x, y - 2);
            EXPECT_NEAR(field.gx(x, y), gx, 1e-12);
            EXPECT_NEAR(field.gy(x, y), gy, 1e-12);
        }
    }
}

TEST(FractionalGradient, Linearity) {
    const auto k = gl_coefficients(0.6);
    const RasterImage a = testing::random_image(12, 9, 1, -10, 10);
    const RasterImage b = testing::random_image(12, 9, 2, -10, 10);
    RasterImage mix(12, 9);
    for (std::size_t i = 0; i < mix.size(); ++i) mix.values()[i] = 2.5 * a.values()[i] - 0.75 * b.values()[i];
    const auto fa = fractional_gradient(a, k, 0.0);
    const auto fb = fractional_gradient(b, k, 0.0);
    const auto fm = fractional_gradient(mix, k, 0.0);
    for (std::size_t i = 0; i < mix.size(); ++i) {
        EXPECT_NEAR(fm.gx.values()[i], 2.5 * fa.gx.values()[i] - 0.75 * fb.gx.values()[i], 1e-10);
        EXPECT_NEAR(fm.gy.values()[i], 2.5 * fa.gy.values()[i] - 0.75 * fb.gy.values()[i], 1e-10);
    }
}

TEST(FractionalGradient, ShiftCovariantAwayFromBorders) {
    const auto k = gl_coefficients(1.4);
    const RasterImage img = testing::random_image(20, 20, 9);
    RasterImage shifted(20, 20);
    for (std::size_t y = 0; y < 20; ++y)
        for (std::size_t x = 0; x < 20; ++x) shifted(x, y) = img.at_clamped(static_cast<std::ptrdiff_t>(x) - 1, y);
    const auto f = fractional_gradient(img, k, 1.0);
    const auto fs = fractional_gradient(shifted, k, 1.0);
    for (std::size_t y = 6; y < 14; ++y) {
        for (std::size_t x = 8; x < 14; ++x) {
            EXPECT_NEAR(fs.gx(x + 1, y), f.gx(x, y), 1e-12);
            EXPECT_NEAR(fs.gy(x + 1, y), f.gy(x, y), 1e-12);
        }
    }
}

TEST(FractionalGradient, SmoothingThenDifference) {
    const auto k = gl_coefficients(0.9);
    const RasterImage img = testing::random_image(10, 10, 4);
    const auto direct = fractional_gradient(img, k, 1.5);
    const auto staged = fractional_difference(gaussian_smooth(img, 1.5), k);
    EXPECT_EQ(direct.gx, staged.gx);
    EXPECT_EQ(direct.gy, staged.gy);
}

TEST(CombineGradient, SumAndMagnitude) {
    GradientField f{RasterImage(1, 1, 3.0), RasterImage(1, 1, 4.0)};
    EXPECT_EQ(combine_gradient(f, CombineMode::sum)(0, 0), 7.0);
    EXPECT_EQ(combine_gradient(f, CombineMode::magnitude)(0, 0), 5.0);
    GradientField zero{RasterImage(3, 2, 0.0), RasterImage(3, 2, 0.0)};
    EXPECT_EQ(combine_gradient(zero), RasterImage(3, 2, 0.0));
    EXPECT_EQ(combine_gradient(zero, CombineMode::magnitude), RasterImage(3, 2, 0.0));
}

TEST(CombineMode, Parse) {
    EXPECT_EQ(parse_combine_mode("sum"), CombineMode::sum);
    EXPECT_EQ(parse_combine_mode("magnitude"), CombineMode::magnitude);
    EXPECT_STREQ(to_string(CombineMode::magnitude), "magnitude");
    EXPECT_THROW(parse_combine_mode("max"), std::invalid_argument);
}

}  // namespace
}  // namespace fracedge
