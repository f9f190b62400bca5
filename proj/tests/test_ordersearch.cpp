#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <cstdio>

#include "fracedge/ordersearch.hpp"
#include "fracedge/parallel.hpp"
#include "json.hpp"
#include "synthetic.hpp"

namespace fracedge {
namespace {

std::vector<DatasetItem> small_corpus(std::size_t n) { return testing::noisy_corpus(n, 40, 20.0, 17); }

TEST(OrderGrid, DefaultHasTwentyExactTenths) {
    const auto g = default_order_grid();
    ASSERT_EQ(g.size(), 20u);
    for (std::size_t i = 0; i < g.size(); ++i) {
        char text[48];
        std::snprintf(text, sizeof text, "%zu.%zu", (i + 1) / 10, (i + 1) % 10);
        EXPECT_EQ(g[i], std::stod(text));
    }
    EXPECT_EQ(g.front(), 0.1);
    EXPECT_EQ(g[5], 0.6);
    EXPECT_EQ(g.back(), 2.0);
}

TEST(OrderGrid, Parse) {
    EXPECT_EQ(parse_order_grid("0.2:2.0:0.2").size(), 10u);
    EXPECT_EQ(parse_order_grid("1:1:0.1"), std::vector<double>{1.0});
    EXPECT_THROW(parse_order_grid("0.2-2.0"), std::invalid_argument);
    EXPECT_THROW(parse_order_grid("0:1:0.1"), std::invalid_argument);
    EXPECT_THROW(parse_order_grid("1:0.5:0.1"), std::invalid_argument);
    EXPECT_THROW(parse_order_grid("0.1:1:0"), std::invalid_argument);
    EXPECT_THROW(parse_order_grid("0.1:1:0.1x"), std::invalid_argument);
}

TEST(BestIndex, TiesGoToLowerIndex) {
    EXPECT_EQ(best_index(std::vector<double>{1, 3, 3, 2}), 1u);
    EXPECT_EQ(best_index(std::vector<double>{5}), 0u);
    EXPECT_THROW(best_index(std::vector<double>{}), std::invalid_argument);
}

TEST(BestIndex, InvariantUnderPositiveRescaling) {
    const std::vector<double> j = {3.2, 7.9, 7.1, 0.4, 7.85};
    for (double k : {1e-6, 0.3, 1.0, 42.0, 1e9}) {
        std::vector<double> scaled = j;
        for (double& v : scaled) v *= k;
        EXPECT_EQ(best_index(scaled), best_index(j));
    }
}

TEST(Sweep, SingletonGrid) {
    const auto data = small_corpus(1);
    const std::vector<double> grid = {1.0};
    const auto r = sweep_orders(data, grid, SweepOptions{});
    EXPECT_EQ(r.best_order, 1.0);
    EXPECT_EQ(r.mean_j.size(), 1u);
}

TEST(Sweep, BestOrderIsArgmaxOfMean) {
    const auto data = small_corpus(4);
    const std::vector<double> grid = {0.4, 0.8, 1.2, 1.6};
    const auto r = sweep_orders(data, grid, SweepOptions{});
    ASSERT_EQ(r.mean_j.size(), 4u);
    EXPECT_EQ(r.best_index, best_index(r.mean_j));
    EXPECT_EQ(r.best_order, grid[r.best_index]);
    for (double j : r.mean_j) EXPECT_LE(j, r.mean_j[r.best_index]);
    for (std::size_t o = 0; o < grid.size(); ++o) {
        double sum = 0.0;
        for (const auto& j : r.per_image_j[o]) sum += j.value();
        EXPECT_DOUBLE_EQ(r.mean_j[o], sum / 4.0);
    }
}

TEST(Sweep, DeterministicAcrossJobCounts) {
    const auto data = small_corpus(5);
    const auto grid = make_order_grid(0.3, 1.5, 0.3);
    SweepOptions one, many;
    many.jobs = 4;
    const auto a = sweep_orders(data, grid, one), b = sweep_orders(data, grid, many);
    EXPECT_EQ(a.mean_j, b.mean_j);
    EXPECT_EQ(a.best_order, b.best_order);
    EXPECT_EQ(sweep_report(a), sweep_report(b));
    EXPECT_EQ(sweep_to_json(a), sweep_to_json(b));
}

TEST(Sweep, SingletonDatasetEqualsDirectEvaluation) {
    const auto data = small_corpus(1);
    const std::vector<double> grid = {0.5, 1.0};
    const auto r = sweep_orders(data, grid, SweepOptions{});
    for (std::size_t o = 0; o < grid.size(); ++o) {
        DetectorConfig cfg;
        cfg.order = grid[o];
        const auto rep = evaluate_edges(data[0].image, detect_edges(data[0].image, cfg), data[0].truths, EvalParams{});
        EXPECT_EQ(r.mean_j[o], rep.j.value());
        EXPECT_EQ(r.pr[o].ods, rep.ods);
    }
}

TEST(Sweep, SkipsImagesWithoutTruth) {
    auto data = small_corpus(3);
    data[1].truths = {BinaryBoundaryMap(data[1].image.width(), data[1].image.height())};
    data[2].truths.clear();
    const std::vector<double> grid = {0.6};
    const auto r = sweep_orders(data, grid, SweepOptions{});
    EXPECT_EQ(r.image_names, std::vector<std::string>{data[0].name});
    EXPECT_EQ(r.skipped, (std::vector<std::string>{data[1].name, data[2].name}));
}

TEST(Sweep, Errors) {
    const auto data = small_corpus(1);
    const std::vector<double> grid = {0.5};
    EXPECT_THROW(sweep_orders({}, grid, SweepOptions{}), std::invalid_argument);
    EXPECT_THROW(sweep_orders(data, {}, SweepOptions{}), std::invalid_argument);
    EXPECT_THROW(sweep_orders(data, std::vector<double>{0.0, 0.5}, SweepOptions{}), std::invalid_argument);
    EXPECT_THROW(sweep_orders(data, std::vector<double>{0.5, 0.5}, SweepOptions{}), std::invalid_argument);
    auto bad = data;
    bad[0].truths.clear();
    EXPECT_THROW(sweep_orders(bad, grid, SweepOptions{}), std::invalid_argument);
}

TEST(SweepReport, RowsAscendingAndRoundTrip) {
    const auto data = small_corpus(2);
    const std::vector<double> grid = {0.7, 1.1, 1.9};
    const auto r = sweep_orders(data, grid, SweepOptions{});
    const std::string csv = sweep_report(r);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "order,mean_j");
    const auto rows = parse_sweep_report(csv);
    ASSERT_EQ(rows.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_NEAR(rows[i].order, grid[i], 1e-9);
        EXPECT_NEAR(rows[i].mean_j, r.mean_j[i], 1e-9 * std::abs(r.mean_j[i]));
        if (i > 0) {
            EXPECT_LT(rows[i - 1].order, rows[i].order);
        }
    }
    EXPECT_THROW(parse_sweep_report("bad\n"), std::invalid_argument);
}

TEST(SweepReport, TableAndJson) {
    const auto data = small_corpus(2);
    const std::vector<double> grid = {0.6, 1.2};
    const auto r = sweep_orders(data, grid, SweepOptions{});
    const std::string table = sweep_table(r);
    EXPECT_EQ(table.substr(0, table.find('\n')), "order,ods,ois,ap");
    const auto j = nlohmann::json::parse(sweep_to_json(r));
    EXPECT_EQ(j.at("grid").size(), 2u);
    EXPECT_EQ(j.at("mean_j").size(), 2u);
    EXPECT_DOUBLE_EQ(j.at("best_order").get<double>(), r.best_order);
    EXPECT_EQ(j.at("images").size(), 2u);
    EXPECT_EQ(j.at("pr_summary").size(), 2u);
}

TEST(ParallelFor, RunsEveryIndexOnce) {
    std::vector<std::atomic<int>> hits(100);
    parallel_for(hits.size(), 3, [&](std::size_t i) { hits[i]++; });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(ParallelFor, RethrowsLowestIndexFailure) {
    try {
        parallel_for(20, 4, [](std::size_t i) {
            if (i == 7 || i == 13) throw std::runtime_error(std::to_string(i));
        });
        FAIL();
    } catch (const std::runtime_error& e) {
        EXPECT_STREQ(e.what(), "7");
    }
}

}  // namespace
}  // namespace fracedge
