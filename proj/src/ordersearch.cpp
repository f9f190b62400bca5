#include "fracedge/ordersearch.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "fracedge/parallel.hpp"
#include "fracedge/serialize.hpp"

namespace fracedge {

std::vector<double> make_order_grid(double lo, double hi, double step) {
    if (!(step > 0.0) || !std::isfinite(lo) || !std::isfinite(hi) || !std::isfinite(step)) {
        throw std::invalid_argument("order grid: step must be positive and bounds finite");
    }
    if (!(lo > 0.0)) {
        throw std::invalid_argument("order grid: orders must be > 0");
    }
    if (hi < lo) {
        throw std::invalid_argument("order grid: hi must be >= lo");
    }
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    std::vector<double> grid(count);
    for (std::size_t i = 0; i < count; ++i) {
        grid[i] = std::round((lo + static_cast<double>(i) * step) * 1e10) / 1e10;
    }
    return grid;
}

std::vector<double> parse_order_grid(const std::string& spec) {
    double lo = 0, hi = 0, step = 0;
    char c1 = 0, c2 = 0;
    std::istringstream in(spec);
    if (!(in >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || !(in >> std::ws).eof()) {
        throw std::invalid_argument("order grid must look like lo:hi:step, got '" + spec + "'");
    }
    return make_order_grid(lo, hi, step);
}

std::vector<double> default_order_grid() { return make_order_grid(0.1, 2.0, 0.1); }

std::size_t best_index(std::span<const double> scores) {
    if (scores.empty()) {
        throw std::invalid_argument("best_index: no scores");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] > scores[best]) best = i;
    }
    return best;
}

namespace {

void validate_grid(std::span<const double> grid) {
    if (grid.empty()) {
        throw std::invalid_argument("sweep_orders: empty order grid");
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0) || !std::isfinite(grid[i])) {
            throw std::invalid_argument("sweep_orders: orders must be > 0");
        }
        if (i > 0 && !(grid[i] > grid[i - 1])) {
            throw std::invalid_argument("sweep_orders: order grid must be strictly increasing");
        }
    }
}

}  // namespace

OrderSweepResult sweep_orders(std::span<const DatasetItem> dataset, std::span<const double> grid,
                              const SweepOptions& options) {
    if (dataset.empty()) {
        throw std::invalid_argument("sweep_orders: empty dataset");
    }
    validate_grid(grid);
    options.detector.validate();

    OrderSweepResult result;
    result.grid.assign(grid.begin(), grid.end());

    std::vector<const DatasetItem*> usable;
    for (const auto& item : dataset) {
        std::size_t truth_pixels = 0;
        bool shape_ok = !item.truths.empty();
        for (const auto& t : item.truths) {
            truth_pixels += count_set(t);
            shape_ok = shape_ok && t.same_shape(item.image);
        }
        if (!shape_ok || truth_pixels == 0) {
            spdlog::warn("sweep: skipping '{}' ({})", item.name,
                         shape_ok ? "ground truth has no boundary pixels" : "ground truth missing or misshapen");
            result.skipped.push_back(item.name);
            continue;
        }
        usable.push_back(&item);
        result.image_names.push_back(item.name);
    }
    if (usable.empty()) {
        throw std::invalid_argument("sweep_orders: no usable images in dataset");
    }

    const std::size_t n_orders = grid.size();
    const std::size_t n_images = usable.size();
    std::vector<EvalReport> reports(n_orders * n_images);
    std::vector<char> failed(n_orders * n_images, 0);

    parallel_for(n_orders * n_images, options.jobs, [&](std::size_t task) {
        const std::size_t oi = task / n_images;
        const std::size_t ii = task % n_images;
        const DatasetItem& item = *usable[ii];
        DetectorConfig cfg = options.detector;
        cfg.order = grid[oi];
        try {
            const EdgeMap edges = detect_edges(item.image, cfg);
            reports[task] = evaluate_edges(item.image, edges, item.truths, options.eval);
            reports[task].name = item.name;
            reports[task].order = cfg.order;
            reports[task].sigma = cfg.sigma;
        } catch (const std::exception& e) {
            spdlog::warn("sweep: order {} image '{}' failed: {}", cfg.order, item.name, e.what());
            failed[task] = 1;
        }
    });

    result.per_image_j.assign(n_orders, std::vector<std::optional<double>>(n_images));
    result.mean_j.assign(n_orders, 0.0);
    for (std::size_t oi = 0; oi < n_orders; ++oi) {
        double sum = 0.0;
        std::size_t scored = 0;
        std::vector<std::vector<PrPoint>> curves;
        for (std::size_t ii = 0; ii < n_images; ++ii) {
            const std::size_t task = oi * n_images + ii;
            if (failed[task]) continue;
            const EvalReport& r = reports[task];
            curves.push_back(r.pr);
            if (!r.j) {
                spdlog::warn("sweep: order {} image '{}' has infinite PSNR; not scored", grid[oi], r.name);
                continue;
            }
            result.per_image_j[oi][ii] = r.j;
            sum += *r.j;
            ++scored;
        }
        if (scored == 0) {
            throw std::runtime_error("sweep_orders: no image could be scored at order " + std::to_string(grid[oi]));
        }
        result.mean_j[oi] = sum / static_cast<double>(scored);
        result.pr.push_back(summarize_sweep(curves));
    }
    result.best_index = best_index(result.mean_j);
    result.best_order = grid[result.best_index];
    return result;
}

std::string sweep_report(const OrderSweepResult& result) {
    std::ostringstream out;
    out << "order,mean_j\n";
    char buf[96];
    for (std::size_t i = 0; i < result.grid.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", result.grid[i], result.mean_j[i]);
        out << buf;
    }
    return out.str();
}

std::vector<SweepCsvRow> parse_sweep_report(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line) || line != "order,mean_j") {
        throw std::invalid_argument("sweep csv: missing header");
    }
    std::vector<SweepCsvRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw std::invalid_argument("sweep csv: malformed row '" + line + "'");
        }
        rows.push_back({std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
    }
    return rows;
}

std::string sweep_table(const OrderSweepResult& result) {
    std::ostringstream out;
    out << "order,ods,ois,ap\n";
    char buf[128];
    for (std::size_t i = 0; i < result.grid.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", result.grid[i], result.pr[i].ods,
                      result.pr[i].ois, result.pr[i].ap);
        out << buf;
    }
    return out.str();
}

std::string sweep_to_json(const OrderSweepResult& result, int indent) { return sweep_json(result).dump(indent); }

}  // namespace fracedge
