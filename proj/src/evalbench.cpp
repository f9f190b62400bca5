#include "fracedge/evalbench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "fracedge/serialize.hpp"

namespace fracedge {

double mse(const RasterImage& reference, const RasterImage& processed) {
    if (!reference.same_shape(processed)) {
        throw std::invalid_argument("mse: dimension mismatch");
    }
    const auto a = reference.values();
    const auto b = processed.values();
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = b[i] - a[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

Psnr psnr(const RasterImage& reference, const RasterImage& processed, double peak) {
    const double err = mse(reference, processed);
    if (err == 0.0) {
        return {std::numeric_limits<double>::infinity(), true};
    }
    return {10.0 * std::log10(peak * peak / err), false};
}

RasterImage noise_residual(const RasterImage& observed, const RasterImage& signal) {
    if (!observed.same_shape(signal)) {
        throw std::invalid_argument("noise_residual: dimension mismatch");
    }
    RasterImage out(observed.width(), observed.height());
    const auto x = observed.values();
    const auto s = signal.values();
    auto w = out.values();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = x[i] - s[i];
    return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher), in place on f.
void distance_transform_1d(std::vector<double>& f, std::vector<double>& d, std::vector<std::size_t>& v,
                           std::vector<double>& z) {
    const std::size_t n = f.size();
    std::size_t k = 0;
    std::size_t first = n;
    for (std::size_t q = 0; q < n; ++q) {
        if (f[q] < kInf) {
            first = q;
            break;
        }
    }
    if (first == n) return;  // no finite samples
    v[0] = first;
    z[0] = -kInf;
    z[1] = kInf;
    for (std::size_t q = first + 1; q < n; ++q) {
        if (f[q] == kInf) continue;
        const double qd = static_cast<double>(q);
        auto intersect = [&](std::size_t p) {
            const double pd = static_cast<double>(p);
            return ((f[q] + qd * qd) - (f[p] + pd * pd)) / (2.0 * qd - 2.0 * pd);
        };
        double s = intersect(v[k]);
        while (s <= z[k]) {  // z[0] is -inf, so k never underflows
            --k;
            s = intersect(v[k]);
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }
    k = 0;
    for (std::size_t q = 0; q < n; ++q) {
        const double qd = static_cast<double>(q);
        while (z[k + 1] < qd) ++k;
        const double diff = qd - static_cast<double>(v[k]);
        d[q] = diff * diff + f[v[k]];
    }
    f.swap(d);
}

}  // namespace

Grid<double> squared_distance_transform(const BinaryBoundaryMap& mask) {
    const std::size_t w = mask.width();
    const std::size_t h = mask.height();
    Grid<double> dist(w, h, kInf);
    const std::size_t n = std::max(w, h);
    std::vector<double> f, d(n);
    std::vector<std::size_t> v(n);
    std::vector<double> z(n + 1);

    for (std::size_t x = 0; x < w; ++x) {
        f.assign(h, kInf);
        for (std::size_t y = 0; y < h; ++y) {
            if (mask(x, y)) f[y] = 0.0;
        }
        d.resize(h);
        distance_transform_1d(f, d, v, z);
        for (std::size_t y = 0; y < h; ++y) dist(x, y) = f[y];
    }
    for (std::size_t y = 0; y < h; ++y) {
        auto row = dist.row(y);
        f.assign(row.begin(), row.end());
        d.resize(w);
        distance_transform_1d(f, d, v, z);
        std::copy(f.begin(), f.end(), row.begin());
    }
    return dist;
}

namespace {

void check_tolerance(double tol) {
    if (!(tol >= 0.0) || !std::isfinite(tol)) {
        throw std::invalid_argument("match_boundaries: tolerance must be finite and >= 0");
    }
}

// Counts set pixels of `mask` whose squared distance in `dist` is within tol^2.
std::size_t count_within(const BinaryBoundaryMap& mask, const Grid<double>& dist, double tol_sq) {
    const auto m = mask.values();
    const auto d = dist.values();
    std::size_t n = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m[i] && d[i] <= tol_sq) ++n;
    }
    return n;
}

// Matching with precomputed truth distance maps; only the prediction's
// distance map depends on the threshold.
MatchResult match_with_truth_dt(const BinaryBoundaryMap& predicted, std::span<const BinaryBoundaryMap> truths,
                                std::span<const Grid<double>> truth_dts, double tol) {
    const double tol_sq = tol * tol;
    MatchResult r;
    const auto p = predicted.values();
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!p[i]) continue;
        const bool hit = std::any_of(truth_dts.begin(), truth_dts.end(),
                                     [&](const Grid<double>& dt) { return dt.values()[i] <= tol_sq; });
        if (hit) {
            ++r.true_positives;
        } else {
            ++r.false_positives;
        }
    }
    const Grid<double> pred_dt = squared_distance_transform(predicted);
    for (const auto& t : truths) {
        const std::size_t total = count_set(t);
        const std::size_t covered = count_within(t, pred_dt, tol_sq);
        r.covered_truth += covered;
        r.false_negatives += total - covered;
    }
    return r;
}

void check_shapes(const BinaryBoundaryMap& predicted, std::span<const BinaryBoundaryMap> truths) {
    if (truths.empty()) {
        throw std::invalid_argument("match_boundaries: at least one truth map is required");
    }
    for (const auto& t : truths) {
        if (!t.same_shape(predicted)) {
            throw std::invalid_argument("match_boundaries: dimension mismatch");
        }
    }
}

}  // namespace

MatchResult match_boundaries(const BinaryBoundaryMap& predicted, std::span<const BinaryBoundaryMap> truths,
                             double tol) {
    check_tolerance(tol);
    check_shapes(predicted, truths);
    std::vector<Grid<double>> dts;
    dts.reserve(truths.size());
    for (const auto& t : truths) dts.push_back(squared_distance_transform(t));
    return match_with_truth_dt(predicted, truths, dts, tol);
}

MatchResult match_boundaries(const BinaryBoundaryMap& predicted, const BinaryBoundaryMap& truth, double tol) {
    return match_boundaries(predicted, std::span(&truth, 1), tol);
}

double default_tolerance(std::size_t width, std::size_t height) noexcept {
    return 0.0075 * std::hypot(static_cast<double>(width), static_cast<double>(height));
}

// ---------------------------------------------------------------------------

DetectionError detection_error(const MatchResult& m) {
    DetectionError e;
    e.pm = static_cast<double>(m.false_negatives) / static_cast<double>(std::max<std::size_t>(1, m.truth()));
    e.pf = static_cast<double>(m.false_positives) / static_cast<double>(std::max<std::size_t>(1, m.predicted()));
    e.de = std::max(e.pm * e.pf, kDetectionErrorFloor);
    return e;
}

double score_j(double psnr_db, double de) {
    if (!(de > 0.0)) {
        throw std::invalid_argument("score_j: detection error must be positive");
    }
    return psnr_db / de;
}

// ---------------------------------------------------------------------------

double f_measure(double precision, double recall) noexcept {
    const double s = precision + recall;
    return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

PrPoint pr_point(double threshold, const MatchResult& counts) {
    PrPoint p;
    p.threshold = threshold;
    p.counts = counts;
    p.precision = counts.predicted() == 0
                      ? 1.0
                      : static_cast<double>(counts.true_positives) / static_cast<double>(counts.predicted());
    p.recall = counts.truth() == 0 ? 0.0
                                   : static_cast<double>(counts.covered_truth) / static_cast<double>(counts.truth());
    p.f_measure = f_measure(p.precision, p.recall);
    return p;
}

std::vector<double> threshold_grid(std::size_t levels) {
    if (levels < 2) {
        throw std::invalid_argument("threshold grid needs at least two levels");
    }
    std::vector<double> t(levels);
    for (std::size_t i = 0; i < levels; ++i) t[i] = static_cast<double>(i) / static_cast<double>(levels);
    return t;
}

std::vector<PrPoint> pr_curve(const EdgeMap& edges, std::span<const BinaryBoundaryMap> truths, std::size_t levels,
                              double tol) {
    check_tolerance(tol);
    const auto grid = threshold_grid(levels);
    BinaryBoundaryMap probe(edges.width(), edges.height(), 0);
    check_shapes(probe, truths);
    std::vector<Grid<double>> dts;
    dts.reserve(truths.size());
    for (const auto& t : truths) dts.push_back(squared_distance_transform(t));

    std::vector<PrPoint> curve;
    curve.reserve(levels);
    for (double t : grid) {
        const BinaryBoundaryMap mask = threshold_map(edges, t);
        curve.push_back(pr_point(t, match_with_truth_dt(mask, truths, dts, tol)));
    }
    return curve;
}

std::vector<PrPoint> pr_curve(const EdgeMap& edges, const BinaryBoundaryMap& truth, std::size_t levels, double tol) {
    return pr_curve(edges, std::span(&truth, 1), levels, tol);
}

double average_precision(std::span<const PrPoint> curve) {
    if (curve.empty()) return 0.0;
    std::vector<std::pair<double, double>> pts;  // (recall, precision)
    pts.reserve(curve.size() + 1);
    for (const auto& p : curve) pts.emplace_back(p.recall, p.precision);
    std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    if (pts.front().first > 0.0) {
        pts.insert(pts.begin(), {0.0, pts.front().second});
    }
    double area = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        area += (pts[i].first - pts[i - 1].first) * 0.5 * (pts[i].second + pts[i - 1].second);
    }
    return area;
}

SweepSummary summarize_sweep(std::span<const std::vector<PrPoint>> per_image_curves) {
    if (per_image_curves.empty() || per_image_curves.front().empty()) {
        throw std::invalid_argument("summarize_sweep: no curves");
    }
    const auto& ref = per_image_curves.front();
    const std::size_t levels = ref.size();
    for (const auto& c : per_image_curves) {
        if (c.size() != levels) {
            throw std::invalid_argument("summarize_sweep: mismatched threshold grids");
        }
        for (std::size_t i = 0; i < levels; ++i) {
            if (c[i].threshold != ref[i].threshold) {
                throw std::invalid_argument("summarize_sweep: mismatched threshold grids");
            }
        }
    }

    SweepSummary s;
    s.aggregate.reserve(levels);
    for (std::size_t i = 0; i < levels; ++i) {
        MatchResult pooled;
        for (const auto& c : per_image_curves) pooled += c[i].counts;
        s.aggregate.push_back(pr_point(ref[i].threshold, pooled));
    }
    for (const auto& p : s.aggregate) {
        if (p.f_measure > s.ods) {
            s.ods = p.f_measure;
            s.ods_threshold = p.threshold;
        }
    }

    MatchResult best_pooled;
    for (const auto& c : per_image_curves) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < levels; ++i) {
            if (c[i].f_measure > c[best].f_measure) best = i;
        }
        s.per_image_best_index.push_back(best);
        s.per_image_best_f.push_back(c[best].f_measure);
        best_pooled += c[best].counts;
    }
    s.ois = pr_point(0.0, best_pooled).f_measure;
    s.ap = average_precision(s.aggregate);
    return s;
}

// ---------------------------------------------------------------------------

EvalReport evaluate_edges(const RasterImage& original, const EdgeMap& edges,
                          std::span<const BinaryBoundaryMap> truths, const EvalParams& params) {
    if (!original.same_shape(edges)) {
        throw std::invalid_argument("evaluate_edges: image and edge map differ in size");
    }
    const double tol = params.tol.value_or(default_tolerance(edges.width(), edges.height()));

    EvalReport r;
    r.pr = pr_curve(edges, truths, params.levels, tol);
    const std::vector<PrPoint>* single = &r.pr;
    const SweepSummary summary = summarize_sweep(std::span(single, 1));
    r.ods = summary.ods;
    r.ois = summary.ois;
    r.ap = summary.ap;

    RasterImage scaled = edges;
    for (double& v : scaled.values()) v *= params.peak;
    r.psnr = psnr(original, scaled, params.peak);

    if (!(params.de_threshold >= 0.0 && params.de_threshold <= 1.0)) {
        throw std::invalid_argument("evaluate_edges: de_threshold must lie in [0, 1]");
    }
    r.de_threshold = params.de_threshold;
    const BinaryBoundaryMap mask = threshold_map(edges, r.de_threshold);
    r.error = detection_error(match_boundaries(mask, truths, tol));
    if (!r.psnr.infinite) {
        r.j = score_j(r.psnr.db, r.error.de);
    }
    return r;
}

std::string report_to_json(const EvalReport& report, int indent) { return report_json(report).dump(indent); }

std::string pr_to_csv(std::span<const PrPoint> curve) {
    std::ostringstream out;
    out << "threshold,precision,recall,f\n";
    char buf[128];
    for (const auto& p : curve) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", p.threshold, p.precision, p.recall, p.f_measure);
        out << buf;
    }
    return out.str();
}

}  // namespace fracedge
