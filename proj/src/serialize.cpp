#include "fracedge/serialize.hpp"

namespace fracedge {

Json pr_json(std::span<const PrPoint> curve) {
    Json arr = Json::array();
    for (const auto& p : curve) {
        arr.push_back({{"t", p.threshold}, {"p", p.precision}, {"r", p.recall}, {"f", p.f_measure}});
    }
    return arr;
}

Json report_json(const EvalReport& r) {
    Json j;
    if (!r.name.empty()) j["name"] = r.name;
    j["order"] = r.order;
    j["sigma"] = r.sigma;
    j["psnr_db"] = r.psnr.infinite ? Json(nullptr) : Json(r.psnr.db);
    j["pm"] = r.error.pm;
    j["pf"] = r.error.pf;
    j["de"] = r.error.de;
    j["de_threshold"] = r.de_threshold;
    j["j"] = r.j ? Json(*r.j) : Json(nullptr);
    j["pr"] = pr_json(r.pr);
    j["ods"] = r.ods;
    j["ois"] = r.ois;
    j["ap"] = r.ap;
    return j;
}

Json summary_json(const SweepSummary& s) {
    Json j;
    j["ods"] = s.ods;
    j["ods_threshold"] = s.ods_threshold;
    j["ois"] = s.ois;
    j["ap"] = s.ap;
    j["pr"] = pr_json(s.aggregate);
    return j;
}

Json sweep_json(const OrderSweepResult& result) {
    Json j;
    j["grid"] = result.grid;
    j["mean_j"] = result.mean_j;
    j["best_order"] = result.best_order;
    j["images"] = result.image_names;
    Json per_image = Json::array();
    for (const auto& row : result.per_image_j) {
        Json r = Json::array();
        for (const auto& v : row) r.push_back(v ? Json(*v) : Json(nullptr));
        per_image.push_back(std::move(r));
    }
    j["per_image_j"] = std::move(per_image);
    Json table = Json::array();
    for (std::size_t i = 0; i < result.pr.size(); ++i) {
        table.push_back({{"order", result.grid[i]},
                         {"ods", result.pr[i].ods},
                         {"ois", result.pr[i].ois},
                         {"ap", result.pr[i].ap}});
    }
    j["pr_summary"] = std::move(table);
    j["skipped"] = result.skipped;
    return j;
}

Json descriptor_json(const HogDescriptor& d) {
    Json j;
    j["cell_size"] = d.cell_size;
    j["bins"] = d.bins;
    j["cells_x"] = d.cells_x;
    j["cells_y"] = d.cells_y;
    j["normalization"] = d.normalization == HogNormalization::cell_l2 ? "cell_l2" : "none";
    j["histogram"] = d.histogram;
    return j;
}

}  // namespace fracedge
