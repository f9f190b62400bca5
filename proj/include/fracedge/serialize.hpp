#pragma once

#include "json.hpp"

#include "fracedge/evalbench.hpp"
#include "fracedge/fhog.hpp"
#include "fracedge/ordersearch.hpp"

namespace fracedge {

using Json = nlohmann::ordered_json;

/// {order, sigma, psnr_db, pm, pf, de, j, pr: [{t,p,r,f}], ods, ois, ap}.
/// psnr_db and j are null when PSNR is infinite.
Json report_json(const EvalReport& report);

Json pr_json(std::span<const PrPoint> curve);

Json summary_json(const SweepSummary& summary);

/// {grid, mean_j, best_order, images, per_image_j, ods, ois, ap, skipped}
Json sweep_json(const OrderSweepResult& result);

Json descriptor_json(const HogDescriptor& d);

}  // namespace fracedge
