#pragma once

#include <cmath>

#include "bsf/train.hpp"

#include <json.hpp>

namespace bsf {

/// report.json payload: training history, snapshot metadata and the
/// workflow-specific outcome. schema_version guards downstream tooling.
inline nlohmann::json report_to_json(const RunReport& r) {
    nlohmann::json history = nlohmann::json::array();
    for (const auto& e : r.history) {
        nlohmann::json row = {{"epoch", e.epoch},
                              {"train_loss", e.train_loss},
                              {"train_accuracy", e.train_accuracy}};
        if (!std::isnan(e.val_accuracy)) row["val_accuracy"] = e.val_accuracy;
        history.push_back(std::move(row));
    }
    nlohmann::json snaps = nlohmann::json::array();
    for (const auto& s : r.bsf_snapshots)
        snaps.push_back({{"epoch", s.epoch}, {"weights", s.weights}});
    return {{"schema_version", 1},
            {"history", history},
            {"bsf_snapshots", snaps},
            {"outcome", r.outcome}};
}

}  // namespace bsf
