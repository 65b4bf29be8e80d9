#pragma once

#include <string>

#include <json.hpp>

#include "fairflow/fairalloc.hpp"
#include "fairflow/learn.hpp"
#include "fairflow/model.hpp"
#include "fairflow/stochastic.hpp"

namespace fairflow {

using json = nlohmann::json;

json instance_to_json(const Instance& instance);
Instance instance_from_json(const json& j);

json plan_to_json(const DispatchPlan& plan, const std::string& config_hash);
DispatchPlan plan_from_json(const json& j);

json scheme_to_json(const PaymentScheme& scheme, const FairnessReport& report,
                    const Instance& instance, const std::string& config_hash);
PaymentScheme scheme_from_json(const json& j, const Instance& instance);

json reward_table_to_json(const RewardTable& table);

json posterior_to_json(const PosteriorState& state);

/// FNV-1a hash of a canonical config string, as fixed-width hex.
std::string config_hash(const std::string& canonical);

void write_text_file(const std::string& path, const std::string& contents);
std::string read_text_file(const std::string& path);

}  // namespace fairflow
