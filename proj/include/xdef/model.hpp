#pragma once

#include <string>
#include <utility>
#include <vector>

#include "xdef/config.hpp"
#include "xdef/explain.hpp"
#include "xdef/perception.hpp"
#include "xdef/policy.hpp"

namespace xdef::model {

using diff::Value;

// Full parameter bundle: perception stack, defense policy, and the fixed
// evidence projections. One checkpoint file holds all of it.
struct Model {
    percept::PerceptionParams perception;
    policy::PolicyParams defense;
    explain::Projections projections;

    static Model init(const config::ExperimentConfig& cfg, std::uint64_t seed);

    std::vector<std::pair<std::string, const Value*>> arrays() const;
    std::vector<std::pair<std::string, Value*>> arrays_mut();

    void save(const std::string& path) const;
    // shapes must match the configured dimensions
    void load(const std::string& path);
};

}  // namespace xdef::model
