#pragma once

#include <map>
#include <string>
#include <vector>

#include "vroute/core.hpp"
#include "vroute/prompt.hpp"

namespace vroute {

/// Everything the routing pipeline consumes: the registered model pool,
/// dataset manifests, prompt configs, per-image metadata and execution records.
struct World {
    std::vector<std::string> model_pool;
    std::vector<DatasetManifest> datasets;
    std::map<std::string, DatasetPromptConfig> prompt_configs;
    std::map<std::string, MetadataSummary> metadata;  // keyed by image_ref
    std::vector<ExecutionRecord> records;

    const DatasetManifest& dataset(const std::string& dataset_id) const;
    const DatasetPromptConfig& config_for(const DatasetManifest& manifest) const;
    const DatasetPromptConfig& config_for(const std::string& dataset_id) const { return config_for(dataset(dataset_id)); }
    const MetadataSummary& metadata_for(const Sample& sample) const;
    std::vector<std::string> dataset_ids() const;
    std::map<std::string, std::size_t> dataset_sizes() const;
    bool has_model(const std::string& model_id) const;

    /// Manifest integrity, config validity, pool membership of records.
    void validate() const;

    /// Copy restricted to the given datasets (records included).
    World subset(const std::vector<std::string>& dataset_ids) const;
};

/// Model ids are restricted to [A-Za-z0-9._-] so they embed safely in
/// serialized router lines.
bool valid_model_id(const std::string& model_id);

}  // namespace vroute
