#include "vroute/world.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "vroute/errors.hpp"

namespace vroute {

bool valid_model_id(const std::string& model_id) {
    return !model_id.empty() && std::all_of(model_id.begin(), model_id.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-';
    });
}

const DatasetManifest& World::dataset(const std::string& dataset_id) const {
    for (const auto& d : datasets)
        if (d.dataset_id == dataset_id) return d;
    throw InvalidInput("unknown dataset '" + dataset_id + "'");
}

const DatasetPromptConfig& World::config_for(const DatasetManifest& manifest) const {
    if (auto it = prompt_configs.find(manifest.prompt_config_ref); it != prompt_configs.end()) return it->second;
    const auto& builtin = builtin_prompt_configs();
    if (auto it = builtin.find(manifest.prompt_config_ref); it != builtin.end()) return it->second;
    throw InvalidInput("dataset " + manifest.dataset_id + " references unknown prompt config '" +
                       manifest.prompt_config_ref + "'");
}

const MetadataSummary& World::metadata_for(const Sample& sample) const {
    auto it = metadata.find(sample.image_ref);
    if (it == metadata.end()) throw IntegrityError("no image metadata for " + sample.image_ref);
    return it->second;
}

std::vector<std::string> World::dataset_ids() const {
    std::vector<std::string> out;
    for (const auto& d : datasets) out.push_back(d.dataset_id);
    return out;
}

std::map<std::string, std::size_t> World::dataset_sizes() const {
    std::map<std::string, std::size_t> out;
    for (const auto& d : datasets) out[d.dataset_id] = d.size();
    return out;
}

bool World::has_model(const std::string& model_id) const {
    return std::find(model_pool.begin(), model_pool.end(), model_id) != model_pool.end();
}

void World::validate() const {
    if (model_pool.empty()) throw ValidationError("model pool is empty");
    std::set<std::string> models;
    for (const auto& m : model_pool) {
        if (!valid_model_id(m)) throw ValidationError("invalid model id '" + m + "'");
        if (!models.insert(m).second) throw ValidationError("duplicate model id '" + m + "'");
    }
    std::set<std::string> ids;
    for (const auto& d : datasets) {
        if (!ids.insert(d.dataset_id).second) throw ValidationError("duplicate dataset id " + d.dataset_id);
        d.validate();
        config_for(d).validate();
    }
    for (const auto& r : records)
        if (!models.contains(r.model_id)) throw ValidationError("record references unregistered model " + r.model_id);
}

World World::subset(const std::vector<std::string>& dataset_ids) const {
    const std::set<std::string> keep(dataset_ids.begin(), dataset_ids.end());
    World out;
    out.model_pool = model_pool;
    out.prompt_configs = prompt_configs;
    for (const auto& d : datasets) {
        if (!keep.contains(d.dataset_id)) continue;
        out.datasets.push_back(d);
        for (const auto& s : d.samples)
            if (auto it = metadata.find(s.image_ref); it != metadata.end()) out.metadata.insert(*it);
    }
    for (const auto& r : records)
        if (keep.contains(r.dataset_id)) out.records.push_back(r);
    return out;
}

}  // namespace vroute
