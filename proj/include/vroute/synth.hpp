#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vroute/image.hpp"
#include "vroute/world.hpp"

namespace vroute {

enum class SignalMode { prompt_keyword, metadata_band, none };

std::string to_string(SignalMode m);
SignalMode signal_mode_from_string(const std::string& text);

struct WorldSpec {
    std::uint64_t seed = 0;
    std::size_t n_datasets = 3;
    std::size_t samples_per_dataset = 100;
    std::size_t min_options = 2;
    std::size_t max_options = 4;
    std::vector<std::string> models{"m0", "m1", "m2", "m3"};
    /// competence[model][dataset]; drawn from `competence_range` when empty.
    std::vector<std::vector<double>> competence;
    double competence_low = 0.3;
    double competence_high = 0.8;
    /// Designated best model per dataset; defaults to the competence argmax.
    std::vector<std::string> best_models;
    SignalMode signal_mode = SignalMode::none;
    double band_noise = 5.0;
    int min_side = 8;
    int max_side = 24;
    int channels = 3;
    /// Adds the empty question form, which the router pipeline filters out.
    bool include_empty_question = true;

    /// Throws ValidationError for infeasible specs.
    void validate() const;
};

void to_json(nlohmann::json& j, const WorldSpec& s);
void from_json(const nlohmann::json& j, WorldSpec& s);

struct SynthWorld {
    World world;
    std::map<std::string, Image> images;  // keyed by image_ref
    std::vector<std::string> best_models;  // per dataset, in dataset order
    std::map<std::string, std::string> keywords;  // model -> prompt keyword
    std::vector<std::vector<double>> competence;  // resolved [model][dataset]
};

/// Deterministic in spec.seed. Records cover every (model, sample, variant).
///
/// prompt_keyword: every non-empty question of dataset d contains the keyword
///   of its best model, which must have competence 1.0 and be the unique max,
///   so the best-model label is a function of that keyword.
/// metadata_band: channel means of dataset d sit near 40 + 50k, k being the
///   pool index of its best model; questions carry no dataset signal.
/// Options are drawn from one pseudo-word vocabulary shared by all datasets.
SynthWorld generate_world(const WorldSpec& spec);

/// Writes the world directory plus images/ as binary PNM files.
void save_synth_world(const SynthWorld& synth, const std::filesystem::path& dir, bool write_images = true);

}  // namespace vroute
