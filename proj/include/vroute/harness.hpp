#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vroute/baselines.hpp"
#include "vroute/router.hpp"
#include "vroute/synth.hpp"

namespace vroute {

struct ExperimentConfig {
    std::optional<std::filesystem::path> world_dir;  // recorded world
    std::optional<WorldSpec> synth;                  // or a synthetic one
    std::vector<SerializationFlags> flag_grid{SerializationFlags{}};
    TrainConfig train;
    FeaturizeConfig featurize;
    std::uint64_t seed = 0;
    ChanceMode chance = ChanceMode::uniform;
    bool in_distribution = false;  // ablation: also train on every dataset
    std::size_t threads = 1;       // folds run concurrently when > 1

    /// Canonical JSON; its SHA-256 is the config hash in run manifests.
    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
    void validate() const;
};

/// Loads or generates the world named by the config.
World load_experiment_world(const ExperimentConfig& config);

/// Seed used for the split and training of one fold.
std::uint64_t fold_seed(std::uint64_t base, const std::string& heldout, const SerializationFlags& flags);

struct FoldResult {
    std::string heldout;
    bool ok = false;
    std::string error;
    double router_accuracy = 0.0;  // replayed on the held-out dataset
    double validation_label_accuracy = -1.0;
    double test_label_accuracy = 0.0;
    std::size_t n_train = 0, n_validate = 0, n_test = 0;
    std::size_t best_iteration = 0;
    std::map<std::string, std::size_t> routed;           // model -> count on the held-out set
    std::map<std::string, std::size_t> training_labels;  // model -> count in the fold's train split
};

struct LodoResult {
    ComparisonReport report;
    std::vector<FoldResult> folds;
};

/// One router per held-out dataset, trained on the others with `flags`.
/// With `out_dir`, writes fold-<dataset>/{router.bin,train.txt,validate.txt,
/// test.txt,metrics.json} and report.csv/report.json. Fold failures are
/// recorded and the remaining folds still run.
LodoResult run_lodo(const World& world, const ExperimentConfig& config, const SerializationFlags& flags,
                    const std::optional<std::filesystem::path>& out_dir = std::nullopt);

/// Recomputes the report from the persisted fold routers.
ComparisonReport rebuild_lodo_report(const World& world, const std::filesystem::path& run_dir, ChanceMode chance);

struct AblationColumn {
    SerializationFlags flags;
    bool in_distribution = false;
    std::map<std::string, double> per_dataset;  // fraction
    std::map<std::string, std::string> failures;
    double average = 0.0;
    double weighted_average = 0.0;
    std::string name() const;
};

struct AblationResult {
    std::vector<AblationColumn> columns;
    std::map<std::string, std::size_t> sizes;
    std::string to_csv() const;
    nlohmann::json to_json() const;
};

/// LODO for every flag combination in the config (all four when the grid has
/// a single entry), plus the in-distribution protocol when requested.
AblationResult run_ablation(const World& world, const ExperimentConfig& config,
                            const std::optional<std::filesystem::path>& out_dir = std::nullopt);

/// Fractions model × dataset; every dataset column sums to 1.
struct SelectionDistribution {
    std::vector<std::string> models;
    std::vector<std::string> datasets;
    std::vector<std::vector<double>> fraction;  // [model][dataset]

    std::string to_csv() const;
    /// Grayscale-to-blue heatmap, `cell` pixels per entry.
    Image to_image(int cell = 16) const;
};

SelectionDistribution selection_distribution(const std::vector<std::string>& models,
                                             const std::map<std::string, std::map<std::string, std::size_t>>& counts);
/// Where `router` sends each (sample, variant) of the grid.
SelectionDistribution selection_heatmap(const RouterModel& router, const OutcomeGrid& grid, const World& world);
/// Label frequencies of a corpus, per provenance dataset.
SelectionDistribution training_label_distribution(std::span<const RouterExample> examples,
                                                  const std::vector<std::string>& models);

/// seeds, config hash and input digests; no timestamps so reruns are identical.
nlohmann::json run_manifest(const ExperimentConfig& config, const std::string& command);

}  // namespace vroute
