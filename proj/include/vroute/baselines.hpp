#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "vroute/core.hpp"
#include "vroute/outcomes.hpp"
#include "vroute/world.hpp"

namespace vroute {

/// Accuracies here are fractions in [0, 1]; the report converts to percent.

/// Expected accuracy of a uniform random guess: mean of 1/|options|.
double chance_uniform(std::span<const Sample> samples);
/// Frequency of the most common gold option string.
double chance_majority(std::span<const Sample> samples);

/// Mean over `models` of the model×dataset marginal.
double average_baseline(const AccuracyTable& table, const std::string& dataset_id,
                        const std::vector<std::string>& models);
/// Most frequent index, ties to the lowest.
int voting_predict(std::span<const int> predictions);
double voting_accuracy(const OutcomeGrid& grid, const std::string& dataset_id);
/// Best single model for the dataset, judged by its marginal.
double oracle_accuracy(const AccuracyTable& table, const std::string& dataset_id,
                       const std::vector<std::string>& models);
/// Fraction of pairs with at least one correct model, averaged over variants.
double upper_bound_accuracy(const OutcomeGrid& grid, const std::string& dataset_id);

enum class ChanceMode { uniform, majority };
std::string to_string(ChanceMode m);
ChanceMode chance_mode_from_string(const std::string& text);

struct ComparisonReport {
    static const std::vector<std::string>& strategies();  // column order
    static const std::vector<std::string>& cost_row();

    struct Row {
        std::string dataset_id;
        std::size_t size = 0;
        std::map<std::string, double> percent;  // strategy -> accuracy in percent
        std::string router_error;               // non-empty: the router fold failed
    };

    ChanceMode chance_mode = ChanceMode::uniform;
    std::vector<Row> rows;
    std::map<std::string, double> average;
    std::map<std::string, double> weighted_average;

    /// Datasets as rows, strategies as columns, then Average,
    /// Average (Weighted) and the cost row. Cells have one decimal.
    std::string to_csv() const;
    nlohmann::json to_json() const;
    static ComparisonReport from_json(const nlohmann::json& j);
};

/// `router_percent` holds replayed router accuracy per dataset (fraction);
/// datasets listed in `router_failures` are marked instead. Summary rows
/// skip a strategy that has a missing cell.
ComparisonReport build_comparison_report(const World& world, const OutcomeGrid& grid, const AccuracyTable& table,
                                         const std::map<std::string, double>& router_accuracy,
                                         const std::map<std::string, std::string>& router_failures = {},
                                         ChanceMode chance_mode = ChanceMode::uniform);

}  // namespace vroute
