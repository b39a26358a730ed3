#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

namespace vroute {

enum class TaskKind { recognition, reasoning };

std::string to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string& text);

/// One closed-ended visual query.
struct Sample {
    std::string sample_id;
    std::string dataset_id;
    std::string image_ref;
    std::map<std::string, std::string> context;
    std::vector<std::string> response_options;
    int gold_index = 0;

    const std::string& gold_option() const { return response_options.at(static_cast<std::size_t>(gold_index)); }
    bool operator==(const Sample&) const = default;
};

struct DatasetManifest {
    std::string dataset_id;
    TaskKind task_kind = TaskKind::recognition;
    std::vector<Sample> samples;
    std::string prompt_config_ref;

    std::size_t size() const noexcept { return samples.size(); }

    /// Throws IntegrityError on duplicate sample ids, foreign dataset ids or
    /// out-of-range gold indices.
    void validate() const;
    bool operator==(const DatasetManifest&) const = default;
};

/// Resolution plus per-channel pixel statistics, rounded to one decimal.
struct MetadataSummary {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<double> channel_means;
    std::vector<double> channel_stds;

    void validate() const;
    bool operator==(const MetadataSummary&) const = default;
};

struct ExecutionRecord {
    std::string sample_id;
    std::string dataset_id;
    std::string model_id;
    std::string prompt_variant_id;
    int predicted_index = 0;
    bool correct = false;

    bool operator==(const ExecutionRecord&) const = default;
};

/// Resolves (dataset_id, sample_id) to samples across a set of manifests.
class SampleIndex {
public:
    SampleIndex() = default;
    explicit SampleIndex(std::span<const DatasetManifest> datasets);

    const Sample* find(const std::string& dataset_id, const std::string& sample_id) const;
    const Sample& at(const std::string& dataset_id, const std::string& sample_id) const;

private:
    std::unordered_map<std::string, const Sample*> by_key_;
};

/// Correct/total counts; tables merge by adding counts.
struct AccuracyCell {
    std::uint64_t correct = 0;
    std::uint64_t total = 0;

    double accuracy() const noexcept { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
    AccuracyCell& operator+=(const AccuracyCell& other) noexcept {
        correct += other.correct;
        total += other.total;
        return *this;
    }
    bool operator==(const AccuracyCell&) const = default;
};

struct AccuracyKey {
    std::string model_id;
    std::string dataset_id;
    std::string prompt_variant_id;
    auto operator<=>(const AccuracyKey&) const = default;
};

class AccuracyTable {
public:
    void add(const ExecutionRecord& record);
    void merge(const AccuracyTable& other);

    const std::map<AccuracyKey, AccuracyCell>& cells() const noexcept { return cells_; }

    /// Accuracy of one (model, dataset, variant) cell; throws if absent.
    double accuracy(const std::string& model_id, const std::string& dataset_id, const std::string& variant_id) const;
    std::optional<double> find(const std::string& model_id, const std::string& dataset_id,
                               const std::string& variant_id) const;

    /// Unweighted mean over the prompt variants present for (model, dataset).
    double marginal(const std::string& model_id, const std::string& dataset_id) const;
    std::optional<double> find_marginal(const std::string& model_id, const std::string& dataset_id) const;

    std::vector<std::string> models() const;
    std::vector<std::string> datasets() const;

    /// CSV with header model_id,dataset_id,prompt_variant_id,accuracy.
    std::string to_csv() const;

    bool operator==(const AccuracyTable&) const = default;

private:
    std::map<AccuracyKey, AccuracyCell> cells_;
};

/// Builds the table, checking every record against its sample. Throws
/// InvalidInput on an empty record list and IntegrityError on unknown samples,
/// out-of-range predictions or an inconsistent correctness flag.
AccuracyTable aggregate_accuracy(std::span<const ExecutionRecord> records, const SampleIndex& samples);

/// Σ(value·size)/Σ(size). Key sets must match and sizes be positive.
double weighted_average(const std::map<std::string, double>& per_dataset_values,
                        const std::map<std::string, std::size_t>& sizes);

}  // namespace vroute
