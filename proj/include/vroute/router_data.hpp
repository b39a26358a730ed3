#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vroute/core.hpp"
#include "vroute/random.hpp"
#include "vroute/world.hpp"

namespace vroute {

/// MD and RO switches for the serialized router input.
struct SerializationFlags {
    bool include_metadata = true;
    bool include_response_options = true;

    /// "md=on,ro=off" style.
    std::string to_string() const;
    static SerializationFlags parse(std::string_view text);
    /// Short tag for directory names, e.g. "md1_ro0".
    std::string tag() const;
    auto operator<=>(const SerializationFlags&) const = default;
};

/// All four MD/RO combinations, MD-major.
std::vector<SerializationFlags> all_flag_combinations();

/// Decoded fields of one serialized line. `metadata` and `options` are present
/// exactly when the corresponding flag was on.
struct ExampleFields {
    std::optional<MetadataSummary> metadata;
    std::string prompt;
    std::optional<std::vector<std::string>> options;
    std::string model_id;
    bool correct = false;
    double avg_accuracy = 0.0;

    bool operator==(const ExampleFields&) const = default;
};

/// The router input: everything before "[SEP]".
std::string serialize_input(const MetadataSummary* metadata, std::string_view prompt,
                            const std::vector<std::string>* options);

std::string serialize_example(const ExampleFields& fields);

/// Full line for one (sample, model) outcome. Throws InvalidInput when the
/// model is not in `model_pool` or avg_accuracy is outside [0, 1].
std::string serialize_example(const MetadataSummary& metadata, const std::string& prompt_text,
                              const std::vector<std::string>& options, const std::string& model_id, bool correct,
                              double avg_accuracy, const SerializationFlags& flags,
                              std::span<const std::string> model_pool);

/// Parses a line whose MD/RO flags are known.
ExampleFields parse_example(std::string_view line, const SerializationFlags& flags);
/// Parses a line, detecting the segments. A prompt that itself ends in a
/// well-formed ";;;[...]" list is read as options; pass flags to disambiguate.
ExampleFields parse_example(std::string_view line);

/// Quoted option list as printed in lines: ['a', 'b'] with \' and \\ escapes.
std::string format_option_list(const std::vector<std::string>& options);

struct RouterExample {
    std::string serialized_input;
    std::string label_model_id;
    std::string sample_id;
    std::string dataset_id;
    std::string prompt_variant_id;
    std::string raw_line;

    bool operator==(const RouterExample&) const = default;
};

/// Drops records whose prompt variant has an empty question form.
std::vector<ExecutionRecord> filter_valid_prompts(std::span<const ExecutionRecord> records, const World& world);

/// Candidates are the correct models, or every model when none is correct;
/// returns the candidate with the highest average, ties to the smallest id.
std::string select_best_model(const std::map<std::string, bool>& per_model_correct,
                              const std::map<std::string, double>& per_model_avg);

struct RouterDataStats {
    std::size_t records_in = 0;
    std::size_t records_valid = 0;
    std::size_t examples = 0;
};

/// One example per (sample, valid variant) found in `records`, labeled with
/// the (model, dataset, variant) accuracy from `accuracy`. Every pool model
/// must have an outcome for every pair (CoverageError otherwise).
std::vector<RouterExample> build_router_dataset(std::span<const ExecutionRecord> records,
                                                const AccuracyTable& accuracy, const World& world,
                                                const SerializationFlags& flags, RouterDataStats* stats = nullptr);

/// Convenience overload: filters and aggregates the accuracy table itself.
std::vector<RouterExample> build_router_dataset(const World& world, const SerializationFlags& flags,
                                                RouterDataStats* stats = nullptr);

template <class T>
struct Split {
    std::vector<T> train;
    std::vector<T> validate;
    std::vector<T> test;
};

/// Sizes floor(0.8n), floor(0.1n) and the remainder after a seeded shuffle.
template <class T>
Split<T> split_80_10_10(std::vector<T> items, std::uint64_t seed);

void write_router_corpus(const std::filesystem::path& path, std::span<const RouterExample> examples);
/// Reads `path` and its `<path>.index.jsonl` sidecar.
std::vector<RouterExample> read_router_corpus(const std::filesystem::path& path);

void throw_split_too_small(std::size_t n);

template <class T>
Split<T> split_80_10_10(std::vector<T> items, std::uint64_t seed) {
    const std::size_t n = items.size();
    if (n < 10) throw_split_too_small(n);
    Rng rng(seed);
    rng.shuffle(std::span<T>(items));
    const std::size_t n_train = n * 8 / 10;
    const std::size_t n_val = n / 10;
    Split<T> out;
    auto first = std::make_move_iterator(items.begin());
    out.train.assign(first, first + static_cast<std::ptrdiff_t>(n_train));
    out.validate.assign(first + static_cast<std::ptrdiff_t>(n_train),
                        first + static_cast<std::ptrdiff_t>(n_train + n_val));
    out.test.assign(first + static_cast<std::ptrdiff_t>(n_train + n_val), std::make_move_iterator(items.end()));
    return out;
}

}  // namespace vroute
