#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vroute/core.hpp"
#include "vroute/world.hpp"

namespace vroute {

/// Every model's recorded outcome for each (sample, variant) pair, indexed by
/// position in the model pool. Built from prompt-valid records only.
class OutcomeGrid {
public:
    struct Pair {
        const Sample* sample = nullptr;
        std::string variant_id;
        std::vector<int> predicted;  // by model index
        std::vector<char> correct;   // by model index
        bool any_correct() const;
    };

    struct Block {
        std::string dataset_id;
        std::vector<std::string> variant_ids;  // prompt_variants order, present ones only
        std::vector<Pair> pairs;               // sample order, then variant order
    };

    /// Throws CoverageError when a pair lacks some pool model.
    static OutcomeGrid build(std::span<const ExecutionRecord> records, const World& world);

    const std::vector<std::string>& models() const noexcept { return models_; }
    const std::vector<Block>& blocks() const noexcept { return blocks_; }
    const Block& block(const std::string& dataset_id) const;
    std::size_t model_index(const std::string& model_id) const;

    /// Average over variants of the fraction of pairs where `correct_fn` holds.
    using PairScore = std::function<bool(const Block&, const Pair&)>;
    std::map<std::string, double> per_dataset(const PairScore& correct_fn) const;
    double dataset_accuracy(const Block& block, const PairScore& correct_fn) const;

private:
    std::vector<std::string> models_;
    std::vector<Block> blocks_;
};

}  // namespace vroute
