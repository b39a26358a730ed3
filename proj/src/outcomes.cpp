#include "vroute/outcomes.hpp"

#include <algorithm>
#include <tuple>

#include "vroute/errors.hpp"
#include "vroute/prompt.hpp"
#include "vroute/router_data.hpp"

namespace vroute {

bool OutcomeGrid::Pair::any_correct() const {
    return std::any_of(correct.begin(), correct.end(), [](char c) { return c != 0; });
}

OutcomeGrid OutcomeGrid::build(std::span<const ExecutionRecord> records, const World& world) {
    OutcomeGrid grid;
    grid.models_ = world.model_pool;
    std::map<std::string, std::size_t> model_at;
    for (std::size_t i = 0; i < grid.models_.size(); ++i) model_at[grid.models_[i]] = i;

    const auto valid = filter_valid_prompts(records, world);
    using Key = std::tuple<std::string, std::string, std::string>;
    std::map<Key, std::vector<const ExecutionRecord*>> by_pair;
    for (const auto& r : valid) {
        auto m = model_at.find(r.model_id);
        if (m == model_at.end()) throw InvalidInput("record references unregistered model " + r.model_id);
        auto& slot = by_pair[{r.dataset_id, r.sample_id, r.prompt_variant_id}];
        if (slot.empty()) slot.resize(grid.models_.size(), nullptr);
        if (slot[m->second] != nullptr)
            throw IntegrityError("duplicate record for " + r.model_id + " on " + r.dataset_id + "/" + r.sample_id);
        slot[m->second] = &r;
    }

    std::vector<std::string> gaps;
    for (const auto& d : world.datasets) {
        const auto& config = world.config_for(d);
        const auto variants = prompt_variants(config);
        Block block;
        block.dataset_id = d.dataset_id;
        std::vector<char> variant_seen(variants.size(), 0);
        for (const auto& s : d.samples) {
            for (std::size_t vi = 0; vi < variants.size(); ++vi) {
                auto it = by_pair.find({d.dataset_id, s.sample_id, variants[vi].id});
                if (it == by_pair.end()) continue;
                Pair p;
                p.sample = &s;
                p.variant_id = variants[vi].id;
                p.predicted.resize(grid.models_.size());
                p.correct.resize(grid.models_.size());
                for (std::size_t m = 0; m < grid.models_.size(); ++m) {
                    const ExecutionRecord* r = it->second[m];
                    if (r == nullptr) {
                        gaps.push_back(d.dataset_id + "/" + s.sample_id + "/" + variants[vi].id + ":" + grid.models_[m]);
                        continue;
                    }
                    if (r->correct != (r->predicted_index == s.gold_index))
                        throw IntegrityError("record for " + s.sample_id + " has an inconsistent correctness flag");
                    p.predicted[m] = r->predicted_index;
                    p.correct[m] = r->correct ? 1 : 0;
                }
                variant_seen[vi] = 1;
                block.pairs.push_back(std::move(p));
                by_pair.erase(it);
            }
        }
        for (std::size_t vi = 0; vi < variants.size(); ++vi)
            if (variant_seen[vi]) block.variant_ids.push_back(variants[vi].id);
        if (!block.pairs.empty()) grid.blocks_.push_back(std::move(block));
    }
    if (!gaps.empty())
        throw CoverageError(gaps, "missing outcomes for " + std::to_string(gaps.size()) +
                                      " (sample, variant, model) triples, first: " + gaps.front());
    if (!by_pair.empty()) {
        const auto& [ds, sample, variant] = by_pair.begin()->first;
        throw IntegrityError("records reference unknown sample or variant " + ds + "/" + sample + "/" + variant);
    }
    return grid;
}

const OutcomeGrid::Block& OutcomeGrid::block(const std::string& dataset_id) const {
    for (const auto& b : blocks_)
        if (b.dataset_id == dataset_id) return b;
    throw CoverageError({dataset_id}, "no prompt-valid records for dataset " + dataset_id);
}

std::size_t OutcomeGrid::model_index(const std::string& model_id) const {
    auto it = std::find(models_.begin(), models_.end(), model_id);
    if (it == models_.end()) throw CoverageError({model_id}, "no outcomes for model " + model_id);
    return static_cast<std::size_t>(it - models_.begin());
}

double OutcomeGrid::dataset_accuracy(const Block& block, const PairScore& correct_fn) const {
    std::map<std::string, std::pair<std::size_t, std::size_t>> per_variant;  // correct, total
    for (const auto& p : block.pairs) {
        auto& [c, n] = per_variant[p.variant_id];
        c += correct_fn(block, p) ? 1 : 0;
        n += 1;
    }
    double sum = 0.0;
    for (const auto& [v, cn] : per_variant)
        sum += static_cast<double>(cn.first) / static_cast<double>(cn.second);
    return per_variant.empty() ? 0.0 : sum / static_cast<double>(per_variant.size());
}

std::map<std::string, double> OutcomeGrid::per_dataset(const PairScore& correct_fn) const {
    std::map<std::string, double> out;
    for (const auto& b : blocks_) out[b.dataset_id] = dataset_accuracy(b, correct_fn);
    return out;
}

}  // namespace vroute
