#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vroute/outcomes.hpp"
#include "vroute/router_data.hpp"

namespace vroute {

struct FeaturizeConfig {
    std::uint32_t min_order = 2;
    std::uint32_t max_order = 4;
    std::uint32_t hash_bits = 18;
    bool lowercase = false;

    std::size_t dim() const noexcept { return std::size_t{1} << hash_bits; }
    void validate() const;
    bool operator==(const FeaturizeConfig&) const = default;
};

/// Sorted, duplicate-free indices with their summed signed counts. Buckets
/// whose signed contributions cancel are dropped.
struct SparseVector {
    std::vector<std::uint32_t> index;
    std::vector<double> value;
    std::size_t nnz() const noexcept { return index.size(); }
    bool operator==(const SparseVector&) const = default;
};

/// Byte n-grams of one order, in position order (no padding).
std::vector<std::string> char_ngrams(std::string_view text, std::size_t order);

SparseVector featurize(std::string_view text, const FeaturizeConfig& config);

struct TrainConfig {
    double learning_rate = 2e-4;
    std::size_t batch_size = 1;
    std::size_t max_iterations = 5000;
    std::size_t eval_every = 1000;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

/// A classifier over hashed features. Implementations must be deterministic.
class Learner {
public:
    virtual ~Learner() = default;
    virtual std::string kind() const = 0;
    virtual std::size_t num_classes() const = 0;
    virtual void logits(const SparseVector& x, std::span<double> out) const = 0;
    /// One optimizer step on a mini-batch; returns the batch's mean loss.
    virtual double step(std::span<const SparseVector* const> xs, std::span<const int> ys, const TrainConfig& config) = 0;
    /// Copies the parameters; optimizer state is not carried over.
    virtual std::unique_ptr<Learner> clone() const = 0;
    virtual void write(std::string& out) const = 0;
};

/// Multinomial logistic regression over 2^bits hashed n-gram buckets, trained
/// with Adam whose moments are updated only for touched buckets.
class LinearHashedNgram final : public Learner {
public:
    LinearHashedNgram(std::size_t dim, std::size_t num_classes);

    std::string kind() const override { return "linear_hashed_ngram"; }
    std::size_t num_classes() const override { return k_; }
    std::size_t dim() const noexcept { return dim_; }
    void logits(const SparseVector& x, std::span<double> out) const override;
    double step(std::span<const SparseVector* const> xs, std::span<const int> ys, const TrainConfig& config) override;
    std::unique_ptr<Learner> clone() const override;
    void write(std::string& out) const override;
    static std::unique_ptr<LinearHashedNgram> read(std::string_view& in);

    /// Mean cross-entropy of a batch.
    double loss(std::span<const SparseVector* const> xs, std::span<const int> ys) const;

    /// Gradient of `loss`: touched rows (bucket -> K values) plus the bias.
    struct Gradient {
        std::map<std::uint32_t, std::vector<double>> rows;
        std::vector<double> bias;
    };
    Gradient gradient(std::span<const SparseVector* const> xs, std::span<const int> ys) const;

    double& weight(std::uint32_t bucket, std::size_t cls) { return w_[bucket * k_ + cls]; }
    double& bias(std::size_t cls) { return b_[cls]; }

    bool operator==(const LinearHashedNgram& other) const { return dim_ == other.dim_ && k_ == other.k_ && w_ == other.w_ && b_ == other.b_; }

private:
    double accumulate(std::span<const SparseVector* const> xs, std::span<const int> ys, Gradient* grad) const;

    std::size_t dim_;
    std::size_t k_;
    std::vector<double> w_;  // dim × k, one row per bucket
    std::vector<double> b_;
    std::vector<double> m_, v_, bm_, bv_;  // Adam moments, allocated on the first step
    std::uint64_t steps_ = 0;
};

struct RouterModel {
    std::vector<std::string> model_vocabulary;
    FeaturizeConfig featurize;
    SerializationFlags flags;
    TrainConfig train;
    std::unique_ptr<Learner> learner;
    std::size_t best_iteration = 0;
    double best_validation_accuracy = -1.0;  // -1: no validation set

    RouterModel() = default;
    RouterModel(const RouterModel& other);
    RouterModel& operator=(const RouterModel& other);
    RouterModel(RouterModel&&) noexcept = default;
    RouterModel& operator=(RouterModel&&) noexcept = default;

    std::size_t predict_index(std::string_view serialized_input) const;
    const std::string& predict(std::string_view serialized_input) const {
        return model_vocabulary[predict_index(serialized_input)];
    }
};

/// Trains the default learner. The vocabulary is `pool` when given, otherwise
/// the sorted set of training labels.
RouterModel train_router(std::span<const RouterExample> train, std::span<const RouterExample> validate,
                         const TrainConfig& config, const SerializationFlags& flags,
                         std::span<const std::string> pool = {}, const FeaturizeConfig& featurize = {});

/// Fraction of examples whose label the router predicts.
double label_accuracy(const RouterModel& router, std::span<const RouterExample> examples);

/// Serializes the query with the router's train-time flags and predicts.
std::string route(const RouterModel& router, const Sample& sample, const MetadataSummary& metadata,
                  const std::string& prompt_text, const std::vector<std::string>& options);

/// Strips everything from "[SEP]" on, so full corpus lines route like inputs.
std::string_view strip_to_input(std::string_view line);

struct RouterEvaluation {
    std::map<std::string, double> per_dataset;                          // replayed end-task accuracy
    std::map<std::string, std::map<std::string, std::size_t>> routed;  // dataset -> model -> count
};

/// Routes every (sample, variant) in `grid` and replays the chosen model's
/// recorded outcome.
RouterEvaluation evaluate_router(const RouterModel& router, const OutcomeGrid& grid, const World& world);

void save_router(const RouterModel& router, const std::filesystem::path& path);
RouterModel load_router(const std::filesystem::path& path);
std::string encode_router(const RouterModel& router);
RouterModel decode_router(std::string_view bytes);

}  // namespace vroute
