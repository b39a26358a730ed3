#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "vroute/core.hpp"
#include "vroute/prompt.hpp"

namespace vroute {

/// Row-major real matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    double* row(std::size_t r) noexcept { return data.data() + r * cols; }
    const double* row(std::size_t r) const noexcept { return data.data() + r * cols; }
    bool operator==(const Matrix&) const = default;
};

struct Prediction {
    int predicted_index = 0;
    std::vector<double> per_option_scores;
};

/// Scores are v·row(o); the lowest index attaining the maximum wins.
Prediction predict_contrastive(std::span<const double> image_embedding, const Matrix& option_embeddings);

enum class Normalization { sum, mean };

std::string to_string(Normalization n);
Normalization normalization_from_string(const std::string& text);

/// Per-option score is the sum (or mean) of its token log-probabilities.
Prediction predict_generative(const std::vector<std::vector<double>>& token_logprobs,
                              Normalization normalization = Normalization::sum);

/// Index of the first maximum.
int argmax_lowest(std::span<const double> scores);

enum class ModelFamily { contrastive, generative };

std::string to_string(ModelFamily f);
ModelFamily model_family_from_string(const std::string& text);

struct BackendCapabilities {
    std::string name;
    ModelFamily family = ModelFamily::contrastive;
    std::size_t dim = 0;              // embedding width; 0 for generative backends
    bool concurrent_calls = false;    // false: evaluate serializes calls
    std::string token_span = "full";  // which tokens a generative backend scores: "full" or "option"
};

/// A model reachable in-process or over the wire. Contrastive backends
/// implement the embed_* pair, generative ones implement logprobs; the other
/// operations throw BackendError.
class Backend {
public:
    virtual ~Backend() = default;
    virtual BackendCapabilities capabilities() const = 0;
    virtual std::vector<double> embed_image(const std::string& image_ref);
    virtual Matrix embed_texts(const std::vector<std::string>& prompts);
    virtual std::vector<std::vector<double>> logprobs(const std::string& image_ref,
                                                      const std::vector<std::string>& prompts);
};

struct EvalOptions {
    std::string model_id;
    ModelFamily family = ModelFamily::contrastive;
    Normalization normalization = Normalization::sum;
    std::size_t threads = 1;
};

struct EvalFailure {
    std::string sample_id;
    std::string prompt_variant_id;
    std::string message;
};

struct EvalResult {
    std::vector<ExecutionRecord> records;  // sample order, then variant order
    std::vector<EvalFailure> failures;
    std::size_t skipped() const noexcept { return failures.size(); }
};

/// One record per (sample, variant). Backend failures skip the pair and are
/// logged with the sample id.
EvalResult evaluate(Backend& backend, const DatasetManifest& manifest, const DatasetPromptConfig& config,
                    const std::vector<PromptVariant>& variants, const EvalOptions& options);

}  // namespace vroute
