#include "vroute/scoring.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <mutex>
#include <thread>

#include "vroute/errors.hpp"
#include "vroute/kernels.hpp"

namespace vroute {

int argmax_lowest(std::span<const double> scores) {
    if (scores.empty()) throw InvalidInput("argmax of an empty score list");
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = i;
    return static_cast<int>(best);
}

Prediction predict_contrastive(std::span<const double> image_embedding, const Matrix& option_embeddings) {
    if (option_embeddings.rows == 0) throw InvalidInput("predict_contrastive: no options");
    if (option_embeddings.cols != image_embedding.size() ||
        option_embeddings.data.size() != option_embeddings.rows * option_embeddings.cols)
        throw InvalidInput("predict_contrastive: image embedding has dimension " +
                           std::to_string(image_embedding.size()) + " but options have " +
                           std::to_string(option_embeddings.cols));
    Prediction p;
    p.per_option_scores.resize(option_embeddings.rows);
    kernels::active().gemv(option_embeddings.data.data(), option_embeddings.rows, option_embeddings.cols,
                           image_embedding.data(), p.per_option_scores.data());
    p.predicted_index = argmax_lowest(p.per_option_scores);
    return p;
}

std::string to_string(Normalization n) { return n == Normalization::sum ? "sum" : "mean"; }

Normalization normalization_from_string(const std::string& text) {
    if (text == "sum") return Normalization::sum;
    if (text == "mean") return Normalization::mean;
    throw InvalidInput("unknown normalization '" + text + "' (expected sum or mean)");
}

Prediction predict_generative(const std::vector<std::vector<double>>& token_logprobs, Normalization normalization) {
    if (token_logprobs.empty()) throw InvalidInput("predict_generative: no options");
    Prediction p;
    p.per_option_scores.reserve(token_logprobs.size());
    for (std::size_t o = 0; o < token_logprobs.size(); ++o) {
        const auto& tokens = token_logprobs[o];
        if (tokens.empty()) throw InvalidInput("predict_generative: option " + std::to_string(o) + " has no tokens");
        double s = kernels::active().sum(tokens.data(), tokens.size());
        if (normalization == Normalization::mean) s /= static_cast<double>(tokens.size());
        p.per_option_scores.push_back(s);
    }
    p.predicted_index = argmax_lowest(p.per_option_scores);
    return p;
}

std::string to_string(ModelFamily f) { return f == ModelFamily::contrastive ? "contrastive" : "generative"; }

ModelFamily model_family_from_string(const std::string& text) {
    if (text == "contrastive") return ModelFamily::contrastive;
    if (text == "generative") return ModelFamily::generative;
    throw InvalidInput("unknown model family '" + text + "'");
}

std::vector<double> Backend::embed_image(const std::string&) {
    throw BackendError(capabilities().name + " does not embed images");
}

Matrix Backend::embed_texts(const std::vector<std::string>&) {
    throw BackendError(capabilities().name + " does not embed texts");
}

std::vector<std::vector<double>> Backend::logprobs(const std::string&, const std::vector<std::string>&) {
    throw BackendError(capabilities().name + " does not score log-probabilities");
}

namespace {

Prediction score_one(Backend& backend, const ModelFamily family, const Normalization normalization,
                     const Sample& sample, const std::vector<std::string>& prompts) {
    if (family == ModelFamily::contrastive) {
        const auto v = backend.embed_image(sample.image_ref);
        const auto rows = backend.embed_texts(prompts);
        if (rows.rows != prompts.size()) throw BackendError("embed_texts returned wrong row count");
        return predict_contrastive(v, rows);
    }
    const auto lp = backend.logprobs(sample.image_ref, prompts);
    if (lp.size() != prompts.size()) throw BackendError("logprobs returned wrong list count");
    for (const auto& tokens : lp)
        for (double x : tokens)
            if (!(x <= 0.0)) throw BackendError("logprobs returned a positive or NaN value");
    return predict_generative(lp, normalization);
}

}  // namespace

EvalResult evaluate(Backend& backend, const DatasetManifest& manifest, const DatasetPromptConfig& config,
                    const std::vector<PromptVariant>& variants, const EvalOptions& options) {
    const auto caps = backend.capabilities();
    if (caps.family != options.family)
        throw InvalidInput("backend " + caps.name + " is " + to_string(caps.family) + " but " +
                           to_string(options.family) + " scoring was requested");
    if (options.model_id.empty()) throw InvalidInput("evaluate: model_id is required");

    const std::size_t n = manifest.samples.size();
    const std::size_t per = variants.size();
    std::vector<std::optional<ExecutionRecord>> slots(n * per);
    std::vector<std::optional<EvalFailure>> fails(n * per);
    std::mutex backend_mutex;
    const bool serialize = !caps.concurrent_calls;

    auto work = [&](std::size_t s) {
        const Sample& sample = manifest.samples[s];
        for (std::size_t v = 0; v < per; ++v) {
            const PromptVariant& variant = variants[v];
            try {
                const auto prompts = closed_prompt_set(sample, config, variant);
                Prediction p;
                if (serialize) {
                    std::lock_guard lock(backend_mutex);
                    p = score_one(backend, options.family, options.normalization, sample, prompts);
                } else {
                    p = score_one(backend, options.family, options.normalization, sample, prompts);
                }
                slots[s * per + v] = ExecutionRecord{sample.sample_id, sample.dataset_id, options.model_id, variant.id,
                                                     p.predicted_index, p.predicted_index == sample.gold_index};
            } catch (const std::exception& e) {
                fails[s * per + v] = EvalFailure{sample.sample_id, variant.id, e.what()};
            }
        }
    };

    const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, n));
    if (threads == 1) {
        for (std::size_t s = 0; s < n; ++s) work(s);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (std::size_t s = next++; s < n; s = next++) work(s);
            });
    }

    EvalResult out;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (slots[i]) out.records.push_back(std::move(*slots[i]));
        if (fails[i]) {
            spdlog::warn("skipped sample {} variant {} on {}: {}", fails[i]->sample_id, fails[i]->prompt_variant_id,
                         options.model_id, fails[i]->message);
            out.failures.push_back(std::move(*fails[i]));
        }
    }
    if (!out.failures.empty())
        spdlog::info("evaluate {} on {}: {} records, {} skipped", options.model_id, manifest.dataset_id,
                     out.records.size(), out.failures.size());
    return out;
}

}  // namespace vroute
