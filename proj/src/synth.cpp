#include "vroute/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "vroute/errors.hpp"
#include "vroute/io.hpp"
#include "vroute/random.hpp"

namespace vroute {

std::string to_string(SignalMode m) {
    switch (m) {
        case SignalMode::prompt_keyword: return "prompt_keyword";
        case SignalMode::metadata_band: return "metadata_band";
        case SignalMode::none: return "none";
    }
    return "?";
}

SignalMode signal_mode_from_string(const std::string& text) {
    if (text == "prompt_keyword") return SignalMode::prompt_keyword;
    if (text == "metadata_band") return SignalMode::metadata_band;
    if (text == "none") return SignalMode::none;
    throw ValidationError("unknown signal mode '" + text + "'");
}

void WorldSpec::validate() const {
    if (models.empty()) throw ValidationError("model pool is empty");
    std::set<std::string> seen;
    for (const auto& m : models) {
        if (!valid_model_id(m)) throw ValidationError("invalid model id '" + m + "'");
        if (!seen.insert(m).second) throw ValidationError("duplicate model id '" + m + "'");
    }
    if (n_datasets == 0 || samples_per_dataset == 0) throw ValidationError("need at least one dataset and sample");
    if (min_options < 2 || max_options < min_options) throw ValidationError("options range must satisfy 2 <= min <= max");
    if (max_options > 1000) throw ValidationError("at most 1000 options per sample");
    if (!(competence_low >= 0.0 && competence_high <= 1.0 && competence_low <= competence_high))
        throw ValidationError("competence range must lie in [0, 1]");
    if (!competence.empty()) {
        if (competence.size() != models.size()) throw ValidationError("competence needs one row per model");
        for (const auto& row : competence) {
            if (row.size() != n_datasets) throw ValidationError("competence rows need one entry per dataset");
            for (double p : row)
                if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("competence probabilities must lie in [0, 1]");
        }
    }
    if (!best_models.empty()) {
        if (best_models.size() != n_datasets) throw ValidationError("best_models needs one entry per dataset");
        for (const auto& b : best_models)
            if (!seen.contains(b)) throw ValidationError("best model '" + b + "' is not in the pool");
    }
    if (!(band_noise >= 0.0 && band_noise < 25.0)) throw ValidationError("band_noise must lie in [0, 25)");
    if (signal_mode == SignalMode::metadata_band && models.size() > 4)
        throw ValidationError("metadata_band supports at most 4 models (bands 40..190)");
    if (min_side < 1 || max_side < min_side) throw ValidationError("image side range is invalid");
    if (channels != 1 && channels != 3) throw ValidationError("channels must be 1 or 3");
}

void to_json(nlohmann::json& j, const WorldSpec& s) {
    j = nlohmann::json{{"seed", s.seed},
                       {"n_datasets", s.n_datasets},
                       {"samples_per_dataset", s.samples_per_dataset},
                       {"options_per_sample", {s.min_options, s.max_options}},
                       {"models", s.models},
                       {"competence", s.competence},
                       {"competence_range", {s.competence_low, s.competence_high}},
                       {"best_models", s.best_models},
                       {"signal_mode", to_string(s.signal_mode)},
                       {"band_noise", s.band_noise},
                       {"image_side", {s.min_side, s.max_side}},
                       {"channels", s.channels},
                       {"include_empty_question", s.include_empty_question}};
}

void from_json(const nlohmann::json& j, WorldSpec& s) {
    static const std::set<std::string> known{"seed",        "n_datasets",    "samples_per_dataset", "options_per_sample",
                                             "models",      "competence",    "competence_range",    "best_models",
                                             "signal_mode", "band_noise",    "image_side",          "channels",
                                             "include_empty_question"};
    for (const auto& [key, value] : j.items())
        if (!known.contains(key)) throw ValidationError("unknown world spec field '" + key + "'");
    s = WorldSpec{};
    s.seed = j.value("seed", s.seed);
    s.n_datasets = j.value("n_datasets", s.n_datasets);
    s.samples_per_dataset = j.value("samples_per_dataset", s.samples_per_dataset);
    if (j.contains("options_per_sample")) {
        const auto& r = j.at("options_per_sample");
        if (r.is_number()) s.min_options = s.max_options = r.get<std::size_t>();
        else {
            s.min_options = r.at(0).get<std::size_t>();
            s.max_options = r.at(1).get<std::size_t>();
        }
    }
    s.models = j.value("models", s.models);
    s.competence = j.value("competence", s.competence);
    if (j.contains("competence_range")) {
        s.competence_low = j.at("competence_range").at(0).get<double>();
        s.competence_high = j.at("competence_range").at(1).get<double>();
    }
    s.best_models = j.value("best_models", s.best_models);
    s.signal_mode = signal_mode_from_string(j.value("signal_mode", to_string(s.signal_mode)));
    s.band_noise = j.value("band_noise", s.band_noise);
    if (j.contains("image_side")) {
        s.min_side = j.at("image_side").at(0).get<int>();
        s.max_side = j.at("image_side").at(1).get<int>();
    }
    s.channels = j.value("channels", s.channels);
    s.include_empty_question = j.value("include_empty_question", s.include_empty_question);
}

namespace {

std::string pseudo_word(Rng& rng, std::size_t syllables) {
    static constexpr std::string_view consonants = "bdfgklmnprstvz";
    static constexpr std::string_view vowels = "aeiou";
    std::string w;
    for (std::size_t i = 0; i < syllables; ++i) {
        w.push_back(consonants[rng.below(consonants.size())]);
        w.push_back(vowels[rng.below(vowels.size())]);
    }
    w.push_back(consonants[rng.below(consonants.size())]);
    return w;
}

std::vector<std::string> unique_words(Rng& rng, std::size_t n, std::size_t syllables, std::set<std::string>& taken) {
    std::vector<std::string> out;
    while (out.size() < n) {
        auto w = pseudo_word(rng, syllables);
        if (taken.insert(w).second) out.push_back(std::move(w));
    }
    return out;
}

}  // namespace

SynthWorld generate_world(const WorldSpec& spec) {
    spec.validate();
    const std::size_t n_models = spec.models.size();
    const std::size_t n_data = spec.n_datasets;
    SynthWorld out;
    World& world = out.world;
    world.model_pool = spec.models;

    Rng rng(spec.seed);
    std::set<std::string> taken;
    const auto keywords = unique_words(rng, n_models, 3, taken);
    for (std::size_t m = 0; m < n_models; ++m) out.keywords[spec.models[m]] = keywords[m];
    const auto vocab = unique_words(rng, std::max<std::size_t>(100, 2 * spec.max_options), 2, taken);

    // Competence and designated best models.
    out.competence = spec.competence;
    std::vector<std::size_t> best(n_data, 0);
    if (!spec.best_models.empty()) {
        for (std::size_t d = 0; d < n_data; ++d)
            best[d] = static_cast<std::size_t>(
                std::find(spec.models.begin(), spec.models.end(), spec.best_models[d]) - spec.models.begin());
    }
    if (out.competence.empty()) {
        out.competence.assign(n_models, std::vector<double>(n_data));
        for (auto& row : out.competence)
            for (auto& p : row) p = rng.uniform(spec.competence_low, spec.competence_high);
        if (spec.best_models.empty()) {
            for (std::size_t d = 0; d < n_data; ++d) best[d] = rng.below(n_models);
        }
        if (spec.signal_mode != SignalMode::none || !spec.best_models.empty()) {
            for (std::size_t d = 0; d < n_data; ++d) {
                out.competence[best[d]][d] = spec.signal_mode == SignalMode::prompt_keyword
                                                 ? 1.0
                                                 : std::min(1.0, spec.competence_high + 0.15);
            }
        }
    } else if (spec.best_models.empty()) {
        for (std::size_t d = 0; d < n_data; ++d)
            for (std::size_t m = 1; m < n_models; ++m)
                if (out.competence[m][d] > out.competence[best[d]][d]) best[d] = m;
    }
    for (std::size_t d = 0; d < n_data; ++d) {
        for (std::size_t m = 0; m < n_models; ++m) {
            if (m == best[d]) continue;
            if (out.competence[m][d] >= out.competence[best[d]][d] &&
                (spec.signal_mode != SignalMode::none || !spec.best_models.empty()))
                throw ValidationError("designated best model " + spec.models[best[d]] + " of dataset " +
                                      std::to_string(d) + " is not the unique competence maximum");
        }
        if (spec.signal_mode == SignalMode::prompt_keyword && out.competence[best[d]][d] != 1.0)
            throw ValidationError("prompt_keyword worlds need competence 1.0 for the best model of dataset " +
                                  std::to_string(d) + " so labels follow the keyword");
        out.best_models.push_back(spec.models[best[d]]);
    }

    const std::size_t width = std::to_string(spec.samples_per_dataset - 1).size();
    for (std::size_t d = 0; d < n_data; ++d) {
        const std::string dataset_id = "d" + std::to_string(d);
        DatasetPromptConfig config;
        config.config_id = dataset_id;
        std::vector<std::string> questions;
        if (spec.include_empty_question) questions.push_back("");
        if (spec.signal_mode == SignalMode::prompt_keyword) {
            const std::string& kw = keywords[best[d]];
            questions.push_back("Which option is " + kw + "? ");
            questions.push_back("Choose the " + kw + " answer: ");
        } else {
            questions.push_back("Which option is right? ");
            questions.push_back("Choose the answer: ");
        }
        for (const auto& q : questions) config.question_forms.push_back(PromptTemplate::parse(q));
        world.prompt_configs.emplace(dataset_id, config);

        DatasetManifest manifest;
        manifest.dataset_id = dataset_id;
        manifest.prompt_config_ref = dataset_id;
        Rng drng(hash_combine(spec.seed, stable_hash(dataset_id)));
        for (std::size_t s = 0; s < spec.samples_per_dataset; ++s) {
            std::string num = std::to_string(s);
            num.insert(0, width - num.size(), '0');
            Sample sample;
            sample.sample_id = dataset_id + "-s" + num;
            sample.dataset_id = dataset_id;
            sample.image_ref = "images/" + dataset_id + "/s" + num + (spec.channels == 3 ? ".ppm" : ".pgm");
            const auto k = static_cast<std::size_t>(drng.between(static_cast<std::int64_t>(spec.min_options),
                                                                 static_cast<std::int64_t>(spec.max_options)));
            std::vector<std::size_t> picks(vocab.size());
            for (std::size_t i = 0; i < picks.size(); ++i) picks[i] = i;
            for (std::size_t i = 0; i < k; ++i) std::swap(picks[i], picks[i + drng.below(picks.size() - i)]);
            for (std::size_t i = 0; i < k; ++i) sample.response_options.push_back(vocab[picks[i]]);
            sample.gold_index = static_cast<int>(drng.below(k));

            Image img;
            img.height = static_cast<int>(drng.between(spec.min_side, spec.max_side));
            img.width = static_cast<int>(drng.between(spec.min_side, spec.max_side));
            img.channels = spec.channels;
            std::vector<double> centers(static_cast<std::size_t>(spec.channels));
            std::vector<double> spreads(centers.size());
            for (std::size_t c = 0; c < centers.size(); ++c) {
                centers[c] = spec.signal_mode == SignalMode::metadata_band
                                 ? 40.0 + 50.0 * static_cast<double>(best[d]) + drng.uniform(-spec.band_noise, spec.band_noise)
                                 : drng.uniform(20.0, 235.0);
                spreads[c] = drng.uniform(2.0, 12.0);
            }
            img.pixels.resize(img.pixel_count() * centers.size());
            for (std::size_t p = 0; p < img.pixels.size(); ++p) {
                const std::size_t c = p % centers.size();
                const double v = std::round(centers[c] + spreads[c] * drng.normal());
                img.pixels[p] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
            }
            world.metadata.emplace(sample.image_ref, summarize_image(img));
            out.images.emplace(sample.image_ref, std::move(img));
            manifest.samples.push_back(std::move(sample));
        }
        world.datasets.push_back(std::move(manifest));
    }

    for (std::size_t d = 0; d < n_data; ++d) {
        const auto& manifest = world.datasets[d];
        const auto variants = prompt_variants(world.prompt_configs.at(manifest.dataset_id));
        for (std::size_t m = 0; m < n_models; ++m) {
            Rng rrng(hash_combine(spec.seed, stable_hash(spec.models[m] + "/" + manifest.dataset_id)));
            const double p = out.competence[m][d];
            for (const auto& s : manifest.samples) {
                const auto k = s.response_options.size();
                for (const auto& v : variants) {
                    ExecutionRecord r{s.sample_id, manifest.dataset_id, spec.models[m], v.id, s.gold_index, true};
                    if (!rrng.bernoulli(p)) {
                        const auto wrong = static_cast<int>(rrng.below(k - 1));
                        r.predicted_index = wrong >= s.gold_index ? wrong + 1 : wrong;
                        r.correct = false;
                    }
                    world.records.push_back(std::move(r));
                }
            }
        }
    }
    return out;
}

void save_synth_world(const SynthWorld& synth, const std::filesystem::path& dir, bool write_images) {
    save_world(synth.world, dir);
    if (!write_images) return;
    for (const auto& [ref, img] : synth.images) write_pnm(dir / ref, img);
}

}  // namespace vroute
