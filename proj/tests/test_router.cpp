#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "vroute/baselines.hpp"
#include "vroute/errors.hpp"
#include "vroute/outcomes.hpp"
#include "vroute/random.hpp"
#include "vroute/router.hpp"
#include "vroute/synth.hpp"

using namespace vroute;

namespace {

SynthWorld keyword_world(std::uint64_t seed, std::size_t samples = 150) {
    WorldSpec spec;
    spec.seed = seed;
    spec.n_datasets = 4;
    spec.samples_per_dataset = samples;
    spec.signal_mode = SignalMode::prompt_keyword;
    spec.competence = {{1.0, 0.5, 0.4, 0.6}, {0.6, 1.0, 0.5, 0.4}, {0.4, 0.6, 1.0, 0.5}, {0.5, 0.4, 0.6, 1.0}};
    return generate_world(spec);
}

std::vector<RouterExample> relabel(std::vector<RouterExample> examples, const std::string& label) {
    for (auto& e : examples) e.label_model_id = label;
    return examples;
}

std::vector<SparseVector> random_batch(Rng& rng, const FeaturizeConfig& fc, std::size_t n) {
    std::vector<SparseVector> xs;
    for (std::size_t i = 0; i < n; ++i) {
        std::string s;
        const std::size_t len = 5 + rng.below(30);
        for (std::size_t k = 0; k < len; ++k) s += static_cast<char>('a' + rng.below(6));
        xs.push_back(featurize(s, fc));
    }
    return xs;
}

std::size_t bucket_difference(const SparseVector& a, const SparseVector& b) {
    std::map<std::uint32_t, double> diff;
    for (std::size_t i = 0; i < a.nnz(); ++i) diff[a.index[i]] += a.value[i];
    for (std::size_t i = 0; i < b.nnz(); ++i) diff[b.index[i]] -= b.value[i];
    return static_cast<std::size_t>(std::count_if(diff.begin(), diff.end(), [](const auto& kv) { return kv.second != 0; }));
}

}  // namespace

TEST_CASE("char_ngrams enumerates windows in order") {
    CHECK(char_ngrams("abc", 2) == std::vector<std::string>{"ab", "bc"});
    CHECK(char_ngrams("abc", 3) == std::vector<std::string>{"abc"});
    CHECK(char_ngrams("abc", 4).empty());
    CHECK(char_ngrams("aaaa", 2) == std::vector<std::string>{"aa", "aa", "aa"});
}

TEST_CASE("featurize is deterministic and bounded") {
    const FeaturizeConfig fc;
    CHECK(fc.dim() == (1u << 18));
    const auto a = featurize("[prompt]This is ;;;['a', 'b']", fc);
    CHECK(a == featurize("[prompt]This is ;;;['a', 'b']", fc));
    for (auto i : a.index) CHECK(i < fc.dim());
    CHECK(std::is_sorted(a.index.begin(), a.index.end()));
    // Total absolute mass never exceeds the number of windows.
    double mass = 0;
    for (double v : a.value) mass += std::abs(v);
    const std::size_t len = std::string("[prompt]This is ;;;['a', 'b']").size();
    CHECK(mass <= static_cast<double>((len - 1) + (len - 2) + (len - 3)));

    FeaturizeConfig lower;
    lower.lowercase = true;
    CHECK(featurize("ABC def", lower) == featurize("abc DEF", lower));
    CHECK(featurize("ABC def", fc) != featurize("abc DEF", fc));
}

TEST_CASE("featurize locality") {
    const FeaturizeConfig fc;
    const std::size_t order_sum = 2 + 3 + 4;
    Rng rng(17);
    for (int trial = 0; trial < 500; ++trial) {
        std::string s;
        const std::size_t len = 8 + rng.below(60);
        for (std::size_t k = 0; k < len; ++k) s += static_cast<char>(' ' + rng.below(95));
        std::string t = s;
        const std::size_t pos = rng.below(len);
        t[pos] = static_cast<char>(t[pos] == 'x' ? 'y' : 'x');
        // Changed windows: at most `order` per n-gram order.
        std::size_t changed_windows = 0;
        for (std::size_t n = 2; n <= 4; ++n) {
            const auto gs = char_ngrams(s, n), gt = char_ngrams(t, n);
            for (std::size_t i = 0; i < gs.size(); ++i) changed_windows += gs[i] != gt[i];
        }
        CHECK(changed_windows <= 4 * 3);
        // Each changed window removes one gram and adds another.
        CHECK(bucket_difference(featurize(s, fc), featurize(t, fc)) <= 2 * order_sum);
        CHECK(bucket_difference(featurize(s, fc), featurize(s + "q", fc)) <= 3);
    }
}

TEST_CASE("analytic gradient matches central differences") {
    FeaturizeConfig fc;
    fc.hash_bits = 6;
    Rng rng(3);
    LinearHashedNgram model(fc.dim(), 3);
    for (std::uint32_t b = 0; b < fc.dim(); ++b)
        for (std::size_t c = 0; c < 3; ++c) model.weight(b, c) = 0.3 * rng.normal();
    for (std::size_t c = 0; c < 3; ++c) model.bias(c) = 0.1 * rng.normal();

    for (int trial = 0; trial < 5; ++trial) {
        const auto xs = random_batch(rng, fc, 4);
        std::vector<const SparseVector*> ptrs;
        for (const auto& x : xs) ptrs.push_back(&x);
        std::vector<int> ys;
        for (std::size_t i = 0; i < xs.size(); ++i) ys.push_back(static_cast<int>(rng.below(3)));
        const auto grad = model.gradient(ptrs, ys);
        const double h = 1e-5;
        auto check = [&](double& param, double analytic) {
            const double saved = param;
            param = saved + h;
            const double up = model.loss(ptrs, ys);
            param = saved - h;
            const double down = model.loss(ptrs, ys);
            param = saved;
            const double numeric = (up - down) / (2 * h);
            const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-3});
            CHECK(std::abs(numeric - analytic) / scale <= 1e-4);
        };
        REQUIRE_FALSE(grad.rows.empty());
        for (const auto& [bucket, row] : grad.rows)
            for (std::size_t c = 0; c < 3; ++c) check(model.weight(bucket, c), row[c]);
        for (std::size_t c = 0; c < 3; ++c) check(model.bias(c), grad.bias[c]);
        // Untouched buckets have zero gradient.
        std::set<std::uint32_t> touched;
        for (const auto& x : xs) touched.insert(x.index.begin(), x.index.end());
        CHECK(grad.rows.size() == touched.size());
    }
}

TEST_CASE("constant labels give a constant router") {
    const SynthWorld synth = keyword_world(1, 40);
    const auto examples = relabel(build_router_dataset(synth.world, SerializationFlags{}), "m2");
    const auto split = split_80_10_10(examples, 1);
    TrainConfig tc;
    tc.max_iterations = 300;
    tc.eval_every = 100;
    const RouterModel router = train_router(split.train, split.validate, tc, SerializationFlags{}, synth.world.model_pool);
    CHECK(router.model_vocabulary == synth.world.model_pool);
    Rng rng(2);
    for (int i = 0; i < 200; ++i) {
        std::string q;
        for (std::size_t k = 0; k < 1 + rng.below(80); ++k) q += static_cast<char>(' ' + rng.below(95));
        CHECK(router.predict(q) == "m2");
    }
    const auto& s = synth.world.datasets[0].samples[0];
    CHECK(route(router, s, synth.world.metadata_for(s), "anything", s.response_options) == "m2");

    // A single-model vocabulary is forced.
    const std::vector<std::string> solo{"m2"};
    const RouterModel single = train_router(split.train, split.validate, tc, SerializationFlags{}, solo);
    CHECK(single.predict("whatever") == "m2");
}

TEST_CASE("labels outside the pool are rejected") {
    const SynthWorld synth = keyword_world(1, 20);
    const auto examples = relabel(build_router_dataset(synth.world, SerializationFlags{}), "nobody");
    CHECK_THROWS_AS(train_router(examples, {}, TrainConfig{}, SerializationFlags{}, synth.world.model_pool), InvalidInput);
    CHECK_THROWS_AS(train_router({}, {}, TrainConfig{}, SerializationFlags{}, synth.world.model_pool), InvalidInput);
}

TEST_CASE("separable keyword world is learned and replayed faithfully") {
    const SynthWorld synth = keyword_world(9);
    const World& w = synth.world;
    const auto examples = build_router_dataset(w, SerializationFlags{});
    const auto split = split_80_10_10(examples, 4);
    const RouterModel router = train_router(split.train, split.validate, TrainConfig{}, SerializationFlags{}, w.model_pool);
    CHECK(router.best_validation_accuracy >= 0.99);
    CHECK(label_accuracy(router, split.validate) >= 0.99);

    // Held-in queries route to the designated best model.
    std::size_t hits = 0;
    for (const auto& e : split.train) {
        const std::size_t d = static_cast<std::size_t>(std::find_if(w.datasets.begin(), w.datasets.end(),
                                                                    [&](const auto& m) { return m.dataset_id == e.dataset_id; }) -
                                                       w.datasets.begin());
        hits += router.predict(e.serialized_input) == synth.best_models[d];
    }
    CHECK(static_cast<double>(hits) >= 0.95 * static_cast<double>(split.train.size()));

    // Replay against an independent recount over the raw records.
    const auto valid = filter_valid_prompts(w.records, w);
    const OutcomeGrid grid = OutcomeGrid::build(valid, w);
    const RouterEvaluation eval = evaluate_router(router, grid, w);
    std::map<std::tuple<std::string, std::string, std::string>, bool> outcome;
    for (const auto& r : valid) outcome[{r.sample_id, r.prompt_variant_id, r.model_id}] = r.correct;
    for (const auto& d : w.datasets) {
        const auto& config = w.config_for(d);
        double sum = 0;
        std::size_t variants = 0;
        for (const auto& v : prompt_variants(config)) {
            if (has_empty_question(config, v)) continue;
            std::size_t correct = 0;
            for (const auto& s : d.samples) {
                const auto parts = closed_prompt_parts(s, config, v);
                const std::string chosen = route(router, s, w.metadata_for(s), parts.question, parts.options);
                correct += outcome.at({s.sample_id, v.id, chosen});
            }
            sum += static_cast<double>(correct) / static_cast<double>(d.size());
            ++variants;
        }
        CHECK(eval.per_dataset.at(d.dataset_id) == doctest::Approx(sum / static_cast<double>(variants)).epsilon(1e-12));
        CHECK(eval.per_dataset.at(d.dataset_id) <= upper_bound_accuracy(grid, d.dataset_id) + 1e-12);
        CHECK(eval.per_dataset.at(d.dataset_id) == doctest::Approx(upper_bound_accuracy(grid, d.dataset_id)));
    }
}

TEST_CASE("an always-A router replays A's marginal") {
    const SynthWorld synth = keyword_world(5, 60);
    const World& w = synth.world;
    const auto examples = relabel(build_router_dataset(w, SerializationFlags{}), "m1");
    TrainConfig tc;
    tc.max_iterations = 200;
    tc.eval_every = 100;
    const RouterModel router = train_router(examples, {}, tc, SerializationFlags{}, w.model_pool);
    const auto valid = filter_valid_prompts(w.records, w);
    const OutcomeGrid grid = OutcomeGrid::build(valid, w);
    const AccuracyTable table = aggregate_accuracy(valid, SampleIndex(w.datasets));
    const auto eval = evaluate_router(router, grid, w);
    for (const auto& d : w.datasets) {
        CHECK(eval.per_dataset.at(d.dataset_id) == doctest::Approx(table.marginal("m1", d.dataset_id)).epsilon(1e-12));
        CHECK(eval.routed.at(d.dataset_id).at("m1") == grid.block(d.dataset_id).pairs.size());
    }
}

TEST_CASE("training is reproducible and the file format round trips") {
    const SynthWorld synth = keyword_world(11, 60);
    const auto examples = build_router_dataset(synth.world, SerializationFlags{true, false});
    const auto split = split_80_10_10(examples, 2);
    TrainConfig tc;
    tc.max_iterations = 600;
    tc.eval_every = 200;
    tc.seed = 42;
    const RouterModel a = train_router(split.train, split.validate, tc, SerializationFlags{true, false}, synth.world.model_pool);
    const RouterModel b = train_router(split.train, split.validate, tc, SerializationFlags{true, false}, synth.world.model_pool);
    const std::string bytes = encode_router(a);
    CHECK(bytes == encode_router(b));
    CHECK(bytes.starts_with("VRTRMODL"));
    CHECK(a.best_iteration % 200 == 0);

    const auto path = std::filesystem::temp_directory_path() / "vroute_test_router.bin";
    save_router(a, path);
    const RouterModel loaded = load_router(path);
    CHECK(encode_router(loaded) == bytes);
    CHECK(loaded.flags == a.flags);
    CHECK(loaded.train == a.train);
    CHECK(loaded.featurize == a.featurize);
    for (const auto& e : split.test) CHECK(loaded.predict(e.serialized_input) == a.predict(e.serialized_input));
    std::filesystem::remove(path);

    CHECK_THROWS(decode_router("nonsense"));
    CHECK_THROWS(decode_router(bytes.substr(0, bytes.size() / 2)));

    tc.seed = 43;
    const RouterModel c = train_router(split.train, split.validate, tc, SerializationFlags{true, false}, synth.world.model_pool);
    CHECK(encode_router(c) != bytes);
}

TEST_CASE("with RO off the option order never matters") {
    const SynthWorld synth = keyword_world(13, 40);
    const auto examples = build_router_dataset(synth.world, SerializationFlags{true, false});
    TrainConfig tc;
    tc.max_iterations = 300;
    tc.eval_every = 100;
    const RouterModel router = train_router(examples, {}, tc, SerializationFlags{true, false}, synth.world.model_pool);
    for (const auto& s : synth.world.datasets[1].samples) {
        auto reversed = s.response_options;
        std::reverse(reversed.begin(), reversed.end());
        const auto& md = synth.world.metadata_for(s);
        CHECK(route(router, s, md, "This is ", s.response_options) == route(router, s, md, "This is ", reversed));
    }
    CHECK(strip_to_input("[prompt]p[SEP]model::m[response]correct::True;;;avg_accuracy::0.50000") == "[prompt]p");
}
