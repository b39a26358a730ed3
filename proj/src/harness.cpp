#include "vroute/harness.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "vroute/errors.hpp"
#include "vroute/io.hpp"
#include "vroute/random.hpp"

namespace vroute {

using json = nlohmann::json;

json ExperimentConfig::to_json() const {
    json j;
    if (world_dir) j["world_dir"] = world_dir->generic_string();
    if (synth) j["synth"] = *synth;
    json flags = json::array();
    for (const auto& f : flag_grid) flags.push_back(f.to_string());
    j["flags"] = flags;
    j["train"] = {{"learning_rate", train.learning_rate}, {"batch_size", train.batch_size},
                  {"max_iterations", train.max_iterations}, {"eval_every", train.eval_every},
                  {"beta1", train.beta1}, {"beta2", train.beta2}, {"epsilon", train.epsilon}};
    j["featurize"] = {{"min_order", featurize.min_order}, {"max_order", featurize.max_order},
                      {"hash_bits", featurize.hash_bits}, {"lowercase", featurize.lowercase}};
    j["seed"] = seed;
    j["chance"] = to_string(chance);
    j["in_distribution"] = in_distribution;
    j["threads"] = threads;
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    static const std::set<std::string> known{"world_dir", "synth", "flags", "train", "featurize",
                                             "seed", "chance", "in_distribution", "threads"};
    if (!j.is_object()) throw InvalidInput("experiment config must be a JSON object");
    for (const auto& [key, value] : j.items())
        if (!known.contains(key)) throw InvalidInput("unknown experiment config field '" + key + "'");
    ExperimentConfig c;
    try {
        if (j.contains("world_dir")) c.world_dir = j.at("world_dir").get<std::string>();
        if (j.contains("synth")) c.synth = j.at("synth").get<WorldSpec>();
        if (j.contains("flags")) {
            c.flag_grid.clear();
            for (const auto& f : j.at("flags")) c.flag_grid.push_back(SerializationFlags::parse(f.get<std::string>()));
        }
        if (j.contains("train")) {
            const auto& t = j.at("train");
            c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
            c.train.batch_size = t.value("batch_size", c.train.batch_size);
            c.train.max_iterations = t.value("max_iterations", c.train.max_iterations);
            c.train.eval_every = t.value("eval_every", c.train.eval_every);
            c.train.beta1 = t.value("beta1", c.train.beta1);
            c.train.beta2 = t.value("beta2", c.train.beta2);
            c.train.epsilon = t.value("epsilon", c.train.epsilon);
        }
        if (j.contains("featurize")) {
            const auto& f = j.at("featurize");
            c.featurize.min_order = f.value("min_order", c.featurize.min_order);
            c.featurize.max_order = f.value("max_order", c.featurize.max_order);
            c.featurize.hash_bits = f.value("hash_bits", c.featurize.hash_bits);
            c.featurize.lowercase = f.value("lowercase", c.featurize.lowercase);
        }
        c.seed = j.value("seed", c.seed);
        c.chance = chance_mode_from_string(j.value("chance", std::string("uniform")));
        c.in_distribution = j.value("in_distribution", c.in_distribution);
        c.threads = j.value("threads", c.threads);
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("bad experiment config: ") + e.what());
    }
    return c;
}

void ExperimentConfig::validate() const {
    if (world_dir.has_value() == synth.has_value()) throw InvalidInput("config needs exactly one of world_dir or synth");
    if (flag_grid.empty()) throw InvalidInput("flag grid is empty");
    train.validate();
    featurize.validate();
    if (synth) synth->validate();
}

World load_experiment_world(const ExperimentConfig& config) {
    config.validate();
    if (config.world_dir) return load_world(*config.world_dir);
    return generate_world(*config.synth).world;
}

std::uint64_t fold_seed(std::uint64_t base, const std::string& heldout, const SerializationFlags& flags) {
    return hash_combine(base, stable_hash(heldout + "|" + flags.to_string()));
}

namespace {

json fold_json(const FoldResult& f) {
    json j{{"heldout", f.heldout}, {"ok", f.ok}};
    if (!f.ok) {
        j["error"] = f.error;
        return j;
    }
    j["router_accuracy"] = f.router_accuracy;
    j["validation_label_accuracy"] = f.validation_label_accuracy;
    j["test_label_accuracy"] = f.test_label_accuracy;
    j["split"] = {{"train", f.n_train}, {"validate", f.n_validate}, {"test", f.n_test}};
    j["best_iteration"] = f.best_iteration;
    j["routed"] = f.routed;
    j["training_labels"] = f.training_labels;
    return j;
}

FoldResult run_fold(const World& world, const ExperimentConfig& config, const SerializationFlags& flags,
                    const std::string& heldout, const std::optional<std::filesystem::path>& fold_dir) {
    FoldResult fold;
    fold.heldout = heldout;
    try {
        std::vector<std::string> others;
        for (const auto& id : world.dataset_ids())
            if (id != heldout) others.push_back(id);
        const World train_world = world.subset(others);
        const World held_world = world.subset({heldout});

        auto examples = build_router_dataset(train_world, flags);
        for (const auto& e : examples)
            if (e.dataset_id == heldout) throw IntegrityError("held-out example leaked into the training corpus");
        const std::uint64_t seed = fold_seed(config.seed, heldout, flags);
        auto split = split_80_10_10(std::move(examples), seed);
        TrainConfig train = config.train;
        train.seed = seed;
        RouterModel router = train_router(split.train, split.validate, train, flags, world.model_pool, config.featurize);

        const OutcomeGrid grid = OutcomeGrid::build(held_world.records, held_world);
        const RouterEvaluation eval = evaluate_router(router, grid, held_world);
        fold.router_accuracy = eval.per_dataset.at(heldout);
        fold.routed = eval.routed.count(heldout) ? eval.routed.at(heldout) : std::map<std::string, std::size_t>{};
        fold.validation_label_accuracy = router.best_validation_accuracy;
        fold.test_label_accuracy = split.test.empty() ? 0.0 : label_accuracy(router, split.test);
        fold.n_train = split.train.size();
        fold.n_validate = split.validate.size();
        fold.n_test = split.test.size();
        fold.best_iteration = router.best_iteration;
        for (const auto& e : split.train) fold.training_labels[e.label_model_id] += 1;
        fold.ok = true;

        if (fold_dir) {
            std::filesystem::create_directories(*fold_dir);
            save_router(router, *fold_dir / "router.bin");
            write_router_corpus(*fold_dir / "train.txt", split.train);
            write_router_corpus(*fold_dir / "validate.txt", split.validate);
            write_router_corpus(*fold_dir / "test.txt", split.test);
        }
    } catch (const std::exception& e) {
        fold.ok = false;
        fold.error = e.what();
        spdlog::error("fold {} failed: {}", heldout, e.what());
    }
    if (fold_dir) write_text_file(*fold_dir / "metrics.json", fold_json(fold).dump(2) + "\n");
    return fold;
}

std::string fold_dir_name(const std::string& dataset_id) { return "fold-" + dataset_id; }

struct Reference {
    OutcomeGrid grid;
    AccuracyTable table;
};

Reference reference_tables(const World& world) {
    Reference r{OutcomeGrid::build(world.records, world), {}};
    const auto valid = filter_valid_prompts(world.records, world);
    r.table = aggregate_accuracy(valid, SampleIndex(world.datasets));
    return r;
}

void write_report(const ComparisonReport& report, const std::filesystem::path& dir) {
    write_text_file(dir / "report.csv", report.to_csv());
    write_text_file(dir / "report.json", report.to_json().dump(2) + "\n");
}

}  // namespace

LodoResult run_lodo(const World& world, const ExperimentConfig& config, const SerializationFlags& flags,
                    const std::optional<std::filesystem::path>& out_dir) {
    world.validate();
    const auto ids = world.dataset_ids();
    if (ids.size() < 2) throw InvalidInput("LODO needs at least two datasets");
    if (world.model_pool.size() < 2) throw InvalidInput("LODO needs at least two models");
    config.train.validate();
    config.featurize.validate();
    const Reference ref = reference_tables(world);

    LodoResult result;
    result.folds.resize(ids.size());
    auto fold_path = [&](const std::string& id) -> std::optional<std::filesystem::path> {
        if (!out_dir) return std::nullopt;
        return *out_dir / fold_dir_name(id);
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(config.threads, ids.size()));
    if (threads == 1) {
        for (std::size_t i = 0; i < ids.size(); ++i) result.folds[i] = run_fold(world, config, flags, ids[i], fold_path(ids[i]));
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < ids.size(); i = next++)
                    result.folds[i] = run_fold(world, config, flags, ids[i], fold_path(ids[i]));
            });
    }

    std::map<std::string, double> router_acc;
    std::map<std::string, std::string> failures;
    std::map<std::string, std::map<std::string, std::size_t>> routed;
    for (const auto& f : result.folds) {
        if (f.ok) {
            router_acc[f.heldout] = f.router_accuracy;
            routed[f.heldout] = f.routed;
        } else {
            failures[f.heldout] = f.error;
        }
    }
    result.report = build_comparison_report(world, ref.grid, ref.table, router_acc, failures, config.chance);
    if (out_dir) {
        write_report(result.report, *out_dir);
        const auto selection = selection_distribution(world.model_pool, routed);
        write_text_file(*out_dir / "selection.csv", selection.to_csv());
        if (!selection.datasets.empty()) write_pnm(*out_dir / "selection.ppm", selection.to_image());
        const auto all_examples = build_router_dataset(world, flags);
        const auto labels = training_label_distribution(all_examples, world.model_pool);
        write_text_file(*out_dir / "training_labels.csv", labels.to_csv());
        write_pnm(*out_dir / "training_labels.ppm", labels.to_image());
    }
    return result;
}

ComparisonReport rebuild_lodo_report(const World& world, const std::filesystem::path& run_dir, ChanceMode chance) {
    const Reference ref = reference_tables(world);
    std::map<std::string, double> router_acc;
    std::map<std::string, std::string> failures;
    for (const auto& id : world.dataset_ids()) {
        const auto dir = run_dir / fold_dir_name(id);
        if (!std::filesystem::exists(dir / "router.bin")) {
            std::string error = "missing fold artifacts";
            if (std::filesystem::exists(dir / "metrics.json"))
                error = json::parse(read_text_file(dir / "metrics.json")).value("error", error);
            failures[id] = error;
            continue;
        }
        const RouterModel router = load_router(dir / "router.bin");
        const World held = world.subset({id});
        const OutcomeGrid grid = OutcomeGrid::build(held.records, held);
        router_acc[id] = evaluate_router(router, grid, held).per_dataset.at(id);
    }
    return build_comparison_report(world, ref.grid, ref.table, router_acc, failures, chance);
}

std::string AblationColumn::name() const { return (in_distribution ? "ind_" : "lodo_") + flags.tag(); }

namespace {

std::string fixed1(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 1);
    return std::string(buf, r.ptr);
}

void finish_column(AblationColumn& col, const std::map<std::string, std::size_t>& sizes) {
    if (col.per_dataset.empty()) return;
    double sum = 0.0;
    std::map<std::string, std::size_t> present;
    for (const auto& [id, v] : col.per_dataset) {
        sum += v;
        present[id] = sizes.at(id);
    }
    col.average = sum / static_cast<double>(col.per_dataset.size());
    col.weighted_average = weighted_average(col.per_dataset, present);
}

AblationColumn in_distribution_column(const World& world, const ExperimentConfig& config,
                                      const SerializationFlags& flags, const OutcomeGrid& grid,
                                      const std::optional<std::filesystem::path>& dir) {
    AblationColumn col;
    col.flags = flags;
    col.in_distribution = true;
    auto examples = build_router_dataset(world, flags);
    const std::uint64_t seed = fold_seed(config.seed, "*", flags);
    auto split = split_80_10_10(std::move(examples), seed);
    TrainConfig train = config.train;
    train.seed = seed;
    const RouterModel router = train_router(split.train, split.validate, train, flags, world.model_pool, config.featurize);
    if (dir) {
        std::filesystem::create_directories(*dir);
        save_router(router, *dir / "router.bin");
        write_router_corpus(*dir / "test.txt", split.test);
    }

    std::map<std::tuple<std::string, std::string, std::string>, const OutcomeGrid::Pair*> lookup;
    for (const auto& b : grid.blocks())
        for (const auto& p : b.pairs) lookup[{b.dataset_id, p.sample->sample_id, p.variant_id}] = &p;
    // dataset -> variant -> (correct, total)
    std::map<std::string, std::map<std::string, std::pair<std::size_t, std::size_t>>> tally;
    for (const auto& e : split.test) {
        const auto* pair = lookup.at({e.dataset_id, e.sample_id, e.prompt_variant_id});
        const std::size_t m = grid.model_index(router.predict(e.serialized_input));
        auto& [c, n] = tally[e.dataset_id][e.prompt_variant_id];
        c += pair->correct[m] ? 1 : 0;
        n += 1;
    }
    for (const auto& [ds, variants] : tally) {
        double sum = 0.0;
        for (const auto& [v, cn] : variants) sum += static_cast<double>(cn.first) / static_cast<double>(cn.second);
        col.per_dataset[ds] = sum / static_cast<double>(variants.size());
    }
    return col;
}

}  // namespace

AblationResult run_ablation(const World& world, const ExperimentConfig& config,
                            const std::optional<std::filesystem::path>& out_dir) {
    AblationResult result;
    result.sizes = world.dataset_sizes();
    const auto grid_flags = config.flag_grid.size() <= 1 ? all_flag_combinations() : config.flag_grid;
    for (const auto& flags : grid_flags) {
        std::optional<std::filesystem::path> dir;
        if (out_dir) dir = *out_dir / ("lodo_" + flags.tag());
        const LodoResult lodo = run_lodo(world, config, flags, dir);
        AblationColumn col;
        col.flags = flags;
        for (const auto& f : lodo.folds) {
            if (f.ok) col.per_dataset[f.heldout] = f.router_accuracy;
            else col.failures[f.heldout] = f.error;
        }
        finish_column(col, result.sizes);
        result.columns.push_back(std::move(col));
    }
    if (config.in_distribution) {
        const OutcomeGrid grid = OutcomeGrid::build(world.records, world);
        for (const auto& flags : grid_flags) {
            std::optional<std::filesystem::path> dir;
            if (out_dir) dir = *out_dir / ("ind_" + flags.tag());
            AblationColumn col = in_distribution_column(world, config, flags, grid, dir);
            finish_column(col, result.sizes);
            result.columns.push_back(std::move(col));
        }
    }
    if (out_dir) {
        write_text_file(*out_dir / "ablation.csv", result.to_csv());
        write_text_file(*out_dir / "ablation.json", result.to_json().dump(2) + "\n");
    }
    return result;
}

std::string AblationResult::to_csv() const {
    std::ostringstream out;
    out << "dataset";
    for (const auto& c : columns) out << ',' << c.name();
    out << '\n';
    for (const auto& [id, size] : sizes) {
        out << id;
        for (const auto& c : columns) {
            auto it = c.per_dataset.find(id);
            out << ',' << (it != c.per_dataset.end() ? fixed1(100.0 * it->second)
                                                     : (c.failures.contains(id) ? "failed" : "n/a"));
        }
        out << '\n';
    }
    out << "\"Average\"";
    for (const auto& c : columns) out << ',' << fixed1(100.0 * c.average);
    out << "\n\"Average (Weighted)\"";
    for (const auto& c : columns) out << ',' << fixed1(100.0 * c.weighted_average);
    out << '\n';
    return out.str();
}

json AblationResult::to_json() const {
    json cols = json::array();
    for (const auto& c : columns) {
        json j{{"name", c.name()},
               {"flags", c.flags.to_string()},
               {"in_distribution", c.in_distribution},
               {"per_dataset", c.per_dataset},
               {"average", c.average},
               {"weighted_average", c.weighted_average}};
        if (!c.failures.empty()) j["failures"] = c.failures;
        cols.push_back(std::move(j));
    }
    return {{"sizes", sizes}, {"columns", cols}};
}

SelectionDistribution selection_distribution(const std::vector<std::string>& models,
                                             const std::map<std::string, std::map<std::string, std::size_t>>& counts) {
    SelectionDistribution out;
    out.models = models;
    for (const auto& [ds, per_model] : counts) {
        std::size_t total = 0;
        for (const auto& [m, n] : per_model) total += n;
        if (total == 0) continue;
        out.datasets.push_back(ds);
    }
    out.fraction.assign(models.size(), std::vector<double>(out.datasets.size(), 0.0));
    for (std::size_t d = 0; d < out.datasets.size(); ++d) {
        const auto& per_model = counts.at(out.datasets[d]);
        std::size_t total = 0;
        for (const auto& [m, n] : per_model) total += n;
        for (const auto& [m, n] : per_model) {
            auto it = std::find(models.begin(), models.end(), m);
            if (it == models.end()) throw InvalidInput("selection count for unknown model " + m);
            out.fraction[static_cast<std::size_t>(it - models.begin())][d] =
                static_cast<double>(n) / static_cast<double>(total);
        }
    }
    return out;
}

SelectionDistribution selection_heatmap(const RouterModel& router, const OutcomeGrid& grid, const World& world) {
    return selection_distribution(grid.models(), evaluate_router(router, grid, world).routed);
}

SelectionDistribution training_label_distribution(std::span<const RouterExample> examples,
                                                  const std::vector<std::string>& models) {
    std::map<std::string, std::map<std::string, std::size_t>> counts;
    for (const auto& e : examples) counts[e.dataset_id][e.label_model_id] += 1;
    return selection_distribution(models, counts);
}

std::string SelectionDistribution::to_csv() const {
    std::ostringstream out;
    out << "model_id";
    for (const auto& d : datasets) out << ',' << d;
    out << '\n';
    char buf[64];
    for (std::size_t m = 0; m < models.size(); ++m) {
        out << models[m];
        for (std::size_t d = 0; d < datasets.size(); ++d) {
            const auto r = std::to_chars(buf, buf + sizeof buf, fraction[m][d], std::chars_format::fixed, 6);
            out << ',' << std::string_view(buf, static_cast<std::size_t>(r.ptr - buf));
        }
        out << '\n';
    }
    return out.str();
}

Image SelectionDistribution::to_image(int cell) const {
    if (cell < 1) throw InvalidInput("heatmap cell size must be positive");
    Image img;
    img.height = static_cast<int>(std::max<std::size_t>(1, models.size())) * cell;
    img.width = static_cast<int>(std::max<std::size_t>(1, datasets.size())) * cell;
    img.channels = 3;
    img.pixels.assign(img.pixel_count() * 3, 255);
    for (std::size_t m = 0; m < models.size(); ++m) {
        for (std::size_t d = 0; d < datasets.size(); ++d) {
            const double v = std::clamp(fraction[m][d], 0.0, 1.0);
            const auto shade = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - v)));
            for (int y = 0; y < cell; ++y) {
                for (int x = 0; x < cell; ++x) {
                    const std::size_t px = (m * static_cast<std::size_t>(cell) + static_cast<std::size_t>(y)) *
                                               static_cast<std::size_t>(img.width) +
                                           d * static_cast<std::size_t>(cell) + static_cast<std::size_t>(x);
                    img.pixels[px * 3 + 0] = shade;
                    img.pixels[px * 3 + 1] = shade;
                    img.pixels[px * 3 + 2] = 255;
                }
            }
        }
    }
    return img;
}

json run_manifest(const ExperimentConfig& config, const std::string& command) {
    const json cfg = config.to_json();
    json inputs = json::object();
    if (config.world_dir) {
        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::recursive_directory_iterator(*config.world_dir))
            if (entry.is_regular_file()) files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files)
            inputs[std::filesystem::relative(f, *config.world_dir).generic_string()] = file_sha256(f);
    }
    return {{"command", command},
            {"config", cfg},
            {"config_sha256", sha256_hex(cfg.dump())},
            {"seeds", {{"base", config.seed}, {"synth", config.synth ? json(config.synth->seed) : json(nullptr)}}},
            {"inputs", inputs}};
}

}  // namespace vroute
