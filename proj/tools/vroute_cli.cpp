#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "vroute/baselines.hpp"
#include "vroute/errors.hpp"
#include "vroute/harness.hpp"
#include "vroute/io.hpp"
#include "vroute/kernels.hpp"
#include "vroute/mock_backends.hpp"
#include "vroute/router.hpp"
#include "vroute/router_data.hpp"
#include "vroute/scoring.hpp"
#include "vroute/synth.hpp"
#include "vroute/wire.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace vroute;

namespace {

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
};

void emit(const json& j, const std::string& out_file) {
    if (out_file.empty()) std::cout << j.dump(2) << '\n';
    else write_text_file(out_file, j.dump(2) + "\n");
}

fs::path require_out(const Globals& g, const std::string& what) {
    if (g.out.empty()) throw InvalidInput(what + " needs --out <dir>");
    return g.out;
}

ExperimentConfig load_config(const Globals& g) {
    ExperimentConfig c;
    if (!g.config.empty()) {
        c = ExperimentConfig::from_json(json::parse(read_text_file(g.config)));
        if (c.world_dir && c.world_dir->is_relative()) c.world_dir = fs::path(g.config).parent_path() / *c.world_dir;
    }
    if (g.seed) c.seed = *g.seed;
    return c;
}

std::vector<std::string> split_command(const std::string& text) {
    std::istringstream in(text);
    std::vector<std::string> out;
    std::string part;
    while (in >> part) out.push_back(part);
    return out;
}

const DatasetPromptConfig& resolve_config(const std::string& id, const std::map<std::string, DatasetPromptConfig>& extra) {
    if (auto it = extra.find(id); it != extra.end()) return it->second;
    const auto& builtin = builtin_prompt_configs();
    if (auto it = builtin.find(id); it != builtin.end()) return it->second;
    throw InvalidInput("unknown prompt config '" + id + "'");
}

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_default_logger(spdlog::stderr_color_mt("vroute"));
    spdlog::set_pattern("[%l] %v");

    CLI::App app{"Route closed-ended visual queries to the best model of a pool"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config, "Experiment config (JSON)");
    app.add_option("--seed", g.seed, "Base seed");
    app.add_option("--out", g.out, "Output file or directory");
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

    std::string command;
    std::function<void()> action;

    // prompts expand
    auto* prompts = app.add_subcommand("prompts", "Prompt grammar tools");
    prompts->require_subcommand(1);
    auto* expand = prompts->add_subcommand("expand", "List prompt variants, or concrete prompts for a sample");
    std::string pe_config, pe_config_file, pe_sample, pe_world, pe_sample_id;
    expand->add_option("--prompt-config", pe_config, "Config id (built-in or from --prompt-configs)")->required();
    expand->add_option("--prompt-configs", pe_config_file, "prompt_configs.json with extra configs");
    expand->add_option("--sample", pe_sample, "Sample as a JSON object");
    expand->add_option("--world", pe_world, "World directory to take --sample-id from");
    expand->add_option("--sample-id", pe_sample_id, "Sample id inside --world");
    expand->callback([&] {
        command = "prompts expand";
        action = [&] {
            std::map<std::string, DatasetPromptConfig> extra;
            std::optional<World> world;
            if (!pe_world.empty()) {
                world = load_world(pe_world);
                extra = world->prompt_configs;
            }
            if (!pe_config_file.empty())
                for (auto& [id, c] : read_prompt_configs(pe_config_file)) extra.insert_or_assign(id, c);
            const auto& config = resolve_config(pe_config, extra);
            std::optional<Sample> sample;
            if (!pe_sample.empty()) {
                // Only the options and context matter for rendering.
                json j = json::parse(pe_sample);
                if (!j.is_object()) throw InvalidInput("--sample must be a JSON object");
                for (const char* key : {"sample_id", "dataset_id", "image_ref"})
                    if (!j.contains(key)) j[key] = "";
                if (!j.contains("gold_index")) j["gold_index"] = 0;
                sample = j.get<Sample>();
            }
            if (!pe_sample_id.empty()) {
                if (!world) throw InvalidInput("--sample-id needs --world");
                for (const auto& d : world->datasets)
                    for (const auto& s : d.samples)
                        if (s.sample_id == pe_sample_id && world->config_for(d).config_id == config.config_id) sample = s;
                if (!sample) throw InvalidInput("no sample '" + pe_sample_id + "' uses prompt config " + config.config_id);
            }
            json out = json::array();
            for (const auto& v : prompt_variants(config)) {
                json row{{"prompt_variant_id", v.id},
                         {"question_form", config.question_forms[v.question_index].text()},
                         {"option_form", v.option_index ? json(config.option_forms[*v.option_index].text()) : json(nullptr)},
                         {"valid", !has_empty_question(config, v)}};
                if (sample) row["prompts"] = closed_prompt_set(*sample, config, v);
                out.push_back(std::move(row));
            }
            emit(json{{"prompt_config", config.config_id}, {"variants", out}}, g.out);
        };
    });

    // eval run
    auto* eval = app.add_subcommand("eval", "Score datasets with a backend");
    eval->require_subcommand(1);
    auto* eval_run = eval->add_subcommand("run", "Evaluate one model over a world and write execution records");
    std::string ev_world, ev_backend = "mock:oracle", ev_family = "contrastive", ev_model, ev_norm = "sum";
    std::vector<std::string> ev_datasets;
    std::size_t ev_threads = 1, ev_dim = 16;
    bool ev_append = false;
    eval_run->add_option("--world", ev_world, "World directory")->required();
    eval_run->add_option("--backend", ev_backend, "mock:oracle|mock:constant|mock:random or exec:<command line>");
    eval_run->add_option("--family", ev_family, "contrastive|generative");
    eval_run->add_option("--model-id", ev_model, "Model id written into the records")->required();
    eval_run->add_option("--dataset", ev_datasets, "Restrict to these datasets");
    eval_run->add_option("--normalization", ev_norm, "sum|mean (generative)");
    eval_run->add_option("--threads", ev_threads, "Sample-level concurrency");
    eval_run->add_option("--dim", ev_dim, "Embedding width of constant/random mocks");
    eval_run->add_flag("--append", ev_append, "Append to an existing records file");
    eval_run->callback([&] {
        command = "eval run";
        action = [&] {
            const World world = load_world(ev_world);
            const fs::path out = g.out.empty() ? fs::path(ev_world) / "records.jsonl" : fs::path(g.out);
            std::unique_ptr<Backend> backend;
            const auto family = model_family_from_string(ev_family);
            if (ev_backend.starts_with("mock:")) {
                MockSpec spec{mock_kind_from_string(ev_backend.substr(5)), family, g.seed.value_or(0), ev_dim};
                backend = make_mock_backend(spec, &world);
            } else if (ev_backend.starts_with("exec:")) {
                backend = std::make_unique<WireBackend>(std::make_unique<PipeTransport>(split_command(ev_backend.substr(5))));
            } else {
                throw InvalidInput("unknown backend '" + ev_backend + "'");
            }
            EvalOptions opts{ev_model, family, normalization_from_string(ev_norm), ev_threads};
            std::vector<ExecutionRecord> records;
            if (ev_append && fs::exists(out)) records = read_records(out);
            json summary = json::object();
            std::size_t skipped = 0;
            for (const auto& d : world.datasets) {
                if (!ev_datasets.empty() && std::find(ev_datasets.begin(), ev_datasets.end(), d.dataset_id) == ev_datasets.end())
                    continue;
                const auto& config = world.config_for(d);
                auto result = evaluate(*backend, d, config, prompt_variants(config), opts);
                skipped += result.skipped();
                std::size_t correct = 0;
                for (const auto& r : result.records) correct += r.correct ? 1 : 0;
                summary[d.dataset_id] = {{"records", result.records.size()},
                                         {"skipped", result.skipped()},
                                         {"accuracy", result.records.empty() ? 0.0
                                                                             : static_cast<double>(correct) /
                                                                                   static_cast<double>(result.records.size())}};
                records.insert(records.end(), result.records.begin(), result.records.end());
            }
            write_records(out, records);
            emit(json{{"model_id", ev_model}, {"backend", backend->capabilities().name}, {"skipped", skipped},
                      {"datasets", summary}, {"records_file", out.generic_string()}},
                 "");
        };
    });

    // routerdata build
    auto* rdata = app.add_subcommand("routerdata", "Router training corpora");
    rdata->require_subcommand(1);
    auto* rbuild = rdata->add_subcommand("build", "Label, serialize and split router examples");
    std::string rd_world, rd_flags = "md=on,ro=on";
    rbuild->add_option("--world", rd_world, "World directory")->required();
    rbuild->add_option("--flags", rd_flags, "md=on|off,ro=on|off");
    rbuild->callback([&] {
        command = "routerdata build";
        action = [&] {
            const World world = load_world(rd_world);
            const auto flags = SerializationFlags::parse(rd_flags);
            const fs::path out = require_out(g, "routerdata build");
            RouterDataStats stats;
            auto examples = build_router_dataset(world, flags, &stats);
            write_router_corpus(out / "all.txt", examples);
            const std::uint64_t seed = g.seed.value_or(0);
            auto split = split_80_10_10(std::move(examples), seed);
            write_router_corpus(out / "train.txt", split.train);
            write_router_corpus(out / "validate.txt", split.validate);
            write_router_corpus(out / "test.txt", split.test);
            const json info{{"flags", flags.to_string()},
                            {"seed", seed},
                            {"models", world.model_pool},
                            {"stages",
                             {{"records_in", stats.records_in},
                              {"records_prompt_valid", stats.records_valid},
                              {"examples", stats.examples},
                              {"train", split.train.size()},
                              {"validate", split.validate.size()},
                              {"test", split.test.size()}}}};
            write_text_file(out / "stats.json", info.dump(2) + "\n");
            emit(info, "");
        };
    });

    // router train / route
    auto* router_cmd = app.add_subcommand("router", "Train and query routers");
    router_cmd->require_subcommand(1);
    auto* rtrain = router_cmd->add_subcommand("train", "Train a router on a routerdata directory");
    std::string rt_data;
    std::optional<std::size_t> rt_iters;
    rtrain->add_option("--data", rt_data, "Directory written by routerdata build")->required();
    rtrain->add_option("--iterations", rt_iters, "Override max_iterations");
    rtrain->callback([&] {
        command = "router train";
        action = [&] {
            ExperimentConfig cfg = load_config(g);
            const json info = json::parse(read_text_file(fs::path(rt_data) / "stats.json"));
            const auto flags = SerializationFlags::parse(info.at("flags").get<std::string>());
            const auto models = info.at("models").get<std::vector<std::string>>();
            const auto train = read_router_corpus(fs::path(rt_data) / "train.txt");
            const auto validate = read_router_corpus(fs::path(rt_data) / "validate.txt");
            TrainConfig tc = cfg.train;
            tc.seed = cfg.seed;
            if (rt_iters) tc.max_iterations = *rt_iters;
            const RouterModel router = train_router(train, validate, tc, flags, models, cfg.featurize);
            const fs::path out = g.out.empty() ? fs::path(rt_data) / "router.bin" : fs::path(g.out);
            save_router(router, out);
            json summary{{"router", out.generic_string()},
                         {"best_iteration", router.best_iteration},
                         {"validation_label_accuracy", router.best_validation_accuracy}};
            if (fs::exists(fs::path(rt_data) / "test.txt")) {
                const auto test = read_router_corpus(fs::path(rt_data) / "test.txt");
                if (!test.empty()) summary["test_label_accuracy"] = label_accuracy(router, test);
            }
            emit(summary, "");
        };
    });
    auto* rroute = router_cmd->add_subcommand("route", "Route serialized inputs (one per stdin line, or --input)");
    std::string rr_router;
    std::vector<std::string> rr_inputs;
    rroute->add_option("--router", rr_router, "Router file")->required();
    rroute->add_option("--input", rr_inputs, "Serialized input; full corpus lines are accepted");
    rroute->callback([&] {
        command = "router route";
        action = [&] {
            const RouterModel router = load_router(rr_router);
            std::ostringstream out;
            auto one = [&](const std::string& line) { out << router.predict(strip_to_input(line)) << '\n'; };
            if (!rr_inputs.empty()) {
                for (const auto& line : rr_inputs) one(line);
            } else {
                std::string line;
                while (std::getline(std::cin, line))
                    if (!line.empty()) one(line);
            }
            if (g.out.empty()) std::cout << out.str();
            else write_text_file(g.out, out.str());
        };
    });

    // baselines report
    auto* base = app.add_subcommand("baselines", "Selection baselines");
    base->require_subcommand(1);
    auto* breport = base->add_subcommand("report", "Comparison table for a world");
    std::string br_world, br_chance = "uniform", br_lodo, br_router;
    breport->add_option("--world", br_world, "World directory")->required();
    breport->add_option("--chance", br_chance, "uniform|majority");
    breport->add_option("--lodo-dir", br_lodo, "Fill the router column from a lodo run directory");
    breport->add_option("--router", br_router, "Fill the router column with one router on every dataset");
    breport->callback([&] {
        command = "baselines report";
        action = [&] {
            const World world = load_world(br_world);
            const auto chance = chance_mode_from_string(br_chance);
            ComparisonReport report;
            if (!br_lodo.empty()) {
                report = rebuild_lodo_report(world, br_lodo, chance);
            } else {
                const OutcomeGrid grid = OutcomeGrid::build(world.records, world);
                const auto table = aggregate_accuracy(filter_valid_prompts(world.records, world), SampleIndex(world.datasets));
                std::map<std::string, double> router_acc;
                if (!br_router.empty()) router_acc = evaluate_router(load_router(br_router), grid, world).per_dataset;
                report = build_comparison_report(world, grid, table, router_acc, {}, chance);
            }
            const fs::path out = require_out(g, "baselines report");
            write_text_file(out / "report.csv", report.to_csv());
            write_text_file(out / "report.json", report.to_json().dump(2) + "\n");
            std::cout << report.to_csv();
        };
    });

    // lodo run / ablation run
    auto* lodo = app.add_subcommand("lodo", "Leave-one-dataset-out evaluation");
    lodo->require_subcommand(1);
    auto* lrun = lodo->add_subcommand("run", "Train one router per held-out dataset");
    lrun->callback([&] {
        command = "lodo run";
        action = [&] {
            const ExperimentConfig cfg = load_config(g);
            const fs::path out = require_out(g, "lodo run");
            const World world = load_experiment_world(cfg);
            write_text_file(out / "manifest.json", run_manifest(cfg, command).dump(2) + "\n");
            const auto result = run_lodo(world, cfg, cfg.flag_grid.front(), out);
            std::cout << result.report.to_csv();
            for (const auto& f : result.folds)
                if (!f.ok) throw Error("fold_failed", "fold " + f.heldout + " failed: " + f.error);
        };
    });
    auto* ablation = app.add_subcommand("ablation", "MD/RO input ablation");
    ablation->require_subcommand(1);
    auto* arun = ablation->add_subcommand("run", "Held-out (and optionally in-distribution) ablation grid");
    arun->callback([&] {
        command = "ablation run";
        action = [&] {
            const ExperimentConfig cfg = load_config(g);
            const fs::path out = require_out(g, "ablation run");
            const World world = load_experiment_world(cfg);
            write_text_file(out / "manifest.json", run_manifest(cfg, command).dump(2) + "\n");
            const auto result = run_ablation(world, cfg, out);
            std::cout << result.to_csv();
        };
    });

    // synth generate
    auto* synth = app.add_subcommand("synth", "Synthetic worlds");
    synth->require_subcommand(1);
    auto* sgen = synth->add_subcommand("generate", "Write a synthetic world directory");
    std::string sg_spec;
    bool sg_no_images = false;
    sgen->add_option("--spec", sg_spec, "World spec (JSON)")->required();
    sgen->add_flag("--no-images", sg_no_images, "Skip writing PNM files (metadata.jsonl still has the summaries)");
    sgen->callback([&] {
        command = "synth generate";
        action = [&] {
            WorldSpec spec = json::parse(read_text_file(sg_spec)).get<WorldSpec>();
            if (g.seed) spec.seed = *g.seed;
            const fs::path out = require_out(g, "synth generate");
            const SynthWorld synth_world = generate_world(spec);
            save_synth_world(synth_world, out, !sg_no_images);
            write_text_file(out / "spec.json", json(spec).dump(2) + "\n");
            emit(json{{"datasets", synth_world.world.datasets.size()},
                      {"records", synth_world.world.records.size()},
                      {"best_models", synth_world.best_models},
                      {"keywords", synth_world.keywords}},
                 "");
        };
    });

    auto fail = [&](const std::string& kind, const std::string& message, json extra = json::object()) {
        json err{{"kind", kind}, {"message", message}, {"command", command}};
        for (auto& [k, v] : extra.items()) err[k] = v;
        std::cerr << json{{"error", err}}.dump() << '\n';
    };

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        fail("usage", e.what());
        return 2;
    }

    spdlog::set_level(spdlog::level::from_str(log_level));
    spdlog::debug("kernels: {}", kernels::isa_name(kernels::active().isa));
    try {
        if (action) action();
        return 0;
    } catch (const ParseError& e) {
        fail(e.kind(), e.what(), {{"offset", e.offset()}});
    } catch (const CoverageError& e) {
        const auto& gaps = e.gaps();
        fail(e.kind(), e.what(), {{"gaps", std::vector<std::string>(gaps.begin(), gaps.begin() + std::min<std::size_t>(gaps.size(), 20))},
                                  {"gap_count", gaps.size()}});
    } catch (const RenderError& e) {
        fail(e.kind(), e.what(), {{"key", e.key()}});
    } catch (const Error& e) {
        fail(e.kind(), e.what());
    } catch (const json::exception& e) {
        fail("invalid_input", e.what());
    } catch (const std::exception& e) {
        fail("internal", e.what());
    }
    return 1;
}
