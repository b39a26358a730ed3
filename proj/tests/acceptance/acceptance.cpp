// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "vroute/baselines.hpp"
#include "vroute/harness.hpp"
#include "vroute/outcomes.hpp"
#include "vroute/prompt.hpp"
#include "vroute/random.hpp"
#include "vroute/router.hpp"
#include "vroute/router_data.hpp"
#include "vroute/scoring.hpp"
#include "vroute/synth.hpp"

using namespace vroute;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;
};

// Collects the first few failure messages of a criterion.
class Checks {
public:
    void expect(bool cond, const std::string& what) {
        if (cond) return;
        ++failures_;
        if (failures_ <= 3) messages_ += (messages_.empty() ? "" : "; ") + what;
    }
    void note(const std::string& text) { notes_ += (notes_.empty() ? "" : ", ") + text; }
    Outcome outcome() const {
        if (failures_ == 0) return {true, notes_};
        return {false, std::to_string(failures_) + " failed check(s): " + messages_ + (notes_.empty() ? "" : " | " + notes_)};
    }

private:
    std::size_t failures_ = 0;
    std::string messages_;
    std::string notes_;
};

std::string fmt(double v, int decimals = 1) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

// ---------------------------------------------------------------- C1

Outcome format_fidelity() {
    Checks c;
    const std::string expected =
        "[img]dim::(270,317,3)ave::(23.1,31.8,46.2)std::(15.1,11.5,10.9)[prompt]What is this? This is "
        ";;;['a car', 'a sofa', 'a train', 'a table', 'a chair', 'a boat', 'a plane', 'a motorbike', 'a bus', "
        "'a bicycle'][SEP]model::clip[response]correct::True;;;avg_accuracy::0.88238";
    // Option texts come from the shipped grammar rather than being typed in.
    const auto& oodcv = builtin_prompt_configs().at("oodcv");
    Sample s;
    s.sample_id = "golden";
    s.response_options = oodcv.class_names;
    const auto parts = closed_prompt_parts(s, oodcv, find_variant(prompt_variants(oodcv), "q2o2"));
    const MetadataSummary md{270, 317, 3, {23.1, 31.8, 46.2}, {15.1, 11.5, 10.9}};
    const std::vector<std::string> pool{"clip", "blip", "lit", "flamingo", "pnp_vqa"};
    const std::string line =
        serialize_example(md, parts.question, parts.options, "clip", true, 0.88238, SerializationFlags{}, pool);
    c.expect(line == expected, "golden line differs");
    const auto parsed = parse_example(expected);
    c.expect(parsed.metadata && *parsed.metadata == md && parsed.prompt == parts.question && parsed.options &&
                 *parsed.options == parts.options && parsed.model_id == "clip" && parsed.correct,
             "golden line does not parse back to its fields");

    Rng rng(2024);
    const std::string alphabet = "abcdxyz ABC;[]',\\:.?!-_0123";
    auto text = [&](std::size_t max) {
        std::string out;
        const std::size_t n = rng.below(max + 1);
        for (std::size_t i = 0; i < n; ++i) out += alphabet[rng.below(alphabet.size())];
        return out;
    };
    std::size_t round_trips = 0;
    for (const auto& flags : all_flag_combinations()) {
        for (int i = 0; i < 1000; ++i) {
            ExampleFields f;
            if (flags.include_metadata) {
                MetadataSummary m;
                m.height = static_cast<int>(1 + rng.below(5000));
                m.width = static_cast<int>(1 + rng.below(5000));
                m.channels = rng.below(2) ? 3 : 1;
                for (int ch = 0; ch < m.channels; ++ch) {
                    m.channel_means.push_back(static_cast<double>(rng.below(2551)) / 10.0);
                    m.channel_stds.push_back(static_cast<double>(rng.below(1281)) / 10.0);
                }
                f.metadata = m;
            }
            f.prompt = text(40);
            if (flags.include_response_options) {
                std::vector<std::string> opts(1 + rng.below(8));
                for (auto& o : opts) o = text(15);
                f.options = opts;
            }
            f.model_id = "model_" + std::to_string(rng.below(10));
            f.correct = rng.below(2) == 1;
            f.avg_accuracy = static_cast<double>(rng.below(100001)) / 100000.0;
            const std::string ser = serialize_example(f);
            const ExampleFields back = parse_example(ser, flags);
            c.expect(back == f, "round trip mismatch under " + flags.to_string());
            c.expect(serialize_example(back) == ser, "serialize fixpoint broken under " + flags.to_string());
            ++round_trips;
        }
    }
    c.note("golden line byte-identical, " + std::to_string(round_trips) + " round trips");
    return c.outcome();
}

// ---------------------------------------------------------------- C2

Outcome grammar_fidelity() {
    Checks c;
    const auto& configs = builtin_prompt_configs();
    const std::vector<std::pair<std::string, std::size_t>> counts{
        {"cifar100", 9},       {"oodcv", 9},          {"weather", 6},        {"skin_cancer", 6},
        {"hateful_memes", 8},  {"scienceqa", 5},      {"vg_attribution", 3}, {"vg_relation", 3},
        {"abstract_scenes_vqa", 3}, {"binary_abstract_scenes", 3}};
    for (const auto& [id, n] : counts) {
        auto it = configs.find(id);
        c.expect(it != configs.end(), "missing config " + id);
        if (it != configs.end()) c.expect(prompt_variants(it->second).size() == n, id + " variant count");
    }
    const std::map<std::string, std::string> cifar_renames{
        {"aquarium_fish", "aquarium fish"}, {"pickup_truck", "pickup truck"}, {"lawn_mower", "lawn mower"},
        {"sweet_pepper", "pepper"},         {"maple_tree", "maple"},          {"oak_tree", "oak"},
        {"palm_tree", "palm"},              {"pine_tree", "pine"},            {"willow_tree", "willow"}};
    c.expect(configs.at("cifar100").rename_map.entries == cifar_renames, "CIFAR-100 renames");
    const std::map<std::string, std::string> ood_renames{{"aeroplane", "plane"}, {"diningtable", "table"}};
    c.expect(configs.at("oodcv").rename_map.entries == ood_renames, "OOD-CV renames");

    const auto& cifar = configs.at("cifar100");
    const auto variants = prompt_variants(cifar);
    Sample s;
    s.response_options = {"aquarium_fish", "beaver"};
    const auto what = closed_prompt_set(s, cifar, find_variant(variants, "q2o2"));
    c.expect(what[0] == "What is this? This is an aquarium fish", "aquarium fish exemplar: " + what[0]);
    const auto this_is = closed_prompt_set(s, cifar, find_variant(variants, "q1o2"));
    c.expect(this_is[1] == "This is a beaver", "beaver exemplar: " + this_is[1]);
    c.note("10 configs, 9+2 renames, exemplars verbatim");
    return c.outcome();
}

// ---------------------------------------------------------------- C3

// Written from the labeling rule alone: keep correct models (all if none),
// highest average wins, equal averages go to the alphabetically first id.
std::string brute_force_label(const std::vector<std::string>& models, const std::vector<bool>& correct,
                              const std::vector<double>& avg) {
    bool any = false;
    for (bool b : correct) any = any || b;
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < models.size(); ++i)
        if (!any || correct[i]) pool.push_back(i);
    double top = -1.0;
    for (auto i : pool) top = std::max(top, avg[i]);
    std::vector<std::string> tied;
    for (auto i : pool)
        if (avg[i] == top) tied.push_back(models[i]);
    std::sort(tied.begin(), tied.end());
    return tied.front();
}

Outcome labeling_oracle() {
    Checks c;
    // Deliberately not in lexicographic order, so the tie rule is exercised.
    const std::vector<std::string> models{"lit", "blip", "clip", "flamingo"};
    Rng rng(77);
    std::size_t cases = 0, ties = 0;
    for (unsigned pattern = 0; pattern < 16; ++pattern) {
        std::vector<bool> correct(4);
        for (unsigned m = 0; m < 4; ++m) correct[m] = (pattern >> m) & 1u;
        for (int draw = 0; draw < 50; ++draw) {
            std::vector<double> avg(4);
            // A coarse grid makes exact ties common.
            for (auto& a : avg) a = static_cast<double>(rng.below(6)) / 5.0;
            std::map<std::string, bool> cm;
            std::map<std::string, double> am;
            for (std::size_t m = 0; m < 4; ++m) {
                cm[models[m]] = correct[m];
                am[models[m]] = avg[m];
            }
            const std::string want = brute_force_label(models, correct, avg);
            const std::string got = select_best_model(cm, am);
            c.expect(got == want, "pattern " + std::to_string(pattern) + ": " + got + " vs " + want);
            std::set<double> distinct(avg.begin(), avg.end());
            ties += distinct.size() < 4;
            ++cases;
        }
    }
    c.note(std::to_string(cases) + " cases, " + std::to_string(ties) + " with tied averages");
    return c.outcome();
}

// ---------------------------------------------------------------- C4

Outcome scoring_oracles() {
    Checks c;
    Rng rng(404);
    for (int t = 0; t < 1000; ++t) {
        const std::size_t dim = 1 + rng.below(64);
        const std::size_t options = 2 + rng.below(12);
        std::vector<double> v(dim);
        for (auto& x : v) x = rng.normal();
        Matrix m(options, dim);
        for (auto& x : m.data) x = rng.normal();
        std::size_t best = 0;
        double best_score = -INFINITY;
        for (std::size_t o = 0; o < options; ++o) {
            double s = 0;
            for (std::size_t k = 0; k < dim; ++k) s += v[k] * m.data[o * dim + k];
            if (s > best_score) {
                best_score = s;
                best = o;
            }
        }
        c.expect(predict_contrastive(v, m).predicted_index == static_cast<int>(best), "contrastive argmax");
    }
    for (int t = 0; t < 1000; ++t) {
        const std::size_t options = 2 + rng.below(8);
        const std::size_t len = 1 + rng.below(10);
        std::vector<std::vector<double>> lp(options, std::vector<double>(len));
        for (auto& row : lp)
            for (auto& x : row) x = -3.0 * rng.uniform();
        c.expect(predict_generative(lp, Normalization::sum).predicted_index ==
                     predict_generative(lp, Normalization::mean).predicted_index,
                 "sum/mean disagree on equal lengths");
    }
    c.expect(predict_generative({{-1}, {-0.4, -0.4, -0.4}}, Normalization::sum).predicted_index == 0 &&
                 predict_generative({{-1}, {-0.4, -0.4, -0.4}}, Normalization::mean).predicted_index == 1,
             "divergent example");

    FeaturizeConfig fc;
    fc.hash_bits = 8;
    const std::size_t k = 4;
    LinearHashedNgram model(fc.dim(), k);
    for (std::uint32_t b = 0; b < fc.dim(); ++b)
        for (std::size_t j = 0; j < k; ++j) model.weight(b, j) = 0.2 * rng.normal();
    for (std::size_t j = 0; j < k; ++j) model.bias(j) = 0.1 * rng.normal();
    double worst = 0.0;
    for (int batch = 0; batch < 10; ++batch) {
        std::vector<SparseVector> xs;
        std::vector<int> ys;
        for (int i = 0; i < 4; ++i) {
            std::string s = "[prompt]";
            for (std::size_t n = 0; n < 10 + rng.below(20); ++n) s += static_cast<char>('a' + rng.below(8));
            xs.push_back(featurize(s, fc));
            ys.push_back(static_cast<int>(rng.below(k)));
        }
        std::vector<const SparseVector*> ptrs;
        for (const auto& x : xs) ptrs.push_back(&x);
        const auto grad = model.gradient(ptrs, ys);
        const double h = 1e-5;
        auto check = [&](double& p, double analytic) {
            const double saved = p;
            p = saved + h;
            const double up = model.loss(ptrs, ys);
            p = saved - h;
            const double down = model.loss(ptrs, ys);
            p = saved;
            const double numeric = (up - down) / (2 * h);
            const double rel = std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-3});
            worst = std::max(worst, rel);
            c.expect(rel <= 1e-4, "gradient relative error " + fmt(rel, 8));
        };
        for (const auto& [bucket, row] : grad.rows)
            for (std::size_t j = 0; j < k; ++j) check(model.weight(bucket, j), row[j]);
        for (std::size_t j = 0; j < k; ++j) check(model.bias(j), grad.bias[j]);
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1e", worst);
    c.note(std::string("worst gradient rel. error ") + buf);
    return c.outcome();
}

// ---------------------------------------------------------------- C5

Outcome baseline_ordering() {
    Checks c;
    std::size_t comparisons = 0;
    TrainConfig tc;
    tc.max_iterations = 1000;
    tc.eval_every = 500;
    for (std::uint64_t w = 0; w < 100; ++w) {
        WorldSpec spec;
        spec.seed = 1000 + w;
        spec.n_datasets = 3;
        spec.samples_per_dataset = 500;
        spec.models = {"m0", "m1", "m2", "m3"};
        if (w % 2) spec.models.push_back("m4");
        spec.min_options = 2;
        spec.max_options = 5;
        spec.competence_low = 0.2;
        spec.competence_high = 0.9;
        spec.signal_mode = w % 3 == 0 ? SignalMode::prompt_keyword : SignalMode::none;
        const World world = generate_world(spec).world;
        const auto valid = filter_valid_prompts(world.records, world);
        const OutcomeGrid grid = OutcomeGrid::build(valid, world);
        const AccuracyTable table = aggregate_accuracy(valid, SampleIndex(world.datasets));
        const auto split = split_80_10_10(build_router_dataset(world, SerializationFlags{}), spec.seed);
        tc.seed = spec.seed;
        const RouterModel router = train_router(split.train, split.validate, tc, SerializationFlags{}, world.model_pool);
        const auto replay = evaluate_router(router, grid, world).per_dataset;
        for (const auto& d : world.dataset_ids()) {
            const double ub = upper_bound_accuracy(grid, d);
            const double oracle = oracle_accuracy(table, d, world.model_pool);
            const double avg = average_baseline(table, d, world.model_pool);
            const double vote = voting_accuracy(grid, d);
            const std::string where = "world " + std::to_string(w) + " " + d;
            c.expect(ub >= oracle, where + ": upper_bound < oracle");
            c.expect(oracle >= avg, where + ": oracle < average");
            c.expect(ub >= vote, where + ": upper_bound < voting");
            c.expect(ub >= replay.at(d), where + ": upper_bound < router");
            comparisons += 4;
        }
    }
    for (std::size_t k : {2u, 4u, 100u}) {
        WorldSpec spec;
        spec.seed = 5;
        spec.n_datasets = 1;
        spec.samples_per_dataset = 200;
        spec.min_options = k;
        spec.max_options = k;
        const World world = generate_world(spec).world;
        const double chance = chance_uniform(world.datasets[0].samples);
        c.expect(chance == 1.0 / static_cast<double>(k), "chance at K=" + std::to_string(k) + " is " + fmt(chance, 17));
        if (k == 100) c.expect(fmt(100.0 * chance) == "1.0", "K=100 chance renders as " + fmt(100.0 * chance));
    }
    c.note("100 worlds, " + std::to_string(comparisons) + " orderings, chance 1/K exact (1.0% at K=100)");
    return c.outcome();
}

// ---------------------------------------------------------------- C6

Outcome router_learning() {
    Checks c;
    WorldSpec spec;
    spec.seed = 606;
    spec.n_datasets = 4;
    spec.samples_per_dataset = 250;  // two valid variants each: 2,000 examples
    spec.models = {"A", "B", "C", "D"};
    spec.best_models = {"A", "B", "C", "D"};
    spec.signal_mode = SignalMode::prompt_keyword;
    const World world = generate_world(spec).world;
    const auto examples = build_router_dataset(world, SerializationFlags{});
    c.expect(examples.size() == 2000, "expected 2000 examples, got " + std::to_string(examples.size()));
    const auto split = split_80_10_10(examples, 6);
    TrainConfig tc;
    tc.seed = 6;
    const RouterModel router = train_router(split.train, split.validate, tc, SerializationFlags{}, world.model_pool);
    const double train_acc = label_accuracy(router, split.train);
    const double test_acc = label_accuracy(router, split.test);
    c.expect(train_acc >= 0.99, "train label accuracy " + fmt(100 * train_acc));
    c.expect(test_acc >= 0.99, "held-in test label accuracy " + fmt(100 * test_acc));

    const auto valid = filter_valid_prompts(world.records, world);
    const OutcomeGrid grid = OutcomeGrid::build(valid, world);
    const auto replay = evaluate_router(router, grid, world).per_dataset;
    double routed = 0, optimum = 0;
    for (const auto& d : world.dataset_ids()) {
        routed += replay.at(d);
        optimum += upper_bound_accuracy(grid, d);
    }
    routed *= 100.0 / static_cast<double>(replay.size());
    optimum *= 100.0 / static_cast<double>(replay.size());
    c.expect(optimum - routed <= 1.0, "replay " + fmt(routed) + " vs optimum " + fmt(optimum));

    WorldSpec transfer = spec;
    transfer.seed = 607;
    transfer.best_models = {"A", "B", "A", "B"};
    ExperimentConfig config;
    config.synth = transfer;
    config.seed = 7;
    const World tworld = load_experiment_world(config);
    const LodoResult lodo = run_lodo(tworld, config, SerializationFlags{});
    std::string folds;
    for (const auto& row : lodo.report.rows) {
        const auto it = row.percent.find("router");
        c.expect(it != row.percent.end(), "fold " + row.dataset_id + " failed: " + row.router_error);
        if (it == row.percent.end()) continue;
        c.expect(it->second >= row.percent.at("average"),
                 "fold " + row.dataset_id + ": router " + fmt(it->second) + " < average " + fmt(row.percent.at("average")));
        folds += (folds.empty() ? "" : "/") + fmt(it->second) + ">=" + fmt(row.percent.at("average"));
    }
    c.note("label acc train " + fmt(100 * train_acc) + " test " + fmt(100 * test_acc) + ", replay " + fmt(routed) +
           " vs optimum " + fmt(optimum) + ", LODO router>=average " + folds);
    return c.outcome();
}

// ---------------------------------------------------------------- C7

std::map<std::string, double> ablation_averages(const WorldSpec& spec, std::uint64_t seed) {
    ExperimentConfig config;
    config.synth = spec;
    config.seed = seed;
    config.flag_grid = all_flag_combinations();
    const World world = load_experiment_world(config);
    const AblationResult result = run_ablation(world, config);
    std::map<std::string, double> out;
    for (const auto& col : result.columns) out[col.flags.tag()] = 100.0 * col.average;
    return out;
}

Outcome ablation_directionality() {
    Checks c;
    WorldSpec band;
    band.seed = 707;
    band.n_datasets = 4;
    band.samples_per_dataset = 200;
    band.models = {"A", "B", "C", "D"};
    band.best_models = {"A", "B", "A", "B"};
    band.signal_mode = SignalMode::metadata_band;
    const auto md = ablation_averages(band, 17);
    for (const char* ro : {"ro1", "ro0"}) {
        const double on = md.at(std::string("md1_") + ro), off = md.at(std::string("md0_") + ro);
        c.expect(on - off >= 5.0, std::string("metadata world ") + ro + ": MD on " + fmt(on) + " vs off " + fmt(off));
    }

    WorldSpec keyword = band;
    keyword.seed = 708;
    keyword.signal_mode = SignalMode::prompt_keyword;
    const auto kw = ablation_averages(keyword, 18);
    for (const char* m : {"md1", "md0"}) {
        const double on = kw.at(std::string(m) + "_ro1"), off = kw.at(std::string(m) + "_ro0");
        c.expect(std::abs(on - off) <= 2.0, std::string("keyword world ") + m + ": RO on " + fmt(on) + " vs off " + fmt(off));
    }
    c.note("metadata world MD on " + fmt(md.at("md1_ro1")) + "/" + fmt(md.at("md1_ro0")) + " vs off " +
           fmt(md.at("md0_ro1")) + "/" + fmt(md.at("md0_ro0")) + ", keyword world RO on " + fmt(kw.at("md1_ro1")) + "/" +
           fmt(kw.at("md0_ro1")) + " vs off " + fmt(kw.at("md1_ro0")) + "/" + fmt(kw.at("md0_ro0")));
    return c.outcome();
}

// ---------------------------------------------------------------- C8

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool run_in(const fs::path& dir, const std::string& args) {
    const std::string cmd = "cd '" + dir.string() + "' && " + VROUTE_CLI_PATH + " " + args + " >/dev/null 2>>cli.log";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) && WEXITSTATUS(status) == 0;
}

Outcome cli_determinism() {
    Checks c;
    const fs::path root = fs::temp_directory_path() / "vroute_acceptance_c8";
    fs::remove_all(root);
    const std::vector<std::string> steps{
        "synth generate --spec spec.json --out world",
        "routerdata build --world world --flags md=on,ro=off --seed 4 --out data",
        "router train --data data --config cfg.json --seed 4 --out router.bin",
        "baselines report --world world --router router.bin --out single",
        "lodo run --config cfg.json --out lodo",
        "baselines report --world world --lodo-dir lodo --out rebuilt",
        "ablation run --config ablation.json --out ablation",
    };
    for (const char* run : {"a", "b"}) {
        const fs::path dir = root / run;
        fs::create_directories(dir);
        std::ofstream(dir / "spec.json") << R"({"seed": 31, "n_datasets": 3, "samples_per_dataset": 120,
            "models": ["A", "B", "C"], "best_models": ["A", "B", "A"], "signal_mode": "prompt_keyword"})";
        std::ofstream(dir / "cfg.json") << R"({"world_dir": "world", "seed": 9,
            "train": {"max_iterations": 1500, "eval_every": 500}})";
        std::ofstream(dir / "ablation.json") << R"({"world_dir": "world", "seed": 9, "in_distribution": true,
            "train": {"max_iterations": 800, "eval_every": 400}})";
        for (const auto& step : steps) c.expect(run_in(dir, step), std::string(run) + ": `" + step + "` failed");
    }
    std::size_t compared = 0;
    for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
        if (!entry.is_regular_file()) continue;
        const fs::path rel = fs::relative(entry.path(), root / "a");
        if (rel == "cli.log") continue;
        const fs::path other = root / "b" / rel;
        c.expect(fs::exists(other), "missing in second run: " + rel.string());
        c.expect(fs::exists(other) && slurp(entry.path()) == slurp(other), "differs: " + rel.string());
        ++compared;
    }
    c.expect(slurp(root / "a" / "lodo" / "report.csv") == slurp(root / "a" / "rebuilt" / "report.csv"),
             "report rebuilt from fold artifacts differs");
    c.note(std::to_string(compared) + " files byte-identical across two runs");
    if (c.outcome().ok) fs::remove_all(root);
    return c.outcome();
}

}  // namespace

int main() {
    struct Criterion {
        const char* id;
        const char* name;
        double budget_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {"C1", "format fidelity", 5, format_fidelity},
        {"C2", "grammar fidelity", 1, grammar_fidelity},
        {"C3", "labeling oracle", 1, labeling_oracle},
        {"C4", "scoring oracles", 10, scoring_oracles},
        {"C5", "baseline ordering", 60, baseline_ordering},
        {"C6", "router learning", 120, router_learning},
        {"C7", "ablation directionality", 120, ablation_directionality},
        {"C8", "CLI determinism", 600, cli_determinism},
    };
    int failed = 0;
    for (const auto& crit : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = crit.run();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (secs > crit.budget_s) {
            out.ok = false;
            out.detail += " | over the " + fmt(crit.budget_s, 0) + " s budget";
        }
        std::cout << crit.id << ' ' << (out.ok ? "PASS" : "FAIL") << ' ' << crit.name << " (" << fmt(secs, 2) << " s)";
        if (!out.detail.empty()) std::cout << ": " << out.detail;
        std::cout << std::endl;
        failed += !out.ok;
    }
    return failed == 0 ? 0 : 1;
}
