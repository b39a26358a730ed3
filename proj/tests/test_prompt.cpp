#include <filesystem>

#include "doctest.h"
#include "vroute/errors.hpp"
#include "vroute/io.hpp"
#include "vroute/prompt.hpp"

using namespace vroute;

namespace {

const DatasetPromptConfig& builtin(const std::string& id) { return builtin_prompt_configs().at(id); }

Sample sample_with(std::vector<std::string> options, std::map<std::string, std::string> context = {}) {
    Sample s;
    s.sample_id = "s0";
    s.dataset_id = "d";
    s.response_options = std::move(options);
    s.context = std::move(context);
    return s;
}

}  // namespace

TEST_CASE("apply_rename") {
    const auto& cifar = builtin("cifar100").rename_map;
    CHECK(apply_rename("aquarium_fish", cifar) == "aquarium fish");
    CHECK(apply_rename("beaver", cifar) == "beaver");
    CHECK(apply_rename("aeroplane", builtin("oodcv").rename_map) == "plane");
}

TEST_CASE("article_for") {
    CHECK(article_for("aquarium fish") == "an");
    CHECK(article_for("beaver") == "a");
    CHECK(article_for("oak") == "an");
    CHECK(article_for("Umbrella") == "an");
    CHECK(article_for("\"apple\"") == "an");
    CHECK(article_for("hour", {{"hour", "an"}}) == "an");
    CHECK_THROWS_AS(article_for(""), InvalidInput);
}

TEST_CASE("render examples") {
    const auto& cifar = builtin("cifar100");
    const Sample s = sample_with({"aquarium_fish"});
    CHECK(render(PromptTemplate::parse("What is this? This is {a_an, rename_classes | class_name}"), s, cifar,
                 "aquarium_fish") == "What is this? This is an aquarium fish");
    CHECK(render(PromptTemplate::parse("What is this? This is {a_an,rename_classes|class_name}"), s, cifar,
                 "aquarium_fish") == "What is this? This is an aquarium fish");
    CHECK(render(PromptTemplate::parse(""), s, cifar) == "");

    const auto& abstract = builtin("abstract_scenes_vqa");
    const Sample q = sample_with({"yes", "no"}, {{"class_question", "Is the dog asleep?"}});
    CHECK(render(PromptTemplate::parse("Question: {class_question} Answer: "), q, abstract) ==
          "Question: Is the dog asleep? Answer: ");

    // The article follows the renamed phrase, not the original.
    CHECK(render(PromptTemplate::parse("{a_an,rename_classes|class_name}"), s, builtin("oodcv"), "aeroplane") ==
          "a plane");
    CHECK(render(PromptTemplate::parse("{a_an|class_name}"), s, builtin("oodcv"), "aeroplane") == "an aeroplane");
    CHECK(render(PromptTemplate::parse("{{literal}}"), s, cifar) == "{literal}");
}

TEST_CASE("render errors name the missing key") {
    const auto& abstract = builtin("abstract_scenes_vqa");
    try {
        (void)render(PromptTemplate::parse("Question: {class_question}"), sample_with({"yes"}), abstract);
        FAIL("expected a render error");
    } catch (const RenderError& e) {
        CHECK(e.key() == "class_question");
    }
    CHECK_THROWS_AS((void)render(PromptTemplate::parse("{class_name}"), sample_with({"x"}), builtin("cifar100")),
                    RenderError);
}

TEST_CASE("template parse errors") {
    CHECK_THROWS_AS(PromptTemplate::parse("This is {class_name"), ParseError);
    CHECK_THROWS_AS(PromptTemplate::parse("This is {plural|class_name}"), ParseError);
    CHECK_THROWS_AS(PromptTemplate::parse("This is {a_an|}"), ParseError);
    CHECK_THROWS_AS(PromptTemplate::parse("stray }"), ParseError);
    const auto t = PromptTemplate::parse("x {a_an,rename_classes|class_name} y");
    REQUIRE(t.segments().size() == 3);
    REQUIRE(t.segments()[1].tag);
    CHECK(t.segments()[1].tag->a_an);
    CHECK(t.segments()[1].tag->rename_classes);
    CHECK(t.segments()[1].tag->key == "class_name");
    CHECK(t.uses_class_name());
}

TEST_CASE("variant counts for every shipped config") {
    const std::map<std::string, std::size_t> expected{
        {"cifar100", 9},          {"oodcv", 9},
        {"weather", 6},           {"skin_cancer", 6},
        {"hateful_memes", 8},     {"scienceqa", 5},
        {"vg_attribution", 3},    {"vg_relation", 3},
        {"abstract_scenes_vqa", 3}, {"binary_abstract_scenes", 3}};
    CHECK(builtin_prompt_configs().size() == expected.size());
    for (const auto& [id, count] : expected) {
        CAPTURE(id);
        const auto& config = builtin(id);
        CHECK_NOTHROW(config.validate());
        const auto variants = prompt_variants(config);
        CHECK(variants.size() == count);
        CHECK(config.variant_count() == count);
        std::set<std::string> ids;
        for (const auto& v : variants) ids.insert(v.id);
        CHECK(ids.size() == count);
    }
    const auto v = prompt_variants(builtin("cifar100"));
    CHECK(v.front().id == "q0o0");
    CHECK(v[5].id == "q1o2");
    CHECK(v.back().id == "q2o2");
    CHECK(prompt_variants(builtin("scienceqa"))[4].id == "q4o0");
}

TEST_CASE("closed_prompt_set examples") {
    const auto& cifar = builtin("cifar100");
    const auto variants = prompt_variants(cifar);
    const Sample s = sample_with({"beaver", "aquarium_fish"});
    const auto prompts = closed_prompt_set(s, cifar, find_variant(variants, "q1o2"));
    CHECK(prompts == std::vector<std::string>{"This is a beaver", "This is an aquarium fish"});

    DatasetPromptConfig binary;
    binary.config_id = "binary";
    binary.question_forms = {PromptTemplate::parse("")};
    CHECK(closed_prompt_set(sample_with({"yes", "no"}), binary, prompt_variants(binary).front()) ==
          std::vector<std::string>{"yes", "no"});
    CHECK(has_empty_question(binary, prompt_variants(binary).front()));
}

TEST_CASE("100-class CIFAR prompts follow the class list") {
    const auto& cifar = builtin("cifar100");
    REQUIRE(cifar.class_names.size() == 100);
    const Sample s = sample_with(cifar.class_names);
    for (const auto& variant : prompt_variants(cifar)) {
        const auto prompts = closed_prompt_set(s, cifar, variant);
        REQUIRE(prompts.size() == 100);
        std::set<std::string> unique(prompts.begin(), prompts.end());
        CHECK(unique.size() == 100);  // renames are injective
        const std::string question = render(cifar.question_forms[variant.question_index], s, cifar);
        for (std::size_t i = 0; i < prompts.size(); ++i) {
            CHECK(prompts[i].starts_with(question));
            const std::string option = prompts[i].substr(question.size());
            // Recompute the option text from the fixture directly.
            const std::string& cls = cifar.class_names[i];
            const auto it = cifar.rename_map.entries.find(cls);
            const std::string renamed = it == cifar.rename_map.entries.end() ? cls : it->second;
            const std::string expected = *variant.option_index == 0   ? cls
                                         : *variant.option_index == 1 ? renamed
                                         : (std::string("aeiouAEIOU").find(renamed[0]) != std::string::npos ? "an " : "a ") + renamed;
            CHECK(option == expected);
        }
    }
}

TEST_CASE("shipped exemplar strings") {
    const auto& oodcv = builtin("oodcv");
    CHECK(oodcv.class_names ==
          std::vector<std::string>{"car", "sofa", "train", "diningtable", "chair", "boat", "aeroplane", "motorbike",
                                   "bus", "bicycle"});
    const Sample s = sample_with(oodcv.class_names);
    const auto parts = closed_prompt_parts(s, oodcv, find_variant(prompt_variants(oodcv), "q2o2"));
    CHECK(parts.question == "What is this? This is ");
    CHECK(parts.options == std::vector<std::string>{"a car", "a sofa", "a train", "a table", "a chair", "a boat",
                                                    "a plane", "a motorbike", "a bus", "a bicycle"});

    const auto& weather = builtin("weather");
    const auto w = closed_prompt_set(sample_with({"Shine", "Rain"}), weather, find_variant(prompt_variants(weather), "q2o1"));
    CHECK(w == std::vector<std::string>{"The weather is sunny", "The weather is rainy"});

    const auto& memes = builtin("hateful_memes");
    const auto m = closed_prompt_set(sample_with({"not mean", "mean"}, {{"text", "hello"}}), memes,
                                     find_variant(prompt_variants(memes), "q2o1"));
    CHECK(m == std::vector<std::string>{"hello. This meme is nice", "hello. This meme is mean"});
}

TEST_CASE("closed_prompt_set preserves option order under permutation") {
    const auto& skin = builtin("skin_cancer");
    const auto variant = find_variant(prompt_variants(skin), "q2o1");
    const auto a = closed_prompt_set(sample_with({"melanoma", "notmelanoma"}), skin, variant);
    const auto b = closed_prompt_set(sample_with({"notmelanoma", "melanoma"}), skin, variant);
    CHECK(a[0] == b[1]);
    CHECK(a[1] == b[0]);
    CHECK(a[0] == "This skin is cancerous");
}

TEST_CASE("config validation and file round trip") {
    DatasetPromptConfig bad;
    bad.config_id = "bad";
    CHECK_THROWS(bad.validate());  // no question forms
    bad.question_forms = {PromptTemplate::parse("{class_question}")};
    CHECK_THROWS(bad.validate());  // undeclared key
    bad.context_keys = {"class_question"};
    CHECK_NOTHROW(bad.validate());
    bad.rename_map.entries = {{"x", ""}};
    CHECK_THROWS(bad.validate());

    const auto path = std::filesystem::temp_directory_path() / "vroute_test_prompt_configs.json";
    write_prompt_configs(path, builtin_prompt_configs());
    CHECK(read_prompt_configs(path) == builtin_prompt_configs());
    std::filesystem::remove(path);
}
