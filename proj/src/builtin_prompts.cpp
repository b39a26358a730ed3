#include <initializer_list>

#include "vroute/prompt.hpp"

namespace vroute {
namespace {

std::vector<PromptTemplate> forms(std::initializer_list<const char*> texts) {
    std::vector<PromptTemplate> out;
    for (const char* t : texts) out.push_back(PromptTemplate::parse(t));
    return out;
}

DatasetPromptConfig make(std::string id, std::vector<PromptTemplate> questions, std::vector<PromptTemplate> options,
                         std::map<std::string, std::string> renames, std::vector<std::string> classes,
                         std::vector<std::string> keys) {
    DatasetPromptConfig c;
    c.config_id = std::move(id);
    c.question_forms = std::move(questions);
    c.option_forms = std::move(options);
    c.rename_map.entries = std::move(renames);
    c.class_names = std::move(classes);
    c.context_keys = std::move(keys);
    c.validate();
    return c;
}

const std::vector<std::string> kCifar100Classes = {
    "apple", "aquarium_fish", "baby", "bear", "beaver", "bed", "bee", "beetle", "bicycle", "bottle",
    "bowl", "boy", "bridge", "bus", "butterfly", "camel", "can", "castle", "caterpillar", "cattle",
    "chair", "chimpanzee", "clock", "cloud", "cockroach", "couch", "crab", "crocodile", "cup", "dinosaur",
    "dolphin", "elephant", "flatfish", "forest", "fox", "girl", "hamster", "house", "kangaroo", "keyboard",
    "lamp", "lawn_mower", "leopard", "lion", "lizard", "lobster", "man", "maple_tree", "motorcycle", "mountain",
    "mouse", "mushroom", "oak_tree", "orange", "orchid", "otter", "palm_tree", "pear", "pickup_truck", "pine_tree",
    "plain", "plate", "poppy", "porcupine", "possum", "rabbit", "raccoon", "ray", "road", "rocket",
    "rose", "sea", "seal", "shark", "shrew", "skunk", "skyscraper", "snail", "snake", "spider",
    "squirrel", "streetcar", "sunflower", "sweet_pepper", "table", "tank", "telephone", "television", "tiger", "tractor",
    "train", "trout", "tulip", "turtle", "wardrobe", "whale", "willow_tree", "wolf", "woman", "worm",
};

std::map<std::string, DatasetPromptConfig> build() {
    const auto class_options = [] {
        return forms({"{class_name}", "{rename_classes|class_name}", "{a_an,rename_classes|class_name}"});
    };
    const auto two_options = [] { return forms({"{class_name}", "{rename_classes|class_name}"}); };
    const auto vg_questions = [] { return forms({"", "{class_question} ", "This best describes the image: "}); };
    const auto abstract_questions = [] {
        return forms({"", "Question: {class_question} Answer: ",
                      "Using the image, the answer to {class_question} is most likely "});
    };

    std::map<std::string, DatasetPromptConfig> out;
    auto add = [&](DatasetPromptConfig c) { out.emplace(c.config_id, std::move(c)); };

    add(make("cifar100", forms({"", "This is ", "What is this? This is "}), class_options(),
             {{"aquarium_fish", "aquarium fish"},
              {"pickup_truck", "pickup truck"},
              {"lawn_mower", "lawn mower"},
              {"sweet_pepper", "pepper"},
              {"maple_tree", "maple"},
              {"oak_tree", "oak"},
              {"palm_tree", "palm"},
              {"pine_tree", "pine"},
              {"willow_tree", "willow"}},
             kCifar100Classes, {}));
    add(make("oodcv", forms({"", "This is ", "What is this? This is "}), class_options(),
             {{"aeroplane", "plane"}, {"diningtable", "table"}},
             {"car", "sofa", "train", "diningtable", "chair", "boat", "aeroplane", "motorbike", "bus", "bicycle"}, {}));
    add(make("weather", forms({"", "It is ", "The weather is "}), two_options(),
             {{"Sunrise", "sunrise"}, {"Cloudy", "cloudy"}, {"Shine", "sunny"}, {"Rain", "rainy"}},
             {"Sunrise", "Shine", "Rain", "Cloudy"}, {}));
    add(make("skin_cancer", forms({"", "This is ", "This skin is "}), two_options(),
             {{"melanoma", "cancerous"}, {"notmelanoma", "healthy"}}, {"melanoma", "notmelanoma"}, {}));
    add(make("hateful_memes",
             forms({"", "{text}. ", "{text}. This meme is ",
                    "This is an image of a meme. It contains the text: {text}. The meme is "}),
             two_options(), {{"not mean", "nice"}, {"mean", "mean"}}, {"not mean", "mean"}, {"text"}));
    add(make("scienceqa",
             forms({"", "{class_question} ", "{class_hint} {class_question} ", "Question: {class_hint} {class_question} ",
                    "{class_hint} Question: {class_question} "}),
             {}, {}, {}, {"class_question", "class_hint"}));
    add(make("vg_attribution", vg_questions(), {}, {}, {}, {"class_question"}));
    add(make("vg_relation", vg_questions(), {}, {}, {}, {"class_question"}));
    add(make("abstract_scenes_vqa", abstract_questions(), {}, {}, {}, {"class_question"}));
    add(make("binary_abstract_scenes", abstract_questions(), {}, {}, {}, {"class_question"}));
    return out;
}

}  // namespace

const std::map<std::string, DatasetPromptConfig>& builtin_prompt_configs() {
    static const std::map<std::string, DatasetPromptConfig> configs = build();
    return configs;
}

}  // namespace vroute
