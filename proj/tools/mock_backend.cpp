// Serves a mock backend over stdin/stdout using the line protocol in wire.hpp.

#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "vroute/io.hpp"
#include "vroute/mock_backends.hpp"
#include "vroute/wire.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Mock model server speaking the vroute wire protocol"};
    std::string kind = "random", family = "contrastive", world_dir;
    std::uint64_t seed = 0;
    std::size_t dim = 16;
    app.add_option("--kind", kind, "oracle|constant|random");
    app.add_option("--family", family, "contrastive|generative");
    app.add_option("--world", world_dir, "World directory (oracle only)");
    app.add_option("--seed", seed, "Seed for the random backend");
    app.add_option("--dim", dim, "Embedding width");
    CLI11_PARSE(app, argc, argv);

    try {
        std::optional<vroute::World> world;
        if (!world_dir.empty()) world = vroute::load_world(world_dir);
        const vroute::MockSpec spec{vroute::mock_kind_from_string(kind), vroute::model_family_from_string(family), seed, dim};
        auto backend = vroute::make_mock_backend(spec, world ? &*world : nullptr);
        std::ios::sync_with_stdio(false);
        vroute::WireServer(*backend).serve(std::cin, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "vroute-mock-backend: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
