#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "vroute/scoring.hpp"
#include "vroute/world.hpp"

namespace vroute {

enum class MockKind { oracle, constant, random };

std::string to_string(MockKind k);
MockKind mock_kind_from_string(const std::string& text);

struct MockSpec {
    MockKind kind = MockKind::constant;
    ModelFamily family = ModelFamily::contrastive;
    std::uint64_t seed = 0;
    std::size_t dim = 16;  // constant/random contrastive width
};

/// Test doubles for the backend contract:
///   oracle   - knows every gold prompt of the world and always scores it highest
///   constant - identical scores for every option, so the tie rule picks index 0
///   random   - seeded Gaussian embeddings / exponential token costs, stable per input
/// `world` is required for the oracle and ignored otherwise.
std::unique_ptr<Backend> make_mock_backend(const MockSpec& spec, const World* world = nullptr);

}  // namespace vroute
