#pragma once

#include "freebloom/core/tensor.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

namespace freebloom {

/// Everything that determines a run. Serialised as one flat JSON object;
/// missing keys take the defaults below and unknown keys are rejected.
struct RunConfig {
    std::string prompt;
    int frames = 6;
    Shape frame_shape{1, 16, 16};
    double lambda = 0.5;
    std::string noise_mode = "trig";
    double tau_frac = 0.8;
    double tau_star_frac = 0.5;
    double m_low = 0.1;
    double m_high = 1.0;
    double k = 0.5;
    int steps = 50;
    double eta = 0.0;
    std::uint64_t seed = 42;
    std::uint64_t model_seed = 1234;
    int interpolate = 0;
    std::string director = "mock";  // mock | live
    std::string fixture_dir;         // empty: built-in fixture directory
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string model = "gpt-3.5-turbo";
    std::string api_key_env = "FREEBLOOM_API_KEY";
    std::string predictor = "tiny";  // tiny | analytic
    std::string mixture;             // mixture spec JSON; empty: generated from model_seed
    std::size_t embed_dim = 64;
    std::string out;

    void validate() const;
    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& doc);
    static RunConfig load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Directory holding the checked-in director transcripts.
std::filesystem::path default_fixture_dir();

/// "1x16x16" -> {1, 16, 16}.
Shape parse_shape(const std::string& text);

} // namespace freebloom
