#include "freebloom/app/config.hpp"

#include "freebloom/core/error.hpp"
#include "freebloom/core/schedule.hpp"

#include <fstream>
#include <regex>
#include <set>
#include <sstream>

namespace freebloom {

namespace {

bool in_unit_interval(double x) { return x >= 0.0 && x <= 1.0; }

template <typename T>
void read_key(const nlohmann::json& doc, const char* key, T& field) {
    if (const auto it = doc.find(key); it != doc.end()) {
        try {
            field = it->get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw InvalidArgument(std::string("config key '") + key + "' has the wrong type: " + e.what());
        }
    }
}

} // namespace

void RunConfig::validate() const {
    if (prompt.empty()) {
        throw InvalidArgument("config: prompt must not be empty");
    }
    if (frames < 1) {
        throw InvalidArgument("config: frames must be at least 1");
    }
    if (frame_shape.empty()) {
        throw InvalidArgument("config: frame_shape must not be empty");
    }
    for (auto d : frame_shape) {
        if (d == 0) {
            throw InvalidArgument("config: frame_shape entries must be positive");
        }
    }
    if (!in_unit_interval(lambda)) {
        throw InvalidArgument("config: lambda must lie in [0, 1]");
    }
    if (noise_mode != "trig" && noise_mode != "linear" && noise_mode != "linear-ablation") {
        throw InvalidArgument("config: noise_mode must be trig or linear-ablation, got '" + noise_mode + "'");
    }
    if (!(tau_frac > 0.0 && tau_frac <= 1.0) || !(tau_star_frac > 0.0 && tau_star_frac <= 1.0)) {
        throw InvalidArgument("config: tau_frac and tau_star_frac must lie in (0, 1]");
    }
    if (!(in_unit_interval(m_low) && in_unit_interval(m_high) && m_low <= m_high)) {
        throw InvalidArgument("config: need 0 <= m_low <= m_high <= 1");
    }
    if (!in_unit_interval(k)) {
        throw InvalidArgument("config: k must lie in [0, 1]");
    }
    if (steps < 1 || steps > default_schedule().steps()) {
        throw InvalidArgument("config: steps must lie in [1, " + std::to_string(default_schedule().steps()) + "]");
    }
    if (!in_unit_interval(eta)) {
        throw InvalidArgument("config: eta must lie in [0, 1]");
    }
    if (interpolate < 0 || interpolate > 256) {
        throw InvalidArgument("config: interpolate must lie in [0, 256]");
    }
    if (director != "mock" && director != "live") {
        throw InvalidArgument("config: director must be mock or live, got '" + director + "'");
    }
    if (predictor != "tiny" && predictor != "analytic") {
        throw InvalidArgument("config: predictor must be tiny or analytic, got '" + predictor + "'");
    }
    if (embed_dim < 2) {
        throw InvalidArgument("config: embed_dim must be at least 2");
    }
    if (predictor == "tiny") {
        if (frame_shape.size() != 3 || frame_shape[1] % 4 != 0 || frame_shape[2] % 4 != 0) {
            throw InvalidArgument("config: the tiny predictor needs a CxHxW frame_shape with H and W divisible by 4");
        }
    }
}

nlohmann::json RunConfig::to_json() const {
    return {
        {"prompt", prompt},
        {"frames", frames},
        {"frame_shape", frame_shape},
        {"lambda", lambda},
        {"noise_mode", noise_mode},
        {"tau_frac", tau_frac},
        {"tau_star_frac", tau_star_frac},
        {"m_low", m_low},
        {"m_high", m_high},
        {"k", k},
        {"steps", steps},
        {"eta", eta},
        {"seed", seed},
        {"model_seed", model_seed},
        {"interpolate", interpolate},
        {"director", director},
        {"fixture_dir", fixture_dir},
        {"endpoint", endpoint},
        {"model", model},
        {"api_key_env", api_key_env},
        {"predictor", predictor},
        {"mixture", mixture},
        {"embed_dim", embed_dim},
        {"out", out},
    };
}

RunConfig RunConfig::from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) {
        throw InvalidArgument("config must be a JSON object");
    }
    RunConfig c;
    const auto known = c.to_json();
    for (const auto& [key, value] : doc.items()) {
        if (!known.contains(key)) {
            throw InvalidArgument("config: unknown key '" + key + "'");
        }
    }
    read_key(doc, "prompt", c.prompt);
    read_key(doc, "frames", c.frames);
    read_key(doc, "frame_shape", c.frame_shape);
    read_key(doc, "lambda", c.lambda);
    read_key(doc, "noise_mode", c.noise_mode);
    read_key(doc, "tau_frac", c.tau_frac);
    read_key(doc, "tau_star_frac", c.tau_star_frac);
    read_key(doc, "m_low", c.m_low);
    read_key(doc, "m_high", c.m_high);
    read_key(doc, "k", c.k);
    read_key(doc, "steps", c.steps);
    read_key(doc, "eta", c.eta);
    read_key(doc, "seed", c.seed);
    read_key(doc, "model_seed", c.model_seed);
    read_key(doc, "interpolate", c.interpolate);
    read_key(doc, "director", c.director);
    read_key(doc, "fixture_dir", c.fixture_dir);
    read_key(doc, "endpoint", c.endpoint);
    read_key(doc, "model", c.model);
    read_key(doc, "api_key_env", c.api_key_env);
    read_key(doc, "predictor", c.predictor);
    read_key(doc, "mixture", c.mixture);
    read_key(doc, "embed_dim", c.embed_dim);
    read_key(doc, "out", c.out);
    return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config " + path.string());
    }
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidArgument("config " + path.string() + " is not valid JSON: " + e.what());
    }
}

void RunConfig::save(const std::filesystem::path& path) const {
    std::ofstream out_file(path);
    if (!out_file) {
        throw IoError("cannot write config " + path.string());
    }
    out_file << to_json().dump(2) << '\n';
}

std::filesystem::path default_fixture_dir() {
#ifdef FREEBLOOM_FIXTURE_DIR
    return FREEBLOOM_FIXTURE_DIR;
#else
    return "data/fixtures";
#endif
}

Shape parse_shape(const std::string& text) {
    static const std::regex pattern(R"(^\d+(x\d+)*$)");
    if (!std::regex_match(text, pattern)) {
        throw InvalidArgument("bad shape '" + text + "': expected e.g. 1x16x16");
    }
    Shape shape;
    std::stringstream in(text);
    for (std::string part; std::getline(in, part, 'x');) {
        try {
            std::size_t used = 0;
            const long v = std::stol(part, &used);
            if (used != part.size() || v <= 0) {
                throw InvalidArgument("");
            }
            shape.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw InvalidArgument("bad shape '" + text + "': expected e.g. 1x16x16");
        }
    }
    if (shape.empty()) {
        throw InvalidArgument("bad shape '" + text + "': expected e.g. 1x16x16");
    }
    return shape;
}

} // namespace freebloom
