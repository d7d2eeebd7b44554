#include "freebloom/app/pipeline.hpp"

#include "freebloom/app/hash.hpp"
#include "freebloom/app/render.hpp"
#include "freebloom/core/error.hpp"
#include "freebloom/denoiser/mixture.hpp"
#include "freebloom/denoiser/tiny_denoiser.hpp"
#include "freebloom/interpolation/interpolation.hpp"
#include "freebloom/noise/joint_noise.hpp"
#include "freebloom/scheduler/ddim.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <fstream>

namespace freebloom {

namespace {

enum StreamLabel : std::uint64_t {
    kNoiseLabel = 0x6e6f6973,   // "nois"
    kDenoiseLabel = 0x646e6f69, // "dnoi"
    kInterpLabel = 0x696e7470,  // "intp"
};

class Stopwatch {
public:
    double elapsed_ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string frame_name(const char* prefix, std::size_t index, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%03zu%s", prefix, index, ext);
    return buf;
}

} // namespace

std::vector<Tensor> PipelineResult::final_latents() const {
    std::vector<Tensor> out;
    out.reserve(frames.size());
    for (const auto& f : frames) {
        out.push_back(store.final_latent(f.id));
    }
    return out;
}

LatentVideo PipelineResult::key_frames() const {
    std::vector<Tensor> out;
    for (const auto& f : frames) {
        if (!f.interpolated) {
            out.push_back(store.final_latent(f.id));
        }
    }
    return LatentVideo(std::move(out));
}

std::unique_ptr<ChatClient> make_chat_client(const RunConfig& config) {
    if (config.director == "live") {
        HttpChatConfig http;
        http.endpoint = config.endpoint;
        http.model = config.model;
        http.api_key_env = config.api_key_env;
        return std::make_unique<HttpChatClient>(http);
    }
    const auto dir = config.fixture_dir.empty() ? default_fixture_dir() : std::filesystem::path(config.fixture_dir);
    if (auto fixture = find_fixture(dir, config.prompt, config.frames)) {
        return std::make_unique<MockChatClient>(std::move(*fixture));
    }
    spdlog::info("no director fixture for \"{}\" with {} frames in {}; using a synthesized transcript", config.prompt,
                 config.frames, dir.string());
    return std::make_unique<MockChatClient>(synthesize_transcript(config.prompt, config.frames));
}

std::unique_ptr<NoisePredictor> make_predictor(const RunConfig& config, const NoiseSchedule& schedule, int tau) {
    if (config.predictor == "analytic") {
        const std::size_t n = shape_size(config.frame_shape);
        MixtureSpec spec;
        if (config.mixture.empty()) {
            spec = default_mixture_spec(n, config.embed_dim, config.model_seed);
        } else {
            std::ifstream in(config.mixture);
            if (!in) {
                throw IoError("cannot open mixture spec " + config.mixture);
            }
            try {
                spec = MixtureSpec::from_json(nlohmann::json::parse(in));
            } catch (const nlohmann::json::parse_error& e) {
                throw InvalidArgument("mixture spec " + config.mixture + " is not valid JSON: " + e.what());
            }
        }
        if (spec.latent_size() != n || spec.embed_dim != config.embed_dim) {
            throw InvalidArgument("mixture spec does not match frame_shape / embed_dim");
        }
        return std::make_unique<AnalyticMixturePredictor>(std::move(spec), schedule);
    }
    TinyDenoiserConfig tiny;
    tiny.channels = config.frame_shape.front();
    tiny.embed_dim = config.embed_dim;
    tiny.weights_seed = config.model_seed;
    tiny.shift = ShiftPolicy{tau};
    return std::make_unique<TinyAttentionDenoiser>(tiny);
}

PipelineResult run_pipeline(const RunConfig& config, const ChatClient& client, const Tensor* seed_latent) {
    config.validate();
    if (config.interpolate > 0 && config.frames < 2) {
        throw InvalidArgument("interpolation needs at least two frames");
    }
    PipelineResult result;
    const RandomStream base(config.seed, 0);
    const NoiseMode mode = parse_noise_mode(config.noise_mode);

    Stopwatch director_clock;
    result.prompts = generate_serial_prompts(client, config.prompt, config.frames, config.embed_dim);
    result.timing_ms["director"] = director_clock.elapsed_ms();

    const NoiseSchedule schedule = default_schedule();
    const auto grid = inference_timesteps(schedule, config.steps);
    const int tau = threshold_for_fraction(grid, config.tau_frac);
    const MSchedule m_schedule{threshold_for_fraction(grid, config.tau_star_frac), config.m_low, config.m_high};
    const auto predictor = make_predictor(config, schedule, tau);

    Stopwatch generation_clock;
    if (seed_latent != nullptr) {
        if (seed_latent->shape() != config.frame_shape) {
            throw InvalidArgument("seed latent shape " + shape_to_string(seed_latent->shape()) +
                                  " does not match frame_shape " + shape_to_string(config.frame_shape));
        }
        result.unified =
            ddim_invert(*seed_latent, *predictor, result.prompts.embeddings.front(), schedule, config.steps);
        std::vector<Tensor> initial{result.unified};
        for (std::size_t i = 1; i < static_cast<std::size_t>(config.frames); ++i) {
            initial.push_back(
                sample_extension_noise(result.unified, config.lambda, mode, base.substream(kNoiseLabel).substream(i)));
        }
        result.initial = LatentVideo(std::move(initial));
    } else {
        const JointNoiseConfig noise_config{static_cast<std::size_t>(config.frames), config.frame_shape,
                                            config.lambda, mode};
        auto noise = sample_initial_noise(noise_config, base.substream(kNoiseLabel));
        result.unified = std::move(noise.unified);
        result.initial = std::move(noise.video);
    }

    result.store = TrajectoryStore(trajectory_timesteps(grid));
    ddim_sample(result.initial, *predictor, result.prompts.embeddings, schedule, grid,
                SamplerOptions{config.eta, AttentionMode::context}, base.substream(kDenoiseLabel), &result.store);
    for (std::size_t i = 0; i < static_cast<std::size_t>(config.frames); ++i) {
        FrameNode node;
        node.id = i;
        node.prompt = result.prompts.frame_prompts[i];
        node.embedding = result.prompts.embeddings[i];
        result.frames.push_back(std::move(node));
    }
    result.timing_ms["generation"] = generation_clock.elapsed_ms();

    Stopwatch interpolation_clock;
    std::size_t next_id = result.frames.size();
    for (int j = 0; j < config.interpolate; ++j) {
        const auto [p, q] = select_interpolation_pair(LatentVideo(result.final_latents()));
        const FrameNode& left = result.frames[p];
        const FrameNode& right = result.frames[q];

        InterpolationRequest req;
        req.left = left.id;
        req.right = right.id;
        req.k = config.k;
        req.left_embedding = left.embedding;
        req.right_embedding = right.embedding;
        req.store = &result.store;
        req.unified_noise = &result.unified;
        req.lambda = config.lambda;
        req.noise_mode = mode;
        req.depth = std::max(left.depth, right.depth) + 1;

        auto interp = dual_path_denoise(req, *predictor, schedule, m_schedule, config.eta, base.substream(kInterpLabel));

        FrameNode node;
        node.id = next_id++;
        node.embedding = std::move(interp.embedding);
        node.interpolated = true;
        node.left = req.left;
        node.right = req.right;
        node.depth = req.depth;
        node.k = req.k;
        result.store.insert(node.id, std::move(interp.trajectory));
        result.derivation.push_back(node.id);
        result.frames.insert(result.frames.begin() + static_cast<std::ptrdiff_t>(q), std::move(node));
    }
    result.timing_ms["interpolation"] = interpolation_clock.elapsed_ms();
    return result;
}

nlohmann::json RunManifest::to_json() const {
    nlohmann::json frames_json = nlohmann::json::array();
    for (const auto& f : frames) {
        frames_json.push_back({{"position", f.position},
                               {"id", f.id},
                               {"prompt", f.prompt},
                               {"interpolated", f.interpolated},
                               {"latent", f.latent},
                               {"trajectory", f.trajectory},
                               {"image", f.image}});
    }
    nlohmann::json tree = nlohmann::json::array();
    for (const auto& n : interpolations) {
        tree.push_back({{"id", n.id}, {"left", n.left}, {"right", n.right}, {"depth", n.depth}, {"k", n.k}});
    }
    nlohmann::json doc = {
        {"status", status},
        {"mode", mode},
        {"config", config.to_json()},
        {"prompts", {{"raw_prompt", raw_prompt}, {"frame_prompts", frame_prompts}}},
        {"frames", frames_json},
        {"interpolation_tree", tree},
        {"gif", gif},
        {"grid", grid},
        {"content_hash", content_hash},
        {"timing_ms", timing_ms},
    };
    if (!error.empty()) {
        doc["error"] = error;
    }
    if (!seed_latent_hash.empty()) {
        doc["seed_latent_hash"] = seed_latent_hash;
    }
    return doc;
}

RunManifest RunManifest::from_json(const nlohmann::json& doc) {
    RunManifest m;
    try {
        m.status = doc.at("status").get<std::string>();
        m.mode = doc.at("mode").get<std::string>();
        m.error = doc.value("error", std::string());
        m.config = RunConfig::from_json(doc.at("config"));
        m.raw_prompt = doc.at("prompts").at("raw_prompt").get<std::string>();
        m.frame_prompts = doc.at("prompts").at("frame_prompts").get<std::vector<std::string>>();
        for (const auto& f : doc.at("frames")) {
            m.frames.push_back({f.at("position").get<std::size_t>(), f.at("id").get<std::size_t>(),
                                f.at("prompt").get<std::string>(), f.at("interpolated").get<bool>(),
                                f.at("latent").get<std::string>(), f.at("trajectory").get<std::string>(),
                                f.at("image").get<std::string>()});
        }
        for (const auto& n : doc.at("interpolation_tree")) {
            m.interpolations.push_back({n.at("id").get<std::size_t>(), n.at("left").get<std::size_t>(),
                                        n.at("right").get<std::size_t>(), n.at("depth").get<std::size_t>(),
                                        n.at("k").get<double>()});
        }
        m.gif = doc.at("gif").get<std::string>();
        m.grid = doc.at("grid").get<std::string>();
        m.content_hash = doc.at("content_hash").get<std::string>();
        m.seed_latent_hash = doc.value("seed_latent_hash", std::string());
        m.timing_ms = doc.at("timing_ms").get<std::map<std::string, double>>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("malformed manifest: ") + e.what());
    }
    return m;
}

RunManifest RunManifest::load(const std::filesystem::path& run_dir) {
    const auto path = run_dir / "manifest.json";
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidArgument(path.string() + " is not valid JSON: " + e.what());
    }
}

void RunManifest::save(const std::filesystem::path& run_dir) const {
    const auto path = run_dir / "manifest.json";
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << to_json().dump(2) << '\n';
}

nlohmann::json manifest_fingerprint(const RunManifest& manifest) {
    auto doc = manifest.to_json();
    doc.erase("timing_ms");
    doc["config"].erase("out");
    return doc;
}

void render_outputs(RunManifest& manifest, const std::filesystem::path& run_dir) {
    std::filesystem::create_directories(run_dir / "frames");
    std::vector<GrayImage> images;
    for (auto& frame : manifest.frames) {
        const auto latent = read_latent_file(run_dir / frame.latent);
        images.push_back(upscale_nearest(latent_to_gray(latent), 16));
        frame.image = (std::filesystem::path("frames") / frame_name("frame", frame.position, ".png")).generic_string();
        write_png(run_dir / frame.image, images.back());
    }
    manifest.gif = "video.gif";
    write_gif(run_dir / manifest.gif, images, 10);
    manifest.grid = "grid.png";
    write_png(run_dir / manifest.grid, side_by_side(images));
}

bool verify_manifest(const std::filesystem::path& run_dir) {
    const auto manifest = RunManifest::load(run_dir);
    if (manifest.status != "ok") {
        return false;
    }
    std::vector<Tensor> latents;
    for (const auto& frame : manifest.frames) {
        latents.push_back(read_latent_file(run_dir / frame.latent));
    }
    return latent_content_hash(latents) == manifest.content_hash;
}

namespace {

RunManifest write_run(const RunConfig& config, const ChatClient& client, const Tensor* seed_latent) {
    if (config.out.empty()) {
        throw InvalidArgument("config: out must name the run directory");
    }
    const std::filesystem::path dir(config.out);
    Stopwatch total;
    RunManifest manifest;
    manifest.config = config;
    manifest.raw_prompt = config.prompt;
    if (seed_latent != nullptr) {
        manifest.mode = "image-move";
        manifest.seed_latent_hash = latent_content_hash(std::span<const Tensor>(seed_latent, 1));
    }
    try {
        config.validate();
        std::filesystem::create_directories(dir);
        config.save(dir / "config.json");

        const auto result = run_pipeline(config, client, seed_latent);
        manifest.frame_prompts = result.prompts.frame_prompts;
        manifest.timing_ms = result.timing_ms;

        std::filesystem::create_directories(dir / "latents");
        result.store.save(dir / "trajectories");
        for (std::size_t pos = 0; pos < result.frames.size(); ++pos) {
            const auto& node = result.frames[pos];
            FrameRecord rec;
            rec.position = pos;
            rec.id = node.id;
            rec.prompt = node.prompt;
            rec.interpolated = node.interpolated;
            rec.latent = (std::filesystem::path("latents") / frame_name("frame", node.id, ".lat")).generic_string();
            rec.trajectory = TrajectoryStore::frame_file("trajectories", node.id).generic_string();
            write_latent_file(dir / rec.latent, result.store.final_latent(node.id));
            manifest.frames.push_back(std::move(rec));
        }
        for (std::size_t id : result.derivation) {
            const auto it = std::find_if(result.frames.begin(), result.frames.end(),
                                         [id](const FrameNode& n) { return n.id == id; });
            manifest.interpolations.push_back({id, it->left, it->right, it->depth, it->k});
        }
        manifest.content_hash = latent_content_hash(result.final_latents());

        Stopwatch render_clock;
        render_outputs(manifest, dir);
        manifest.timing_ms["render"] = render_clock.elapsed_ms();
        manifest.timing_ms["total"] = total.elapsed_ms();
        manifest.save(dir);
    } catch (const std::exception& e) {
        manifest.status = "failed";
        manifest.error = e.what();
        manifest.timing_ms["total"] = total.elapsed_ms();
        try {
            std::filesystem::create_directories(dir);
            manifest.save(dir);
        } catch (const std::exception& nested) {
            spdlog::error("could not write failed manifest: {}", nested.what());
        }
        throw;
    }
    return manifest;
}

} // namespace

RunManifest generate_video(const RunConfig& config) {
    config.validate();
    const auto client = make_chat_client(config);
    return generate_video(config, *client);
}

RunManifest generate_video(const RunConfig& config, const ChatClient& client) {
    return write_run(config, client, nullptr);
}

RunManifest make_image_move(const Tensor& seed_latent, const std::string& prompt, const RunConfig& config) {
    RunConfig c = config;
    c.prompt = prompt;
    c.validate();
    const auto client = make_chat_client(c);
    return make_image_move(seed_latent, prompt, c, *client);
}

RunManifest make_image_move(const Tensor& seed_latent, const std::string& prompt, const RunConfig& config,
                            const ChatClient& client) {
    RunConfig c = config;
    c.prompt = prompt;
    return write_run(c, client, &seed_latent);
}

} // namespace freebloom
