#pragma once

#include "freebloom/app/config.hpp"
#include "freebloom/core/schedule.hpp"
#include "freebloom/denoiser/predictor.hpp"
#include "freebloom/director/chat_client.hpp"
#include "freebloom/director/director.hpp"
#include "freebloom/noise/latent_video.hpp"
#include "freebloom/scheduler/trajectory.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace freebloom {

/// One output frame. Key frames come from the director; interpolated frames
/// record the pair they were derived from.
struct FrameNode {
    std::size_t id = 0;
    std::string prompt;  // empty for interpolated frames
    Embedding embedding;
    bool interpolated = false;
    std::size_t left = 0;
    std::size_t right = 0;
    std::size_t depth = 0;
    double k = 0.0;
};

struct PipelineResult {
    PromptSequence prompts;
    Tensor unified;           // shared noise component (the inverted latent for image-move)
    LatentVideo initial;      // key-frame initial noise
    TrajectoryStore store;    // every frame, keyed by FrameNode::id
    std::vector<FrameNode> frames;          // temporal order
    std::vector<std::size_t> derivation;    // ids of interpolated frames in creation order
    std::map<std::string, double> timing_ms;

    std::vector<Tensor> final_latents() const;  // temporal order
    LatentVideo key_frames() const;             // final latents of the key frames, in order
};

std::unique_ptr<ChatClient> make_chat_client(const RunConfig& config);
std::unique_ptr<NoisePredictor> make_predictor(const RunConfig& config, const NoiseSchedule& schedule, int tau);

/// The three stages in memory: serial prompting, joint-noise lockstep
/// denoising, then `interpolate` dual-path insertions at the most distant
/// adjacent pair. With a seed latent, frame 0's initial noise is its DDIM
/// inversion under the first prompt and the other frames extend that latent.
PipelineResult run_pipeline(const RunConfig& config, const ChatClient& client, const Tensor* seed_latent = nullptr);

struct FrameRecord {
    std::size_t position = 0;
    std::size_t id = 0;
    std::string prompt;
    bool interpolated = false;
    std::string latent;      // paths relative to the run directory
    std::string trajectory;
    std::string image;
};

struct InterpolationRecord {
    std::size_t id = 0;
    std::size_t left = 0;
    std::size_t right = 0;
    std::size_t depth = 0;
    double k = 0.0;
};

struct RunManifest {
    std::string status = "ok";  // ok | failed
    std::string mode = "generate";  // generate | image-move
    std::string error;
    RunConfig config;
    std::string raw_prompt;
    std::vector<std::string> frame_prompts;
    std::vector<FrameRecord> frames;              // temporal order
    std::vector<InterpolationRecord> interpolations;  // derivation order
    std::string gif;
    std::string grid;
    std::string content_hash;
    std::string seed_latent_hash;
    std::map<std::string, double> timing_ms;

    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& doc);
    static RunManifest load(const std::filesystem::path& run_dir);
    void save(const std::filesystem::path& run_dir) const;
};

/// Manifest content that must match between runs with the same config and
/// seed: everything except timing and the output directory.
nlohmann::json manifest_fingerprint(const RunManifest& manifest);

/// Runs the pipeline and writes config.json, manifest.json, latents/,
/// trajectories/, frames/, video.gif and grid.png under config.out. On failure
/// a manifest with status "failed" is written before the error propagates.
RunManifest generate_video(const RunConfig& config);
RunManifest generate_video(const RunConfig& config, const ChatClient& client);

RunManifest make_image_move(const Tensor& seed_latent, const std::string& prompt, const RunConfig& config);
RunManifest make_image_move(const Tensor& seed_latent, const std::string& prompt, const RunConfig& config,
                            const ChatClient& client);

/// Writes one PNG per frame, the GIF and the grid from the latent files.
void render_outputs(RunManifest& manifest, const std::filesystem::path& run_dir);

/// Recomputes the content hash from the latent files on disk.
bool verify_manifest(const std::filesystem::path& run_dir);

} // namespace freebloom
