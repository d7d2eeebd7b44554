#include "freebloom/app/config.hpp"
#include "freebloom/app/hash.hpp"
#include "freebloom/app/pipeline.hpp"
#include "freebloom/core/error.hpp"
#include "freebloom/core/random.hpp"
#include "freebloom/director/director.hpp"
#include "freebloom/noise/joint_noise.hpp"
#include "freebloom/scheduler/trajectory.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <iostream>
#include <optional>

using namespace freebloom;

namespace {

int exit_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::invalid_argument: return 2;
    case ErrorKind::transport: return 3;
    case ErrorKind::numeric_domain: return 4;
    case ErrorKind::parse: return 5;
    default: return 1;
    }
}

// Options shared by generate and image-move. Only flags the user actually
// passed override the config file.
struct RunOptions {
    std::string config_file;
    std::optional<std::string> prompt;
    std::optional<int> frames;
    std::optional<std::string> frame_shape;
    std::optional<double> lambda;
    std::optional<std::string> noise_mode;
    std::optional<double> tau_frac;
    std::optional<double> tau_star_frac;
    std::optional<double> m_low;
    std::optional<double> m_high;
    std::optional<double> k;
    std::optional<int> steps;
    std::optional<double> eta;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> model_seed;
    std::optional<int> interpolate;
    std::optional<std::string> director;
    std::optional<std::string> fixtures;
    std::optional<std::string> endpoint;
    std::optional<std::string> model;
    std::optional<std::string> api_key_env;
    std::optional<std::string> predictor;
    std::optional<std::string> mixture;
    std::optional<std::size_t> embed_dim;
    std::optional<std::string> out;

    void attach(CLI::App& app) {
        app.add_option("--config", config_file, "Run config JSON; flags override its values")->check(CLI::ExistingFile);
        app.add_option("--frames", frames, "Key frames requested from the director");
        app.add_option("--frame-shape", frame_shape, "Latent shape, e.g. 1x16x16");
        app.add_option("--lambda", lambda, "Joint-noise independence weight in [0, 1]");
        app.add_option("--noise-mode", noise_mode, "trig | linear-ablation");
        app.add_option("--tau-frac", tau_frac, "Fraction of steps using contextual attention");
        app.add_option("--tau-star-frac", tau_star_frac, "Fraction of steps using the low interpolation weight");
        app.add_option("--m-low", m_low, "Denoising-path weight early in interpolation");
        app.add_option("--m-high", m_high, "Denoising-path weight late in interpolation");
        app.add_option("--k", k, "Interpolation weight on the earlier frame");
        app.add_option("--steps", steps, "DDIM inference steps");
        app.add_option("--eta", eta, "DDIM stochasticity");
        app.add_option("--seed", seed, "Run seed");
        app.add_option("--model-seed", model_seed, "Seed of the predictor weights / mixture");
        app.add_option("--interpolate", interpolate, "Number of interpolated frames");
        app.add_option("--director", director, "mock | live");
        app.add_option("--fixtures", fixtures, "Directory of director transcripts for mock mode");
        app.add_option("--endpoint", endpoint, "Chat-completions URL for live mode");
        app.add_option("--model", model, "Chat model name for live mode");
        app.add_option("--api-key-env", api_key_env, "Environment variable holding the API key");
        app.add_option("--predictor", predictor, "tiny | analytic");
        app.add_option("--mixture", mixture, "Mixture spec JSON for the analytic predictor");
        app.add_option("--embed-dim", embed_dim, "Prompt embedding dimension");
        app.add_option("--out", out, "Run output directory");
    }

    RunConfig resolve() const {
        RunConfig c = config_file.empty() ? RunConfig{} : RunConfig::load(config_file);
        auto set = [](auto& field, const auto& opt) {
            if (opt) {
                field = *opt;
            }
        };
        set(c.prompt, prompt);
        set(c.frames, frames);
        if (frame_shape) {
            c.frame_shape = parse_shape(*frame_shape);
        }
        set(c.lambda, lambda);
        set(c.noise_mode, noise_mode);
        set(c.tau_frac, tau_frac);
        set(c.tau_star_frac, tau_star_frac);
        set(c.m_low, m_low);
        set(c.m_high, m_high);
        set(c.k, k);
        set(c.steps, steps);
        set(c.eta, eta);
        set(c.seed, seed);
        set(c.model_seed, model_seed);
        set(c.interpolate, interpolate);
        set(c.director, director);
        set(c.fixture_dir, fixtures);
        set(c.endpoint, endpoint);
        set(c.model, model);
        set(c.api_key_env, api_key_env);
        set(c.predictor, predictor);
        set(c.mixture, mixture);
        set(c.embed_dim, embed_dim);
        set(c.out, out);
        return c;
    }
};

void print_summary(const RunManifest& m, const std::string& out) {
    std::cout << "wrote " << m.frames.size() << " frames to " << out << "\n"
              << "content hash " << m.content_hash << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Zero-shot text-to-video toy pipeline"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Debug logging");

    RunOptions gen_opts;
    auto* gen = app.add_subcommand("generate", "Generate a video from a text prompt");
    gen->add_option("--prompt", gen_opts.prompt, "Text prompt");
    gen_opts.attach(*gen);

    RunOptions move_opts;
    std::string move_input;
    auto* move = app.add_subcommand("image-move", "Animate a seed latent");
    move->add_option("--input", move_input, "Seed latent file")->required()->check(CLI::ExistingFile);
    move->add_option("--prompt", move_opts.prompt, "Text prompt");
    move_opts.attach(*move);

    double nr_lambda = 0.5;
    std::string nr_mode = "trig";
    std::size_t nr_samples = 10000;
    std::size_t nr_frames = 4;
    std::size_t nr_n = 8;
    std::uint64_t nr_seed = 0;
    auto* report = app.add_subcommand("noise-report", "Empirical moments of the joint noise law");
    report->add_option("--lambda", nr_lambda, "Independence weight")->capture_default_str();
    report->add_option("--mode", nr_mode, "trig | linear")->capture_default_str();
    report->add_option("--samples", nr_samples, "Number of samples")->capture_default_str();
    report->add_option("--frames", nr_frames, "Frames per sample")->capture_default_str();
    report->add_option("--n", nr_n, "Coordinates per frame")->capture_default_str();
    report->add_option("--seed", nr_seed, "Seed")->capture_default_str();

    RunOptions rec_opts;
    std::string rec_file;
    auto* record = app.add_subcommand("record-fixture", "Capture a live director transcript");
    record->add_option("--prompt", rec_opts.prompt, "Text prompt")->required();
    record->add_option("--file", rec_file, "Transcript path (default: <fixtures>/<prompt hash>_f<frames>.json)");
    rec_opts.attach(*record);

    std::string verify_dir;
    auto* verify = app.add_subcommand("verify", "Recompute a run's content hash");
    verify->add_option("--out", verify_dir, "Run directory")->required()->check(CLI::ExistingDirectory);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : exit_code(ErrorKind::invalid_argument);
    }
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

    try {
        if (gen->parsed()) {
            const auto config = gen_opts.resolve();
            const auto manifest = generate_video(config);
            print_summary(manifest, config.out);
        } else if (move->parsed()) {
            const auto config = move_opts.resolve();
            const auto seed_latent = read_latent_file(move_input);
            const auto manifest = make_image_move(seed_latent, config.prompt, config);
            print_summary(manifest, config.out);
        } else if (report->parsed()) {
            const auto mode = parse_noise_mode(nr_mode);
            const JointNoiseConfig cfg{nr_frames, Shape{nr_n}, nr_lambda, mode};
            cfg.validate();
            NoiseMomentAccumulator acc(nr_frames, nr_n);
            const RandomStream base(nr_seed, 0);
            for (std::size_t s = 0; s < nr_samples; ++s) {
                acc.add(sample_initial_noise(cfg, base.substream(s)).video);
            }
            std::cout << acc.report(nr_lambda, mode).to_json().dump(2) << "\n";
        } else if (record->parsed()) {
            auto config = rec_opts.resolve();
            config.director = "live";
            config.validate();
            const auto client = make_chat_client(config);
            const auto transcript = record_transcript(*client, config.prompt, config.frames);
            std::filesystem::path file = rec_file;
            if (file.empty()) {
                const auto dir = config.fixture_dir.empty() ? default_fixture_dir()
                                                            : std::filesystem::path(config.fixture_dir);
                file = dir / (sha256_hex(config.prompt).substr(0, 12) + "_f" + std::to_string(config.frames) + ".json");
            }
            transcript.save(file);
            std::cout << "recorded transcript to " << file.string() << "\n";
        } else if (verify->parsed()) {
            const bool ok = verify_manifest(verify_dir);
            std::cout << (ok ? "content hash OK" : "content hash MISMATCH") << "\n";
            return ok ? 0 : 1;
        }
    } catch (const Error& e) {
        spdlog::error("{}: {}", to_string(e.kind()), e.what());
        if (const auto* pe = dynamic_cast<const ParseError*>(&e)) {
            std::cerr << "--- raw LLM output ---\n" << pe->raw_text() << "\n";
        }
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 0;
}
