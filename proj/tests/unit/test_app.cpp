#include "freebloom/app/config.hpp"
#include "freebloom/app/hash.hpp"
#include "freebloom/app/pipeline.hpp"
#include "freebloom/app/render.hpp"
#include "freebloom/core/error.hpp"
#include "freebloom/core/random.hpp"
#include "freebloom/director/director.hpp"
#include "freebloom/denoiser/mixture.hpp"
#include "freebloom/scheduler/trajectory.hpp"

#include <doctest.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sys/wait.h>

using namespace freebloom;
namespace fs = std::filesystem;

namespace {

// Fresh scratch directory removed on scope exit.
class ScratchDir {
public:
    explicit ScratchDir(const std::string& name) : path_(fs::temp_directory_path() / ("freebloom_test_" + name)) {
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

RunConfig small_config(const std::string& prompt = "a flower is gradually blooming") {
    RunConfig c;
    c.prompt = prompt;
    c.steps = 20;
    return c;
}

struct DecodedGif {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<int> delays;
    bool loops = false;
    std::vector<std::vector<std::uint8_t>> frames;
};

std::uint16_t le16(const std::vector<std::uint8_t>& b, std::size_t at) {
    return static_cast<std::uint16_t>(b.at(at) | (b.at(at + 1) << 8));
}

// Straightforward table-of-strings GIF LZW decoder.
std::vector<std::uint8_t> lzw_decode(const std::vector<std::uint8_t>& data, int min_code_size, std::size_t expected) {
    const int clear = 1 << min_code_size;
    const int end = clear + 1;
    std::vector<std::vector<std::uint8_t>> table;
    auto reset = [&] {
        table.clear();
        for (int i = 0; i < clear; ++i) {
            table.push_back({static_cast<std::uint8_t>(i)});
        }
        table.emplace_back();
        table.emplace_back();
    };
    reset();
    int width = min_code_size + 1;
    std::size_t bit = 0;
    std::vector<std::uint8_t> out;
    std::vector<std::uint8_t> prev;
    while (bit + width <= data.size() * 8) {
        int code = 0;
        for (int i = 0; i < width; ++i, ++bit) {
            code |= ((data[bit / 8] >> (bit % 8)) & 1) << i;
        }
        if (code == clear) {
            reset();
            width = min_code_size + 1;
            prev.clear();
            continue;
        }
        if (code == end) {
            break;
        }
        std::vector<std::uint8_t> entry;
        if (code < static_cast<int>(table.size())) {
            entry = table[code];
        } else {
            REQUIRE(code == static_cast<int>(table.size()));
            REQUIRE_FALSE(prev.empty());
            entry = prev;
            entry.push_back(prev.front());
        }
        out.insert(out.end(), entry.begin(), entry.end());
        if (!prev.empty() && table.size() < 4096) {
            auto added = prev;
            added.push_back(entry.front());
            table.push_back(std::move(added));
        }
        prev = std::move(entry);
        if (static_cast<int>(table.size()) == (1 << width) && width < 12) {
            ++width;
        }
    }
    REQUIRE(out.size() == expected);
    return out;
}

DecodedGif decode_gif(const std::vector<std::uint8_t>& b) {
    DecodedGif gif;
    REQUIRE(std::string(b.begin(), b.begin() + 6) == "GIF89a");
    gif.width = le16(b, 6);
    gif.height = le16(b, 8);
    const std::uint8_t packed = b.at(10);
    std::size_t pos = 13;
    if (packed & 0x80) {
        pos += 3 * (std::size_t{1} << ((packed & 7) + 1));
    }
    auto read_sub_blocks = [&](std::size_t& p) {
        std::vector<std::uint8_t> data;
        while (const std::uint8_t len = b.at(p++)) {
            data.insert(data.end(), b.begin() + p, b.begin() + p + len);
            p += len;
        }
        return data;
    };
    while (true) {
        const std::uint8_t tag = b.at(pos++);
        if (tag == 0x3b) {
            break;
        }
        if (tag == 0x21) {
            const std::uint8_t label = b.at(pos++);
            const auto data = read_sub_blocks(pos);
            if (label == 0xf9) {
                gif.delays.push_back(data.at(1) | (data.at(2) << 8));
            } else if (label == 0xff && std::string(data.begin(), data.begin() + 11) == "NETSCAPE2.0") {
                gif.loops = true;
            }
            continue;
        }
        REQUIRE(tag == 0x2c);
        const std::size_t w = le16(b, pos + 4);
        const std::size_t h = le16(b, pos + 6);
        REQUIRE(w == gif.width);
        REQUIRE(h == gif.height);
        REQUIRE((b.at(pos + 8) & 0x80) == 0);
        pos += 9;
        const int min_code_size = b.at(pos++);
        gif.frames.push_back(lzw_decode(read_sub_blocks(pos), min_code_size, w * h));
    }
    return gif;
}

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(FREEBLOOM_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

} // namespace

TEST_CASE("config round trip and validation") {
    RunConfig c = small_config();
    c.frame_shape = {2, 8, 8};
    c.seed = 7;
    c.noise_mode = "linear";
    c.interpolate = 3;
    CHECK(RunConfig::from_json(c.to_json()) == c);
    CHECK(RunConfig::from_json(nlohmann::json{{"prompt", "x"}}) == [] {
        RunConfig d;
        d.prompt = "x";
        return d;
    }());
    ScratchDir dir("config");
    c.save(dir.path() / "c.json");
    CHECK(RunConfig::load(dir.path() / "c.json") == c);

    CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json{{"prompt", "x"}, {"bogus", 1}}), InvalidArgument);
    CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json{{"prompt", 3}}), InvalidArgument);
    CHECK_THROWS_AS(RunConfig::load(dir.path() / "missing.json"), IoError);

    auto bad = [](auto mutate) {
        RunConfig r = small_config();
        mutate(r);
        CHECK_THROWS_AS(r.validate(), InvalidArgument);
    };
    bad([](RunConfig& r) { r.prompt.clear(); });
    bad([](RunConfig& r) { r.lambda = 1.5; });
    bad([](RunConfig& r) { r.k = -0.1; });
    bad([](RunConfig& r) { r.m_low = 0.9; r.m_high = 0.5; });
    bad([](RunConfig& r) { r.tau_frac = 0.0; });
    bad([](RunConfig& r) { r.steps = 0; });
    bad([](RunConfig& r) { r.frames = 0; });
    bad([](RunConfig& r) { r.director = "remote"; });
    bad([](RunConfig& r) { r.predictor = "unet"; });
    bad([](RunConfig& r) { r.noise_mode = "cubic"; });
    bad([](RunConfig& r) { r.frame_shape = {1, 10, 10}; });
    bad([](RunConfig& r) { r.embed_dim = 1; });
    CHECK_NOTHROW(small_config().validate());

    CHECK(parse_shape("1x16x16") == Shape{1, 16, 16});
    CHECK(parse_shape("4x8x12") == Shape{4, 8, 12});
    CHECK_THROWS_AS(parse_shape("16x"), InvalidArgument);
    CHECK_THROWS_AS(parse_shape("16xx4"), InvalidArgument);
    CHECK_THROWS_AS(parse_shape(""), InvalidArgument);
    CHECK_THROWS_AS(parse_shape("0x4"), InvalidArgument);
}

TEST_CASE("sha256 known answers") {
    CHECK(sha256_hex(std::string_view("abc")) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex(std::string_view("")) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    const std::vector<Tensor> a{Tensor::filled({2}, 1.0)};
    const std::vector<Tensor> b{Tensor::filled({1, 2}, 1.0)};
    CHECK(latent_content_hash(a) != latent_content_hash(b));
    CHECK(latent_content_hash(a) == latent_content_hash(a));
}

TEST_CASE("latent rendering") {
    const auto flat = latent_to_gray(Tensor::filled({1, 16, 16}, 0.3));
    CHECK(flat.width == 16);
    for (auto p : flat.pixels) {
        CHECK(p == 128);
    }
    Tensor ramp({2, 4, 4});
    for (std::size_t i = 0; i < 16; ++i) {
        ramp[i] = static_cast<double>(i);
        ramp[16 + i] = 1e6;
    }
    const auto g = latent_to_gray(ramp);
    CHECK(g.at(0, 0) == 0);
    CHECK(g.at(3, 3) == 255);
    CHECK(g.at(1, 0) == 17);
    const auto up = upscale_nearest(g, 16);
    CHECK(up.width == 64);
    CHECK(up.at(17, 0) == g.at(1, 0));
    CHECK(up.at(63, 63) == 255);

    ScratchDir dir("png");
    const auto big = upscale_nearest(latent_to_gray(seeded_gaussian(RandomStream(1, 0), {1, 16, 16})), 16);
    write_png(dir.path() / "f.png", big);
    const auto back = read_png(dir.path() / "f.png");
    CHECK(back.width == 256);
    CHECK(back.height == 256);
    CHECK(back.pixels == big.pixels);
    CHECK_THROWS_AS(read_png(dir.path() / "none.png"), IoError);
    CHECK_THROWS_AS(write_png(dir.path() / "no" / "such" / "f.png", big), IoError);

    const std::vector<GrayImage> pair{g, g};
    const auto grid = side_by_side(pair);
    CHECK(grid.width == 8);
    CHECK(grid.at(4, 1) == g.at(0, 1));
}

TEST_CASE("GIF encoding decodes back exactly") {
    std::vector<GrayImage> frames;
    for (std::uint64_t s = 0; s < 3; ++s) {
        frames.push_back(upscale_nearest(latent_to_gray(seeded_gaussian(RandomStream(s, 0), {1, 16, 16})), 16));
    }
    GrayImage noisy{300, 200, {}};
    RandomStream stream(5, 0);
    for (std::size_t i = 0; i < noisy.width * noisy.height; ++i) {
        noisy.pixels.push_back(static_cast<std::uint8_t>(stream.uniform(i) * 256));
    }
    GrayImage flat{7, 3, std::vector<std::uint8_t>(21, 9)};

    const auto gif = decode_gif(encode_gif(frames, 10));
    CHECK(gif.width == 256);
    CHECK(gif.loops);
    REQUIRE(gif.frames.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(gif.frames[i] == frames[i].pixels);
        CHECK(gif.delays[i] == 10);
    }
    // random bytes force several dictionary resets
    const std::vector<GrayImage> one{noisy};
    CHECK(decode_gif(encode_gif(one, 5)).frames.at(0) == noisy.pixels);
    const std::vector<GrayImage> tiny{flat};
    CHECK(decode_gif(encode_gif(tiny)).frames.at(0) == flat.pixels);
    CHECK_THROWS_AS(encode_gif(std::span<const GrayImage>{}), InvalidArgument);
    const std::vector<GrayImage> mismatched{flat, noisy};
    CHECK_THROWS_AS(encode_gif(mismatched), InvalidArgument);
}

TEST_CASE("pipeline runs are deterministic") {
    ScratchDir a("det_a");
    ScratchDir b("det_b");
    RunConfig c = small_config();
    c.interpolate = 2;
    c.out = a.path().string();
    const auto first = generate_video(c);
    c.out = b.path().string();
    const auto second = generate_video(c);
    CHECK(first.content_hash == second.content_hash);
    CHECK(manifest_fingerprint(first) == manifest_fingerprint(second));
    CHECK(first.status == "ok");
    CHECK(first.frame_prompts.size() == 6);

    c.seed = 43;
    c.out = b.path().string();
    CHECK(generate_video(c).content_hash != first.content_hash);
}

TEST_CASE("run directory layout and manifest") {
    ScratchDir dir("layout");
    RunConfig c = small_config();
    c.interpolate = 3;
    c.out = dir.path().string();
    const auto m = generate_video(c);
    CHECK(fs::exists(dir.path() / "config.json"));
    CHECK(RunConfig::load(dir.path() / "config.json") == c);
    REQUIRE(m.frames.size() == 9);
    REQUIRE(m.interpolations.size() == 3);
    for (std::size_t i = 0; i < m.frames.size(); ++i) {
        const auto& f = m.frames[i];
        CHECK(f.position == i);
        CHECK(fs::exists(dir.path() / f.latent));
        CHECK(fs::exists(dir.path() / f.trajectory));
        const auto png = read_png(dir.path() / f.image);
        CHECK(png.width == 256);
        CHECK(png.height == 256);
        CHECK(f.interpolated == f.prompt.empty());
    }
    // interpolated frames sit between their parents
    for (const auto& rec : m.interpolations) {
        std::size_t at = 0;
        std::size_t left = 0;
        std::size_t right = 0;
        for (const auto& f : m.frames) {
            if (f.id == rec.id) at = f.position;
            if (f.id == rec.left) left = f.position;
            if (f.id == rec.right) right = f.position;
        }
        CHECK(left < at);
        CHECK(at < right);
        CHECK(rec.depth >= 1);
    }
    std::size_t keys = 0;
    for (const auto& f : m.frames) {
        if (!f.interpolated) {
            CHECK(f.id == keys++);
        }
    }

    const auto gif = decode_gif(read_bytes(dir.path() / m.gif));
    REQUIRE(gif.frames.size() == m.frames.size());
    for (std::size_t i = 0; i < m.frames.size(); ++i) {
        CHECK(gif.frames[i] == read_png(dir.path() / m.frames[i].image).pixels);
        CHECK(gif.delays[i] == 10);
    }
    const auto grid = read_png(dir.path() / m.grid);
    CHECK(grid.width == 256 * m.frames.size());

    const auto loaded = RunManifest::load(dir.path());
    CHECK(manifest_fingerprint(loaded) == manifest_fingerprint(m));
    CHECK(verify_manifest(dir.path()));

    // tamper with one latent file
    const auto path = dir.path() / m.frames[0].latent;
    Tensor t = read_latent_file(path);
    t[0] += 1e-9;
    write_latent_file(path, t);
    CHECK_FALSE(verify_manifest(dir.path()));
}

TEST_CASE("lambda = 0 with identical prompts gives identical frames") {
    RunConfig c = small_config("a red ball resting on the floor");
    c.lambda = 0.0;
    c.steps = 50;
    const auto client = make_chat_client(c);
    const auto result = run_pipeline(c, *client);
    REQUIRE(result.frames.size() == 6);
    const auto finals = result.final_latents();
    for (std::size_t i = 1; i < finals.size(); ++i) {
        CHECK(finals[i] == finals[0]);
    }
    // distinct prompts at lambda = 0 still share the noise but not the frames
    RunConfig d = small_config();
    d.lambda = 0.0;
    const auto other = run_pipeline(d, *make_chat_client(d));
    CHECK(other.initial[1] == other.initial[0]);
    CHECK_FALSE(other.final_latents()[1] == other.final_latents()[0]);
}

TEST_CASE("default run fits the time budget") {
    RunConfig c = small_config();
    c.steps = 50;
    const auto client = make_chat_client(c);
    const auto start = std::chrono::steady_clock::now();
    const auto result = run_pipeline(c, *client);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(result.frames.size() == 6);
    CHECK(seconds < 10.0);
}

TEST_CASE("failed runs leave a failed manifest") {
    ScratchDir dir("failed");
    RunConfig c = small_config();
    c.out = dir.path().string();
    const MockChatClient wrong(synthesize_transcript("another prompt", 6));
    CHECK_THROWS_AS(generate_video(c, wrong), TransportError);
    const auto m = RunManifest::load(dir.path());
    CHECK(m.status == "failed");
    CHECK_FALSE(m.error.empty());
    CHECK(m.config == c);
}

TEST_CASE("image move") {
    RunConfig c = small_config("a red ball resting on the floor");
    c.predictor = "analytic";
    c.frame_shape = {16};
    c.steps = 50;
    const auto client = make_chat_client(c);
    const auto prompts = generate_serial_prompts(*client, c.prompt, c.frames, c.embed_dim);
    const GaussianMixtureModel model(default_mixture_spec(16, c.embed_dim, c.model_seed));
    const Tensor seed_latent = model.sample(prompts.embeddings[0], {16}, RandomStream(11, 0));

    c.lambda = 0.0;
    const auto zero = run_pipeline(c, *client, &seed_latent);
    for (std::size_t i = 0; i < zero.initial.frame_count(); ++i) {
        CHECK(zero.initial[i] == zero.unified);
    }

    c.lambda = 0.5;
    const auto result = run_pipeline(c, *client, &seed_latent);
    CHECK(result.initial[0] == result.unified);
    CHECK_FALSE(result.initial[1] == result.unified);
    const double rel = std::sqrt(squared_distance(result.final_latents()[0], seed_latent)) /
                       std::sqrt(squared_distance(seed_latent, Tensor(seed_latent.shape())));
    MESSAGE("image-move reconstruction relative error: " << rel);
    CHECK(rel <= 2e-2);

    ScratchDir dir("move");
    c.out = dir.path().string();
    const auto m = make_image_move(seed_latent, c.prompt, c);
    CHECK(m.mode == "image-move");
    const std::vector<Tensor> seed_only{seed_latent};
    CHECK(m.seed_latent_hash == latent_content_hash(seed_only));
    CHECK(verify_manifest(dir.path()));

    const Tensor wrong_shape({8});
    CHECK_THROWS_AS(run_pipeline(c, *client, &wrong_shape), InvalidArgument);
}

TEST_CASE("command line exit codes") {
    ScratchDir dir("cli");
    const auto out = (dir.path() / "run").string();
    CHECK(run_cli("generate --prompt \"a flower is gradually blooming\" --steps 10 --interpolate 1 --out " + out) == 0);
    CHECK(run_cli("verify --out " + out) == 0);
    CHECK(run_cli("generate --prompt x --lambda 2 --out " + out) == 2);
    CHECK(run_cli("generate --prompt x --no-such-flag") == 2);
    CHECK(run_cli("noise-report --lambda 0.5 --samples 100") == 0);
    CHECK(run_cli("image-move --input " + out + "/latents/frame_000.lat --prompt \"a red ball resting on the floor\" "
                  "--steps 10 --out " + (dir.path() / "move").string()) == 0);
    CHECK(run_cli("generate --prompt x --director live --endpoint http://127.0.0.1:1/v1/chat/completions --out " +
                  (dir.path() / "live").string()) == 3);
}
