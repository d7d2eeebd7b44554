#include "freebloom/scheduler/trajectory.hpp"

#include "freebloom/core/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>

namespace freebloom {

TrajectoryStore::TrajectoryStore(std::vector<int> timesteps) : timesteps_(std::move(timesteps)) {
    if (timesteps_.size() < 2) {
        throw InvalidArgument("trajectory grid needs at least two timesteps");
    }
    for (std::size_t i = 1; i < timesteps_.size(); ++i) {
        if (timesteps_[i] >= timesteps_[i - 1]) {
            throw InvalidArgument("trajectory timesteps must be strictly decreasing");
        }
    }
    if (timesteps_.back() < 0) {
        throw InvalidArgument("trajectory timesteps must be non-negative");
    }
}

std::size_t TrajectoryStore::index_of(int t) const {
    const auto it = std::find(timesteps_.begin(), timesteps_.end(), t);
    if (it == timesteps_.end()) {
        throw StateError("timestep " + std::to_string(t) + " is not on the trajectory grid");
    }
    return static_cast<std::size_t>(std::distance(timesteps_.begin(), it));
}

void TrajectoryStore::start_frame(std::size_t frame_id, Tensor initial) {
    if (contains(frame_id)) {
        throw StateError("frame " + std::to_string(frame_id) + " already has a trajectory");
    }
    FrameTrajectory traj;
    traj.latents.push_back(std::move(initial));
    frames_.emplace(frame_id, std::move(traj));
}

void TrajectoryStore::append(std::size_t frame_id, Tensor eps_used, Tensor next_latent) {
    auto it = frames_.find(frame_id);
    if (it == frames_.end()) {
        throw StateError("frame " + std::to_string(frame_id) + " has no trajectory");
    }
    if (it->second.latents.size() >= timesteps_.size()) {
        throw StateError("frame " + std::to_string(frame_id) + " trajectory already complete");
    }
    it->second.eps.push_back(std::move(eps_used));
    it->second.latents.push_back(std::move(next_latent));
}

void TrajectoryStore::insert(std::size_t frame_id, FrameTrajectory trajectory) {
    if (contains(frame_id)) {
        throw StateError("frame " + std::to_string(frame_id) + " already has a trajectory");
    }
    if (trajectory.latents.size() != timesteps_.size() || trajectory.eps.size() + 1 != timesteps_.size()) {
        throw StateError("inserted trajectory does not cover the grid");
    }
    frames_.emplace(frame_id, std::move(trajectory));
}

const FrameTrajectory& TrajectoryStore::trajectory(std::size_t frame_id) const {
    auto it = frames_.find(frame_id);
    if (it == frames_.end()) {
        throw StateError("frame " + std::to_string(frame_id) + " has no trajectory");
    }
    return it->second;
}

const Tensor& TrajectoryStore::latent(std::size_t frame_id, int t) const {
    const auto& traj = trajectory(frame_id);
    const std::size_t idx = index_of(t);
    if (idx >= traj.latents.size()) {
        throw StateError("frame " + std::to_string(frame_id) + " has no latent recorded at t=" + std::to_string(t));
    }
    return traj.latents[idx];
}

const Tensor& TrajectoryStore::final_latent(std::size_t frame_id) const {
    if (!complete(frame_id)) {
        throw StateError("frame " + std::to_string(frame_id) + " trajectory is incomplete");
    }
    return trajectory(frame_id).latents.back();
}

bool TrajectoryStore::complete(std::size_t frame_id) const {
    return contains(frame_id) && trajectory(frame_id).latents.size() == timesteps_.size();
}

std::vector<std::size_t> TrajectoryStore::frame_ids() const {
    std::vector<std::size_t> ids;
    for (const auto& [id, traj] : frames_) {
        ids.push_back(id);
    }
    return ids;
}

std::vector<unsigned char> encode_f64_le(std::span<const double> values) {
    std::vector<unsigned char> out;
    out.reserve(values.size() * 8);
    for (double v : values) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        for (int b = 0; b < 8; ++b) {
            out.push_back(static_cast<unsigned char>(bits >> (8 * b)));
        }
    }
    return out;
}

void decode_f64_le(std::span<const unsigned char> bytes, std::span<double> out) {
    if (bytes.size() != out.size() * 8) {
        throw IoError("float64 payload has " + std::to_string(bytes.size()) + " bytes, expected " +
                      std::to_string(out.size() * 8));
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) {
            bits |= static_cast<std::uint64_t>(bytes[i * 8 + static_cast<std::size_t>(b)]) << (8 * b);
        }
        out[i] = std::bit_cast<double>(bits);
    }
}

namespace {

void write_tensor_payload(std::ofstream& out, const Tensor& t) {
    const auto bytes = encode_f64_le(t.values());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Tensor read_tensor_payload(std::ifstream& in, const Shape& shape, const std::filesystem::path& path) {
    Tensor t(shape);
    std::vector<unsigned char> bytes(t.size() * 8);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
        throw IoError("truncated tensor payload in " + path.string());
    }
    decode_f64_le(bytes, t.values());
    return t;
}

nlohmann::json read_header(std::ifstream& in, const std::filesystem::path& path) {
    std::string line;
    if (!std::getline(in, line)) {
        throw IoError("missing header in " + path.string());
    }
    try {
        return nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad header in " + path.string() + ": " + e.what());
    }
}

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    return out;
}

std::ifstream open_for_read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return in;
}

} // namespace

std::filesystem::path TrajectoryStore::frame_file(const std::filesystem::path& dir, std::size_t frame_id) {
    return dir / ("frame_" + std::to_string(frame_id) + ".traj");
}

void TrajectoryStore::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    for (const auto& [id, traj] : frames_) {
        auto out = open_for_write(frame_file(dir, id));
        const nlohmann::json header = {
            {"frame", id},
            {"shape", traj.latents.front().shape()},
            {"timesteps", std::vector<int>(timesteps_.begin(),
                                           timesteps_.begin() + static_cast<std::ptrdiff_t>(traj.latents.size()))},
            {"eps_steps", traj.eps.size()},
        };
        out << header.dump() << '\n';
        for (const auto& latent : traj.latents) {
            write_tensor_payload(out, latent);
        }
        for (const auto& eps : traj.eps) {
            write_tensor_payload(out, eps);
        }
        if (!out) {
            throw IoError("failed writing " + frame_file(dir, id).string());
        }
    }
}

TrajectoryStore TrajectoryStore::load(const std::filesystem::path& dir) {
    TrajectoryStore store;
    bool first = true;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() == ".traj") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    for (const auto& path : files) {
        auto in = open_for_read(path);
        const auto header = read_header(in, path);
        const auto timesteps = header.at("timesteps").get<std::vector<int>>();
        const auto shape = header.at("shape").get<Shape>();
        const auto eps_steps = header.at("eps_steps").get<std::size_t>();
        if (first) {
            store = TrajectoryStore(timesteps);
            first = false;
        } else if (timesteps.size() > store.timesteps_.size() ||
                   !std::equal(timesteps.begin(), timesteps.end(), store.timesteps_.begin())) {
            throw IoError("trajectory grid in " + path.string() + " disagrees with other frames");
        }
        FrameTrajectory traj;
        for (std::size_t i = 0; i < timesteps.size(); ++i) {
            traj.latents.push_back(read_tensor_payload(in, shape, path));
        }
        for (std::size_t i = 0; i < eps_steps; ++i) {
            traj.eps.push_back(read_tensor_payload(in, shape, path));
        }
        store.frames_.emplace(header.at("frame").get<std::size_t>(), std::move(traj));
    }
    if (first) {
        throw IoError("no trajectory files in " + dir.string());
    }
    return store;
}

void write_latent_file(const std::filesystem::path& path, const Tensor& tensor) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    auto out = open_for_write(path);
    out << nlohmann::json{{"shape", tensor.shape()}}.dump() << '\n';
    write_tensor_payload(out, tensor);
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

Tensor read_latent_file(const std::filesystem::path& path) {
    auto in = open_for_read(path);
    const auto header = read_header(in, path);
    Shape shape;
    try {
        shape = header.at("shape").get<Shape>();
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad latent header in " + path.string() + ": " + e.what());
    }
    Tensor t = read_tensor_payload(in, shape, path);
    if (in.peek() != std::char_traits<char>::eof()) {
        throw IoError("trailing bytes in latent file " + path.string());
    }
    return t;
}

} // namespace freebloom
