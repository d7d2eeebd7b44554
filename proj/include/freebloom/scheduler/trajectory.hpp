#pragma once

#include "freebloom/core/tensor.hpp"

#include <cstddef>
#include <filesystem>
#include <map>
#include <vector>

namespace freebloom {

/// Latents of one frame at every visited timestep plus the eps_hat used to
/// leave each of them (one fewer than latents once the run is complete).
struct FrameTrajectory {
    std::vector<Tensor> latents;
    std::vector<Tensor> eps;
};

/// Per-frame denoising trajectories over one shared, strictly decreasing
/// timestep grid that ends at 0 (clean latent). Written by a single owner
/// during generation, read-only afterwards.
class TrajectoryStore {
public:
    TrajectoryStore() = default;
    explicit TrajectoryStore(std::vector<int> timesteps);

    const std::vector<int>& timesteps() const noexcept { return timesteps_; }

    /// Index of t in the grid; StateError when the grid never visits t.
    std::size_t index_of(int t) const;

    void start_frame(std::size_t frame_id, Tensor initial);
    void append(std::size_t frame_id, Tensor eps_used, Tensor next_latent);
    void insert(std::size_t frame_id, FrameTrajectory trajectory);

    bool contains(std::size_t frame_id) const { return frames_.count(frame_id) != 0; }
    const FrameTrajectory& trajectory(std::size_t frame_id) const;
    /// Latent of frame_id at timestep t; StateError when not recorded.
    const Tensor& latent(std::size_t frame_id, int t) const;
    const Tensor& final_latent(std::size_t frame_id) const;
    bool complete(std::size_t frame_id) const;

    std::vector<std::size_t> frame_ids() const;

    /// One file per frame: a single-line JSON header
    /// {"frame", "shape", "timesteps", "eps_steps"} then little-endian float64
    /// latents (one per timestep) followed by the eps tensors.
    void save(const std::filesystem::path& dir) const;
    static TrajectoryStore load(const std::filesystem::path& dir);

    static std::filesystem::path frame_file(const std::filesystem::path& dir, std::size_t frame_id);

private:
    std::vector<int> timesteps_;
    std::map<std::size_t, FrameTrajectory> frames_;
};

/// Single tensor file: single-line JSON header {"shape": [...]} then LE float64 values.
void write_latent_file(const std::filesystem::path& path, const Tensor& tensor);
Tensor read_latent_file(const std::filesystem::path& path);

/// Raw little-endian float64 encoding of the values.
std::vector<unsigned char> encode_f64_le(std::span<const double> values);
void decode_f64_le(std::span<const unsigned char> bytes, std::span<double> out);

} // namespace freebloom
