#include "freebloom/app/render.hpp"

#include "freebloom/core/error.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <unordered_map>

namespace freebloom {

GrayImage latent_to_gray(const Tensor& latent) {
    const auto& shape = latent.shape();
    std::size_t height = 1;
    std::size_t width = latent.size();
    if (shape.size() >= 2) {
        height = shape[shape.size() - 2];
        width = shape[shape.size() - 1];
    }
    const auto values = latent.values().subspan(0, height * width);
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it;
    const double hi = *hi_it;

    GrayImage image{width, height, std::vector<std::uint8_t>(width * height, 128)};
    if (hi > lo) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            image.pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * (values[i] - lo) / (hi - lo)));
        }
    }
    return image;
}

GrayImage upscale_nearest(const GrayImage& image, std::size_t factor) {
    if (factor == 0) {
        throw InvalidArgument("upscale factor must be positive");
    }
    GrayImage out{image.width * factor, image.height * factor, {}};
    out.pixels.resize(out.width * out.height);
    for (std::size_t y = 0; y < out.height; ++y) {
        for (std::size_t x = 0; x < out.width; ++x) {
            out.pixels[y * out.width + x] = image.at(x / factor, y / factor);
        }
    }
    return out;
}

GrayImage side_by_side(std::span<const GrayImage> images) {
    if (images.empty()) {
        throw InvalidArgument("side_by_side needs at least one image");
    }
    GrayImage out;
    for (const auto& img : images) {
        out.width += img.width;
        out.height = std::max(out.height, img.height);
    }
    out.pixels.assign(out.width * out.height, 0);
    std::size_t x0 = 0;
    for (const auto& img : images) {
        for (std::size_t y = 0; y < img.height; ++y) {
            std::copy_n(img.pixels.begin() + static_cast<std::ptrdiff_t>(y * img.width), img.width,
                        out.pixels.begin() + static_cast<std::ptrdiff_t>(y * out.width + x0));
        }
        x0 += img.width;
    }
    return out;
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) {
        throw IoError("cannot open " + path.string());
    }
    return f;
}

[[noreturn]] void png_error_handler(png_structp, png_const_charp message) {
    throw IoError(std::string("libpng: ") + message);
}

void png_warning_handler(png_structp, png_const_charp) {}

class PngWriter {
public:
    PngWriter() {
        png_ = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler, png_warning_handler);
        if (png_ == nullptr) {
            throw IoError("libpng: cannot create write struct");
        }
        info_ = png_create_info_struct(png_);
        if (info_ == nullptr) {
            png_destroy_write_struct(&png_, nullptr);
            throw IoError("libpng: cannot create info struct");
        }
    }
    ~PngWriter() { png_destroy_write_struct(&png_, &info_); }
    PngWriter(const PngWriter&) = delete;
    PngWriter& operator=(const PngWriter&) = delete;

    png_structp png() const noexcept { return png_; }
    png_infop info() const noexcept { return info_; }

private:
    png_structp png_ = nullptr;
    png_infop info_ = nullptr;
};

class PngReader {
public:
    PngReader() {
        png_ = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler, png_warning_handler);
        if (png_ == nullptr) {
            throw IoError("libpng: cannot create read struct");
        }
        info_ = png_create_info_struct(png_);
        if (info_ == nullptr) {
            png_destroy_read_struct(&png_, nullptr, nullptr);
            throw IoError("libpng: cannot create info struct");
        }
    }
    ~PngReader() { png_destroy_read_struct(&png_, &info_, nullptr); }
    PngReader(const PngReader&) = delete;
    PngReader& operator=(const PngReader&) = delete;

    png_structp png() const noexcept { return png_; }
    png_infop info() const noexcept { return info_; }

private:
    png_structp png_ = nullptr;
    png_infop info_ = nullptr;
};

} // namespace

void write_png(const std::filesystem::path& path, const GrayImage& image) {
    if (image.width == 0 || image.height == 0 || image.pixels.size() != image.width * image.height) {
        throw InvalidArgument("write_png: malformed image for " + path.string());
    }
    auto file = open_file(path, "wb");
    PngWriter writer;
    try {
        png_init_io(writer.png(), file.get());
        png_set_IHDR(writer.png(), writer.info(), static_cast<png_uint_32>(image.width),
                     static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                     PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(writer.png(), writer.info());
        for (std::size_t y = 0; y < image.height; ++y) {
            png_write_row(writer.png(), image.pixels.data() + y * image.width);
        }
        png_write_end(writer.png(), nullptr);
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

GrayImage read_png(const std::filesystem::path& path) {
    auto file = open_file(path, "rb");
    PngReader reader;
    GrayImage image;
    try {
        png_init_io(reader.png(), file.get());
        png_read_info(reader.png(), reader.info());
        if (png_get_color_type(reader.png(), reader.info()) != PNG_COLOR_TYPE_GRAY ||
            png_get_bit_depth(reader.png(), reader.info()) != 8) {
            throw IoError("only 8-bit grayscale PNGs are supported");
        }
        image.width = png_get_image_width(reader.png(), reader.info());
        image.height = png_get_image_height(reader.png(), reader.info());
        image.pixels.resize(image.width * image.height);
        for (std::size_t y = 0; y < image.height; ++y) {
            png_read_row(reader.png(), image.pixels.data() + y * image.width, nullptr);
        }
        png_read_end(reader.png(), nullptr);
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    return image;
}

namespace {

class BitWriter {
public:
    void put(std::uint32_t code, int width) {
        acc_ |= static_cast<std::uint64_t>(code) << bits_;
        bits_ += width;
        while (bits_ >= 8) {
            bytes_.push_back(static_cast<std::uint8_t>(acc_ & 0xffU));
            acc_ >>= 8;
            bits_ -= 8;
        }
    }
    std::vector<std::uint8_t> finish() {
        if (bits_ > 0) {
            bytes_.push_back(static_cast<std::uint8_t>(acc_ & 0xffU));
        }
        acc_ = 0;
        bits_ = 0;
        return std::move(bytes_);
    }

private:
    std::vector<std::uint8_t> bytes_;
    std::uint64_t acc_ = 0;
    int bits_ = 0;
};

std::vector<std::uint8_t> lzw_compress(std::span<const std::uint8_t> pixels) {
    constexpr int kMinCodeSize = 8;
    constexpr std::uint32_t kClear = 1U << kMinCodeSize;
    constexpr std::uint32_t kEnd = kClear + 1;
    constexpr std::uint32_t kMaxCode = 4094;

    BitWriter out;
    std::unordered_map<std::uint32_t, std::uint32_t> table;  // (prefix << 8 | byte) -> code
    std::uint32_t next_code = kEnd + 1;
    int width = kMinCodeSize + 1;
    out.put(kClear, width);

    std::uint32_t prefix = pixels[0];
    for (std::size_t i = 1; i < pixels.size(); ++i) {
        const std::uint32_t key = (prefix << 8) | pixels[i];
        if (const auto it = table.find(key); it != table.end()) {
            prefix = it->second;
            continue;
        }
        out.put(prefix, width);
        if (next_code <= kMaxCode) {
            table.emplace(key, next_code);
            if (next_code == (1U << width) && width < 12) {
                ++width;
            }
            ++next_code;
        } else {
            out.put(kClear, width);
            table.clear();
            next_code = kEnd + 1;
            width = kMinCodeSize + 1;
        }
        prefix = pixels[i];
    }
    out.put(prefix, width);
    out.put(kEnd, width);
    return out.finish();
}

void put_u16(std::vector<std::uint8_t>& out, std::size_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xffU));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xffU));
}

} // namespace

std::vector<std::uint8_t> encode_gif(std::span<const GrayImage> frames, int delay_cs) {
    if (frames.empty()) {
        throw InvalidArgument("GIF needs at least one frame");
    }
    const auto width = frames.front().width;
    const auto height = frames.front().height;
    if (width == 0 || height == 0 || width > 0xffff || height > 0xffff) {
        throw InvalidArgument("GIF frame size out of range");
    }
    for (const auto& f : frames) {
        if (f.width != width || f.height != height || f.pixels.size() != width * height) {
            throw InvalidArgument("GIF frames must share one size");
        }
    }

    std::vector<std::uint8_t> out{'G', 'I', 'F', '8', '9', 'a'};
    put_u16(out, width);
    put_u16(out, height);
    out.push_back(0xf7);  // global color table, 8 bits per channel, 256 entries
    out.push_back(0);
    out.push_back(0);
    for (int i = 0; i < 256; ++i) {
        out.insert(out.end(), 3, static_cast<std::uint8_t>(i));
    }
    const std::uint8_t loop[] = {0x21, 0xff, 0x0b, 'N', 'E', 'T', 'S', 'C', 'A', 'P', 'E',
                                 '2',  '.',  '0',  0x03, 0x01, 0x00, 0x00, 0x00};
    out.insert(out.end(), std::begin(loop), std::end(loop));

    for (const auto& frame : frames) {
        out.insert(out.end(), {0x21, 0xf9, 0x04, 0x00});
        put_u16(out, static_cast<std::size_t>(std::clamp(delay_cs, 0, 0xffff)));
        out.insert(out.end(), {0x00, 0x00});

        out.push_back(0x2c);
        put_u16(out, 0);
        put_u16(out, 0);
        put_u16(out, width);
        put_u16(out, height);
        out.push_back(0x00);

        out.push_back(8);
        const auto data = lzw_compress(frame.pixels);
        for (std::size_t pos = 0; pos < data.size(); pos += 255) {
            const auto n = std::min<std::size_t>(255, data.size() - pos);
            out.push_back(static_cast<std::uint8_t>(n));
            out.insert(out.end(), data.begin() + static_cast<std::ptrdiff_t>(pos),
                       data.begin() + static_cast<std::ptrdiff_t>(pos + n));
        }
        out.push_back(0x00);
    }
    out.push_back(0x3b);
    return out;
}

void write_gif(const std::filesystem::path& path, std::span<const GrayImage> frames, int delay_cs) {
    const auto bytes = encode_gif(frames, delay_cs);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

} // namespace freebloom
