#include "freebloom/app/hash.hpp"

#include "freebloom/core/error.hpp"
#include "freebloom/scheduler/trajectory.hpp"

#include <openssl/evp.h>

#include <array>
#include <memory>

namespace freebloom {

namespace {

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new()) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
            throw StateError("OpenSSL: cannot initialise SHA-256");
        }
    }

    void update(const void* data, std::size_t size) {
        if (EVP_DigestUpdate(ctx_.get(), data, size) != 1) {
            throw StateError("OpenSSL: SHA-256 update failed");
        }
    }

    std::string hex() {
        std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx_.get(), digest.data(), &len) != 1) {
            throw StateError("OpenSSL: SHA-256 finalisation failed");
        }
        static constexpr char kHex[] = "0123456789abcdef";
        std::string out;
        out.reserve(2 * len);
        for (unsigned int i = 0; i < len; ++i) {
            out.push_back(kHex[digest[i] >> 4]);
            out.push_back(kHex[digest[i] & 0x0f]);
        }
        return out;
    }

private:
    struct Free {
        void operator()(EVP_MD_CTX* ctx) const noexcept { EVP_MD_CTX_free(ctx); }
    };
    std::unique_ptr<EVP_MD_CTX, Free> ctx_;
};

} // namespace

std::string sha256_hex(std::span<const unsigned char> bytes) {
    Sha256 h;
    h.update(bytes.data(), bytes.size());
    return h.hex();
}

std::string sha256_hex(std::string_view text) {
    Sha256 h;
    h.update(text.data(), text.size());
    return h.hex();
}

std::string latent_content_hash(std::span<const Tensor> latents) {
    Sha256 h;
    for (const auto& t : latents) {
        const auto shape = shape_to_string(t.shape()) + ";";
        h.update(shape.data(), shape.size());
        const auto bytes = encode_f64_le(t.values());
        h.update(bytes.data(), bytes.size());
    }
    return h.hex();
}

} // namespace freebloom
