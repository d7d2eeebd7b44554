#include "freebloom/director/director.hpp"

#include "freebloom/core/error.hpp"
#include "freebloom/director/templates.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <regex>
#include <sstream>

namespace freebloom {

void PromptSequence::validate() const {
    if (frame_prompts.empty()) {
        throw InvalidArgument("prompt sequence is empty");
    }
    if (embeddings.size() != frame_prompts.size()) {
        throw InvalidArgument("prompt sequence has " + std::to_string(frame_prompts.size()) + " prompts but " +
                              std::to_string(embeddings.size()) + " embeddings");
    }
    for (const auto& p : frame_prompts) {
        if (p.empty()) {
            throw InvalidArgument("prompt sequence contains an empty prompt");
        }
    }
    for (const auto& e : embeddings) {
        double sq = 0.0;
        for (double v : e.values) {
            sq += v * v;
        }
        if (std::abs(std::sqrt(sq) - 1.0) > 1e-9) {
            throw InvalidArgument("prompt embedding is not unit-norm");
        }
    }
}

nlohmann::json PromptSequence::to_json() const {
    return {{"raw_prompt", raw_prompt}, {"frame_prompts", frame_prompts}};
}

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) {
        ++b;
    }
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) {
        --e;
    }
    return std::string(s.substr(b, e - b));
}

struct Item {
    std::string text;
    bool marked;
};

Item strip_marker(const std::string& line) {
    static const std::regex marker(R"(^(?:\*\*)?(?:frame\s*\d+\s*(?:\*\*)?\s*[:.)\-]|\d+\s*[.):]|[-*])\s*(?:\*\*)?\s*)",
                                   std::regex::icase);
    std::smatch m;
    if (std::regex_search(line, m, marker)) {
        return {trim(line.substr(m.length(0))), true};
    }
    return {line, false};
}

} // namespace

std::vector<std::string> parse_frame_descriptions(std::string_view text, int frames) {
    if (frames < 1) {
        throw InvalidArgument("frame count must be at least 1");
    }
    if (trim(text).empty()) {
        throw ParseError("LLM reply is empty", std::string(text));
    }
    std::vector<Item> items;
    std::istringstream in{std::string(text)};
    for (std::string line; std::getline(in, line);) {
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        auto item = strip_marker(line);
        if (!item.text.empty()) {
            items.push_back(std::move(item));
        }
    }
    const bool any_marked = std::any_of(items.begin(), items.end(), [](const Item& i) { return i.marked; });
    std::vector<std::string> out;
    for (auto& item : items) {
        if (item.marked || !any_marked) {
            out.push_back(std::move(item.text));
        }
    }
    if (out.size() < static_cast<std::size_t>(frames)) {
        throw ParseError("expected " + std::to_string(frames) + " frame descriptions, found " +
                             std::to_string(out.size()),
                         std::string(text));
    }
    if (out.size() > static_cast<std::size_t>(frames)) {
        spdlog::warn("LLM returned {} frame descriptions; keeping the first {}", out.size(), frames);
        out.resize(static_cast<std::size_t>(frames));
    }
    return out;
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace

Embedding toy_embed(std::string_view text, std::size_t dim) {
    if (dim < 2) {
        throw InvalidArgument("embedding dimension must be at least 2");
    }
    std::vector<std::string> tokens;
    std::string token;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            token.push_back(static_cast<char>(std::tolower(c)));
        } else if (!token.empty()) {
            tokens.push_back(std::move(token));
            token.clear();
        }
    }
    if (!token.empty()) {
        tokens.push_back(std::move(token));
    }
    if (tokens.empty()) {
        throw InvalidArgument("cannot embed text without alphanumeric tokens");
    }

    auto accumulate = [&](bool signed_hash) {
        std::vector<double> values(dim, 0.0);
        for (const auto& t : tokens) {
            // two distinct signed buckets per token
            const auto h = fnv1a(t);
            const auto g = mix64(h);
            const auto first = static_cast<std::size_t>(h % dim);
            const auto second = (first + 1 + static_cast<std::size_t>(g % (dim - 1))) % dim;
            values[first] += signed_hash && (h >> 63) != 0 ? -1.0 : 1.0;
            values[second] += signed_hash && (g >> 63) != 0 ? -1.0 : 1.0;
        }
        return values;
    };
    auto values = accumulate(true);
    double sq = std::inner_product(values.begin(), values.end(), values.begin(), 0.0);
    if (sq == 0.0) {
        // signed collisions cancelled exactly
        values = accumulate(false);
        sq = std::inner_product(values.begin(), values.end(), values.begin(), 0.0);
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (double& v : values) {
        v *= inv;
    }
    return Embedding{std::move(values)};
}

namespace {

std::vector<ChatMessage> run_conversation(const ChatClient& client, const std::string& raw_prompt, int frames) {
    std::vector<ChatMessage> messages{{"user", build_stage1_instruction(raw_prompt, frames)}};
    messages.push_back({"assistant", client.complete(messages)});
    messages.push_back({"user", build_stage2_instruction()});
    messages.push_back({"assistant", client.complete(messages)});
    return messages;
}

} // namespace

PromptSequence generate_serial_prompts(const ChatClient& client, const std::string& raw_prompt, int frames,
                                       std::size_t dim) {
    if (raw_prompt.empty()) {
        throw InvalidArgument("raw prompt must not be empty");
    }
    if (frames < 1) {
        throw InvalidArgument("frame count must be at least 1");
    }
    if (dim < 2) {
        throw InvalidArgument("embedding dimension must be at least 2");
    }
    const auto messages = run_conversation(client, raw_prompt, frames);
    PromptSequence seq;
    seq.raw_prompt = raw_prompt;
    seq.frame_prompts = parse_frame_descriptions(messages.back().content, frames);
    for (const auto& p : seq.frame_prompts) {
        seq.embeddings.push_back(toy_embed(p, dim));
    }
    seq.validate();
    return seq;
}

ChatTranscript record_transcript(const ChatClient& client, const std::string& raw_prompt, int frames) {
    if (raw_prompt.empty()) {
        throw InvalidArgument("raw prompt must not be empty");
    }
    ChatTranscript t;
    t.prompt = raw_prompt;
    t.frames = frames;
    t.messages = run_conversation(client, raw_prompt, frames);
    parse_frame_descriptions(t.messages.back().content, frames);
    return t;
}

} // namespace freebloom
