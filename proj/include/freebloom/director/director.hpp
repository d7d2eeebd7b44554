#pragma once

#include "freebloom/core/embedding.hpp"
#include "freebloom/director/chat_client.hpp"

#include <json.hpp>

#include <string>
#include <string_view>
#include <vector>

namespace freebloom {

inline constexpr std::size_t kDefaultEmbedDim = 64;

struct PromptSequence {
    std::string raw_prompt;
    std::vector<std::string> frame_prompts;
    std::vector<Embedding> embeddings;

    std::size_t frame_count() const noexcept { return frame_prompts.size(); }

    /// Checks the count, non-empty prompts and unit-norm embeddings.
    void validate() const;
    nlohmann::json to_json() const;

    friend bool operator==(const PromptSequence&, const PromptSequence&) = default;
};

/// Splits an LLM reply into exactly `frames` descriptions. Lines carrying an
/// enumeration marker ("Frame 3:", "3.", "3)", "-", "*") are preferred; when no
/// line is marked every non-empty line counts. Extra items are dropped with a
/// warning; too few raise ParseError with the raw reply attached.
std::vector<std::string> parse_frame_descriptions(std::string_view text, int frames);

/// Signed hashed bag-of-words with two buckets per token, L2-normalised.
Embedding toy_embed(std::string_view text, std::size_t dim = kDefaultEmbedDim);

/// Stage-1 then stage-2 instruction in one conversation, parse the second
/// reply and embed each frame prompt.
PromptSequence generate_serial_prompts(const ChatClient& client, const std::string& raw_prompt, int frames,
                                       std::size_t dim = kDefaultEmbedDim);

/// Same flow against a live client, returning the full conversation so it can
/// be checked in as a fixture.
ChatTranscript record_transcript(const ChatClient& client, const std::string& raw_prompt, int frames);

} // namespace freebloom
