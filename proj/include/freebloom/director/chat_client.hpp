#pragma once

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace freebloom {

struct ChatMessage {
    std::string role;  // "system" | "user" | "assistant"
    std::string content;

    friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

nlohmann::json to_json(const std::vector<ChatMessage>& messages);

class ChatClient {
public:
    virtual ~ChatClient() = default;
    /// Reply of the assistant to the conversation so far.
    virtual std::string complete(const std::vector<ChatMessage>& messages) const = 0;
};

/// Recorded two-turn conversation used by the offline director.
struct ChatTranscript {
    std::string prompt;
    int frames = 0;
    std::vector<ChatMessage> messages;  // alternating user / assistant turns

    nlohmann::json to_json() const;
    static ChatTranscript from_json(const nlohmann::json& doc);
    static ChatTranscript load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

/// Deterministic fixture-backed client: the reply to the n-th user turn is the
/// n-th assistant turn of the transcript. Requests must match the recorded
/// user turns exactly.
class MockChatClient final : public ChatClient {
public:
    explicit MockChatClient(ChatTranscript transcript);

    std::string complete(const std::vector<ChatMessage>& messages) const override;

    const ChatTranscript& transcript() const noexcept { return transcript_; }

private:
    ChatTranscript transcript_;
};

/// Transcript for prompts without a recorded fixture: one plain sentence per
/// frame derived from the prompt, so offline runs still get distinct prompts.
ChatTranscript synthesize_transcript(const std::string& prompt, int frames);

/// Finds a fixture in `dir` whose prompt and frame count match.
std::optional<ChatTranscript> find_fixture(const std::filesystem::path& dir, const std::string& prompt, int frames);

struct HttpChatConfig {
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string model = "gpt-3.5-turbo";
    std::string api_key_env = "FREEBLOOM_API_KEY";
    std::chrono::milliseconds timeout{30000};
    int retries = 3;
    std::chrono::milliseconds backoff_base{500};
    std::chrono::milliseconds backoff_cap{8000};
};

/// OpenAI-style chat-completions client: POST {model, messages}, read
/// choices[0].message.content. Transport failures and 5xx/429 responses are
/// retried with capped exponential backoff.
class HttpChatClient final : public ChatClient {
public:
    explicit HttpChatClient(HttpChatConfig config);

    std::string complete(const std::vector<ChatMessage>& messages) const override;

private:
    HttpChatConfig config_;
    std::string api_key_;
};

} // namespace freebloom
