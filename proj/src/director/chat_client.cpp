#include "freebloom/director/chat_client.hpp"

#include "freebloom/core/error.hpp"
#include "freebloom/director/templates.hpp"

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <regex>
#include <thread>

namespace freebloom {

nlohmann::json to_json(const std::vector<ChatMessage>& messages) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& m : messages) {
        out.push_back({{"role", m.role}, {"content", m.content}});
    }
    return out;
}

nlohmann::json ChatTranscript::to_json() const {
    return {{"prompt", prompt}, {"frames", frames}, {"messages", freebloom::to_json(messages)}};
}

ChatTranscript ChatTranscript::from_json(const nlohmann::json& doc) {
    ChatTranscript t;
    try {
        t.prompt = doc.at("prompt").get<std::string>();
        t.frames = doc.at("frames").get<int>();
        for (const auto& m : doc.at("messages")) {
            t.messages.push_back({m.at("role").get<std::string>(), m.at("content").get<std::string>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("malformed chat transcript: ") + e.what());
    }
    return t;
}

ChatTranscript ChatTranscript::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open transcript " + path.string());
    }
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidArgument("transcript " + path.string() + " is not valid JSON: " + e.what());
    }
}

void ChatTranscript::save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write transcript " + path.string());
    }
    out << to_json().dump(2) << '\n';
}

MockChatClient::MockChatClient(ChatTranscript transcript) : transcript_(std::move(transcript)) {}

std::string MockChatClient::complete(const std::vector<ChatMessage>& messages) const {
    if (messages.empty() || messages.back().role != "user") {
        throw InvalidArgument("mock chat: conversation must end with a user turn");
    }
    // Replay: the request must be a prefix of the transcript ending in a user turn.
    if (messages.size() >= transcript_.messages.size()) {
        throw TransportError("mock chat: transcript has no reply for turn " + std::to_string(messages.size()));
    }
    for (std::size_t i = 0; i < messages.size(); ++i) {
        const auto& recorded = transcript_.messages[i];
        if (recorded.role != messages[i].role || recorded.content != messages[i].content) {
            throw TransportError("mock chat: request diverges from the recorded transcript at message " +
                                 std::to_string(i));
        }
    }
    const auto& reply = transcript_.messages[messages.size()];
    if (reply.role != "assistant") {
        throw TransportError("mock chat: transcript turn " + std::to_string(messages.size()) +
                             " is not an assistant reply");
    }
    return reply.content;
}

ChatTranscript synthesize_transcript(const std::string& prompt, int frames) {
    ChatTranscript t;
    t.prompt = prompt;
    t.frames = frames;
    std::string first;
    std::string second;
    for (int i = 1; i <= frames; ++i) {
        first += "Frame " + std::to_string(i) + ": It shows " + prompt + ", part " + std::to_string(i) + ".\n";
        second += "Frame " + std::to_string(i) + ": The scene shows " + prompt + " at stage " + std::to_string(i) +
                  " of " + std::to_string(frames) + ".\n";
    }
    t.messages = {
        {"user", build_stage1_instruction(prompt, frames)},
        {"assistant", first},
        {"user", build_stage2_instruction()},
        {"assistant", second},
    };
    return t;
}

std::optional<ChatTranscript> find_fixture(const std::filesystem::path& dir, const std::string& prompt, int frames) {
    if (!std::filesystem::is_directory(dir)) {
        return std::nullopt;
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() == ".json") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    for (const auto& path : files) {
        auto t = ChatTranscript::load(path);
        if (t.prompt == prompt && t.frames == frames) {
            return t;
        }
    }
    return std::nullopt;
}

namespace {

struct ParsedUrl {
    std::string scheme_host_port;
    std::string path;
};

ParsedUrl split_url(const std::string& url) {
    static const std::regex pattern(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, pattern)) {
        throw InvalidArgument("chat endpoint is not an http(s) URL: " + url);
    }
    return {m[1].str(), m[2].matched ? m[2].str() : "/"};
}

} // namespace

HttpChatClient::HttpChatClient(HttpChatConfig config) : config_(std::move(config)) {
    if (config_.retries < 0) {
        throw InvalidArgument("chat retries must be non-negative");
    }
    split_url(config_.endpoint);
    if (const char* key = std::getenv(config_.api_key_env.c_str())) {
        api_key_ = key;
    }
}

std::string HttpChatClient::complete(const std::vector<ChatMessage>& messages) const {
    const auto url = split_url(config_.endpoint);
    const nlohmann::json body = {{"model", config_.model}, {"messages", to_json(messages)}};
    httplib::Headers headers;
    if (!api_key_.empty()) {
        headers.emplace("Authorization", "Bearer " + api_key_);
    }

    std::string last_error;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
        if (attempt > 0) {
            const std::chrono::milliseconds delay =
                std::min<std::chrono::milliseconds>(config_.backoff_cap, config_.backoff_base * (1 << (attempt - 1)));
            spdlog::warn("chat request failed ({}); retry {}/{} in {} ms", last_error, attempt, config_.retries,
                         delay.count());
            std::this_thread::sleep_for(delay);
        }
        httplib::Client client(url.scheme_host_port);
        const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
        const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - seconds);
        client.set_connection_timeout(seconds.count(), micros.count());
        client.set_read_timeout(seconds.count(), micros.count());
        client.set_write_timeout(seconds.count(), micros.count());

        const auto res = client.Post(url.path, headers, body.dump(), "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw TransportError("chat endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body);
        }
        try {
            const auto doc = nlohmann::json::parse(res->body);
            return doc.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("unexpected chat response shape: ") + e.what(), res->body);
        }
    }
    throw TransportError("chat request failed after " + std::to_string(config_.retries + 1) +
                         " attempts: " + last_error);
}

} // namespace freebloom
