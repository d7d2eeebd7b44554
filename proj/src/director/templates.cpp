#include "freebloom/director/templates.hpp"

#include "freebloom/core/error.hpp"

namespace freebloom {

namespace {

constexpr std::string_view kStage1 =
    "I would like you to play the role of the describer of each frame of the video as a director of a movie. "
    "The content of each video should be concise and only clearly describe the subject. "
    "Each sentence in the video is independent. "
    "Every sentence needs to include the subject's appearance and actions, please describe the main actions of "
    "the object and the extent of the actions in as much detail as possible. "
    "The sentences of each picture are independent, and each sentence should describe what exists in the picture. "
    "Each frame is described in only one sentence. "
    "Suppose there is a video about \"[Input Prompt]\" and there are \"[f]\" frames in the video. "
    "Describe the content of each frame separately. "
    "Please be straightforward and do not use a narrative style.";

constexpr std::string_view kStage2 =
    "Now perform Coreference Resolution on the above sentence, replace reflexive pronouns with their original "
    "vocabulary, and eliminate the discourse cohesion. Keep the meaning the same. "
    "The sentence for each frame should be able to fully express all the visual information of the frame. "
    "Also, the linguistic structure of each sentence should be simple and similar.";

std::string replace_once(std::string text, std::string_view placeholder, std::string_view value) {
    const auto pos = text.find(placeholder);
    if (pos == std::string::npos) {
        throw StateError("template placeholder missing: " + std::string(placeholder));
    }
    text.replace(pos, placeholder.size(), value);
    return text;
}

} // namespace

std::string_view stage1_template() noexcept { return kStage1; }
std::string_view stage2_template() noexcept { return kStage2; }

std::string build_stage1_instruction(std::string_view raw_prompt, int frames) {
    if (raw_prompt.empty()) {
        throw InvalidArgument("stage-1 instruction needs a non-empty prompt");
    }
    if (frames < 1) {
        throw InvalidArgument("stage-1 instruction needs at least one frame");
    }
    // frame count first; the prompt text is never rescanned
    std::string text = replace_once(std::string(kStage1), kFrameCountPlaceholder, std::to_string(frames));
    return replace_once(std::move(text), kPromptPlaceholder, raw_prompt);
}

std::string build_stage2_instruction() { return std::string(kStage2); }

} // namespace freebloom
