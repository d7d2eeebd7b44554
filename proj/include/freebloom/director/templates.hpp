#pragma once

#include <string>
#include <string_view>

namespace freebloom {

inline constexpr std::string_view kPromptPlaceholder = "[Input Prompt]";
inline constexpr std::string_view kFrameCountPlaceholder = "[f]";

/// Stage-1 describer instruction with its two placeholders intact.
std::string_view stage1_template() noexcept;
/// Stage-2 coreference-resolution instruction.
std::string_view stage2_template() noexcept;

std::string build_stage1_instruction(std::string_view raw_prompt, int frames);
std::string build_stage2_instruction();

} // namespace freebloom
