#pragma once

#include <string_view>

namespace medrex {

enum class PromptMode { baseline, umls, rag };

std::string_view mode_name(PromptMode mode);
PromptMode mode_from_name(std::string_view name);  // throws ConfigError on unknown names

}  // namespace medrex
