#pragma once

#include <string>

#include "legival/corpus.hpp"

namespace legival::prompts {

// Dataset system prompt handed to teachers and students.
const std::string& system_prompt(corpus::Dataset dataset);

// String appended to the assistant text for the forced second grading
// pass when the first continuation had no extractable answer.
const std::string& forcing_string(corpus::Dataset dataset);

}  // namespace legival::prompts
