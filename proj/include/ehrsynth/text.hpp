#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ehrsynth {

// Lowercases and splits on every non-alphanumeric byte. No stemming and no
// stopword list; shared by the coherence and plausibility scorers.
std::vector<std::string> tokenize(std::string_view text);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool starts_with_ci(std::string_view s, std::string_view prefix);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// RFC 4180 field quoting.
std::string csv_escape(std::string_view field);

}  // namespace ehrsynth
