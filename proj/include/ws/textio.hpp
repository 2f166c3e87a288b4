#pragma once

#include <string>
#include <string_view>

namespace ws::io {

// Fixed 17-significant-digit decimal encoding ("%.17g", C locale). Decodes
// back to the identical IEEE-754 double; used for every real written to model
// files, corpus files and CSV outputs.
std::string format_real(double v);

void append_real(std::string& out, double v);

// Minimal JSON string escaping (quotes, backslash, control characters).
std::string json_escape(std::string_view s);

} // namespace ws::io
