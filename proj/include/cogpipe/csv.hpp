#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cogpipe::csv {

using Row = std::vector<std::string>;

// Splits comma-separated text into rows. Double-quoted fields may contain commas,
// newlines and doubled quotes. CRLF line endings are accepted. Blank lines are skipped.
std::vector<Row> parse(std::string_view text);

// Quotes the field only when it needs it.
std::string escape(std::string_view field);

std::string join(const Row& fields);

}  // namespace cogpipe::csv
