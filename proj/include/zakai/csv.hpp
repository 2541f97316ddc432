#pragma once

#include <string>
#include <vector>

namespace zakai {

/// Shortest-safe round-trip text for a double (17 significant digits).
std::string format_real(double x);

/// Writes a header row and the rows, comma separated. Throws ConfigError
/// if the file cannot be opened.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace zakai
