#include "fsmfp/mac.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fsmfp/errors.hpp"

namespace fsmfp {

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::optional<MacAddress> MacAddress::parse(std::string_view text) {
  if (text.size() != 17) return std::nullopt;
  MacAddress mac;
  for (int i = 0; i < 6; ++i) {
    const int hi = hex_value(text[i * 3]);
    const int lo = hex_value(text[i * 3 + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    if (i < 5 && text[i * 3 + 2] != ':') return std::nullopt;
    mac.octets[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return mac;
}

std::string MacAddress::to_string() const {
  char buf[18];
  std::snprintf(buf, sizeof(buf), "%02x:%02x:%02x:%02x:%02x:%02x", octets[0], octets[1],
                octets[2], octets[3], octets[4], octets[5]);
  return buf;
}

OuiTable parse_oui_table(std::string_view text) {
  OuiTable table;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    // trim
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
    std::size_t start = 0;
    while (start < line.size() && std::isspace(static_cast<unsigned char>(line[start]))) ++start;
    line.erase(0, start);
    if (line.empty()) continue;
    if (line.size() != 8)
      throw FormatError("oui table line " + std::to_string(lineno) + ": expected XX:XX:XX");
    // reuse the MAC parser by padding with zero octets
    auto mac = MacAddress::parse(line + ":00:00:00");
    if (!mac)
      throw FormatError("oui table line " + std::to_string(lineno) + ": bad prefix '" + line + "'");
    table.prefixes.insert(mac->oui_prefix());
  }
  return table;
}

OuiTable load_oui_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open oui table: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_oui_table(buf.str());
}

}  // namespace fsmfp
