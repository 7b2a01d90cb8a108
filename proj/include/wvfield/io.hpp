#ifndef WVFIELD_IO_HPP
#define WVFIELD_IO_HPP

#include <cstdio>
#include <string>

namespace wvf::io {

// Shortest exact decimal round-trip; keeps CSV output byte-stable.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Atomically replace `path` with `content` (temp file + rename).
void atomic_write_file(const std::string& path, const std::string& content);

std::string sha256_hex(const std::string& bytes);

}  // namespace wvf::io

#endif
