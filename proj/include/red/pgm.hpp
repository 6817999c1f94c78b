#pragma once

// Binary PGM (P5) reader/writer, single channel, maxval up to 255. Loading
// followed by saving is the identity on integer-valued in-range images;
// saving rounds and clamps to [0, 255].

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>

#include "red/image.hpp"

namespace red {

class PgmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

// Reads the next header token, skipping whitespace and '#' comment lines.
inline long pgm_header_int(std::istream& in, const std::string& path) {
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = in.get();
  }
  if (c == EOF || !std::isdigit(c)) throw PgmError(path + ": malformed PGM header");
  long value = 0;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    if (value > 1'000'000'000L) throw PgmError(path + ": absurd header value");
    c = in.get();
  }
  if (c != EOF) in.unget();
  return value;
}

}  // namespace detail

inline Image load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PgmError(path + ": cannot open");
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '5')
    throw PgmError(path + ": not a binary PGM (P5) file");
  const long width = detail::pgm_header_int(in, path);
  const long height = detail::pgm_header_int(in, path);
  const long maxval = detail::pgm_header_int(in, path);
  if (width <= 0 || height <= 0) throw PgmError(path + ": malformed PGM header");
  if (maxval < 1 || maxval > 255)
    throw PgmError(path + ": unsupported maxval " + std::to_string(maxval) +
                   " (only 8-bit PGM is supported)");
  in.get();  // single whitespace byte separating header and payload
  if (!in) throw PgmError(path + ": truncated payload");
  std::vector<unsigned char> raw(static_cast<std::size_t>(width) * height);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size())
    throw PgmError(path + ": truncated payload");
  Image img(static_cast<int>(width), static_cast<int>(height));
  for (std::size_t i = 0; i < raw.size(); ++i) img.samples()[i] = raw[i];
  return img;
}

inline void save_pgm(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PgmError(path + ": cannot open for writing");
  out << "P5\n" << img.width() << " " << img.height() << "\n255\n";
  std::vector<unsigned char> raw(img.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double v = std::lround(img.samples()[i]);
    raw[i] = static_cast<unsigned char>(v < 0.0 ? 0.0 : (v > 255.0 ? 255.0 : v));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw PgmError(path + ": write failed");
}

}  // namespace red
