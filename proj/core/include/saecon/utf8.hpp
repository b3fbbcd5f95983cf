#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "saecon/error.hpp"

namespace saecon {

// Corpus offsets are code-point offsets into the decoded sentence, so span
// checks and tokenization run over code points, not bytes.
struct Utf8Text {
  std::vector<char32_t> points;
  std::vector<size_t> byte_offsets;  // byte offset of each code point; size = points+1

  size_t size() const { return points.size(); }

  std::string substr(size_t start, size_t end) const;

  static Utf8Text decode(const std::string& s);
};

inline Utf8Text Utf8Text::decode(const std::string& s) {
  Utf8Text out;
  size_t i = 0;
  const auto bad = [&](size_t at) {
    throw Error(ErrorCode::Parse,
                "invalid UTF-8 byte sequence at byte " + std::to_string(at));
  };
  while (i < s.size()) {
    out.byte_offsets.push_back(i);
    unsigned char c = static_cast<unsigned char>(s[i]);
    char32_t cp = 0;
    size_t len = 0;
    if (c < 0x80) {
      cp = c;
      len = 1;
    } else if ((c & 0xE0) == 0xC0) {
      cp = c & 0x1F;
      len = 2;
    } else if ((c & 0xF0) == 0xE0) {
      cp = c & 0x0F;
      len = 3;
    } else if ((c & 0xF8) == 0xF0) {
      cp = c & 0x07;
      len = 4;
    } else {
      bad(i);
    }
    if (i + len > s.size()) bad(i);
    for (size_t k = 1; k < len; ++k) {
      unsigned char cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) bad(i + k);
      cp = (cp << 6) | (cc & 0x3F);
    }
    out.points.push_back(cp);
    i += len;
  }
  out.byte_offsets.push_back(s.size());
  return out;
}

inline std::string Utf8Text::substr(size_t start, size_t end) const {
  if (start > end || end > points.size())
    throw Error(ErrorCode::Validation, "code-point span out of range");
  std::string out;
  for (size_t i = start; i < end; ++i) {
    char32_t cp = points[i];
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

// Number of code points in a UTF-8 string.
inline size_t utf8_length(const std::string& s) {
  return Utf8Text::decode(s).size();
}

}  // namespace saecon
