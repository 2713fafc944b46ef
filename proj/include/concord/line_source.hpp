#pragma once

#include <zlib.h>

#include <istream>
#include <memory>
#include <string>

#include "concord/error.hpp"

namespace concord {

// Line-oriented record streams. Both yield lines without the trailing
// newline (and without a trailing '\r').

class IstreamLines {
 public:
  explicit IstreamLines(std::istream& in) : in_(&in) {}

  bool next(std::string& line) {
    if (!std::getline(*in_, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }

 private:
  std::istream* in_;
};

// Reads gzip-compressed or plain files; zlib passes uncompressed input through.
class GzipLines {
 public:
  explicit GzipLines(const std::string& path) : file_(gzopen(path.c_str(), "rb"), &gzclose) {
    if (!file_) throw Error(Errc::io, "cannot open '" + path + "'");
    gzbuffer(file_.get(), 1 << 17);
  }

  bool next(std::string& line) {
    line.clear();
    char buf[8192];
    for (;;) {
      if (gzgets(file_.get(), buf, sizeof buf) == nullptr) {
        int err = Z_OK;
        gzerror(file_.get(), &err);
        if (err != Z_OK && err != Z_STREAM_END) throw Error(Errc::io, "read error in compressed stream");
        if (line.empty()) return false;
        break;
      }
      line.append(buf);
      if (!line.empty() && line.back() == '\n') {
        line.pop_back();
        break;
      }
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }

 private:
  std::unique_ptr<gzFile_s, decltype(&gzclose)> file_;
};

}  // namespace concord
