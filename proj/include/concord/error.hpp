#pragma once

#include <stdexcept>
#include <string>

namespace concord {

enum class Errc {
  invalid_input,
  invalid_set,
  invalid_pair,
  invalid_ordering,
  set_too_large,
  io,
  empty_graph,
  empty_seed,
  validation,
  zero_instances,
  adapter,
  transport,
  empty_generation,
  usage,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::invalid_input: return "invalid-input";
    case Errc::invalid_set: return "invalid-set";
    case Errc::invalid_pair: return "invalid-pair";
    case Errc::invalid_ordering: return "invalid-ordering";
    case Errc::set_too_large: return "set-too-large";
    case Errc::io: return "io";
    case Errc::empty_graph: return "empty-graph";
    case Errc::empty_seed: return "empty-seed";
    case Errc::validation: return "validation";
    case Errc::zero_instances: return "zero-instances";
    case Errc::adapter: return "adapter";
    case Errc::transport: return "transport";
    case Errc::empty_generation: return "empty-generation";
    case Errc::usage: return "usage";
  }
  return "unknown";
}

// Every failure raised by the library carries one of the codes above so the
// CLI can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace concord
