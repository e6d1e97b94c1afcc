#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace defikit {

// A data problem tied to an input location. Rows are rejected with a
// diagnostic, never silently dropped.
struct Diagnostic {
  std::string source;     // file name, stage name, ...
  std::size_t line = 0;   // 1-based; 0 when not line-addressable
  std::string message;
};

class Diagnostics {
 public:
  void add(std::string source, std::size_t line, std::string message) {
    if (echo_) {
      *echo_ << source;
      if (line) *echo_ << ":" << line;
      *echo_ << ": " << message << "\n";
    }
    items_.push_back({std::move(source), line, std::move(message)});
  }

  const std::vector<Diagnostic>& items() const { return items_; }
  std::size_t count() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  void clear() { items_.clear(); }

  // Mirror diagnostics to a stream as they are emitted (CLI use).
  void set_echo(std::ostream* os) { echo_ = os; }

 private:
  std::vector<Diagnostic> items_;
  std::ostream* echo_ = nullptr;
};

}  // namespace defikit
