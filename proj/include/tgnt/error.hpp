#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tgnt {

// Base for every error raised by the library. `module()` names the component
// that raised it so the CLI can report "<module>: <message>".
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& what)
      : std::runtime_error(what), module_(std::move(module)) {}

  [[nodiscard]] auto module() const -> const std::string& { return module_; }

 private:
  std::string module_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("ctdg", "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  [[nodiscard]] auto line() const -> std::size_t { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error("nn", what) {}
};

class SplitError : public Error {
 public:
  SplitError(std::string group, const std::string& what)
      : Error("splitter", what), group_(std::move(group)) {}

  [[nodiscard]] auto group() const -> const std::string& { return group_; }

 private:
  std::string group_;
};

// Non-finite loss, gradient or memory. Carries the batch index when known.
class DivergenceError : public Error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  DivergenceError(std::string module, const std::string& what,
                  std::size_t batch = npos)
      : Error(std::move(module), batch == npos
                                     ? what
                                     : what + " (batch " +
                                           std::to_string(batch) + ")"),
        batch_(batch) {}

  [[nodiscard]] auto batch() const -> std::size_t { return batch_; }

 private:
  std::size_t batch_;
};

}  // namespace tgnt
