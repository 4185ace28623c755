#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mixcon {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor or layer shapes do not line up.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Invalid hyperparameters, specs or options.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Caller violated a precondition of an operation.
class ContractError : public Error {
public:
    using Error::Error;
};

/// Malformed file contents. Carries the byte offset (binary formats) or
/// line number (text formats) where parsing stopped.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::size_t position)
        : Error(what), position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// Loss became non-finite during training.
class TrainingError : public Error {
public:
    TrainingError(const std::string& what, int epoch, int batch)
        : Error(what), epoch_(epoch), batch_(batch) {}

    int epoch() const noexcept { return epoch_; }
    int batch() const noexcept { return batch_; }

private:
    int epoch_;
    int batch_;
};

/// Inversion objective became non-finite.
class AttackError : public Error {
public:
    AttackError(const std::string& what, int iteration)
        : Error(what), iteration_(iteration) {}

    int iteration() const noexcept { return iteration_; }

private:
    int iteration_;
};

}  // namespace mixcon
