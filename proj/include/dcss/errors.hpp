#pragma once

#include <stdexcept>
#include <string>

namespace dcss {

// Invalid scenario/network/detector configuration.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical breakdown (underflow of all emission components, etc.).
// `index` is the window step at which the failure occurred, -1 if n/a.
class numerical_error : public std::runtime_error {
public:
    numerical_error(const std::string& msg, long index = -1)
        : std::runtime_error(msg + (index >= 0 ? " (step " + std::to_string(index) + ")" : "")),
          index_(index) {}
    long index() const noexcept { return index_; }

private:
    long index_;
};

// A mixture component lost essentially all responsibility during EM.
class degenerate_component_error : public std::runtime_error {
public:
    degenerate_component_error(const std::string& msg, long iteration = -1)
        : std::runtime_error(msg + (iteration >= 0 ? " (iteration " + std::to_string(iteration) + ")" : "")),
          iteration_(iteration) {}
    long iteration() const noexcept { return iteration_; }

private:
    long iteration_;
};

// Input data unsuitable for initialization (e.g. all samples identical).
class degenerate_input_error : public std::runtime_error {
public:
    explicit degenerate_input_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace dcss
