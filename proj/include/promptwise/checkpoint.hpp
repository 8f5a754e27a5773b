#ifndef PROMPTWISE_CHECKPOINT_HPP
#define PROMPTWISE_CHECKPOINT_HPP

#include <string>
#include <utility>
#include <vector>

#include "promptwise/tensor.hpp"

namespace pw {

using NamedTensors = std::vector<std::pair<std::string, TensorPtr>>;

/// Flat archive of named tensors. Layout: magic "PWCK", one version byte,
/// then per entry: name length (u64 LE), name bytes (UTF-8), rows and cols
/// (u64 LE), rows*cols IEEE-754 doubles (LE).
void save_checkpoint(const std::string& path, const NamedTensors& entries);

/// Reads all entries; loaded tensors are plain values (requires_grad false).
NamedTensors load_checkpoint(const std::string& path);

/// Copies checkpoint values into matching destination tensors by name.
/// Throws DependencyError when a destination name is absent from the file,
/// ShapeError on shape mismatch.
void restore_into(const NamedTensors& loaded, const NamedTensors& destinations);

} // namespace pw

#endif
