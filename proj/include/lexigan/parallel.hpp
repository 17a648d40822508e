#pragma once

#include <cstddef>
#include <functional>
#include <optional>

namespace lexigan {

/// Worker count: explicit request, else LEXIGAN_THREADS, else 1.
std::size_t resolve_threads(std::optional<std::size_t> requested = std::nullopt);

/// Calls fn(i) for i in [0, n) on up to `threads` workers. Callers write
/// results by index, so the outcome does not depend on scheduling. The first
/// exception thrown by any task is rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace lexigan
