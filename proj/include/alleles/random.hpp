#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <optional>
#include <random>
#include <thread>
#include <vector>

namespace alleles {

using Rng = std::mt19937_64;

/// Independent stream for (master_seed, stream_index). Streams for distinct
/// indices are seeded through std::seed_seq, so nearby indices do not share
/// engine state.
Rng make_stream(std::uint64_t master_seed, std::uint64_t stream_index);

/// Master seed for an independent sub-experiment identified by `tag`.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t tag);

/// Replicates are processed in fixed-size blocks; block b always draws from
/// make_stream(master_seed, b). Output therefore does not depend on the
/// number of worker threads.
inline constexpr std::size_t kReplicateBlock = 1024;

/// Runs fn(rng, lo, hi) once per block of replicates [lo, hi) and returns
/// the block results in block order. An exception thrown by any block is
/// rethrown from the lowest failing block once all workers have joined.
template <class Fn>
auto run_blocks(std::size_t count, std::uint64_t master_seed, unsigned threads, Fn&& fn)
    -> std::vector<decltype(fn(std::declval<Rng&>(), std::size_t{}, std::size_t{}))> {
  using Result = decltype(fn(std::declval<Rng&>(), std::size_t{}, std::size_t{}));
  const std::size_t blocks = (count + kReplicateBlock - 1) / kReplicateBlock;
  std::vector<std::optional<Result>> slots(blocks);
  std::vector<std::exception_ptr> errors(blocks);

  auto run_block = [&](std::size_t b) {
    Rng rng = make_stream(master_seed, b);
    const std::size_t lo = b * kReplicateBlock;
    const std::size_t hi = std::min(count, lo + kReplicateBlock);
    try {
      slots[b].emplace(fn(rng, lo, hi));
    } catch (...) {
      errors[b] = std::current_exception();
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(blocks)));
  if (workers <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) run_block(b);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t b = w; b < blocks; b += workers) run_block(b);
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<Result> out;
  out.reserve(blocks);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

/// Runs fn(rng, replicate_index) for every replicate and returns the results
/// in replicate order.
template <class Fn>
auto run_replicates(std::size_t count, std::uint64_t master_seed, unsigned threads, Fn&& fn)
    -> std::vector<decltype(fn(std::declval<Rng&>(), std::size_t{}))> {
  using Result = decltype(fn(std::declval<Rng&>(), std::size_t{}));
  auto blocks = run_blocks(count, master_seed, threads, [&](Rng& rng, std::size_t lo, std::size_t hi) {
    std::vector<Result> part;
    part.reserve(hi - lo);
    for (std::size_t i = lo; i < hi; ++i) part.push_back(fn(rng, i));
    return part;
  });
  std::vector<Result> out;
  out.reserve(count);
  for (auto& part : blocks) {
    for (auto& r : part) out.push_back(std::move(r));
  }
  return out;
}

inline double uniform01(Rng& rng) { return std::generate_canonical<double, 53>(rng); }

}  // namespace alleles
