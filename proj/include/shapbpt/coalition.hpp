#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include <boost/dynamic_bitset.hpp>

namespace shapbpt {

// Players are pixels in row-major order, numbered from 0.
using Player = std::uint32_t;

// A set of players over a fixed universe of n players.
using Coalition = boost::dynamic_bitset<std::uint64_t>;

Coalition make_coalition(std::size_t n, std::span<const Player> members);
Coalition make_coalition(std::size_t n, std::initializer_list<Player> members);

// Sorted member list.
std::vector<Player> members_of(const Coalition& c);

// "{0,3,4}" style rendering for diagnostics.
std::string to_string(const Coalition& c);

struct CoalitionHash {
  std::size_t operator()(const Coalition& c) const noexcept;
};

}  // namespace shapbpt
