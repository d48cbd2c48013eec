#include "shapbpt/coalition.hpp"

#include <sstream>

#include "shapbpt/errors.hpp"

namespace shapbpt {

Coalition make_coalition(std::size_t n, std::span<const Player> members) {
  Coalition c(n);
  for (Player p : members) {
    if (p >= n) {
      throw BoundsError("player " + std::to_string(p) + " outside universe of " +
                        std::to_string(n));
    }
    c.set(p);
  }
  return c;
}

Coalition make_coalition(std::size_t n, std::initializer_list<Player> members) {
  return make_coalition(n, std::span<const Player>(members.begin(), members.size()));
}

std::vector<Player> members_of(const Coalition& c) {
  std::vector<Player> out;
  out.reserve(c.count());
  for (auto i = c.find_first(); i != Coalition::npos; i = c.find_next(i)) {
    out.push_back(static_cast<Player>(i));
  }
  return out;
}

std::string to_string(const Coalition& c) {
  std::ostringstream os;
  os << '{';
  bool first = true;
  for (auto i = c.find_first(); i != Coalition::npos; i = c.find_next(i)) {
    if (!first) os << ',';
    os << i;
    first = false;
  }
  os << '}';
  return os.str();
}

std::size_t CoalitionHash::operator()(const Coalition& c) const noexcept {
  // FNV-1a over the blocks, seeded with the size so that equal prefixes of
  // different universes do not collide trivially.
  std::uint64_t h = 1469598103934665603ULL ^ c.size();
  std::vector<std::uint64_t> blocks(c.num_blocks());
  boost::to_block_range(c, blocks.begin());
  for (std::uint64_t b : blocks) {
    h ^= b;
    h *= 1099511628211ULL;
    h ^= h >> 29;
  }
  return static_cast<std::size_t>(h);
}

}  // namespace shapbpt
