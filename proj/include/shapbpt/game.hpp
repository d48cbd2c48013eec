#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "shapbpt/coalition.hpp"

namespace shapbpt {

// One real per explained class.
using Worth = std::vector<double>;

// The worth function nu over coalitions of pixels, queried in batches.
// Implementations must be deterministic: the same coalition always yields the
// same worth vector, and results are order-aligned with the request.
class CharacteristicGame {
 public:
  virtual ~CharacteristicGame() = default;

  virtual std::size_t num_players() const = 0;
  virtual std::size_t num_classes() const = 0;
  virtual std::vector<Worth> evaluate_batch(std::span<const Coalition> coalitions) = 0;

  // Short identifier recorded in output metadata.
  virtual std::string id() const { return "game"; }
};

// Evaluates a single coalition and returns the worth of class `cls`.
double worth_of(CharacteristicGame& game, const Coalition& c, std::size_t cls = 0);

// Subtracts nu(empty) from every query. The offset is measured once, when the
// adapter is built.
class NormalizedGame final : public CharacteristicGame {
 public:
  explicit NormalizedGame(CharacteristicGame& inner);

  std::size_t num_players() const override { return inner_.num_players(); }
  std::size_t num_classes() const override { return inner_.num_classes(); }
  std::vector<Worth> evaluate_batch(std::span<const Coalition> coalitions) override;
  std::string id() const override { return inner_.id(); }

  const Worth& offset() const { return offset_; }

 private:
  CharacteristicGame& inner_;
  Worth offset_;
};

// Game backed by a callable. Handy for analytic games in tests and tools.
class FunctionGame final : public CharacteristicGame {
 public:
  using Fn = std::function<Worth(const Coalition&)>;

  FunctionGame(std::size_t num_players, std::size_t num_classes, Fn fn,
               std::string id = "function");

  // Single-class convenience.
  static FunctionGame scalar(std::size_t num_players,
                             std::function<double(const Coalition&)> fn,
                             std::string id = "function");

  std::size_t num_players() const override { return num_players_; }
  std::size_t num_classes() const override { return num_classes_; }
  std::vector<Worth> evaluate_batch(std::span<const Coalition> coalitions) override;
  std::string id() const override { return id_; }

  std::size_t calls() const { return calls_; }

 private:
  std::size_t num_players_;
  std::size_t num_classes_;
  Fn fn_;
  std::string id_;
  std::size_t calls_ = 0;
};

// A game given by its full worth table, indexed by coalition bitmask
// (bit i set <=> player i present). Limited to 16 players.
class RecordedGame final : public CharacteristicGame {
 public:
  static constexpr std::size_t kMaxPlayers = 16;

  RecordedGame(std::size_t num_players, std::size_t num_classes,
               std::vector<Worth> table);

  // Text format: one line per coalition, "<mask> <worth_0> ... <worth_k-1>".
  // Blank lines and lines starting with '#' are ignored. Every mask in
  // [0, 2^n) must appear exactly once; n is inferred from the line count.
  static RecordedGame parse(std::istream& in);
  static RecordedGame load(const std::string& path);
  void write(std::ostream& out) const;

  // Records an arbitrary game by enumerating all 2^n coalitions.
  static RecordedGame record(CharacteristicGame& game);

  std::size_t num_players() const override { return num_players_; }
  std::size_t num_classes() const override { return num_classes_; }
  std::vector<Worth> evaluate_batch(std::span<const Coalition> coalitions) override;
  std::string id() const override { return "recorded"; }

  const Worth& at(std::uint32_t mask) const { return table_.at(mask); }

 private:
  std::size_t num_players_;
  std::size_t num_classes_;
  std::vector<Worth> table_;
};

}  // namespace shapbpt
