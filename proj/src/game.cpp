#include "shapbpt/game.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include "shapbpt/errors.hpp"

namespace shapbpt {

double worth_of(CharacteristicGame& game, const Coalition& c, std::size_t cls) {
  auto out = game.evaluate_batch(std::span<const Coalition>(&c, 1));
  return out.at(0).at(cls);
}

NormalizedGame::NormalizedGame(CharacteristicGame& inner) : inner_(inner) {
  Coalition empty(inner_.num_players());
  offset_ = inner_.evaluate_batch(std::span<const Coalition>(&empty, 1)).at(0);
}

std::vector<Worth> NormalizedGame::evaluate_batch(std::span<const Coalition> coalitions) {
  auto out = inner_.evaluate_batch(coalitions);
  for (auto& w : out) {
    for (std::size_t k = 0; k < w.size(); ++k) w[k] -= offset_[k];
  }
  return out;
}

FunctionGame::FunctionGame(std::size_t num_players, std::size_t num_classes, Fn fn,
                           std::string id)
    : num_players_(num_players),
      num_classes_(num_classes),
      fn_(std::move(fn)),
      id_(std::move(id)) {
  if (num_players_ == 0 || num_classes_ == 0) {
    throw StructuralError("a game needs at least one player and one class");
  }
}

FunctionGame FunctionGame::scalar(std::size_t num_players,
                                  std::function<double(const Coalition&)> fn,
                                  std::string id) {
  return FunctionGame(
      num_players, 1, [f = std::move(fn)](const Coalition& c) { return Worth{f(c)}; },
      std::move(id));
}

std::vector<Worth> FunctionGame::evaluate_batch(std::span<const Coalition> coalitions) {
  std::vector<Worth> out;
  out.reserve(coalitions.size());
  for (std::size_t i = 0; i < coalitions.size(); ++i) {
    if (coalitions[i].size() != num_players_) {
      throw EvaluationError("coalition universe does not match game size", i);
    }
    out.push_back(fn_(coalitions[i]));
    ++calls_;
  }
  return out;
}

RecordedGame::RecordedGame(std::size_t num_players, std::size_t num_classes,
                           std::vector<Worth> table)
    : num_players_(num_players), num_classes_(num_classes), table_(std::move(table)) {
  if (num_players_ == 0 || num_players_ > kMaxPlayers) {
    throw CapacityError("recorded games support 1.." + std::to_string(kMaxPlayers) +
                        " players");
  }
  if (table_.size() != (std::size_t{1} << num_players_)) {
    throw StructuralError("worth table must hold 2^n entries");
  }
  for (const auto& w : table_) {
    if (w.size() != num_classes_) throw StructuralError("ragged worth table");
  }
}

RecordedGame RecordedGame::parse(std::istream& in) {
  std::vector<std::pair<std::uint64_t, Worth>> rows;
  std::string line;
  std::size_t classes = 0;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::uint64_t mask = 0;
    if (!(ls >> mask)) throw FormatError("line " + std::to_string(lineno) + ": bad mask");
    Worth w;
    double v = 0.0;
    while (ls >> v) w.push_back(v);
    if (!ls.eof()) throw FormatError("line " + std::to_string(lineno) + ": bad worth");
    if (w.empty()) throw FormatError("line " + std::to_string(lineno) + ": no worths");
    if (classes == 0) classes = w.size();
    if (w.size() != classes) {
      throw FormatError("line " + std::to_string(lineno) + ": class count changed");
    }
    rows.emplace_back(mask, std::move(w));
  }
  if (rows.empty() || !std::has_single_bit(rows.size())) {
    throw FormatError("recorded game needs 2^n lines, got " + std::to_string(rows.size()));
  }
  const auto n = static_cast<std::size_t>(std::countr_zero(rows.size()));
  if (n == 0 || n > kMaxPlayers) {
    throw CapacityError("recorded games support 1.." + std::to_string(kMaxPlayers) +
                        " players");
  }
  std::vector<Worth> table(rows.size());
  std::vector<bool> seen(rows.size(), false);
  for (auto& [mask, w] : rows) {
    if (mask >= rows.size() || seen[mask]) {
      throw FormatError("mask " + std::to_string(mask) + " out of range or repeated");
    }
    seen[mask] = true;
    table[mask] = std::move(w);
  }
  return RecordedGame(n, classes, std::move(table));
}

RecordedGame RecordedGame::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  return parse(in);
}

void RecordedGame::write(std::ostream& out) const {
  auto old = out.precision(17);
  for (std::size_t mask = 0; mask < table_.size(); ++mask) {
    out << mask;
    for (double v : table_[mask]) out << ' ' << v;
    out << '\n';
  }
  out.precision(old);
}

RecordedGame RecordedGame::record(CharacteristicGame& game) {
  const std::size_t n = game.num_players();
  if (n == 0 || n > kMaxPlayers) {
    throw CapacityError("recorded games support 1.." + std::to_string(kMaxPlayers) +
                        " players");
  }
  std::vector<Coalition> all;
  all.reserve(std::size_t{1} << n);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    all.emplace_back(n, mask);
  }
  return RecordedGame(n, game.num_classes(), game.evaluate_batch(all));
}

std::vector<Worth> RecordedGame::evaluate_batch(std::span<const Coalition> coalitions) {
  std::vector<Worth> out;
  out.reserve(coalitions.size());
  for (std::size_t i = 0; i < coalitions.size(); ++i) {
    if (coalitions[i].size() != num_players_) {
      throw EvaluationError("coalition universe does not match game size", i);
    }
    out.push_back(table_[coalitions[i].to_ulong()]);
  }
  return out;
}

}  // namespace shapbpt
