#include "dss/envs.hpp"

#include <bit>
#include <sstream>
#include <string>
#include <vector>

namespace dss::envs {
namespace {

struct Layout {
  int rows = 0;
  int cols = 0;
  std::vector<std::string> grid;
  std::vector<int> cell_of;  // grid position -> free-cell index, -1 for walls
  std::vector<std::pair<int, int>> cells;
  int start = -1;
  int goal = -1;
  std::vector<int> flag_cells;
};

constexpr int kMaxFlags = 3;

Layout parse_layout(std::string_view text) {
  Layout layout;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!layout.grid.empty() && line.size() != layout.grid.front().size()) throw ModelError("maze: layout is not rectangular");
    layout.grid.push_back(line);
  }
  if (layout.grid.empty()) throw ModelError("maze: empty layout");
  layout.rows = static_cast<int>(layout.grid.size());
  layout.cols = static_cast<int>(layout.grid.front().size());
  layout.cell_of.assign(static_cast<std::size_t>(layout.rows * layout.cols), -1);
  for (int r = 0; r < layout.rows; ++r) {
    for (int c = 0; c < layout.cols; ++c) {
      const char ch = layout.grid[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      if (ch == '#') continue;
      if (ch != '.' && ch != 'S' && ch != 'G' && ch != 'F')
        throw ModelError(std::string("maze: unexpected character '") + ch + "'");
      const int cell = static_cast<int>(layout.cells.size());
      layout.cell_of[static_cast<std::size_t>(r * layout.cols + c)] = cell;
      layout.cells.emplace_back(r, c);
      if (ch == 'S') {
        if (layout.start >= 0) throw ModelError("maze: more than one start");
        layout.start = cell;
      } else if (ch == 'G') {
        if (layout.goal >= 0) throw ModelError("maze: more than one goal");
        layout.goal = cell;
      } else if (ch == 'F') {
        layout.flag_cells.push_back(cell);
      }
    }
  }
  if (layout.start < 0) throw ModelError("maze: no start");
  if (layout.goal < 0) throw ModelError("maze: no goal");
  if (static_cast<int>(layout.flag_cells.size()) > kMaxFlags) throw ModelError("maze: at most 3 flags");
  return layout;
}

}  // namespace

MazeCoordinates maze_decode(Index state, int n_flags) {
  const Index combos = Index(1) << n_flags;
  return {state / combos, static_cast<unsigned>(state % combos)};
}

Index maze_encode(MazeCoordinates coords, int n_flags) { return (coords.cell << n_flags) + coords.flags; }

Environment make_maze(std::string_view text, double discount, MazeParams params) {
  const Layout layout = parse_layout(text);
  const int n_flags = static_cast<int>(layout.flag_cells.size());
  const auto n_cells = static_cast<Index>(layout.cells.size());
  const Index S = n_cells << n_flags;
  constexpr Index A = 4;
  constexpr int dr[A] = {-1, 0, 1, 0};
  constexpr int dc[A] = {0, 1, 0, -1};
  const double slip = params.perpendicular_slip;
  if (!(slip >= 0.0 && slip <= 0.5)) throw std::invalid_argument("maze: slip must lie in [0, 0.5]");

  auto move = [&](int cell, Index dir) {
    const auto [r, c] = layout.cells[static_cast<std::size_t>(cell)];
    const int nr = r + dr[dir];
    const int nc = c + dc[dir];
    if (nr < 0 || nr >= layout.rows || nc < 0 || nc >= layout.cols) return cell;
    const int target = layout.cell_of[static_cast<std::size_t>(nr * layout.cols + nc)];
    return target < 0 ? cell : target;
  };

  std::vector<std::vector<Outcome>> outcomes(static_cast<std::size_t>(S * A));
  for (Index s = 0; s < S; ++s) {
    const auto [cell, flags] = maze_decode(s, n_flags);
    for (Index a = 0; a < A; ++a) {
      const std::pair<Index, double> directions[3] = {{a, 1.0 - 2.0 * slip}, {(a + 1) % A, slip}, {(a + 3) % A, slip}};
      auto& list = outcomes[static_cast<std::size_t>(s * A + a)];
      for (const auto& [dir, probability] : directions) {
        if (probability <= 0.0) continue;
        const int target = move(static_cast<int>(cell), dir);
        unsigned collected = flags;
        for (int f = 0; f < n_flags; ++f) {
          if (layout.flag_cells[static_cast<std::size_t>(f)] == target) collected |= 1u << f;
        }
        Outcome o{maze_encode({target, collected}, n_flags), probability, 0.0};
        if (target == layout.goal) {
          o.raw_reward = static_cast<double>(std::popcount(collected));
          o.next = maze_encode({layout.start, 0}, n_flags);
        }
        bool merged = false;
        for (auto& existing : list) {
          if (existing.next == o.next && existing.raw_reward == o.raw_reward) {
            existing.probability += o.probability;
            merged = true;
          }
        }
        if (!merged) list.push_back(o);
      }
    }
  }
  return Environment("maze", S, A, maze_encode({layout.start, 0}, n_flags), std::move(outcomes), discount, true);
}

}  // namespace dss::envs
