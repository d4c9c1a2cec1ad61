#include "xvoxel/gauss.hpp"

#include <stdexcept>

namespace xv {

namespace {

struct Table {
  std::array<double, 4> nodes{};
  std::array<double, 4> weights{};
  int n = 0;
};

Table make_table(int n) {
  Table t;
  t.n = n;
  switch (n) {
    case 1:
      t.nodes = {0.0};
      t.weights = {2.0};
      break;
    case 2: {
      const double a = 1.0 / std::sqrt(3.0);
      t.nodes = {-a, a};
      t.weights = {1.0, 1.0};
      break;
    }
    case 3: {
      const double a = std::sqrt(3.0 / 5.0);
      t.nodes = {-a, 0.0, a};
      const double w = 5.0 / 9.0;
      t.weights = {w, 2.0 - 2.0 * w, w};
      break;
    }
    case 4: {
      const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
      const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
      const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
      const double wa = 1.0 - wb;  // exact pairwise normalization
      t.nodes = {-b, -a, a, b};
      t.weights = {wb, wa, wa, wb};
      break;
    }
    default:
      throw std::invalid_argument("gauss_rule supports n = 1..4");
  }
  return t;
}

const Table kTables[4] = {make_table(1), make_table(2), make_table(3), make_table(4)};

}  // namespace

GaussRule gauss_rule(int n) {
  if (n < 1 || n > 4) throw std::invalid_argument("gauss_rule supports n = 1..4");
  const Table& t = kTables[n - 1];
  return {std::span<const double>(t.nodes.data(), t.n),
          std::span<const double>(t.weights.data(), t.n)};
}

}  // namespace xv
