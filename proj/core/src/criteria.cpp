#include "softsensor/criteria.hpp"

#include <cmath>
#include <limits>

#include "softsensor/error.hpp"

namespace softsensor {

std::string to_string(Criterion kind) {
  switch (kind) {
    case Criterion::r2adj: return "r2adj";
    case Criterion::aicc: return "aicc";
    case Criterion::bic: return "bic";
  }
  return "bic";
}

Criterion parse_criterion(const std::string& name) {
  if (name == "r2adj") return Criterion::r2adj;
  if (name == "aicc") return Criterion::aicc;
  if (name == "bic") return Criterion::bic;
  throw InvalidArgument("unknown criterion '" + name + "'");
}

bool criterion_admissible(Criterion kind, std::size_t n, std::size_t c) {
  if (c >= n) return false;
  if (kind == Criterion::r2adj) return n - c - 1 >= 1;
  return true;
}

double criterion_value(Criterion kind, std::size_t n, double rss, std::size_t c) {
  if (!(rss >= 0.0)) throw InvalidArgument("RSS must be nonnegative");
  if (!criterion_admissible(kind, n, c)) {
    throw InvalidArgument("criterion " + to_string(kind) + " undefined for n=" + std::to_string(n) +
                          ", c=" + std::to_string(c));
  }
  const double nn = static_cast<double>(n);
  const double cc = static_cast<double>(c);
  switch (kind) {
    case Criterion::r2adj: return rss / (nn - cc - 1.0);
    case Criterion::aicc:
      if (rss == 0.0) return -std::numeric_limits<double>::infinity();
      return nn * std::log(rss / nn) + 2.0 * cc;
    case Criterion::bic:
      if (rss == 0.0) return -std::numeric_limits<double>::infinity();
      return nn * std::log(rss / nn) + std::log(nn) * cc;
  }
  return 0.0;
}

}  // namespace softsensor
