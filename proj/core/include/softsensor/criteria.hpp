#pragma once

#include <cstddef>
#include <string>

namespace softsensor {

/// RSS-based overfitting criteria for subset selection.
///
///   r2adj: RSS / (n - c - 1)
///   aicc:  n ln(RSS / n) + 2 c        (no small-sample term)
///   bic:   n ln(RSS / n) + ln(n) c
///
/// For fixed c every criterion is increasing in RSS and for fixed RSS
/// increasing in c.
enum class Criterion { r2adj, aicc, bic };

std::string to_string(Criterion kind);
Criterion parse_criterion(const std::string& name);

/// Returns -inf for RSS == 0 under the log criteria. c == 0 denotes the
/// bias-only model. Throws InvalidArgument on RSS < 0, c >= n, or
/// n - c - 1 < 1 for r2adj.
double criterion_value(Criterion kind, std::size_t n, double rss, std::size_t c);

/// True when criterion_value would accept (n, c).
bool criterion_admissible(Criterion kind, std::size_t n, std::size_t c);

}  // namespace softsensor
