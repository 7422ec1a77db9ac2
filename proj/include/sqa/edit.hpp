#ifndef SQA_EDIT_HPP
#define SQA_EDIT_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sqa/errors.hpp"

namespace sqa {

enum class EditKind : std::uint8_t { Match, Sub, Del, Ins };

inline const char* edit_kind_name(EditKind k) {
  switch (k) {
    case EditKind::Match: return "match";
    case EditKind::Sub: return "sub";
    case EditKind::Del: return "del";
    case EditKind::Ins: return "ins";
  }
  return "?";
}

// One step of an edit script. Match/Sub carry both indices, Del only the
// reference index, Ins only the hypothesis index (the other side is npos).
struct EditOp {
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  EditKind kind = EditKind::Match;
  std::size_t ref_index = npos;
  std::size_t hyp_index = npos;

  bool operator==(const EditOp&) const = default;
};

struct Alignment {
  std::size_t distance = 0;
  std::vector<EditOp> ops;
};

// Unit-cost edit distance over any equality-comparable symbol type.
template <typename T>
std::size_t edit_distance(std::span<const T> a, std::span<const T> b) {
  const std::size_t m = a.size(), n = b.size();
  std::vector<std::size_t> prev(n + 1), cur(n + 1);
  for (std::size_t j = 0; j <= n; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= m; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= n; ++j) {
      std::size_t best = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      if (prev[j] + 1 < best) best = prev[j] + 1;
      if (cur[j - 1] + 1 < best) best = cur[j - 1] + 1;
      cur[j] = best;
    }
    std::swap(prev, cur);
  }
  return prev[n];
}

template <typename T>
std::size_t edit_distance(const std::vector<T>& a, const std::vector<T>& b) {
  return edit_distance(std::span<const T>(a), std::span<const T>(b));
}

// Minimum-cost alignment with one optimal script. The DP table holds suffix
// distances so the backtrace walks forward; ties prefer Match > Sub > Del > Ins.
template <typename T>
Alignment align_sequences(std::span<const T> ref, std::span<const T> hyp) {
  const std::size_t m = ref.size(), n = hyp.size();
  // dp[i][j] = distance between ref[i:] and hyp[j:]
  std::vector<std::size_t> dp((m + 1) * (n + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& {
    return dp[i * (n + 1) + j];
  };
  for (std::size_t j = 0; j <= n; ++j) at(m, j) = n - j;
  for (std::size_t i = 0; i <= m; ++i) at(i, n) = m - i;
  for (std::size_t i = m; i-- > 0;) {
    for (std::size_t j = n; j-- > 0;) {
      std::size_t best = at(i + 1, j + 1) + (ref[i] == hyp[j] ? 0 : 1);
      if (at(i + 1, j) + 1 < best) best = at(i + 1, j) + 1;
      if (at(i, j + 1) + 1 < best) best = at(i, j + 1) + 1;
      at(i, j) = best;
    }
  }

  Alignment out;
  out.distance = at(0, 0);
  out.ops.reserve(m + n);
  std::size_t i = 0, j = 0;
  while (i < m || j < n) {
    if (i < m && j < n && ref[i] == hyp[j] && at(i, j) == at(i + 1, j + 1)) {
      out.ops.push_back({EditKind::Match, i, j});
      ++i, ++j;
    } else if (i < m && j < n && at(i, j) == at(i + 1, j + 1) + 1) {
      out.ops.push_back({EditKind::Sub, i, j});
      ++i, ++j;
    } else if (i < m && at(i, j) == at(i + 1, j) + 1) {
      out.ops.push_back({EditKind::Del, i, EditOp::npos});
      ++i;
    } else {
      out.ops.push_back({EditKind::Ins, EditOp::npos, j});
      ++j;
    }
  }
  return out;
}

inline Alignment levenshtein_align(const std::vector<std::string>& ref,
                                   const std::vector<std::string>& hyp) {
  return align_sequences(std::span<const std::string>(ref),
                         std::span<const std::string>(hyp));
}

// Word error rate: minimum edit distance divided by reference length.
inline double wer(const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
  if (ref.empty()) raise(ErrorCode::EmptyReference, "wer requires a non-empty reference");
  return static_cast<double>(edit_distance(ref, hyp)) / static_cast<double>(ref.size());
}

// Replays an edit script against the reference; used to check the alignment
// invariant that ops reproduce the hypothesis exactly.
template <typename T>
std::vector<T> apply_edit_script(std::span<const T> ref, std::span<const T> hyp,
                                 const std::vector<EditOp>& ops) {
  std::vector<T> out;
  for (const EditOp& op : ops) {
    switch (op.kind) {
      case EditKind::Match: out.push_back(ref[op.ref_index]); break;
      case EditKind::Sub: out.push_back(hyp[op.hyp_index]); break;
      case EditKind::Del: break;
      case EditKind::Ins: out.push_back(hyp[op.hyp_index]); break;
    }
  }
  return out;
}

}  // namespace sqa

#endif  // SQA_EDIT_HPP
