// Copyright 2026 The dmasr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Slow, obviously-correct reference implementations used to check the
// scoring code: full permutation enumeration, plain dynamic programming and
// per-tick DER.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "dmasr/formats.hpp"
#include "dmasr/metrics.hpp"

namespace dmasr::oracle {

struct Token {
  std::string text;
  Time start;
  Time end;
};

using Stream = std::vector<Token>;

/// Per-speaker token streams in (start, end) order. Entries with word
/// timings contribute one token per word with that word's interval; the
/// rest are split on whitespace with equal slices of the segment.
inline std::map<std::string, Stream> streams(const SegLst& entries) {
  std::map<std::string, std::vector<const SegLstEntry*>> by_speaker;
  for (const auto& e : entries) by_speaker[e.speaker].push_back(&e);
  std::map<std::string, Stream> out;
  for (auto& [spk, list] : by_speaker) {
    std::stable_sort(list.begin(), list.end(), [](const SegLstEntry* a, const SegLstEntry* b) {
      return a->interval < b->interval;
    });
    auto& s = out[spk];
    for (const auto* e : list) {
      if (e->word_timings) {
        for (const auto& w : *e->word_timings) {
          for (const auto& t : tokenize(w.word)) s.push_back({t, w.interval.start, w.interval.end});
        }
        continue;
      }
      const auto toks = tokenize(e->words);
      const auto n = static_cast<Time::rep>(toks.size());
      const auto span = e->interval.duration().ticks();
      for (Time::rep j = 0; j < n; ++j) {
        s.push_back({toks[static_cast<std::size_t>(j)],
                     e->interval.start + Time::from_ticks(span * j / n),
                     e->interval.start + Time::from_ticks(span * (j + 1) / n)});
      }
    }
  }
  return out;
}

/// Edit distance where a ref/hyp pair may only be aligned (match or
/// substitute) when `admissible` says so.
template <typename Admissible>
std::int64_t edit_distance(const Stream& ref, const Stream& hyp, Admissible admissible) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::vector<std::int64_t>> d(n + 1, std::vector<std::int64_t>(m + 1));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = static_cast<std::int64_t>(i);
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = static_cast<std::int64_t>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      std::int64_t best = std::min(d[i - 1][j], d[i][j - 1]) + 1;
      if (admissible(ref[i - 1], hyp[j - 1])) {
        best = std::min(best, d[i - 1][j - 1] + (ref[i - 1].text == hyp[j - 1].text ? 0 : 1));
      }
      d[i][j] = best;
    }
  }
  return d[n][m];
}

/// Minimum total distance over every way of pairing speaker streams, with
/// missing streams on either side treated as empty.
template <typename Distance>
std::int64_t min_over_permutations(const std::map<std::string, Stream>& ref,
                                   const std::map<std::string, Stream>& hyp, Distance dist) {
  std::vector<Stream> r, h;
  for (const auto& [k, v] : ref) r.push_back(v);
  for (const auto& [k, v] : hyp) h.push_back(v);
  const std::size_t n = std::max(r.size(), h.size());
  r.resize(n);
  h.resize(n);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  do {
    std::int64_t total = 0;
    for (std::size_t i = 0; i < n; ++i) total += dist(r[i], h[perm[i]]);
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return n == 0 ? 0 : best;
}

inline std::int64_t cp_errors(const SegLst& ref, const SegLst& hyp) {
  return min_over_permutations(streams(ref), streams(hyp), [](const Stream& a, const Stream& b) {
    return edit_distance(a, b, [](const Token&, const Token&) { return true; });
  });
}

inline std::int64_t tcp_errors(const SegLst& ref, const SegLst& hyp, Time collar) {
  return min_over_permutations(streams(ref), streams(hyp), [&](const Stream& a, const Stream& b) {
    return edit_distance(a, b, [&](const Token& r, const Token& h) {
      return h.start <= r.end + collar && h.end >= r.start - collar;
    });
  });
}

/// Minimum over all n! permutations of a square matrix.
inline double min_assignment_cost(const std::vector<std::vector<double>>& m) {
  std::vector<std::size_t> perm(m.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0;
    for (std::size_t i = 0; i < m.size(); ++i) c += m[i][perm[i]];
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return m.empty() ? 0.0 : best;
}

struct DerTicks {
  std::int64_t errors = 0;
  std::int64_t scored = 0;
};

/// DER by walking every 0.01 s tick and trying every injective mapping of
/// hypothesis speakers onto reference speakers.
inline DerTicks der_by_ticks(const std::vector<DiarSegment>& ref, const std::vector<DiarSegment>& hyp,
                             Time collar) {
  std::vector<std::string> rs, hs;
  for (const auto& s : ref) rs.push_back(s.speaker);
  for (const auto& s : hyp) hs.push_back(s.speaker);
  std::sort(rs.begin(), rs.end());
  rs.erase(std::unique(rs.begin(), rs.end()), rs.end());
  std::sort(hs.begin(), hs.end());
  hs.erase(std::unique(hs.begin(), hs.end()), hs.end());

  Time::rep horizon = 0;
  for (const auto& s : ref) horizon = std::max(horizon, s.interval.end.ticks());
  for (const auto& s : hyp) horizon = std::max(horizon, s.interval.end.ticks());

  auto active = [](const std::vector<DiarSegment>& segs, const std::vector<std::string>& names,
                   Time::rep t) {
    std::vector<bool> on(names.size(), false);
    for (const auto& s : segs) {
      if (s.interval.start.ticks() <= t && t < s.interval.end.ticks()) {
        on[static_cast<std::size_t>(std::lower_bound(names.begin(), names.end(), s.speaker) -
                                    names.begin())] = true;
      }
    }
    return on;
  };
  auto excluded = [&](Time::rep t) {
    if (collar.ticks() == 0) return false;
    for (const auto& s : ref) {
      for (Time b : {s.interval.start, s.interval.end}) {
        if (b.ticks() - collar.ticks() <= t && t + 1 <= b.ticks() + collar.ticks()) return true;
      }
    }
    return false;
  };

  DerTicks out;
  std::vector<std::vector<bool>> r_on, h_on;
  std::int64_t plain_errors = 0;
  for (Time::rep t = 0; t < horizon; ++t) {
    const auto r = active(ref, rs, t);
    out.scored += std::count(r.begin(), r.end(), true);
    if (excluded(t)) continue;
    const auto h = active(hyp, hs, t);
    const auto nr = std::count(r.begin(), r.end(), true);
    const auto nh = std::count(h.begin(), h.end(), true);
    plain_errors += std::max(nr, nh);
    r_on.push_back(r);
    h_on.push_back(h);
  }

  // Best mapping: hyp index -> ref index or -1.
  std::int64_t best_correct = 0;
  std::vector<int> map(hs.size(), -1);
  std::vector<bool> used(rs.size(), false);
  auto recurse = [&](auto&& self, std::size_t i) -> void {
    if (i == hs.size()) {
      std::int64_t correct = 0;
      for (std::size_t k = 0; k < r_on.size(); ++k) {
        for (std::size_t j = 0; j < hs.size(); ++j) {
          if (map[j] >= 0 && h_on[k][j] && r_on[k][static_cast<std::size_t>(map[j])]) ++correct;
        }
      }
      best_correct = std::max(best_correct, correct);
      return;
    }
    map[i] = -1;
    self(self, i + 1);
    for (std::size_t r = 0; r < rs.size(); ++r) {
      if (used[r]) continue;
      used[r] = true;
      map[i] = static_cast<int>(r);
      self(self, i + 1);
      used[r] = false;
    }
    map[i] = -1;
  };
  recurse(recurse, 0);
  out.errors = plain_errors - best_correct;
  return out;
}

}  // namespace dmasr::oracle
