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

#include "dmasr/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include <json.hpp>

#include "dmasr/assignment.hpp"
#include "dmasr/parallel.hpp"
#include "dmasr/text.hpp"

namespace dmasr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double ratio(double num, double den) {
  if (den > 0) return num / den;
  return num > 0 ? kInf : 0.0;
}

std::vector<std::string> sorted_labels(const std::set<std::string>& s) {
  return {s.begin(), s.end()};
}

std::size_t index_of(const std::vector<std::string>& sorted, const std::string& label) {
  return static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), label) -
                                  sorted.begin());
}

}  // namespace

// ---------------------------------------------------------------------------
// DER

DerBreakdown compute_der(std::span<const DiarSegment> ref, std::span<const DiarSegment> hyp,
                         Time collar) {
  if (collar < Time()) throw ValidationError("collar must be >= 0");
  for (const auto& s : ref) s.validate();
  for (const auto& s : hyp) s.validate();

  std::set<std::string> ref_set, hyp_set;
  for (const auto& s : ref) ref_set.insert(s.speaker);
  for (const auto& s : hyp) hyp_set.insert(s.speaker);
  const auto ref_spk = sorted_labels(ref_set);
  const auto hyp_spk = sorted_labels(hyp_set);

  // Elementary intervals between consecutive boundaries.
  std::vector<Time::rep> bounds;
  for (const auto& s : ref) {
    bounds.push_back(s.interval.start.ticks());
    bounds.push_back(s.interval.end.ticks());
    if (collar > Time()) {
      for (const Time b : {s.interval.start, s.interval.end}) {
        bounds.push_back((b - collar).ticks());
        bounds.push_back((b + collar).ticks());
      }
    }
  }
  for (const auto& s : hyp) {
    bounds.push_back(s.interval.start.ticks());
    bounds.push_back(s.interval.end.ticks());
  }
  std::sort(bounds.begin(), bounds.end());
  bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());
  const std::size_t k = bounds.size();
  auto slot = [&](Time t) {
    return static_cast<std::size_t>(std::lower_bound(bounds.begin(), bounds.end(), t.ticks()) -
                                    bounds.begin());
  };

  // Per-speaker coverage deltas over boundary slots.
  std::vector<std::vector<int>> ref_delta(ref_spk.size(), std::vector<int>(k + 1, 0));
  std::vector<std::vector<int>> hyp_delta(hyp_spk.size(), std::vector<int>(k + 1, 0));
  std::vector<int> excl_delta(k + 1, 0);
  for (const auto& s : ref) {
    auto& d = ref_delta[index_of(ref_spk, s.speaker)];
    ++d[slot(s.interval.start)];
    --d[slot(s.interval.end)];
    if (collar > Time()) {
      for (const Time b : {s.interval.start, s.interval.end}) {
        ++excl_delta[slot(b - collar)];
        --excl_delta[slot(b + collar)];
      }
    }
  }
  for (const auto& s : hyp) {
    auto& d = hyp_delta[index_of(hyp_spk, s.speaker)];
    ++d[slot(s.interval.start)];
    --d[slot(s.interval.end)];
  }

  // visit(duration, active ref indices, active hyp indices, excluded)
  auto sweep = [&](auto&& visit) {
    std::vector<int> rc(ref_spk.size(), 0), hc(hyp_spk.size(), 0);
    int excl = 0;
    std::vector<std::size_t> ra, ha;
    for (std::size_t i = 0; i + 1 < k; ++i) {
      for (std::size_t r = 0; r < rc.size(); ++r) rc[r] += ref_delta[r][i];
      for (std::size_t h = 0; h < hc.size(); ++h) hc[h] += hyp_delta[h][i];
      excl += excl_delta[i];
      ra.clear();
      ha.clear();
      for (std::size_t r = 0; r < rc.size(); ++r)
        if (rc[r] > 0) ra.push_back(r);
      for (std::size_t h = 0; h < hc.size(); ++h)
        if (hc[h] > 0) ha.push_back(h);
      visit(bounds[i + 1] - bounds[i], ra, ha, excl > 0);
    }
  };

  // Scored overlap between every hypothesis and reference speaker.
  std::vector<std::vector<Time::rep>> overlap(hyp_spk.size(),
                                              std::vector<Time::rep>(ref_spk.size(), 0));
  DerBreakdown out;
  Time::rep scored = 0;
  sweep([&](Time::rep dur, const auto& ra, const auto& ha, bool excluded) {
    scored += dur * static_cast<Time::rep>(ra.size());
    if (excluded) return;
    for (auto h : ha)
      for (auto r : ra) overlap[h][r] += dur;
  });

  const std::size_t n = std::max(ref_spk.size(), hyp_spk.size());
  std::vector<int> hyp_to_ref(hyp_spk.size(), -1);
  if (n > 0) {
    Time::rep top = 0;
    for (const auto& row : overlap)
      for (auto v : row) top = std::max(top, v);
    CostMatrix cost(n, n, static_cast<double>(top));
    for (std::size_t h = 0; h < hyp_spk.size(); ++h)
      for (std::size_t r = 0; r < ref_spk.size(); ++r)
        cost(h, r) = static_cast<double>(top - overlap[h][r]);
    const auto a = optimal_assignment(cost);
    for (std::size_t h = 0; h < hyp_spk.size(); ++h) {
      const int r = a.row_to_col[h];
      if (r >= 0 && static_cast<std::size_t>(r) < ref_spk.size() && overlap[h][r] > 0) {
        hyp_to_ref[h] = r;
        out.mapping[hyp_spk[h]] = ref_spk[r];
      }
    }
  }

  Time::rep missed = 0, fa = 0, conf = 0;
  sweep([&](Time::rep dur, const auto& ra, const auto& ha, bool excluded) {
    if (excluded) return;
    const auto nr = static_cast<Time::rep>(ra.size());
    const auto nh = static_cast<Time::rep>(ha.size());
    Time::rep correct = 0;
    for (auto h : ha) {
      const int r = hyp_to_ref[h];
      if (r >= 0 && std::find(ra.begin(), ra.end(), static_cast<std::size_t>(r)) != ra.end()) {
        ++correct;
      }
    }
    missed += std::max<Time::rep>(0, nr - nh) * dur;
    fa += std::max<Time::rep>(0, nh - nr) * dur;
    conf += (std::min(nr, nh) - correct) * dur;
  });

  out.missed = Time::from_ticks(missed);
  out.false_alarm = Time::from_ticks(fa);
  out.confusion = Time::from_ticks(conf);
  out.scored = Time::from_ticks(scored);
  out.der = ratio(static_cast<double>(missed + fa + conf), static_cast<double>(scored));
  return out;
}

// ---------------------------------------------------------------------------
// Tokenization

TokenizationMode parse_tokenization(std::string_view name) {
  if (name == "word") return TokenizationMode::word();
  if (name == "char") return TokenizationMode::chars();
  throw ValidationError("unknown tokenization '" + std::string(name) + "'; expected word or char");
}

std::string to_string(TokenUnit unit) { return unit == TokenUnit::kWord ? "word" : "char"; }

namespace {

bool strip_char(unsigned char c) { return c < 0x80 && std::ispunct(c) && c != '\''; }

std::string normalize(std::string_view piece, const TokenizationMode& mode) {
  std::string out;
  out.reserve(piece.size());
  for (const char ch : piece) {
    const auto c = static_cast<unsigned char>(ch);
    if (mode.strip_punct && strip_char(c)) continue;
    out.push_back(mode.lowercase && c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
  }
  return out;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text, const TokenizationMode& mode) {
  std::vector<std::string> out;
  if (mode.unit == TokenUnit::kWord) {
    for (const auto& w : text::split_whitespace(text)) {
      auto t = normalize(w, mode);
      if (!t.empty()) out.push_back(std::move(t));
    }
    return out;
  }
  for (const auto cp : text::code_points(text)) {
    if (text::has_whitespace(cp)) continue;
    auto t = normalize(cp, mode);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// cpWER / tcpWER

namespace {

struct Token {
  std::string text;
  Time start;
  Time end;
};

using Stream = std::vector<Token>;

void append_spread(Stream& out, std::vector<std::string> toks, const TimeInterval& span) {
  const auto n = static_cast<Time::rep>(toks.size());
  const Time::rep len = span.duration().ticks();
  for (Time::rep j = 0; j < n; ++j) {
    out.push_back({std::move(toks[static_cast<std::size_t>(j)]),
                   span.start + Time::from_ticks(len * j / n),
                   span.start + Time::from_ticks(len * (j + 1) / n)});
  }
}

/// Speaker streams in label order; segments concatenated by start time.
std::vector<std::pair<std::string, Stream>> build_streams(const SegLst& entries,
                                                          const TokenizationMode& tok) {
  std::vector<const SegLstEntry*> order;
  for (const auto& e : entries) order.push_back(&e);
  std::stable_sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
    return std::tie(a->interval.start, a->interval.end) <
           std::tie(b->interval.start, b->interval.end);
  });
  std::map<std::string, Stream> streams;
  for (const auto* e : order) {
    auto& s = streams[e->speaker];
    if (e->word_timings) {
      for (const auto& w : *e->word_timings) append_spread(s, tokenize(w.word, tok), w.interval);
    } else {
      append_spread(s, tokenize(e->words, tok), e->interval);
    }
  }
  return {std::make_move_iterator(streams.begin()), std::make_move_iterator(streams.end())};
}

struct Counts {
  std::int64_t cost = 0;
  std::int64_t sub = 0;
  std::int64_t ins = 0;
  std::int64_t del = 0;
};

/// Levenshtein alignment of ref against hyp. With a collar, a hypothesis
/// token may only match or substitute a reference token whose collar-widened
/// interval it touches. Ties prefer diagonal, then deletion, then insertion.
Counts align(const Stream& ref, const Stream& hyp, const Time* collar) {
  const std::size_t m = hyp.size();
  std::vector<Counts> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) {
    prev[j] = {static_cast<std::int64_t>(j), 0, static_cast<std::int64_t>(j), 0};
  }
  for (std::size_t i = 1; i <= ref.size(); ++i) {
    const Token& r = ref[i - 1];
    cur[0] = {static_cast<std::int64_t>(i), 0, 0, static_cast<std::int64_t>(i)};
    for (std::size_t j = 1; j <= m; ++j) {
      const Token& h = hyp[j - 1];
      Counts best = prev[j];  // deletion of r
      best.cost += 1;
      best.del += 1;
      Counts ins = cur[j - 1];
      ins.cost += 1;
      ins.ins += 1;
      if (ins.cost < best.cost) best = ins;
      const bool admissible =
          !collar || (h.start <= r.end + *collar && h.end >= r.start - *collar);
      if (admissible) {
        Counts diag = prev[j - 1];
        if (r.text != h.text) {
          diag.cost += 1;
          diag.sub += 1;
        }
        if (diag.cost <= best.cost) best = diag;
      }
      cur[j] = best;
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

WerBreakdown cp_core(const SegLst& ref, const SegLst& hyp, const TokenizationMode& tok,
                     const Time* collar) {
  const auto rs = build_streams(ref, tok);
  const auto hs = build_streams(hyp, tok);
  WerBreakdown out;
  for (const auto& [_, s] : rs) out.reference_length += static_cast<std::int64_t>(s.size());
  for (const auto& [_, s] : hs) out.hypothesis_length += static_cast<std::int64_t>(s.size());

  // Rows are hypothesis streams, columns reference streams; padding rows and
  // columns stand for "no partner".
  const std::size_t n = std::max(rs.size(), hs.size());
  if (n == 0) return out;
  std::vector<std::vector<Counts>> pair(n, std::vector<Counts>(n));
  CostMatrix cost(n, n);
  for (std::size_t h = 0; h < n; ++h) {
    for (std::size_t r = 0; r < n; ++r) {
      Counts c;
      if (h < hs.size() && r < rs.size()) {
        c = align(rs[r].second, hs[h].second, collar);
      } else if (h < hs.size()) {
        c.ins = c.cost = static_cast<std::int64_t>(hs[h].second.size());
      } else if (r < rs.size()) {
        c.del = c.cost = static_cast<std::int64_t>(rs[r].second.size());
      }
      pair[h][r] = c;
      cost(h, r) = static_cast<double>(c.cost);
    }
  }
  const auto a = optimal_assignment(cost);
  for (std::size_t h = 0; h < n; ++h) {
    const auto r = static_cast<std::size_t>(a.row_to_col[h]);
    const Counts& c = pair[h][r];
    out.substitutions += c.sub;
    out.insertions += c.ins;
    out.deletions += c.del;
    if (h < hs.size() && r < rs.size()) out.assignment[hs[h].first] = rs[r].first;
  }
  out.rate = ratio(static_cast<double>(out.errors()), static_cast<double>(out.reference_length));
  return out;
}

}  // namespace

WerBreakdown compute_cpwer(const SegLst& ref, const SegLst& hyp, const TokenizationMode& tok) {
  return cp_core(ref, hyp, tok, nullptr);
}

WerBreakdown compute_tcpwer(const SegLst& ref, const SegLst& hyp, Time collar,
                            const TokenizationMode& tok) {
  if (collar < Time()) throw ValidationError("collar must be >= 0");
  return cp_core(ref, hyp, tok, &collar);
}

// ---------------------------------------------------------------------------
// Reports

namespace {

void add(DerBreakdown& into, const DerBreakdown& d) {
  into.missed += d.missed;
  into.false_alarm += d.false_alarm;
  into.confusion += d.confusion;
  into.scored += d.scored;
}

void add(WerBreakdown& into, const WerBreakdown& w) {
  into.substitutions += w.substitutions;
  into.insertions += w.insertions;
  into.deletions += w.deletions;
  into.reference_length += w.reference_length;
  into.hypothesis_length += w.hypothesis_length;
}

void finish(WerBreakdown& w) {
  w.rate = ratio(static_cast<double>(w.errors()), static_cast<double>(w.reference_length));
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ", ") + s;
  return out.empty() ? "(none)" : out;
}

}  // namespace

ScoreReport aggregate(const std::vector<std::pair<std::string, SessionScores>>& sessions,
                      const ScoreSettings& settings) {
  if (sessions.empty()) throw ValidationError("nothing to aggregate");
  ScoreReport out;
  out.settings = settings;
  for (const auto& [id, s] : sessions) {
    if (!out.per_session.emplace(id, s).second) {
      throw ValidationError("duplicate session '" + id + "' in aggregate");
    }
  }
  // Fold in session-id order so the sums never depend on input order.
  for (const auto& [_, s] : out.per_session) {
    add(out.aggregate.der, s.der);
    add(out.aggregate.cpwer, s.cpwer);
    add(out.aggregate.tcpwer, s.tcpwer);
  }
  auto& d = out.aggregate.der;
  d.der = ratio(static_cast<double>(d.errors().ticks()), static_cast<double>(d.scored.ticks()));
  finish(out.aggregate.cpwer);
  finish(out.aggregate.tcpwer);
  return out;
}

SessionMismatchError::SessionMismatchError(std::vector<std::string> only_ref,
                                           std::vector<std::string> only_hyp)
    : ValidationError("session mismatch; only in reference: " + join(only_ref) +
                      "; only in hypothesis: " + join(only_hyp)),
      only_ref_(std::move(only_ref)),
      only_hyp_(std::move(only_hyp)) {}

ScoreReport score_sessions(const SegLst& ref, const SegLst& hyp, const ScoreSettings& settings,
                           unsigned jobs) {
  const auto rg = group_by_session(ref);
  const auto hg = group_by_session(hyp);
  std::vector<std::string> only_ref, only_hyp;
  for (const auto& [id, _] : rg)
    if (!hg.count(id)) only_ref.push_back(id);
  for (const auto& [id, _] : hg)
    if (!rg.count(id)) only_hyp.push_back(id);
  if (!only_ref.empty() || !only_hyp.empty()) {
    throw SessionMismatchError(std::move(only_ref), std::move(only_hyp));
  }

  std::vector<std::pair<std::string, SessionScores>> results;
  for (const auto& [id, _] : rg) results.emplace_back(id, SessionScores{});
  parallel_for(results.size(), jobs, [&](std::size_t i) {
    const auto& r = rg.at(results[i].first);
    const auto& h = hg.at(results[i].first);
    std::vector<DiarSegment> rd, hd;
    for (const auto& e : r) rd.push_back({e.speaker, e.interval});
    for (const auto& e : h) hd.push_back({e.speaker, e.interval});
    auto& s = results[i].second;
    s.der = compute_der(rd, hd, settings.collar_der);
    s.cpwer = compute_cpwer(r, h, settings.tokenization);
    s.tcpwer = compute_tcpwer(r, h, settings.collar_tcp, settings.tokenization);
  });
  return aggregate(results, settings);
}

namespace {

using ojson = nlohmann::ordered_json;

ojson rate_json(double v) { return std::isfinite(v) ? ojson(v) : ojson("inf"); }

double rate_from(const ojson& v) {
  if (v.is_string() && v.get<std::string>() == "inf") return kInf;
  return v.get<double>();
}

ojson der_json(const DerBreakdown& d) {
  ojson o;
  o["der"] = rate_json(d.der);
  o["missed"] = d.missed.seconds();
  o["false_alarm"] = d.false_alarm.seconds();
  o["confusion"] = d.confusion.seconds();
  o["scored"] = d.scored.seconds();
  o["mapping"] = d.mapping;
  return o;
}

ojson wer_json(const WerBreakdown& w) {
  ojson o;
  o["rate"] = rate_json(w.rate);
  o["substitutions"] = w.substitutions;
  o["insertions"] = w.insertions;
  o["deletions"] = w.deletions;
  o["reference_length"] = w.reference_length;
  o["hypothesis_length"] = w.hypothesis_length;
  o["assignment"] = w.assignment;
  return o;
}

ojson scores_json(const SessionScores& s) {
  ojson o;
  o["der"] = der_json(s.der);
  o["cpwer"] = wer_json(s.cpwer);
  o["tcpwer"] = wer_json(s.tcpwer);
  return o;
}

DerBreakdown der_from(const ojson& o) {
  DerBreakdown d;
  d.der = rate_from(o.at("der"));
  d.missed = Time::from_seconds(o.at("missed").get<double>());
  d.false_alarm = Time::from_seconds(o.at("false_alarm").get<double>());
  d.confusion = Time::from_seconds(o.at("confusion").get<double>());
  d.scored = Time::from_seconds(o.at("scored").get<double>());
  d.mapping = o.at("mapping").get<std::map<std::string, std::string>>();
  return d;
}

WerBreakdown wer_from(const ojson& o) {
  WerBreakdown w;
  w.rate = rate_from(o.at("rate"));
  w.substitutions = o.at("substitutions").get<std::int64_t>();
  w.insertions = o.at("insertions").get<std::int64_t>();
  w.deletions = o.at("deletions").get<std::int64_t>();
  w.reference_length = o.at("reference_length").get<std::int64_t>();
  w.hypothesis_length = o.at("hypothesis_length").get<std::int64_t>();
  w.assignment = o.at("assignment").get<std::map<std::string, std::string>>();
  return w;
}

SessionScores scores_from(const ojson& o) {
  return {der_from(o.at("der")), wer_from(o.at("cpwer")), wer_from(o.at("tcpwer"))};
}

std::string fmt_rate(double v) {
  if (!std::isfinite(v)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::string report_json(const ScoreReport& report) {
  ojson o;
  o["settings"] = {{"collar_der", report.settings.collar_der.seconds()},
                   {"collar_tcp", report.settings.collar_tcp.seconds()},
                   {"tokenize", to_string(report.settings.tokenization.unit)},
                   {"lowercase", report.settings.tokenization.lowercase},
                   {"strip_punct", report.settings.tokenization.strip_punct}};
  o["aggregate"] = scores_json(report.aggregate);
  ojson per = ojson::object();
  for (const auto& [id, s] : report.per_session) per[id] = scores_json(s);
  o["per_session"] = std::move(per);
  return o.dump(2) + "\n";
}

ScoreReport read_report_json(std::string_view json_text) {
  try {
    const auto o = ojson::parse(json_text);
    ScoreReport r;
    const auto& st = o.at("settings");
    r.settings.collar_der = Time::from_seconds(st.at("collar_der").get<double>());
    r.settings.collar_tcp = Time::from_seconds(st.at("collar_tcp").get<double>());
    r.settings.tokenization = parse_tokenization(st.at("tokenize").get<std::string>());
    r.settings.tokenization.lowercase = st.at("lowercase").get<bool>();
    r.settings.tokenization.strip_punct = st.at("strip_punct").get<bool>();
    r.aggregate = scores_from(o.at("aggregate"));
    for (const auto& [id, s] : o.at("per_session").items()) r.per_session[id] = scores_from(s);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("<report>", e.what());
  }
}

std::string report_tsv(const ScoreReport& report) {
  const bool chars = report.settings.tokenization.unit == TokenUnit::kChar;
  const std::string cp = chars ? "cpCER" : "cpWER";
  const std::string tcp = chars ? "tcpCER" : "tcpWER";
  std::string out = "session\tmetric\tvalue\tcomponents\n";
  auto rows = [&](const std::string& id, const SessionScores& s) {
    const auto& d = s.der;
    out += id + "\tDER\t" + fmt_rate(d.der) + "\tmissed=" + format_seconds(d.missed) +
           ";false_alarm=" + format_seconds(d.false_alarm) +
           ";confusion=" + format_seconds(d.confusion) + ";scored=" + format_seconds(d.scored) +
           "\n";
    for (const auto& [name, w] : {std::pair{cp, &s.cpwer}, std::pair{tcp, &s.tcpwer}}) {
      out += id + "\t" + name + "\t" + fmt_rate(w->rate) + "\tsub=" +
             std::to_string(w->substitutions) + ";ins=" + std::to_string(w->insertions) +
             ";del=" + std::to_string(w->deletions) + ";ref=" +
             std::to_string(w->reference_length) + "\n";
    }
  };
  for (const auto& [id, s] : report.per_session) rows(id, s);
  rows("ALL", report.aggregate);
  return out;
}

}  // namespace dmasr
