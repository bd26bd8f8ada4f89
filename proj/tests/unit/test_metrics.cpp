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

#include <doctest.h>

#include <cmath>
#include <random>

#include "dmasr/error.hpp"
#include "dmasr/metrics.hpp"
#include "oracles.hpp"

using namespace dmasr;

namespace {

TimeInterval iv(double a, double b) { return TimeInterval::from_seconds(a, b); }
Time sec(double s) { return Time::from_seconds(s); }

SegLstEntry seg(const std::string& spk, double a, double b, const std::string& words) {
  return {"s", spk, iv(a, b), words, {}};
}

SegLstEntry timed(const std::string& spk, std::vector<WordTiming> words) {
  std::string text;
  for (const auto& w : words) text += (text.empty() ? "" : " ") + w.word;
  return {"s", spk, {words.front().interval.start, words.back().interval.end}, text, words};
}

std::vector<DiarSegment> random_diarization(std::mt19937_64& gen, int speakers, int n,
                                            const std::string& prefix) {
  std::vector<DiarSegment> out;
  for (int i = 0; i < n; ++i) {
    const Time::rep s = static_cast<Time::rep>(gen() % 3000);
    const Time::rep d = 1 + static_cast<Time::rep>(gen() % 600);
    out.push_back({prefix + std::to_string(gen() % static_cast<unsigned>(speakers)),
                   {Time::from_ticks(s), Time::from_ticks(s + d)}});
  }
  return out;
}

SegLst random_timed_session(std::mt19937_64& gen, int speakers, const std::string& prefix) {
  static const std::vector<std::string> vocab{"a", "b", "c", "d", "e"};
  SegLst out;
  for (int k = 0; k < speakers; ++k) {
    Time::rep t = static_cast<Time::rep>(gen() % 300);
    const int segments = 1 + static_cast<int>(gen() % 3);
    for (int s = 0; s < segments; ++s) {
      std::vector<WordTiming> words;
      const int n = 1 + static_cast<int>(gen() % 5);
      for (int i = 0; i < n; ++i) {
        const Time::rep d = 10 + static_cast<Time::rep>(gen() % 60);
        words.push_back({vocab[gen() % vocab.size()], {Time::from_ticks(t), Time::from_ticks(t + d)}});
        t += d + static_cast<Time::rep>(gen() % 40);
      }
      out.push_back(timed(prefix + std::to_string(k), words));
      t += static_cast<Time::rep>(gen() % 200);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("compute_der: hand cases") {
  const std::vector<DiarSegment> ref{{"A", iv(0, 10)}};
  auto same = compute_der(ref, ref);
  CHECK(same.der == 0.0);
  CHECK(same.errors() == Time());
  CHECK(same.scored == sec(10));

  const std::vector<DiarSegment> half{{"B", iv(0, 5)}};
  auto a = compute_der(ref, half);
  CHECK(a.mapping.at("B") == "A");
  CHECK(a.missed == sec(5));
  CHECK(a.false_alarm == Time());
  CHECK(a.confusion == Time());
  CHECK(a.der == 0.5);

  const std::vector<DiarSegment> split{{"B", iv(0, 5)}, {"C", iv(5, 10)}};
  auto b = compute_der(ref, split);
  CHECK(b.confusion == sec(5));
  CHECK(b.missed == Time());
  CHECK(b.der == 0.5);
  CHECK(b.mapping.size() == 1);
}

TEST_CASE("compute_der: overlap multiplicity and edge cases") {
  const std::vector<DiarSegment> ref{{"A", iv(0, 10)}, {"B", iv(5, 10)}};
  const std::vector<DiarSegment> hyp{{"x", iv(0, 10)}};
  auto r = compute_der(ref, hyp);
  CHECK(r.scored == sec(15));
  CHECK(r.missed == sec(5));
  CHECK(r.der == doctest::Approx(1.0 / 3.0));

  auto empty_ref = compute_der({}, hyp);
  CHECK(empty_ref.false_alarm == sec(10));
  CHECK(std::isinf(empty_ref.der));
  CHECK(compute_der({}, {}).der == 0.0);
  CHECK_THROWS_AS(compute_der(ref, hyp, Time::from_ticks(-1)), ValidationError);
}

TEST_CASE("compute_der: collar") {
  const std::vector<DiarSegment> ref{{"A", iv(0, 10)}};
  const std::vector<DiarSegment> hyp{{"B", iv(0.2, 9.7)}};
  CHECK(compute_der(ref, hyp).missed == sec(0.5));
  CHECK(compute_der(ref, hyp, sec(0.25)).missed == sec(0.05));
  CHECK(compute_der(ref, hyp, sec(0.5)).errors() == Time());
  CHECK(compute_der(ref, hyp, sec(0.5)).scored == sec(10));
}

TEST_CASE("compute_der agrees with the per-tick oracle") {
  std::mt19937_64 gen(1234);
  for (int trial = 0; trial < 60; ++trial) {
    const auto ref = random_diarization(gen, 1 + static_cast<int>(gen() % 3), 1 + static_cast<int>(gen() % 6), "r");
    const auto hyp = random_diarization(gen, 1 + static_cast<int>(gen() % 4), static_cast<int>(gen() % 7), "h");
    for (Time collar : {Time(), sec(0.25), sec(0.5)}) {
      const auto d = compute_der(ref, hyp, collar);
      const auto o = oracle::der_by_ticks(ref, hyp, collar);
      CHECK(d.errors().ticks() == o.errors);
      CHECK(d.scored.ticks() == o.scored);
    }
  }
}

TEST_CASE("compute_der: invariants") {
  std::mt19937_64 gen(77);
  for (int trial = 0; trial < 100; ++trial) {
    const auto ref = random_diarization(gen, 4, 1 + static_cast<int>(gen() % 15), "r");
    const auto hyp = random_diarization(gen, 4, static_cast<int>(gen() % 15), "h");
    CHECK(compute_der(ref, ref).der == 0.0);
    // Renaming hypothesis speakers changes nothing.
    auto renamed = hyp;
    for (auto& s : renamed) s.speaker = "zz" + s.speaker + "q";
    const auto base = compute_der(ref, hyp);
    CHECK(compute_der(ref, renamed).errors() == base.errors());
    double prev = base.der;
    for (Time c : {sec(0.25), sec(0.5), sec(1.0)}) {
      const auto r = compute_der(ref, hyp, c);
      CHECK(r.der <= prev);
      prev = r.der;
    }
    CHECK(base.missed >= Time());
    CHECK(base.false_alarm >= Time());
    CHECK(base.confusion >= Time());
  }
}

TEST_CASE("tokenize") {
  CHECK(tokenize("Hello, world") == std::vector<std::string>{"hello", "world"});
  CHECK(tokenize("好的", TokenizationMode::chars()) == std::vector<std::string>{"好", "的"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("Don't STOP!") == std::vector<std::string>{"don't", "stop"});
  CHECK(tokenize("... -- ").empty());
  CHECK(tokenize("a b", TokenizationMode::chars()) == std::vector<std::string>{"a", "b"});
  TokenizationMode raw{TokenUnit::kWord, false, false};
  CHECK(tokenize("Hello, world", raw) == std::vector<std::string>{"Hello,", "world"});
  CHECK(parse_tokenization("char") == TokenizationMode::chars());
  CHECK_THROWS(parse_tokenization("byte"));
}

TEST_CASE("compute_cpwer: hand cases") {
  const SegLst ref{seg("A", 0, 2, "hello world"), seg("B", 3, 5, "good morning")};
  const SegLst hyp{seg("1", 3, 5, "good morning"), seg("2", 0, 2, "hello word")};
  auto r = compute_cpwer(ref, hyp);
  CHECK(r.substitutions == 1);
  CHECK(r.errors() == 1);
  CHECK(r.reference_length == 4);
  CHECK(r.rate == 0.25);
  CHECK(r.assignment.at("2") == "A");
  CHECK(r.assignment.at("1") == "B");

  SegLst renamed = ref;
  renamed[0].speaker = "q";
  renamed[1].speaker = "p";
  CHECK(compute_cpwer(ref, renamed).rate == 0.0);

  SegLst extra = ref;
  extra.push_back(seg("C", 6, 7, "uh"));
  auto e = compute_cpwer(ref, extra);
  CHECK(e.insertions == 1);
  CHECK(e.errors() == 1);

  auto empty = compute_cpwer({}, hyp);
  CHECK(std::isinf(empty.rate));
  CHECK(empty.insertions == 4);
  CHECK(compute_cpwer({}, {}).rate == 0.0);
}

TEST_CASE("compute_cpwer: concatenation follows start time") {
  const SegLst ref{seg("A", 5, 6, "two"), seg("A", 0, 1, "one")};
  const SegLst hyp{seg("x", 0, 1, "one"), seg("x", 5, 6, "two")};
  CHECK(compute_cpwer(ref, hyp).rate == 0.0);
}

TEST_CASE("compute_cpwer matches permutation enumeration") {
  std::mt19937_64 gen(4242);
  static const std::vector<std::string> vocab{"a", "b", "c"};
  for (int trial = 0; trial < 150; ++trial) {
    SegLst ref, hyp;
    const int nr = 1 + static_cast<int>(gen() % 4), nh = 1 + static_cast<int>(gen() % 5);
    for (auto* side : {&ref, &hyp}) {
      const int ns = side == &ref ? nr : nh;
      for (int k = 0; k < ns; ++k) {
        std::string text;
        const int n = static_cast<int>(gen() % 8);
        for (int i = 0; i < n; ++i) text += (i ? " " : "") + vocab[gen() % vocab.size()];
        const double st = static_cast<double>(gen() % 50);
        side->push_back(seg((side == &ref ? "r" : "h") + std::to_string(k), st, st + 1, text));
      }
    }
    const auto r = compute_cpwer(ref, hyp);
    CHECK(r.errors() == oracle::cp_errors(ref, hyp));
    CHECK(r.errors() <= r.reference_length + r.hypothesis_length);
  }
}

TEST_CASE("compute_tcpwer: hand cases") {
  const SegLst ref{timed("A", {{"hello", iv(1, 2)}})};
  const SegLst same = ref;
  CHECK(compute_tcpwer(ref, same, sec(5)).rate == 0.0);
  const SegLst shifted{timed("A", {{"hello", iv(11, 12)}})};
  auto r = compute_tcpwer(ref, shifted, sec(5));
  CHECK(r.deletions == 1);
  CHECK(r.insertions == 1);
  CHECK(r.rate == 2.0);
  CHECK(compute_cpwer(ref, shifted).rate == 0.0);
  CHECK(compute_tcpwer(ref, shifted, sec(9)).rate == 0.0);
  CHECK_THROWS_AS(compute_tcpwer(ref, shifted, Time::from_ticks(-1)), ValidationError);

  // Untimed segments get equal slices: "b" covers [1, 2].
  const SegLst untimed{seg("A", 0, 2, "a b")};
  const SegLst late{timed("A", {{"a", iv(0, 1)}, {"b", iv(2.5, 3)}})};
  CHECK(compute_tcpwer(untimed, late, Time()).errors() == 2);
  CHECK(compute_tcpwer(untimed, late, sec(0.5)).errors() == 0);
}

TEST_CASE("compute_tcpwer matches the constrained oracle and cp coupling") {
  std::mt19937_64 gen(31337);
  for (int trial = 0; trial < 100; ++trial) {
    const auto ref = random_timed_session(gen, 1 + static_cast<int>(gen() % 3), "r");
    const auto hyp = random_timed_session(gen, 1 + static_cast<int>(gen() % 3), "h");
    const auto cp = compute_cpwer(ref, hyp);
    std::int64_t prev = -1;
    for (Time c : {sec(5), sec(2), sec(1), sec(0.5), Time()}) {
      const auto t = compute_tcpwer(ref, hyp, c);
      CHECK(t.errors() == oracle::tcp_errors(ref, hyp, c));
      CHECK(t.errors() >= cp.errors());
      CHECK(t.errors() >= prev);
      prev = t.errors();
    }
    CHECK(compute_tcpwer(ref, hyp, sec(100)).errors() == cp.errors());
  }
}

TEST_CASE("aggregate pools components") {
  SessionScores a, b;
  a.cpwer.substitutions = 1;
  a.cpwer.reference_length = 4;
  b.cpwer.deletions = 3;
  b.cpwer.reference_length = 6;
  a.der.missed = sec(1);
  a.der.scored = sec(4);
  b.der.confusion = sec(1);
  b.der.scored = sec(6);
  auto rep = aggregate({{"s1", a}, {"s2", b}});
  CHECK(rep.aggregate.cpwer.rate == doctest::Approx(0.4));
  CHECK(rep.aggregate.der.der == doctest::Approx(0.2));
  CHECK(rep.per_session.size() == 2);

  a.cpwer.rate = 0.25;
  auto single = aggregate({{"s1", a}});
  CHECK(single.aggregate.cpwer.rate == 0.25);
  CHECK(single.aggregate.cpwer.errors() == 1);

  CHECK_THROWS_AS(aggregate({}), ValidationError);
  CHECK_THROWS_AS(aggregate({{"s", a}, {"s", b}}), ValidationError);
}

TEST_CASE("score_sessions and reports") {
  SegLst ref{seg("A", 0, 2, "hello world"), seg("B", 3, 5, "good morning")};
  SegLst hyp{seg("1", 3, 5, "good morning"), seg("2", 0, 2, "hello word")};
  ref.push_back({"t", "A", iv(0, 1), "x", {}});
  hyp.push_back({"t", "Z", iv(0, 1), "x", {}});
  const auto rep = score_sessions(ref, hyp, {}, 2);
  CHECK(rep.per_session.at("s").cpwer.rate == 0.25);
  CHECK(rep.per_session.at("t").der.der == 0.0);
  CHECK(rep.aggregate.cpwer.rate == doctest::Approx(0.2));
  CHECK(rep.aggregate.tcpwer.errors() >= rep.aggregate.cpwer.errors());

  const auto json = report_json(rep);
  const auto back = read_report_json(json);
  CHECK(report_json(back) == json);
  CHECK(back.per_session.at("s").cpwer.assignment == rep.per_session.at("s").cpwer.assignment);

  const auto tsv = report_tsv(rep);
  CHECK(tsv.rfind("session\tmetric\tvalue\tcomponents\n", 0) == 0);
  CHECK(tsv.find("s\tcpWER\t0.250000\tsub=1;ins=0;del=0;ref=4") != std::string::npos);
  CHECK(tsv.find("ALL\tDER\t") != std::string::npos);

  SegLst only_ref = ref;
  only_ref.push_back({"u", "A", iv(0, 1), "y", {}});
  try {
    score_sessions(only_ref, hyp, {});
    FAIL("expected mismatch");
  } catch (const SessionMismatchError& e) {
    CHECK(e.only_in_reference() == std::vector<std::string>{"u"});
    CHECK(e.only_in_hypothesis().empty());
  }

  // Infinite rates survive the JSON round trip.
  SegLst eref{{"e", "A", iv(0, 1), "", {}}};
  SegLst ehyp{{"e", "A", iv(0, 1), "boo", {}}};
  const auto inf = score_sessions(eref, ehyp, {});
  CHECK(std::isinf(read_report_json(report_json(inf)).per_session.at("e").cpwer.rate));
}

TEST_CASE("character mode scoring") {
  const SegLst ref{seg("A", 0, 2, "今天开会")};
  const SegLst hyp{seg("x", 0, 2, "今天会")};
  ScoreSettings s;
  s.tokenization = TokenizationMode::chars();
  const auto r = compute_cpwer(ref, hyp, s.tokenization);
  CHECK(r.reference_length == 4);
  CHECK(r.deletions == 1);
  const auto rep = score_sessions(ref, hyp, s);
  CHECK(report_tsv(rep).find("cpCER") != std::string::npos);
}
