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

#include "dmasr/formats.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "dmasr/error.hpp"
#include "dmasr/text.hpp"

namespace dmasr {

using ordered_json = nlohmann::ordered_json;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::string locator(std::string_view source, std::size_t line) {
  return std::string(source) + ":" + std::to_string(line);
}

Time parse_time_field(std::string_view field, std::string_view name, std::string_view source,
                      std::size_t line) {
  try {
    return parse_seconds(field);
  } catch (const std::invalid_argument&) {
    throw ParseError(locator(source, line),
                     "malformed " + std::string(name) + " field '" + std::string(field) + "'");
  }
}

bool is_comment(const std::string& line) {
  return line.rfind(";;", 0) == 0 || line.rfind("#", 0) == 0;
}

}  // namespace

// ---------------------------------------------------------------- RTTM

RecordingMap read_rttm(std::istream& in, std::string_view source,
                       const std::map<std::string, Time>& duration_overrides) {
  RecordingMap out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_comment(line)) continue;
    const auto fields = text::split_whitespace(line);
    if (fields.empty() || fields[0] != "SPEAKER") continue;
    if (fields.size() < 8) {
      throw ParseError(locator(source, lineno),
                       "SPEAKER record needs at least 8 fields, got " +
                           std::to_string(fields.size()));
    }
    const Time tbeg = parse_time_field(fields[3], "tbeg", source, lineno);
    const Time tdur = parse_time_field(fields[4], "tdur", source, lineno);
    if (tdur < Time{}) throw ParseError(locator(source, lineno), "negative tdur");
    if (tbeg < Time{}) throw ParseError(locator(source, lineno), "negative tbeg");

    auto& rec = out[fields[1]];
    rec.recording_id = fields[1];
    rec.segments.push_back({fields[7], {tbeg, tbeg + tdur}});
    rec.duration = max(rec.duration, tbeg + tdur);
  }
  for (const auto& [id, dur] : duration_overrides) {
    auto it = out.find(id);
    if (it == out.end()) continue;
    if (dur < it->second.duration) {
      throw ValidationError(id + ": duration override " + format_seconds(dur) +
                            " ends before the last segment");
    }
    it->second.duration = dur;
  }
  for (auto& [id, rec] : out) rec.normalize();
  return out;
}

RecordingMap read_rttm_file(const std::string& path,
                            const std::map<std::string, Time>& duration_overrides) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, "cannot open file");
  return read_rttm(in, path, duration_overrides);
}

std::string write_rttm(const RecordingMap& recordings) {
  std::string out;
  for (const auto& [id, rec] : recordings) {
    auto segments = rec.segments;
    sort_segments(segments);
    for (const auto& seg : segments) {
      out += "SPEAKER " + id + " 1 " + format_seconds(seg.interval.start) + " " +
             format_seconds(seg.interval.duration()) + " <NA> <NA> " + seg.speaker +
             " <NA> <NA>\n";
    }
  }
  return out;
}

// ---------------------------------------------------------------- SegLST

void SegLstEntry::validate() const {
  if (session_id.empty()) throw ValidationError("empty session_id");
  if (speaker.empty()) throw ValidationError("empty speaker");
  if (interval.end < interval.start) {
    throw ValidationError("end_time " + format_seconds(interval.end) + " < start_time " +
                          format_seconds(interval.start));
  }
  if (!word_timings) return;
  std::string joined;
  for (const auto& w : *word_timings) {
    if (w.word.empty() || text::has_whitespace(w.word)) {
      throw ValidationError("word timing '" + w.word + "' is empty or contains whitespace");
    }
    if (w.interval.end < w.interval.start) {
      throw ValidationError("word timing '" + w.word + "' ends before it starts");
    }
    joined += w.word;
  }
  if (joined != text::strip_whitespace(words)) {
    throw ValidationError("word_timings do not spell out words '" + words + "'");
  }
}

void sort_seglst(SegLst& entries) {
  std::stable_sort(entries.begin(), entries.end(), [](const SegLstEntry& a, const SegLstEntry& b) {
    return std::tie(a.session_id, a.interval.start, a.speaker, a.interval.end, a.words) <
           std::tie(b.session_id, b.interval.start, b.speaker, b.interval.end, b.words);
  });
}

namespace {

Time json_time(const ordered_json& v, const std::string& key, const std::string& where) {
  try {
    if (v.is_number()) return Time::from_seconds(v.get<double>());
    if (v.is_string()) return parse_seconds(v.get<std::string>());
  } catch (const std::invalid_argument&) {
  }
  throw ParseError(where, "'" + key + "' is not a number");
}

std::string json_string(const ordered_json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where, std::string("missing key '") + key + "'");
  if (!it->is_string()) throw ParseError(where, std::string("'") + key + "' is not a string");
  return it->get<std::string>();
}

double seconds_value(Time t) { return static_cast<double>(t.ticks()) / Time::kTicksPerSecond; }

}  // namespace

SegLst read_seglst(std::string_view json_text, std::string_view source) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string(source), e.what());
  }
  if (!doc.is_array()) throw ParseError(std::string(source), "top level must be a JSON array");

  SegLst out;
  out.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string where = std::string(source) + "[" + std::to_string(i) + "]";
    const auto& obj = doc[i];
    if (!obj.is_object()) throw ParseError(where, "entry is not an object");
    SegLstEntry e;
    e.session_id = json_string(obj, "session_id", where);
    e.speaker = json_string(obj, "speaker", where);
    for (const char* key : {"start_time", "end_time"}) {
      if (!obj.contains(key)) throw ParseError(where, std::string("missing key '") + key + "'");
    }
    e.interval.start = json_time(obj["start_time"], "start_time", where);
    e.interval.end = json_time(obj["end_time"], "end_time", where);
    e.words = json_string(obj, "words", where);
    if (auto it = obj.find("word_timings"); it != obj.end() && !it->is_null()) {
      if (!it->is_array()) throw ParseError(where, "'word_timings' is not an array");
      std::vector<WordTiming> timings;
      for (const auto& wt : *it) {
        if (!wt.is_array() || wt.size() != 3 || !wt[0].is_string()) {
          throw ParseError(where, "word_timings items must be [word, start, end]");
        }
        timings.push_back({wt[0].get<std::string>(),
                           {json_time(wt[1], "word_timings", where),
                            json_time(wt[2], "word_timings", where)}});
      }
      e.word_timings = std::move(timings);
    }
    try {
      e.validate();
    } catch (const ValidationError& err) {
      throw ParseError(where, err.what());
    }
    out.push_back(std::move(e));
  }
  return out;
}

SegLst read_seglst_file(const std::string& path) { return read_seglst(read_text_file(path), path); }

std::string write_seglst(SegLst entries) {
  sort_seglst(entries);
  std::string out = "[";
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    ordered_json obj;
    obj["session_id"] = e.session_id;
    obj["speaker"] = e.speaker;
    obj["start_time"] = seconds_value(e.interval.start);
    obj["end_time"] = seconds_value(e.interval.end);
    obj["words"] = e.words;
    if (e.word_timings) {
      ordered_json arr = ordered_json::array();
      for (const auto& w : *e.word_timings) {
        arr.push_back({w.word, seconds_value(w.interval.start), seconds_value(w.interval.end)});
      }
      obj["word_timings"] = std::move(arr);
    }
    out += i == 0 ? "\n" : ",\n";
    out += obj.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
  }
  out += entries.empty() ? "]\n" : "\n]\n";
  return out;
}

std::map<std::string, SegLst> group_by_session(const SegLst& entries) {
  std::map<std::string, SegLst> out;
  for (const auto& e : entries) out[e.session_id].push_back(e);
  return out;
}

// ---------------------------------------------------------------- CTM

WordTranscript read_word_transcript(std::istream& in, std::string_view source) {
  WordTranscript out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_comment(line)) continue;
    const auto fields = text::split_whitespace(line);
    if (fields.empty()) continue;
    if (fields.size() < 5) {
      throw ParseError(locator(source, lineno),
                       "CTM record needs at least 5 fields, got " + std::to_string(fields.size()));
    }
    const Time tbeg = parse_time_field(fields[2], "tbeg", source, lineno);
    const Time tdur = parse_time_field(fields[3], "tdur", source, lineno);
    if (tbeg < Time{} || tdur < Time{}) {
      throw ParseError(locator(source, lineno), "negative tbeg or tdur");
    }
    if (fields.size() >= 6) {
      try {
        (void)parse_seconds(fields[5]);
      } catch (const std::invalid_argument&) {
        throw ParseError(locator(source, lineno), "malformed confidence '" + fields[5] + "'");
      }
    }
    const std::string speaker = fields.size() >= 7 ? fields[6] : std::string();
    out.words[{fields[0], speaker}].push_back({fields[4], {tbeg, tbeg + tdur}});
  }
  for (auto& [key, words] : out.words) {
    std::stable_sort(words.begin(), words.end(), [](const WordTiming& a, const WordTiming& b) {
      return a.interval < b.interval;
    });
    for (std::size_t i = 1; i < words.size(); ++i) {
      if (words[i].interval.start < words[i - 1].interval.end) {
        out.warnings.push_back(std::string(source) + ": overlapping words for (" + key.first +
                               ", " + key.second + ") at " +
                               format_seconds(words[i].interval.start));
      }
    }
  }
  return out;
}

WordTranscript read_word_transcript_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, "cannot open file");
  return read_word_transcript(in, path);
}

std::string write_word_transcript(const WordMap& words) {
  std::string out;
  for (const auto& [key, list] : words) {
    auto sorted = list;
    std::stable_sort(sorted.begin(), sorted.end(), [](const WordTiming& a, const WordTiming& b) {
      return a.interval < b.interval;
    });
    for (const auto& w : sorted) {
      out += key.first + " 1 " + format_seconds(w.interval.start) + " " +
             format_seconds(w.interval.duration()) + " " + w.word;
      if (!key.second.empty()) out += " 1.00 " + key.second;
      out += "\n";
    }
  }
  return out;
}

}  // namespace dmasr
