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

// Scriptable line-protocol peer for the external backend tests.
//
//   fake_backend fixed <text>      every turn answers <text>
//   fake_backend echo              every turn answers its own prompt
//   fake_backend stateless         like echo, but declines context reuse
//   fake_backend error-on <k>      turn k answers with an error object
//   fake_backend malformed         turns answer with non-JSON
//   fake_backend hang              turns never answer
//   fake_backend reject-open       open_audio answers with an error

#include <iostream>
#include <string>
#include <thread>

#include <json.hpp>

using json = nlohmann::json;

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: fake_backend <mode> [arg]\n";
    return 2;
  }
  const std::string mode = argv[1];
  const std::string arg = argc > 2 ? argv[2] : "";
  std::string line;
  while (std::getline(std::cin, line)) {
    const auto req = json::parse(line);
    const auto type = req.at("type").get<std::string>();
    json reply = {{"text", ""}};
    if (type == "open_audio") {
      if (mode == "reject-open") reply["error"] = "no audio";
      if (mode == "stateless") reply["capabilities"] = {{"context_reuse", false}, {"timestamps", true}};
    } else if (type == "turn") {
      const int k = req.at("turn_index").get<int>();
      if (mode == "fixed") {
        reply["text"] = arg;
      } else if (mode == "echo" || mode == "stateless") {
        reply["text"] = req.at("prompt");
      } else if (mode == "error-on") {
        if (k == std::stoi(arg)) reply["error"] = "model overloaded";
        else reply["text"] = "ok";
      } else if (mode == "malformed") {
        std::cout << "this is not json" << std::endl;
        continue;
      } else if (mode == "hang") {
        std::this_thread::sleep_for(std::chrono::hours(1));
      }
    }
    std::cout << reply.dump() << std::endl;
  }
  return 0;
}
