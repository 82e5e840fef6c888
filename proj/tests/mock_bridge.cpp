// Stand-in feature server speaking the bridge line protocol. Features come
// from the builtin extractor on a 7x7 lattice. MOCK_BRIDGE_FAULT selects a
// misbehavior for error-path tests: "hello", "short", "exit".

#include <cstdlib>
#include <iostream>
#include <string>

#include <json.hpp>

#include "gms3dqa/features.hpp"
#include "gms3dqa/image.hpp"

using nlohmann::json;

int main() {
  const char* env = std::getenv("MOCK_BRIDGE_FAULT");
  const std::string fault = env ? env : "";
  gms::BuiltinExtractor extractor(768);
  std::string line;
  while (std::getline(std::cin, line)) {
    json reply;
    try {
      const json req = json::parse(line);
      const std::string op = req.at("op").get<std::string>();
      if (op == "hello") {
        if (fault == "hello") {
          reply = {{"ok", false}, {"error", "not ready"}};
        } else {
          reply = {{"ok", true}, {"feature_dim", 768}};
        }
      } else if (op == "features" || op == "score") {
        if (fault == "exit") return 0;
        const auto img = gms::read_png(req.at("qmm_path").get<std::string>());
        auto f = extractor.extract(img, 7);
        if (fault == "short") f.resize(10);
        if (op == "features") {
          reply = {{"ok", true}, {"features", f}};
        } else {
          double s = 0;
          for (int i = 0; i < 12; ++i) s += f[i];
          reply = {{"ok", true}, {"score", 5.0 * s / 12.0}};
        }
      } else {
        reply = {{"ok", false}, {"error", "unknown op '" + op + "'"}};
      }
    } catch (const std::exception& e) {
      reply = {{"ok", false}, {"error", e.what()}};
    }
    std::cout << reply.dump() << "\n" << std::flush;
  }
  return 0;
}
