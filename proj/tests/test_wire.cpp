#include "ppo1/wire.hpp"

#include <doctest.h>

#include <random>

using namespace ppo1;

TEST_CASE("evaluate encodes to the documented line") {
  const auto line = encode(wire::Evaluate{3, 1, {0.5, -0.2}});
  CHECK(line == R"({"type":"evaluate","episode":3,"env_index":1,"action":[0.5,-0.2]})");
  CHECK(std::get<wire::Evaluate>(decode(line)) == wire::Evaluate{3, 1, {0.5, -0.2}});
}

TEST_CASE("result round trip") {
  const auto msg = decode(encode(wire::Result{3, 1, -1.93}));
  CHECK(std::get<wire::Result>(msg).reward == -1.93);
  const auto hs = decode(encode(wire::Handshake{1, 2, "sphere"}));
  CHECK(std::get<wire::Handshake>(hs) == wire::Handshake{1, 2, "sphere"});
}

TEST_CASE("bad lines are protocol errors with a line number") {
  try {
    decode(R"({"type":"bogus"})", 17);
    FAIL("no exception");
  } catch (const ProtocolError& e) {
    CHECK(e.line_number() == 17);
  }
  CHECK_THROWS_AS(decode("{not json", 1), ProtocolError);
  CHECK_THROWS_AS(decode("[1,2]", 1), ProtocolError);
  CHECK_THROWS_AS(decode(R"({"type":"result","episode":0})", 1), ProtocolError);
  CHECK_THROWS_AS(decode(R"({"type":"evaluate","episode":0,"env_index":0,"action":"x"})", 1), ProtocolError);
}

TEST_CASE("random messages survive a round trip") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  std::uniform_int_distribution<int> kind(0, 3), idx(0, 1000), len(0, 6), ch(32, 126);
  auto text = [&] {
    std::string s;
    const int n = len(rng) * 3;
    for (int i = 0; i < n; ++i) s.push_back(static_cast<char>(ch(rng)));
    return s;
  };
  for (int i = 0; i < 10000; ++i) {
    WireMessage m;
    switch (kind(rng)) {
      case 0: m = wire::Handshake{idx(rng), idx(rng), text()}; break;
      case 1: {
        std::vector<double> a(static_cast<std::size_t>(len(rng)));
        for (auto& x : a) x = u(rng);
        m = wire::Evaluate{idx(rng), idx(rng), a};
        break;
      }
      case 2: m = wire::Result{idx(rng), idx(rng), u(rng)}; break;
      default: m = wire::Error{idx(rng), idx(rng), text()}; break;
    }
    const auto line = encode(m);
    REQUIRE(line.find('\n') == std::string::npos);
    REQUIRE(decode(line) == m);
  }
}
