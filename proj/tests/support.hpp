#pragma once

#include <fstream>
#include <initializer_list>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <utility>

#include "pdtmc/lang/model_parser.hpp"
#include "pdtmc/model/unfold.hpp"

namespace support {

using namespace pdtmc;

inline std::string data_path(const std::string& rel) { return std::string(PDTMC_DATA_DIR) + "/" + rel; }

inline std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline const std::string& rad_text() {
  static const std::string text = read_text(data_path("models/rad_snag.pm"));
  return text;
}

inline const GuardedModel& rad_model() {
  static const GuardedModel m = lang::parse_model(rad_text());
  return m;
}

inline BigRational q(const char* text) { return *parse_rational(text); }

inline Bindings bind(std::initializer_list<std::pair<const char*, const char*>> items, Bindings base = {}) {
  for (const auto& [k, v] : items) base[k] = q(v);
  return base;
}

/// Horizon and reward constants used throughout.
inline Bindings rad_base() {
  return bind({{"MAX_TIME", "2"},
               {"MAX_TIME_TRAJECTORY", "2"},
               {"C_S2", "10"},
               {"C_S8", "5"},
               {"R_S7", "10"},
               {"BASE_REWARD_S3", "20"}});
}

/// Two-parameter setup: P2 and P3 free.
inline Bindings two_param() {
  return bind({{"P4", "0.88"}, {"P5", "0.7"}, {"P6", "0.05"}, {"P7", "0.8"}, {"P8", "0.05"}, {"P9", "0.1"}, {"p10", "0.8"}},
              rad_base());
}

/// Five-parameter setup: P2, P4, P5, P7, P8 free.
inline Bindings five_param() {
  return bind({{"P3", "0.1"}, {"P6", "0.05"}, {"P9", "0.1"}, {"p10", "0.8"}}, rad_base());
}

inline ParamValuation valuation(const Pdtmc& p, const std::map<std::string, double>& values) {
  ParamValuation v;
  for (const auto& [name, value] : values) v[*p.params.find(name)] = rational_from_double(value);
  return v;
}

inline ParamValuation exact_valuation(const Pdtmc& p, const std::map<std::string, const char*>& values) {
  ParamValuation v;
  for (const auto& [name, value] : values) v[*p.params.find(name)] = q(value);
  return v;
}

/// Uniform point in [lo, hi] as an exact rational with denominator 2^20.
inline BigRational draw(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  BigRational r(BigInteger(static_cast<long>(u(rng) * (1 << 20))), BigInteger(1 << 20));
  r.canonicalize();
  return r;
}

/// Random valuation of the free probability parameters of the dressing
/// model such that every branch probability stays in [0, 1]: the pairs
/// sharing a "1 - (a + b)" branch are drawn with a + b <= 1.
inline ParamValuation random_valid(const Pdtmc& p, std::mt19937_64& rng) {
  ParamValuation v;
  std::map<std::string, BigRational> values;
  auto pair = [&](const char* a, const char* b) {
    BigRational x = draw(rng, 0.0, 1.0);
    BigRational y = draw(rng, 0.0, 1.0) * (1 - x);
    if (rng() & 1) std::swap(x, y);
    values[a] = x;
    values[b] = y;
  };
  pair("P2", "P9");
  pair("P3", "P4");
  pair("P5", "P6");
  for (const char* name : {"P7", "P8", "p10"}) values[name] = draw(rng, 0.0, 1.0);
  for (const auto& [name, value] : values)
    if (auto id = p.params.find(name)) v[*id] = value;
  return v;
}

inline const char* mitigation_numerator() {
  return "10000*P8^2*P5^2*P4^2*P2^2 - 20000*P8*P5^2*P4^2*P2^2 + 2000*P8^2*P5^2*P4*P2^2 + 100*P8*P7^2*P5*P4*P2^2"
         " + 10000*P5^2*P4^2*P2^2 - 500*P8*P5*P4^2*P2^2 - 2000*P8*P5^2*P4*P2^2 - 200*P8*P7*P5*P4*P2^2"
         " + 100*P8^2*P5^2*P4*P2 + 5*P8*P7^2*P5*P4*P2 + 500*P5*P4^2*P2^2 - 2000*P8*P5*P4*P2^2"
         " - 100*P7^2*P4*P2^2 - 100*P8*P5^2*P4*P2 - 10*P8*P7*P5*P4*P2 + 2000*P5*P4*P2^2"
         " + 200*P7*P4*P2^2 - 100*P8*P5*P4*P2 - 5*P7^2*P4*P2 + 100*P5*P4*P2 + 10*P7*P4*P2";
}

inline const char* mitigation_denominator() {
  return "10000*P8^2*P5^2*P4^2*P2^2 - 20000*P8*P5^2*P4^2*P2^2 + 4000*P8^2*P5^2*P4*P2^2 + 10000*P5^2*P4^2*P2^2"
         " - 500*P8*P5*P4^2*P2^2 - 4000*P8*P5^2*P4*P2^2 + 400*P8^2*P5^2*P2^2 + 200*P8^2*P5^2*P4*P2"
         " + 500*P5*P4^2*P2^2 - 4100*P8*P5*P4*P2^2 - 200*P8*P5^2*P4*P2 + 40*P8^2*P5^2*P2"
         " + 4000*P5*P4*P2^2 - 800*P8*P5*P2^2 - 205*P8*P5*P4*P2 + P8^2*P5^2 + 100*P4*P2^2"
         " + 200*P5*P4*P2 - 80*P8*P5*P2 + 400*P2^2 + 5*P4*P2 - 2*P8*P5 + 40*P2 + 1";
}

inline const char* escalation_closed_form() { return "(100*P3*P2 + 98*P2 - 99)/(88*P2 - 100)"; }

}  // namespace support
