#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "spinelab/error.hpp"
#include "spinelab/model.hpp"

namespace spinelab {
namespace {

using json = nlohmann::json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) throw SpecError("unknown key '" + key + "' in " + where);
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw SpecError(where + " must be a number");
  return v.get<double>();
}

Vector vector_of(const json& v, int K, const std::string& name) {
  if (!v.is_array() || static_cast<int>(v.size()) != K)
    throw SpecError("'" + name + "' must be an array of length K");
  Vector out(K);
  for (int i = 0; i < K; ++i) out[i] = number(v[i], name + "[" + std::to_string(i) + "]");
  return out;
}

std::optional<JumpMeasure> jump_measure_of(const json& v, const std::string& where) {
  if (v.is_null()) return std::nullopt;
  if (!v.is_object()) throw SpecError(where + " must be null or an object");
  if (!v.contains("kind") || !v["kind"].is_string()) throw SpecError(where + " needs a string 'kind'");
  const auto kind = v["kind"].get<std::string>();
  if (kind == "atoms") {
    reject_unknown_keys(v, {"kind", "atoms"}, where);
    if (!v.contains("atoms") || !v["atoms"].is_array()) throw SpecError(where + ".atoms must be an array");
    std::vector<Atoms::Atom> atoms;
    for (const auto& pair : v["atoms"]) {
      if (!pair.is_array() || pair.size() != 2) throw SpecError(where + ".atoms entries must be [size, rate]");
      atoms.push_back({number(pair[0], where + " atom size"), number(pair[1], where + " atom rate")});
    }
    return JumpMeasure::atoms(std::move(atoms));
  }
  if (kind == "logpareto") {
    reject_unknown_keys(v, {"kind", "rate", "beta"}, where);
    if (!v.contains("rate") || !v.contains("beta")) throw SpecError(where + " needs 'rate' and 'beta'");
    return JumpMeasure::log_pareto(number(v["rate"], where + ".rate"), number(v["beta"], where + ".beta"));
  }
  throw SpecError(where + ": unknown jump measure kind '" + kind + "'");
}

json jump_measure_json(const std::optional<JumpMeasure>& jm) {
  if (!jm) return nullptr;
  if (const auto* at = std::get_if<Atoms>(&jm->family())) {
    json atoms = json::array();
    for (const auto& a : at->atoms) atoms.push_back({a.size, a.rate});
    return {{"kind", "atoms"}, {"atoms", atoms}};
  }
  const auto& lp = std::get<LogPareto>(jm->family());
  return {{"kind", "logpareto"}, {"rate", lp.total_rate}, {"beta", lp.beta}};
}

}  // namespace

ModelSpec parse_spec_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw SpecError(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SpecError("model file must be a JSON object");
  reject_unknown_keys(doc, {"K", "a", "c", "pi", "piL", "piNL"}, "model");
  for (const char* key : {"K", "a", "c", "pi", "piL", "piNL"})
    if (!doc.contains(key)) throw SpecError(std::string("missing key '") + key + "'");
  if (!doc["K"].is_number_integer() || doc["K"].get<long long>() < 1)
    throw SpecError("'K' must be a positive integer");
  ModelSpec spec;
  spec.K = doc["K"].get<int>();
  spec.a = vector_of(doc["a"], spec.K, "a");
  spec.c = vector_of(doc["c"], spec.K, "c");
  const auto& pi = doc["pi"];
  if (!pi.is_array() || static_cast<int>(pi.size()) != spec.K) throw SpecError("'pi' must be a KxK array");
  spec.pi.resize(spec.K, spec.K);
  for (int i = 0; i < spec.K; ++i) spec.pi.row(i) = vector_of(pi[i], spec.K, "pi row").transpose();
  for (const char* key : {"piL", "piNL"}) {
    const auto& list = doc[key];
    if (!list.is_array() || static_cast<int>(list.size()) != spec.K)
      throw SpecError(std::string("'") + key + "' must be an array of length K");
    auto& dst = std::string(key) == "piL" ? spec.piL : spec.piNL;
    for (int i = 0; i < spec.K; ++i)
      dst.push_back(jump_measure_of(list[i], std::string(key) + "[" + std::to_string(i) + "]"));
  }
  return spec;
}

ModelSpec load_spec_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SpecError("cannot open model file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_spec_json(buf.str());
}

std::string spec_to_json(const ModelSpec& spec) {
  json doc;
  doc["K"] = spec.K;
  doc["a"] = std::vector<double>(spec.a.data(), spec.a.data() + spec.K);
  doc["c"] = std::vector<double>(spec.c.data(), spec.c.data() + spec.K);
  json pi = json::array();
  for (int i = 0; i < spec.K; ++i) {
    json row = json::array();
    for (int j = 0; j < spec.K; ++j) row.push_back(spec.pi(i, j));
    pi.push_back(row);
  }
  doc["pi"] = pi;
  json piL = json::array(), piNL = json::array();
  for (int i = 0; i < spec.K; ++i) {
    piL.push_back(jump_measure_json(spec.piL[i]));
    piNL.push_back(jump_measure_json(spec.piNL[i]));
  }
  doc["piL"] = piL;
  doc["piNL"] = piNL;
  return doc.dump();
}

}  // namespace spinelab
