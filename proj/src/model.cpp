#include "momsens/model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace momsens {

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  const auto first = static_cast<unsigned char>(s.front());
  if (!(std::isalpha(first) || s.front() == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::optional<std::uint64_t> parse_uint(std::string_view s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<double> parse_float(std::string_view s) {
  // from_chars for double is available in libstdc++ 11.
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

// A side of a reaction before species names are resolved.
struct RawTerm {
  std::string species;
  unsigned coefficient;
};

struct RawReaction {
  std::size_t line;
  std::string name;
  std::vector<RawTerm> reactants;
  std::vector<RawTerm> products;
  std::string rate;
};

std::vector<RawTerm> parse_side(std::string_view side, std::size_t line) {
  side = trim(side);
  if (side.empty()) throw ModelError(line, "empty reaction side (use 0 for no species)");
  if (side == "0") return {};

  std::vector<RawTerm> terms;
  std::size_t start = 0;
  while (start <= side.size()) {
    std::size_t plus = side.find('+', start);
    std::string_view term = trim(side.substr(start, plus == std::string_view::npos ? std::string_view::npos : plus - start));
    if (term.empty()) throw ModelError(line, "empty term in reaction");

    auto tokens = split_ws(term);
    unsigned coeff = 1;
    std::string_view name;
    if (tokens.size() == 2) {
      auto c = parse_uint(tokens[0]);
      if (!c) throw ModelError(line, "bad stoichiometric coefficient '" + std::string(tokens[0]) + "'");
      coeff = static_cast<unsigned>(*c);
      name = tokens[1];
    } else if (tokens.size() == 1) {
      // Accept the compact "2X" form as well.
      std::size_t k = 0;
      while (k < tokens[0].size() && std::isdigit(static_cast<unsigned char>(tokens[0][k]))) ++k;
      if (k > 0) {
        auto c = parse_uint(tokens[0].substr(0, k));
        if (!c) throw ModelError(line, "bad stoichiometric coefficient");
        coeff = static_cast<unsigned>(*c);
      }
      name = tokens[0].substr(k);
    } else {
      throw ModelError(line, "malformed term '" + std::string(term) + "'");
    }
    if (!is_identifier(name)) throw ModelError(line, "bad species name '" + std::string(name) + "'");
    if (coeff == 0) throw ModelError(line, "zero stoichiometric coefficient");
    terms.push_back({std::string(name), coeff});

    if (plus == std::string_view::npos) break;
    start = plus + 1;
  }
  return terms;
}

// Splits "key=value" allowing "key = value" across tokens.
std::vector<std::string> join_assignments(const std::vector<std::string_view>& tokens) {
  std::string joined;
  for (auto t : tokens) {
    if (!joined.empty() && joined.back() != '=' && t.front() != '=') joined += ' ';
    joined.append(t);
  }
  std::vector<std::string> out;
  for (auto t : split_ws(joined)) out.emplace_back(t);
  return out;
}

}  // namespace

ModelError::ModelError(std::size_t line, const std::string& message)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
      line_(line) {}

unsigned Reaction::order() const {
  unsigned total = 0;
  for (const auto& r : reactants) total += r.coefficient;
  return total;
}

ReactionNetwork::ReactionNetwork(std::vector<Species> species, std::vector<Reaction> reactions,
                                 std::vector<Parameter> parameters,
                                 std::vector<std::size_t> observed)
    : species_(std::move(species)),
      reactions_(std::move(reactions)),
      parameters_(std::move(parameters)),
      observed_(std::move(observed)) {
  if (species_.empty()) throw ModelError(0, "network declares no species");
  if (reactions_.empty()) throw ModelError(0, "network declares no reactions");

  std::set<std::string> names;
  for (const auto& s : species_) {
    if (!is_identifier(s.name)) throw ModelError(0, "bad species name '" + s.name + "'");
    if (!names.insert(s.name).second) throw ModelError(0, "duplicate species '" + s.name + "'");
  }
  names.clear();
  for (const auto& p : parameters_) {
    if (!is_identifier(p.name)) throw ModelError(0, "bad parameter name '" + p.name + "'");
    if (!names.insert(p.name).second) throw ModelError(0, "duplicate parameter '" + p.name + "'");
    if (!(std::isfinite(p.nominal) && p.nominal > 0.0))
      throw ModelError(0, "parameter '" + p.name + "' must have a positive nominal value");
    if (p.bounds && !(0.0 < p.bounds->lower && p.bounds->lower < p.bounds->upper &&
                      std::isfinite(p.bounds->upper)))
      throw ModelError(0, "parameter '" + p.name + "' bounds must satisfy 0 < lower < upper");
  }
  names.clear();
  const std::size_t n = species_.size();
  for (auto& r : reactions_) {
    if (!names.insert(r.name).second) throw ModelError(0, "duplicate reaction '" + r.name + "'");
    if (r.rate >= parameters_.size()) throw ModelError(0, "reaction '" + r.name + "' has no rate parameter");
    std::vector<int> nu(n, 0);
    for (const auto& t : r.reactants) {
      if (t.species >= n) throw ModelError(0, "reaction '" + r.name + "' uses an undeclared species");
      nu[t.species] -= static_cast<int>(t.coefficient);
    }
    for (const auto& t : r.products) {
      if (t.species >= n) throw ModelError(0, "reaction '" + r.name + "' uses an undeclared species");
      nu[t.species] += static_cast<int>(t.coefficient);
    }
    if (r.order() > 2)
      throw ModelError(0, "reaction '" + r.name + "' has reactant order " + std::to_string(r.order()) +
                              " (at most 2 supported)");
    if (std::all_of(nu.begin(), nu.end(), [](int v) { return v == 0; }))
      throw ModelError(0, "reaction '" + r.name + "' has zero net stoichiometry");
    if (!r.net_change.empty() && r.net_change != nu)
      throw ModelError(0, "reaction '" + r.name + "' net change is inconsistent");
    r.net_change = std::move(nu);
  }

  if (observed_.empty()) {
    observed_.resize(n);
    std::iota(observed_.begin(), observed_.end(), std::size_t{0});
  }
  std::set<std::size_t> seen;
  for (auto i : observed_) {
    if (i >= n) throw ModelError(0, "observed species index out of range");
    if (!seen.insert(i).second) throw ModelError(0, "species observed twice");
  }
}

std::optional<std::size_t> ReactionNetwork::find_species(std::string_view name) const {
  for (std::size_t i = 0; i < species_.size(); ++i)
    if (species_[i].name == name) return i;
  return std::nullopt;
}

std::optional<std::size_t> ReactionNetwork::find_parameter(std::string_view name) const {
  for (std::size_t i = 0; i < parameters_.size(); ++i)
    if (parameters_[i].name == name) return i;
  return std::nullopt;
}

std::vector<std::uint64_t> ReactionNetwork::initial_state() const {
  std::vector<std::uint64_t> x;
  x.reserve(species_.size());
  for (const auto& s : species_) x.push_back(s.initial_count);
  return x;
}

ParameterPoint::ParameterPoint(std::vector<double> values) : values_(std::move(values)) {
  for (double v : values_)
    if (!(std::isfinite(v) && v > 0.0))
      throw std::invalid_argument("parameter values must be finite and positive");
}

ParameterPoint ParameterPoint::nominal(const ReactionNetwork& network) {
  std::vector<double> v;
  for (const auto& p : network.parameters()) v.push_back(p.nominal);
  return ParameterPoint(std::move(v));
}

ParameterPoint ParameterPoint::with(std::size_t i, double value) const {
  auto v = values_;
  v.at(i) = value;
  return ParameterPoint(std::move(v));
}

ReactionNetwork parse_model(std::string_view text) {
  struct DeclaredSpecies {
    Species species;
    std::size_t line;
  };
  std::vector<DeclaredSpecies> species;
  std::vector<std::pair<Parameter, std::size_t>> params;
  std::vector<RawReaction> raw_reactions;
  std::vector<std::pair<std::string, std::size_t>> observed;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
    ++line_no;

    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    auto tokens = split_ws(line);
    const std::string_view keyword = tokens.front();

    if (keyword == "species") {
      if (tokens.size() < 3) throw ModelError(line_no, "expected 'species <name> init=<uint>'");
      std::vector<std::string_view> rest(tokens.begin() + 2, tokens.end());
      auto assigns = join_assignments(rest);
      if (assigns.size() != 1 || assigns[0].rfind("init=", 0) != 0)
        throw ModelError(line_no, "expected 'species <name> init=<uint>'");
      auto count = parse_uint(std::string_view(assigns[0]).substr(5));
      if (!count) throw ModelError(line_no, "bad initial count '" + assigns[0].substr(5) + "'");
      if (!is_identifier(tokens[1])) throw ModelError(line_no, "bad species name '" + std::string(tokens[1]) + "'");
      for (const auto& s : species)
        if (s.species.name == tokens[1]) throw ModelError(line_no, "duplicate species '" + std::string(tokens[1]) + "'");
      species.push_back({Species{std::string(tokens[1]), *count}, line_no});

    } else if (keyword == "param") {
      std::vector<std::string_view> rest(tokens.begin() + 1, tokens.end());
      auto assigns = join_assignments(rest);
      if (assigns.empty() || assigns.size() > 2) throw ModelError(line_no, "expected 'param <name> = <float> [bounds=<lo>,<hi>]'");
      auto eq = assigns[0].find('=');
      if (eq == std::string::npos) throw ModelError(line_no, "expected 'param <name> = <float>'");
      Parameter p;
      p.name = assigns[0].substr(0, eq);
      if (!is_identifier(p.name)) throw ModelError(line_no, "bad parameter name '" + p.name + "'");
      auto value = parse_float(std::string_view(assigns[0]).substr(eq + 1));
      if (!value) throw ModelError(line_no, "bad parameter value '" + assigns[0].substr(eq + 1) + "'");
      if (!(*value > 0.0)) throw ModelError(line_no, "parameter '" + p.name + "' must be positive");
      p.nominal = *value;
      if (assigns.size() == 2) {
        std::string_view b = assigns[1];
        if (b.rfind("bounds=", 0) != 0) throw ModelError(line_no, "expected 'bounds=<lo>,<hi>'");
        b.remove_prefix(7);
        auto comma = b.find(',');
        if (comma == std::string_view::npos) throw ModelError(line_no, "expected 'bounds=<lo>,<hi>'");
        auto lo = parse_float(b.substr(0, comma));
        auto hi = parse_float(b.substr(comma + 1));
        if (!lo || !hi) throw ModelError(line_no, "bad bounds");
        if (!(0.0 < *lo && *lo < *hi)) throw ModelError(line_no, "bounds must satisfy 0 < lower < upper");
        p.bounds = Bounds{*lo, *hi};
      }
      for (const auto& [q, l] : params)
        if (q.name == p.name) throw ModelError(line_no, "duplicate parameter '" + p.name + "'");
      params.emplace_back(std::move(p), line_no);

    } else if (keyword == "reaction") {
      std::string_view body = trim(line.substr(keyword.size()));
      auto colon = body.find(':');
      if (colon == std::string_view::npos) throw ModelError(line_no, "expected 'reaction <name>: ...'");
      RawReaction r;
      r.line = line_no;
      r.name = std::string(trim(body.substr(0, colon)));
      if (!is_identifier(r.name)) throw ModelError(line_no, "bad reaction name '" + r.name + "'");
      body = body.substr(colon + 1);
      auto arrow = body.find("->");
      auto at = body.rfind('@');
      if (arrow == std::string_view::npos || at == std::string_view::npos || at < arrow)
        throw ModelError(line_no, "expected '<reactants> -> <products> @ <param>'");
      r.reactants = parse_side(body.substr(0, arrow), line_no);
      r.products = parse_side(body.substr(arrow + 2, at - arrow - 2), line_no);
      r.rate = std::string(trim(body.substr(at + 1)));
      if (!is_identifier(r.rate)) throw ModelError(line_no, "bad rate parameter name '" + r.rate + "'");
      for (const auto& q : raw_reactions)
        if (q.name == r.name) throw ModelError(line_no, "duplicate reaction '" + r.name + "'");
      raw_reactions.push_back(std::move(r));

    } else if (keyword == "observe") {
      if (tokens.size() < 2) throw ModelError(line_no, "expected 'observe <species> ...'");
      for (std::size_t i = 1; i < tokens.size(); ++i) observed.emplace_back(std::string(tokens[i]), line_no);

    } else {
      throw ModelError(line_no, "unknown keyword '" + std::string(keyword) + "'");
    }
  }

  auto species_index = [&](const std::string& name, std::size_t line) {
    for (std::size_t i = 0; i < species.size(); ++i)
      if (species[i].species.name == name) return i;
    throw ModelError(line, "undeclared species '" + name + "'");
  };

  std::vector<Reaction> reactions;
  for (const auto& raw : raw_reactions) {
    Reaction r;
    r.name = raw.name;
    auto resolve = [&](const std::vector<RawTerm>& side) {
      std::map<std::size_t, unsigned> merged;
      for (const auto& t : side) merged[species_index(t.species, raw.line)] += t.coefficient;
      std::vector<StoichTerm> out;
      for (auto [s, c] : merged) out.push_back({s, c});
      return out;
    };
    r.reactants = resolve(raw.reactants);
    r.products = resolve(raw.products);
    std::optional<std::size_t> rate;
    for (std::size_t i = 0; i < params.size(); ++i)
      if (params[i].first.name == raw.rate) rate = i;
    if (!rate) throw ModelError(raw.line, "undeclared parameter '" + raw.rate + "'");
    r.rate = *rate;
    if (r.order() > 2)
      throw ModelError(raw.line, "reactant order " + std::to_string(r.order()) + " exceeds 2");
    std::vector<int> nu(species.size(), 0);
    for (const auto& t : r.reactants) nu[t.species] -= static_cast<int>(t.coefficient);
    for (const auto& t : r.products) nu[t.species] += static_cast<int>(t.coefficient);
    if (std::all_of(nu.begin(), nu.end(), [](int v) { return v == 0; }))
      throw ModelError(raw.line, "reaction '" + r.name + "' has zero net stoichiometry");
    r.net_change = std::move(nu);
    reactions.push_back(std::move(r));
  }

  std::vector<std::size_t> observed_idx;
  for (const auto& [name, line] : observed) {
    auto idx = species_index(name, line);
    if (std::find(observed_idx.begin(), observed_idx.end(), idx) != observed_idx.end())
      throw ModelError(line, "species '" + name + "' observed twice");
    observed_idx.push_back(idx);
  }

  std::vector<Species> sp;
  for (auto& s : species) sp.push_back(std::move(s.species));
  std::vector<Parameter> ps;
  for (auto& p : params) ps.push_back(std::move(p.first));
  return ReactionNetwork(std::move(sp), std::move(reactions), std::move(ps), std::move(observed_idx));
}

ReactionNetwork load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("file not found: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

std::string render_model(const ReactionNetwork& network) {
  std::ostringstream out;
  for (const auto& s : network.species()) out << "species " << s.name << " init=" << s.initial_count << '\n';
  for (const auto& p : network.parameters()) {
    out << "param " << p.name << " = " << format_double(p.nominal);
    if (p.bounds) out << " bounds=" << format_double(p.bounds->lower) << ',' << format_double(p.bounds->upper);
    out << '\n';
  }
  auto side = [&](std::span<const StoichTerm> terms) {
    if (terms.empty()) return std::string("0");
    std::string s;
    for (const auto& t : terms) {
      if (!s.empty()) s += " + ";
      if (t.coefficient != 1) s += std::to_string(t.coefficient) + " ";
      s += network.species()[t.species].name;
    }
    return s;
  };
  for (const auto& r : network.reactions())
    out << "reaction " << r.name << ": " << side(r.reactants) << " -> " << side(r.products) << " @ "
        << network.parameters()[r.rate].name << '\n';

  bool all_observed = network.observed().size() == network.species_count();
  for (std::size_t i = 0; all_observed && i < network.observed().size(); ++i)
    all_observed = network.observed()[i] == i;
  if (!all_observed) {
    out << "observe";
    for (auto i : network.observed()) out << ' ' << network.species()[i].name;
    out << '\n';
  }
  return out.str();
}

std::vector<double> propensity_eval(const ReactionNetwork& network, std::span<const std::int64_t> state,
                                    const ParameterPoint& point) {
  if (state.size() != network.species_count()) throw std::invalid_argument("state length mismatch");
  if (point.size() != network.parameter_count()) throw std::invalid_argument("parameter length mismatch");
  for (auto x : state)
    if (x < 0) throw std::invalid_argument("negative molecule count in state");

  std::vector<double> rates;
  rates.reserve(network.reaction_count());
  for (const auto& r : network.reactions()) {
    double a = point[r.rate];
    for (const auto& t : r.reactants) {
      const auto x = state[t.species];
      if (x < static_cast<std::int64_t>(t.coefficient)) {
        a = 0.0;
        break;
      }
      const double xd = static_cast<double>(x);
      a *= (t.coefficient == 1) ? xd : xd * (xd - 1.0) / 2.0;
    }
    rates.push_back(a);
  }
  return rates;
}

double PropensityPolynomial::value(std::span<const double> x) const {
  double q = constant;
  for (std::size_t l = 0; l < dim; ++l) {
    q += linear[l] * x[l];
    for (std::size_t m = 0; m < dim; ++m) q += 0.5 * hess(l, m) * x[l] * x[m];
  }
  return q;
}

double PropensityPolynomial::gradient(std::span<const double> x, std::size_t l) const {
  double g = linear[l];
  for (std::size_t m = 0; m < dim; ++m) g += hess(l, m) * x[m];
  return g;
}

std::vector<PropensityPolynomial> propensity_polynomials(const ReactionNetwork& network) {
  const std::size_t n = network.species_count();
  std::vector<PropensityPolynomial> polys;
  for (const auto& r : network.reactions()) {
    PropensityPolynomial p;
    p.rate = r.rate;
    p.dim = n;
    p.linear.assign(n, 0.0);
    p.hessian.assign(n * n, 0.0);
    if (r.reactants.empty()) {
      p.constant = 1.0;
    } else if (r.reactants.size() == 1 && r.reactants[0].coefficient == 1) {
      p.linear[r.reactants[0].species] = 1.0;
    } else if (r.reactants.size() == 1) {
      // binom(x, 2) = x^2/2 - x/2
      const auto i = r.reactants[0].species;
      p.linear[i] = -0.5;
      p.hessian[i * n + i] = 1.0;
    } else {
      // x_i x_j with i != j
      const auto i = r.reactants[0].species;
      const auto j = r.reactants[1].species;
      p.hessian[i * n + j] = 1.0;
      p.hessian[j * n + i] = 1.0;
    }
    polys.push_back(std::move(p));
  }
  return polys;
}

}  // namespace momsens
