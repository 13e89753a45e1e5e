#include "msgu/harness/run_config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace msgu {
namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> parts;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw std::invalid_argument(fmt::format("{}: '{}' is not a valid number", key, value));
  }
  return out;
}

Real parse_real(const std::string& key, const std::string& value) {
  return static_cast<Real>(parse_number<double>(key, value));
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw std::invalid_argument(fmt::format("{}: '{}' is not a boolean", key, value));
}

std::vector<int> parse_ints(const std::string& key, const std::string& value) {
  std::vector<int> out;
  for (const auto& p : split_list(value)) out.push_back(parse_number<int>(key, p));
  return out;
}

std::vector<Extent> parse_extents(const std::string& key, const std::string& value) {
  std::vector<Extent> out;
  try {
    for (const auto& p : split_list(value)) out.push_back(Extent::parse(p));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(fmt::format("{}: {}", key, e.what()));
  }
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v, auto&& fn) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += fn(v[i]);
  }
  return out;
}

fs::path resolve(const fs::path& base, const std::string& value) {
  const fs::path p(value);
  return p.is_absolute() || base.empty() ? p : base / p;
}

}  // namespace

RunConfig RunConfig::parse(const std::string& text, const fs::path& base_dir) {
  RunConfig c;
  auto& a = c.architecture;
  auto& t = c.training;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters{
      {"architecture.scale_chain", [&](auto& k, auto& v) { a.scale_chain = parse_extents(k, v); }},
      {"architecture.bottleneck", [&](auto& k, auto& v) {
         const auto e = parse_extents(k, v);
         if (e.size() != 1) throw std::invalid_argument(fmt::format("{}: expected one extent", k));
         a.bottleneck = e[0];
       }},
      {"architecture.channel_widths", [&](auto& k, auto& v) {
         // "default" selects the built-in ladder for however many levels the chain has.
         a.channel_widths = v == "default" ? std::vector<int>{} : parse_ints(k, v);
       }},
      {"architecture.kernel", [&](auto& k, auto& v) { a.kernel = parse_number<int>(k, v); }},
      {"architecture.leaky_slope", [&](auto& k, auto& v) { a.leaky_slope = parse_real(k, v); }},
      {"architecture.intermediate_heads", [&](auto& k, auto& v) { a.intermediate_heads = parse_bool(k, v); }},
      {"architecture.discriminator_width", [&](auto& k, auto& v) { a.discriminator_width = parse_number<int>(k, v); }},
      {"architecture.extractor_widths", [&](auto& k, auto& v) { a.extractor_widths = parse_ints(k, v); }},
      {"architecture.extractor_weights", [&](auto&, auto& v) { c.extractor_weights = resolve(base_dir, v); }},
      {"architecture.bn_epsilon", [&](auto& k, auto& v) { a.bn_epsilon = parse_real(k, v); }},
      {"architecture.bn_momentum", [&](auto& k, auto& v) { a.bn_momentum = parse_real(k, v); }},
      {"training.steps", [&](auto& k, auto& v) { t.steps = parse_number<std::int64_t>(k, v); }},
      {"training.epochs", [&](auto& k, auto& v) { t.epochs = parse_number<std::int64_t>(k, v); }},
      {"training.batch_size", [&](auto& k, auto& v) { t.batch_size = parse_number<std::int64_t>(k, v); }},
      {"training.learning_rate", [&](auto& k, auto& v) { t.learning_rate = parse_real(k, v); }},
      {"training.beta1", [&](auto& k, auto& v) { t.beta1 = parse_real(k, v); }},
      {"training.beta2", [&](auto& k, auto& v) { t.beta2 = parse_real(k, v); }},
      {"training.seed", [&](auto& k, auto& v) { t.seed = parse_number<std::uint64_t>(k, v); }},
      {"training.alpha", [&](auto& k, auto& v) { t.weights.alpha = parse_real(k, v); }},
      {"training.beta", [&](auto& k, auto& v) { t.weights.beta = parse_real(k, v); }},
      {"training.intermediate_heads", [&](auto& k, auto& v) { a.intermediate_heads = parse_bool(k, v); }},
      {"training.flip", [&](auto& k, auto& v) { t.flip = parse_bool(k, v); }},
      {"data.root", [&](auto&, auto& v) { c.data.root = resolve(base_dir, v); }},
      {"data.split", [&](auto&, auto& v) { c.data.split = v; }},
      {"output.dir", [&](auto&, auto& v) { c.output.dir = resolve(base_dir, v); }},
      {"output.checkpoint_every", [&](auto& k, auto& v) { c.output.checkpoint_every = parse_number<std::int64_t>(k, v); }},
      {"output.log_every", [&](auto& k, auto& v) { c.output.log_every = parse_number<std::int64_t>(k, v); }},
      {"gradscan.epochs", [&](auto& k, auto& v) { c.gradscan.epochs = parse_number<std::int64_t>(k, v); }},
      {"gradscan.seeds", [&](auto& k, auto& v) {
         c.gradscan.seeds.clear();
         for (const auto& p : split_list(v)) c.gradscan.seeds.push_back(parse_number<std::uint64_t>(k, p));
       }},
  };

  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(fmt::format("line {}: expected 'section.key = value'", number));
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) throw std::invalid_argument(fmt::format("line {}: unknown key '{}'", number, key));
    if (!seen.insert(key).second) throw std::invalid_argument(fmt::format("line {}: '{}' given twice", number, key));
    it->second(key, value);
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error(fmt::format("cannot read config {}", file.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse(ss.str(), file.parent_path());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(fmt::format("{}: {}", file.string(), e.what()));
  }
}

void RunConfig::validate() const {
  try {
    architecture.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(fmt::format("architecture: {}", e.what()));
  }
  try {
    training.weights.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(fmt::format("training.alpha/beta: {}", e.what()));
  }
  auto require = [](bool ok, const char* key, const std::string& why) {
    if (!ok) throw std::invalid_argument(fmt::format("{}: {}", key, why));
  };
  require(training.steps > 0, "training.steps", "must be positive");
  require(training.epochs >= 0, "training.epochs", "must be non-negative");
  require(training.batch_size > 0, "training.batch_size", "must be positive");
  require(training.learning_rate > 0, "training.learning_rate", "must be positive");
  require(training.beta1 >= 0 && training.beta1 < 1, "training.beta1", "must lie in [0, 1)");
  require(training.beta2 >= 0 && training.beta2 < 1, "training.beta2", "must lie in [0, 1)");
  require(output.checkpoint_every >= 0, "output.checkpoint_every", "must be non-negative");
  require(output.log_every > 0, "output.log_every", "must be positive");
  require(gradscan.epochs > 0, "gradscan.epochs", "must be positive");
  require(!gradscan.seeds.empty(), "gradscan.seeds", "must list at least one seed");
}

std::string RunConfig::to_text() const {
  const auto& a = architecture;
  const auto& t = training;
  auto ext = [](const Extent& e) { return e.str(); };
  auto num = [](auto v) { return fmt::format("{}", v); };
  std::string s;
  s += fmt::format("architecture.scale_chain = {}\n", join(a.scale_chain, ext));
  s += fmt::format("architecture.bottleneck = {}\n", a.bottleneck.str());
  s += fmt::format("architecture.channel_widths = {}\n", a.channel_widths.empty() ? std::string("default") : join(a.channel_widths, num));
  s += fmt::format("architecture.kernel = {}\n", a.kernel);
  s += fmt::format("architecture.leaky_slope = {}\n", a.leaky_slope);
  s += fmt::format("architecture.intermediate_heads = {}\n", a.intermediate_heads);
  s += fmt::format("architecture.discriminator_width = {}\n", a.discriminator_width);
  s += fmt::format("architecture.extractor_widths = {}\n", join(a.extractor_widths, num));
  if (!extractor_weights.empty()) s += fmt::format("architecture.extractor_weights = {}\n", extractor_weights.string());
  s += fmt::format("architecture.bn_epsilon = {}\n", a.bn_epsilon);
  s += fmt::format("architecture.bn_momentum = {}\n", a.bn_momentum);
  s += fmt::format("training.steps = {}\n", t.steps);
  s += fmt::format("training.epochs = {}\n", t.epochs);
  s += fmt::format("training.batch_size = {}\n", t.batch_size);
  s += fmt::format("training.learning_rate = {}\n", t.learning_rate);
  s += fmt::format("training.beta1 = {}\n", t.beta1);
  s += fmt::format("training.beta2 = {}\n", t.beta2);
  s += fmt::format("training.seed = {}\n", t.seed);
  s += fmt::format("training.alpha = {}\n", t.weights.alpha);
  s += fmt::format("training.beta = {}\n", t.weights.beta);
  s += fmt::format("training.flip = {}\n", t.flip);
  if (!data.root.empty()) s += fmt::format("data.root = {}\n", data.root.string());
  s += fmt::format("data.split = {}\n", data.split);
  s += fmt::format("output.dir = {}\n", output.dir.string());
  s += fmt::format("output.checkpoint_every = {}\n", output.checkpoint_every);
  s += fmt::format("output.log_every = {}\n", output.log_every);
  s += fmt::format("gradscan.epochs = {}\n", gradscan.epochs);
  s += fmt::format("gradscan.seeds = {}\n", join(gradscan.seeds, num));
  return s;
}

void RunConfig::apply_environment() {
  if (const char* env = std::getenv("MSGU_SEED"); env && *env) {
    training.seed = parse_number<std::uint64_t>("MSGU_SEED", trim(env));
  }
}

}  // namespace msgu
