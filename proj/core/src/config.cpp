#include "muses/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <functional>
#include <map>

#include "muses/bundle_io.hpp"
#include "muses/error.hpp"

namespace muses {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad(std::string_view key, std::string_view why) {
  throw Error(Errc::ConfigError, "config '" + std::string(key) + "': " + std::string(why));
}

// Parses a quoted string starting at s[pos]; advances pos past the closing quote.
std::string quoted(std::string_view s, std::size_t& pos, std::string_view key) {
  std::string out;
  ++pos;
  while (pos < s.size() && s[pos] != '"') {
    char c = s[pos++];
    if (c == '\\') {
      if (pos >= s.size()) break;
      char e = s[pos++];
      switch (e) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        default: bad(key, "unknown escape");
      }
    } else {
      out.push_back(c);
    }
  }
  if (pos >= s.size()) bad(key, "unterminated string");
  ++pos;
  return out;
}

std::string as_string(std::string_view v, std::string_view key) {
  v = trim(v);
  if (!v.empty() && v.front() == '"') {
    std::size_t pos = 0;
    std::string out = quoted(v, pos, key);
    if (!trim(v.substr(pos)).empty()) bad(key, "trailing characters after string");
    return out;
  }
  if (v.empty()) bad(key, "empty value");
  return std::string(v);  // bare words are accepted for convenience on the command line
}

std::vector<std::string> as_list(std::string_view v, std::string_view key) {
  v = trim(v);
  if (v.empty() || v.front() != '[') return {as_string(v, key)};
  std::vector<std::string> out;
  std::size_t pos = 1;
  while (true) {
    while (pos < v.size() && (std::isspace(static_cast<unsigned char>(v[pos])) || v[pos] == ',')) ++pos;
    if (pos >= v.size()) bad(key, "unterminated array");
    if (v[pos] == ']') break;
    if (v[pos] != '"') bad(key, "array items must be quoted strings");
    out.push_back(quoted(v, pos, key));
  }
  if (!trim(v.substr(pos + 1)).empty()) bad(key, "trailing characters after array");
  return out;
}

double as_double(std::string_view v, std::string_view key) {
  v = trim(v);
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad(key, "expected a number");
  return out;
}

int as_int(std::string_view v, std::string_view key) {
  v = trim(v);
  int out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad(key, "expected an integer");
  return out;
}

BackendConfig* backend(PipelineConfig& cfg, std::string_view name) {
  if (name == "llm") return &cfg.llm;
  if (name == "gen3d") return &cfg.gen3d;
  if (name == "rig") return &cfg.rig;
  if (name == "imgedit") return &cfg.imgedit;
  if (name == "regen") return &cfg.regen;
  return nullptr;
}

}  // namespace

void PipelineConfig::validate() const {
  if (sources.empty()) throw Error(Errc::ConfigError, "at least one asset source is required");
  if (planner != "rule" && planner != "llm") throw Error(Errc::ConfigError, "planner must be 'rule' or 'llm'");
  for (const auto* b : {&llm, &gen3d, &rig, &imgedit, &regen}) b->validate();
  if (!(clean.prune_fraction >= 0.0 && clean.prune_fraction < 1.0)) {
    throw Error(Errc::ConfigError, "prune_fraction must lie in [0, 1)");
  }
  if (!(clean.collinear_tolerance_deg >= 0.0 && clean.collinear_tolerance_deg < 90.0)) {
    throw Error(Errc::ConfigError, "collinear_tolerance_deg must lie in [0, 90)");
  }
  if (!(classify.tail_center_fraction > 0.0) || !(classify.symmetry_fraction > 0.0)) {
    throw Error(Errc::ConfigError, "classification thresholds must be positive");
  }
  if (transfer.k < 1) throw Error(Errc::ConfigError, "k must be >= 1");
  if (!(transfer.distance_floor > 0.0)) throw Error(Errc::ConfigError, "distance_floor must be positive");
  if (compose.coarse_resolution < 1) throw Error(Errc::ConfigError, "coarse_resolution must be >= 1");
  if (compose.fill_passes < 0) throw Error(Errc::ConfigError, "fill_passes must be >= 0");
  if (output_dir.empty()) throw Error(Errc::ConfigError, "output directory is empty");
  if (preview_size < 8 || preview_size > 2048) throw Error(Errc::ConfigError, "preview_size must lie in [8, 2048]");
}

void apply_setting(PipelineConfig& cfg, std::string_view key, std::string_view value) {
  key = trim(key);
  auto dot = key.find('.');
  std::string_view section = dot == std::string_view::npos ? std::string_view() : key.substr(0, dot);
  std::string_view name = dot == std::string_view::npos ? key : key.substr(dot + 1);

  if (section.empty()) {
    if (name == "prompt") cfg.prompt = as_string(value, key);
    else if (name == "sources") cfg.sources = as_list(value, key);
    else if (name == "planner") cfg.planner = as_string(value, key);
    else if (name == "output") cfg.output_dir = as_string(value, key);
    else if (name == "style") cfg.style_prompt = as_string(value, key);
    else if (name == "negative") cfg.negative_prompt = as_string(value, key);
    else if (name == "preview_size") cfg.preview_size = as_int(value, key);
    else bad(key, "unknown key");
    return;
  }
  if (auto* b = backend(cfg, section)) {
    if (name == "endpoint") b->endpoint = as_string(value, key);
    else if (name == "api_key_env") b->api_key_env = as_string(value, key);
    else if (name == "timeout") b->timeout_s = as_double(value, key);
    else if (name == "guidance_scale") b->guidance_scale = as_double(value, key);
    else if (name == "sampling_steps") b->sampling_steps = as_int(value, key);
    else bad(key, "unknown backend key");
    return;
  }
  if (section == "classify") {
    if (name == "prune_fraction") cfg.clean.prune_fraction = as_double(value, key);
    else if (name == "collinear_tolerance_deg") cfg.clean.collinear_tolerance_deg = as_double(value, key);
    else if (name == "tail_center_fraction") cfg.classify.tail_center_fraction = as_double(value, key);
    else if (name == "symmetry_fraction") cfg.classify.symmetry_fraction = as_double(value, key);
    else bad(key, "unknown key");
    return;
  }
  if (section == "transfer") {
    if (name == "k") cfg.transfer.k = as_int(value, key);
    else if (name == "distance_floor") cfg.transfer.distance_floor = as_double(value, key);
    else bad(key, "unknown key");
    return;
  }
  if (section == "compose") {
    if (name == "coarse_resolution") cfg.compose.coarse_resolution = as_int(value, key);
    else if (name == "fill_passes") cfg.compose.fill_passes = as_int(value, key);
    else bad(key, "unknown key");
    return;
  }
  bad(key, "unknown section");
}

void apply_config_text(PipelineConfig& cfg, std::string_view text) {
  std::string section;
  int line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view() : text.substr(nl + 1);
    ++line_no;
    // Strip comments outside quotes.
    bool in_str = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_str = !in_str;
      if (line[i] == '#' && !in_str) {
        line = line.substr(0, i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(Errc::ConfigError, "line " + std::to_string(line_no) + ": bad section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(Errc::ConfigError, "line " + std::to_string(line_no) + ": expected key = value");
    std::string key(trim(line.substr(0, eq)));
    if (!section.empty()) key = section + "." + key;
    apply_setting(cfg, key, line.substr(eq + 1));
  }
}

void apply_environment(PipelineConfig& cfg) {
  auto env = [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
  };
  if (auto v = env("MUSES_LLM_ENDPOINT")) {
    cfg.llm.endpoint = *v;
    cfg.planner = "llm";
  }
  if (auto v = env("MUSES_GEN3D_ENDPOINT")) {
    cfg.gen3d.endpoint = *v;
    cfg.rig.endpoint = *v;
    cfg.regen.endpoint = *v;
  }
  if (auto v = env("MUSES_IMGEDIT_ENDPOINT")) cfg.imgedit.endpoint = *v;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  PipelineConfig cfg;
  apply_environment(cfg);
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw Error(Errc::ConfigError, e.what());
  }
  apply_config_text(cfg, text);
  return cfg;
}

}  // namespace muses
