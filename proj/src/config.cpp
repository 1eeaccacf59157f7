#include "mf/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "mf/error.hpp"

namespace mf {

void ModelConfig::validate() const {
  if (vocab_size == 0) throw ConfigError("config: vocab_size must be positive");
  if (d_model == 0 || num_heads == 0 || d_ff == 0)
    throw ConfigError("config: dimensions must be positive");
  if (d_model % num_heads != 0)
    throw ConfigError("config: d_model must be divisible by num_heads");
  if (encoder_layers == 0 || decoder_layers == 0)
    throw ConfigError("config: layer counts must be positive");
  if (max_sequence_length == 0) throw ConfigError("config: max_sequence_length must be positive");
  auto check_id = [&](int id, const char* name) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_size)
      throw ConfigError(std::string("config: ") + name + " outside vocabulary");
  };
  check_id(pad_id, "pad_id");
  check_id(bos_id, "bos_id");
  check_id(eos_id, "eos_id");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("config: dropout must be in [0,1)");
}

std::string ModelConfig::to_kv_text() const {
  std::ostringstream os;
  os << "vocab_size=" << vocab_size << "\n";
  os << "d_model=" << d_model << "\n";
  os << "num_heads=" << num_heads << "\n";
  os << "d_ff=" << d_ff << "\n";
  os << "encoder_layers=" << encoder_layers << "\n";
  os << "decoder_layers=" << decoder_layers << "\n";
  os << "max_sequence_length=" << max_sequence_length << "\n";
  os << "pad_id=" << pad_id << "\n";
  os << "bos_id=" << bos_id << "\n";
  os << "eos_id=" << eos_id << "\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", dropout);
  os << "dropout=" << buf << "\n";
  return os.str();
}

ModelConfig ModelConfig::from_kv_text(const std::string& text) {
  ModelConfig cfg;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config: malformed line: " + line);
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    try {
      if (key == "vocab_size") cfg.vocab_size = std::stoull(val);
      else if (key == "d_model") cfg.d_model = std::stoull(val);
      else if (key == "num_heads") cfg.num_heads = std::stoull(val);
      else if (key == "d_ff") cfg.d_ff = std::stoull(val);
      else if (key == "encoder_layers") cfg.encoder_layers = std::stoull(val);
      else if (key == "decoder_layers") cfg.decoder_layers = std::stoull(val);
      else if (key == "max_sequence_length") cfg.max_sequence_length = std::stoull(val);
      else if (key == "pad_id") cfg.pad_id = std::stoi(val);
      else if (key == "bos_id") cfg.bos_id = std::stoi(val);
      else if (key == "eos_id") cfg.eos_id = std::stoi(val);
      else if (key == "dropout") cfg.dropout = std::stod(val);
      else throw ConfigError("config: unknown key: " + key);
    } catch (const std::invalid_argument&) {
      throw ConfigError("config: bad value for " + key + ": " + val);
    }
  }
  return cfg;
}

void ModelConfig::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw DataError("config: cannot open for write: " + path);
  os << to_kv_text();
}

ModelConfig ModelConfig::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("config: cannot open: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return from_kv_text(buf.str());
}

}  // namespace mf
