#include "astg/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "astg/error.hpp"

namespace astg::ad {

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t.tensor;
  }
  return nullptr;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path);
  if (!out) throw LoadError("checkpoint: cannot open '" + path.string() + "' for writing");
  out << "astg-checkpoint\nformat_version " << kCheckpointFormatVersion << '\n';
  for (const auto& [key, value] : checkpoint.meta) out << "meta " << key << ' ' << value << '\n';
  char buf[32];
  for (const auto& [name, tensor] : checkpoint.tensors) {
    out << "tensor " << name << ' ' << tensor.rows() << ' ' << tensor.cols() << '\n';
    std::size_t i = 0;
    for (double v : tensor.values()) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << buf << (++i % 8 == 0 || i == tensor.size() ? '\n' : ' ');
    }
  }
  out << "end\n";
  if (!out) throw LoadError("checkpoint: write to '" + path.string() + "' failed");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("checkpoint: cannot open '" + path.string() + "'");
  auto fail = [&](const std::string& why) -> LoadError {
    return LoadError("checkpoint '" + path.string() + "': " + why);
  };

  std::string line;
  if (!std::getline(in, line) || line != "astg-checkpoint") throw fail("missing header");
  int version = 0;
  {
    std::string key;
    if (!std::getline(in, line)) throw fail("missing format_version");
    std::istringstream ls(line);
    if (!(ls >> key >> version) || key != "format_version") throw fail("missing format_version");
    if (version != kCheckpointFormatVersion) {
      throw fail("unsupported format_version " + std::to_string(version));
    }
  }

  Checkpoint cp;
  std::string word;
  while (in >> word) {
    if (word == "end") return cp;
    if (word == "meta") {
      std::string key;
      in >> key;
      std::getline(in, line);
      if (!line.empty() && line.front() == ' ') line.erase(0, 1);
      cp.meta[key] = line;
    } else if (word == "tensor") {
      std::string name;
      std::size_t rows = 0, cols = 0;
      if (!(in >> name >> rows >> cols)) throw fail("bad tensor header");
      std::vector<double> values(rows * cols);
      for (auto& v : values) {
        std::string token;
        if (!(in >> token)) throw fail("truncated tensor '" + name + "'");
        try {
          std::size_t used = 0;
          v = std::stod(token, &used);
          if (used != token.size()) throw std::invalid_argument(token);
        } catch (const std::exception&) {
          throw fail("bad value '" + token + "' in tensor '" + name + "'");
        }
      }
      cp.tensors.push_back({name, Tensor::from({rows, cols}, std::move(values))});
    } else {
      throw fail("unexpected token '" + word + "'");
    }
  }
  throw fail("missing end marker");
}

}  // namespace astg::ad
