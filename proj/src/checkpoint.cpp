#include "checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace protoforge {

namespace {

constexpr const char* kMagic = "protoforge-checkpoint v1";

template <typename T>
void write_params(std::ostream& os, const ParamStore<T>& params) {
  os << "params " << params.count() << "\n";
  for (const auto& p : params.entries())
    os << p.name << ' ' << p.value.rows() << ' ' << p.value.cols() << ' '
       << (p.trainable ? 1 : 0) << "\n";
  os << "blob\n";
  for (const auto& p : params.entries())
    os.write(reinterpret_cast<const char*>(p.value.data()),
             static_cast<std::streamsize>(p.value.size() * sizeof(T)));
}

template <typename T>
ParamStore<T> read_params(std::istream& is, const std::vector<std::array<std::string, 4>>& rows,
                          const std::string& path) {
  ParamStore<T> params;
  for (const auto& row : rows) {
    const int r = std::stoi(row[1]), c = std::stoi(row[2]);
    if (r < 0 || c < 0)
      throw CheckpointError(path + ": bad shape for parameter " + row[0]);
    Array2<T> value(r, c);
    is.read(reinterpret_cast<char*>(value.data()),
            static_cast<std::streamsize>(value.size() * sizeof(T)));
    if (static_cast<size_t>(is.gcount()) != value.size() * sizeof(T))
      throw CheckpointError(path + ": truncated blob while reading parameter " + row[0]);
    params.add(row[0], std::move(value), row[3] == "1");
  }
  char extra;
  if (is.read(&extra, 1))
    throw CheckpointError(path + ": trailing bytes after the last parameter");
  return params;
}

}  // namespace

void save_checkpoint(const CheckpointData& ckpt, const std::string& path) {
  if (ckpt.dtype != "f32" && ckpt.dtype != "f64")
    throw CheckpointError("save_checkpoint: dtype must be f32 or f64");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw CheckpointError("save_checkpoint: cannot write " + path);
  os << kMagic << "\n";
  os << "dtype " << ckpt.dtype << "\n";
  os << "episode " << ckpt.episode << "\n";
  os << strfmt("best_val_acc %.17g\n", ckpt.best_val_acc);
  os << "config " << ckpt.config.size() << "\n";
  for (const auto& [k, v] : ckpt.config) os << k << '=' << v << "\n";
  os << "rng " << ckpt.rng_states.size() << "\n";
  for (const auto& [k, v] : ckpt.rng_states) os << k << ' ' << v << "\n";
  if (ckpt.is_f64())
    write_params(os, ckpt.params_f64);
  else
    write_params(os, ckpt.params_f32);
  if (!os) throw CheckpointError("save_checkpoint: write failed for " + path);
}

CheckpointData load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("load_checkpoint: cannot open " + path);
  std::string line;

  auto next_line = [&](const char* what) {
    if (!std::getline(is, line))
      throw CheckpointError(strfmt("%s: unexpected end of header (%s)", path.c_str(), what));
    return line;
  };

  if (next_line("magic") != kMagic)
    throw CheckpointError(path + ": not a protoforge checkpoint");

  CheckpointData ckpt;
  {
    std::istringstream ss(next_line("dtype"));
    std::string key;
    ss >> key >> ckpt.dtype;
    if (key != "dtype" || (ckpt.dtype != "f32" && ckpt.dtype != "f64"))
      throw CheckpointError(path + ": bad dtype line");
  }
  {
    std::istringstream ss(next_line("episode"));
    std::string key;
    ss >> key >> ckpt.episode;
    if (key != "episode") throw CheckpointError(path + ": bad episode line");
  }
  {
    std::istringstream ss(next_line("best_val_acc"));
    std::string key;
    ss >> key >> ckpt.best_val_acc;
    if (key != "best_val_acc") throw CheckpointError(path + ": bad best_val_acc line");
  }
  {
    std::istringstream ss(next_line("config"));
    std::string key;
    size_t n = 0;
    ss >> key >> n;
    if (key != "config") throw CheckpointError(path + ": bad config line");
    for (size_t i = 0; i < n; ++i) {
      std::string kv = next_line("config entry");
      size_t eq = kv.find('=');
      if (eq == std::string::npos)
        throw CheckpointError(path + ": config entry without `=`: " + kv);
      ckpt.config[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
  }
  {
    std::istringstream ss(next_line("rng"));
    std::string key;
    size_t n = 0;
    ss >> key >> n;
    if (key != "rng") throw CheckpointError(path + ": bad rng line");
    for (size_t i = 0; i < n; ++i) {
      std::string entry = next_line("rng entry");
      size_t sp = entry.find(' ');
      if (sp == std::string::npos)
        throw CheckpointError(path + ": bad rng state line");
      ckpt.rng_states[entry.substr(0, sp)] = entry.substr(sp + 1);
    }
  }

  size_t n_params = 0;
  {
    std::istringstream ss(next_line("params"));
    std::string key;
    ss >> key >> n_params;
    if (key != "params") throw CheckpointError(path + ": bad params line");
  }
  std::vector<std::array<std::string, 4>> rows;
  for (size_t i = 0; i < n_params; ++i) {
    std::istringstream ss(next_line("param entry"));
    std::array<std::string, 4> row;
    if (!(ss >> row[0] >> row[1] >> row[2] >> row[3]))
      throw CheckpointError(path + ": bad parameter header line");
    rows.push_back(row);
  }
  if (next_line("blob marker") != "blob")
    throw CheckpointError(path + ": missing blob marker");

  if (ckpt.is_f64())
    ckpt.params_f64 = read_params<double>(is, rows, path);
  else
    ckpt.params_f32 = read_params<float>(is, rows, path);
  return ckpt;
}

}  // namespace protoforge
