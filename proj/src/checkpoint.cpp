#include "hsigan/checkpoint.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include "hsigan/errors.hpp"

namespace hsigan {

void save_checkpoint(const ParamSet& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("save_checkpoint: cannot open " + path + " for writing");
  out << "HSICKPT1 " << params.size() << "\n";
  for (int i = 0; i < params.size(); ++i) {
    out << params.names[static_cast<std::size_t>(i)] << " " << params[i].rank();
    for (int d : params[i].shape()) out << " " << d;
    out << "\n";
  }
  std::vector<float> buf;
  for (int i = 0; i < params.size(); ++i) {
    const Tensor& t = params[i];
    buf.resize(static_cast<std::size_t>(t.numel()));
    for (std::int64_t j = 0; j < t.numel(); ++j)
      buf[static_cast<std::size_t>(j)] = static_cast<float>(t[j]);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * 4));
  }
  if (!out) throw DataError("save_checkpoint: write failed for " + path);
}

void load_checkpoint(ParamSet& params, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("load_checkpoint: cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw DataError("load_checkpoint: empty file " + path);
  std::istringstream hdr(line);
  std::string magic;
  int count = 0;
  if (!(hdr >> magic >> count) || magic != "HSICKPT1")
    throw DataError("load_checkpoint: bad magic in " + path);
  if (count != params.size())
    throw ShapeError("load_checkpoint: checkpoint has " + std::to_string(count) +
                     " parameters, model expects " + std::to_string(params.size()));

  for (int i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw DataError("load_checkpoint: truncated manifest");
    std::istringstream row(line);
    std::string name;
    int rank = 0;
    if (!(row >> name >> rank)) throw DataError("load_checkpoint: malformed manifest line");
    std::vector<int> shape(static_cast<std::size_t>(rank));
    for (int d = 0; d < rank; ++d)
      if (!(row >> shape[static_cast<std::size_t>(d)]))
        throw DataError("load_checkpoint: malformed shape");
    if (name != params.names[static_cast<std::size_t>(i)] || shape != params[i].shape())
      throw ShapeError("load_checkpoint: entry " + std::to_string(i) + " is " + name + " " +
                       Tensor::shape_str(shape) + ", model expects " +
                       params.names[static_cast<std::size_t>(i)] + " " + params[i].shape_str());
  }

  std::vector<float> buf;
  for (int i = 0; i < count; ++i) {
    Tensor& t = params[i];
    buf.resize(static_cast<std::size_t>(t.numel()));
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
    if (in.gcount() != static_cast<std::streamsize>(buf.size() * 4))
      throw DataError("load_checkpoint: truncated payload in " + path);
    for (std::int64_t j = 0; j < t.numel(); ++j)
      t[j] = static_cast<double>(buf[static_cast<std::size_t>(j)]);
  }
}

}  // namespace hsigan
