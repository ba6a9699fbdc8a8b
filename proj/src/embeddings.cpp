#include "embeddings.hpp"

#include <cstdlib>
#include <fstream>

namespace protoforge {

LoadedEmbeddings load_embeddings(const std::string& path, Rng& rng) {
  std::ifstream in(path);
  if (!in) throw DataError("load_embeddings: cannot open " + path);

  LoadedEmbeddings out;
  std::vector<std::vector<double>> rows;
  std::string line;
  int d_w = -1;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split_ws(line);
    if (fields.size() < 2)
      throw ParseError(strfmt("%s:%d: expected `token v1 .. v_dw`", path.c_str(), line_no));
    if (d_w < 0) d_w = static_cast<int>(fields.size()) - 1;
    if (static_cast<int>(fields.size()) - 1 != d_w)
      throw ParseError(strfmt("%s:%d: expected %d values, got %d", path.c_str(), line_no, d_w,
                              static_cast<int>(fields.size()) - 1));
    std::string token = lowercase(fields[0]);
    if (out.vocab.contains(token)) continue;  // first occurrence wins
    std::vector<double> vec(d_w);
    for (int i = 0; i < d_w; ++i) {
      char* end = nullptr;
      vec[i] = std::strtod(fields[i + 1].c_str(), &end);
      if (end == fields[i + 1].c_str() || *end != '\0')
        throw ParseError(strfmt("%s:%d: bad number `%s`", path.c_str(), line_no,
                                fields[i + 1].c_str()));
    }
    out.vocab.add_token(token);
    rows.push_back(std::move(vec));
  }
  if (d_w < 0) throw ParseError("load_embeddings: empty file " + path);

  out.table.rows = out.vocab.size();
  out.table.cols = d_w;
  out.table.values.assign(static_cast<size_t>(out.table.rows) * d_w, 0.0);
  // PAD row stays zero; UNK row small random so unseen tokens share one vector
  const double range = 0.5 / d_w;
  for (int j = 0; j < d_w; ++j)
    out.table.row(Vocabulary::kUnk)[j] = rng.uniform_real(-range, range);
  for (size_t i = 0; i < rows.size(); ++i) {
    double* dst = out.table.row(static_cast<int>(i) + 2);
    for (int j = 0; j < d_w; ++j) dst[j] = rows[i][j];
  }
  return out;
}

}  // namespace protoforge
