#include "trl/core/embeddings.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "trl/error.hpp"

namespace trl::core {

EmbeddingTable::EmbeddingTable(std::size_t rows, std::size_t dim) : rows_(rows), dim_(dim), data_(rows * dim, 0.0) {}

void EmbeddingTable::normalize() {
  for (std::size_t i = 0; i < rows_; ++i) {
    auto r = row(i);
    if (i == kPad) {
      std::fill(r.begin(), r.end(), 0.0);
      continue;
    }
    double norm = 0.0;
    for (double v : r) norm += v * v;
    norm = std::sqrt(norm);
    if (norm == 0.0) throw Error("cannot normalize zero embedding row " + std::to_string(i));
    for (double& v : r) v /= norm;
  }
  normalized_ = true;
}

EmbeddingTable parse_embeddings(std::istream& in, const Vocabulary& vocab, bool normalize, std::uint64_t seed) {
  std::vector<std::vector<double>> rows(vocab.size());
  std::size_t dim = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(' ') == std::string::npos) continue;
    std::istringstream fields(line);
    std::string word;
    fields >> word;
    std::vector<double> values;
    std::string tok;
    while (fields >> tok) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw Error("embedding line " + std::to_string(line_no) + ": malformed value '" + tok + "'");
      }
      if (!std::isfinite(values.back()))
        throw Error("embedding line " + std::to_string(line_no) + ": non-finite value");
    }
    if (values.empty()) throw Error("embedding line " + std::to_string(line_no) + ": no values");
    if (dim == 0) dim = values.size();
    if (values.size() != dim)
      throw Error("embedding line " + std::to_string(line_no) + ": dimension " + std::to_string(values.size()) +
                  " differs from " + std::to_string(dim));
    if (auto id = vocab.find(word); id && *id != kPad) rows[*id] = std::move(values);
  }
  if (dim == 0) throw Error("embedding file has no entries");

  EmbeddingTable table(vocab.size(), dim);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    auto r = table.row(i);
    if (i == kPad) continue;
    if (!rows[i].empty()) {
      std::copy(rows[i].begin(), rows[i].end(), r.begin());
    } else {
      for (double& v : r) v = gauss(rng);
    }
  }
  if (normalize) table.normalize();
  return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path, const Vocabulary& vocab, bool normalize,
                               std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embeddings " + path.string());
  return parse_embeddings(in, vocab, normalize, seed);
}

void write_embeddings(const EmbeddingTable& table, const Vocabulary& vocab, std::ostream& out) {
  std::ostringstream buf;
  buf.precision(17);
  for (std::size_t i = 0; i < table.rows(); ++i) {
    if (i == kPad) continue;
    buf << vocab.token_of(static_cast<TokenId>(i));
    for (double v : table.row(i)) buf << ' ' << v;
    buf << '\n';
  }
  out << buf.str();
}

void save_embeddings(const EmbeddingTable& table, const Vocabulary& vocab, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_embeddings(table, vocab, out);
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

}  // namespace trl::core
