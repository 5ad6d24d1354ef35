#include "chiron/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace chiron {
namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_block(std::ostream& out, char tag, const ProfileMatrix& m) {
  out << tag << ' ' << m.rows() << ' ' << m.levels() << '\n';
  for (int r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    for (std::size_t k = 0; k < row.size(); ++k) out << (k ? " " : "") << format_double(row[k]);
    out << '\n';
  }
}

ProfileMatrix read_block(std::istream& in, char tag, const std::string& path) {
  char got = 0;
  int rows = 0;
  int levels = 0;
  if (!(in >> got >> rows >> levels) || got != tag || rows < 0 || levels < 1) {
    throw DataError(path + ": malformed " + std::string(1, tag) + " block header");
  }
  ProfileMatrix m(rows, levels, 0.0);
  for (int r = 0; r < rows; ++r) {
    for (int k = 0; k < levels; ++k) {
      std::string token;
      if (!(in >> token)) throw DataError(path + ": truncated " + std::string(1, tag) + " block");
      m(r, k) = std::stod(token);
    }
  }
  return m;
}

template <class T>
T read_field(std::istream& in, const std::string& key, const std::string& path) {
  std::string got;
  T value{};
  if (!(in >> got >> value) || got != key) throw DataError(path + ": expected field '" + key + "'");
  return value;
}

}  // namespace

void save_model(const std::filesystem::path& path, const ChironModel& model) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "chiron-model 1\n";
  out << "scale " << model.scale.min_rating << ' ' << model.scale.max_rating << '\n';
  out << "lambda1 " << format_double(model.lambda1) << '\n';
  out << "reg_sign " << reg_sign_name(model.reg_sign) << '\n';
  out << "floor " << format_double(model.floor) << '\n';
  write_block(out, 'P', model.items);
  write_block(out, 'Q', model.users);
}

ChironModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file " + path.string());
  const std::string p = path.string();
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "chiron-model" || version != 1) {
    throw DataError(p + ": not a chiron-model v1 file");
  }
  ChironModel model;
  std::string key;
  int lo = 0;
  int hi = 0;
  if (!(in >> key >> lo >> hi) || key != "scale") throw DataError(p + ": expected field 'scale'");
  model.scale = RatingScale::make(lo, hi);
  model.lambda1 = std::stod(read_field<std::string>(in, "lambda1", p));
  model.reg_sign = parse_reg_sign(read_field<std::string>(in, "reg_sign", p));
  model.floor = std::stod(read_field<std::string>(in, "floor", p));
  model.items = read_block(in, 'P', p);
  model.users = read_block(in, 'Q', p);
  model.user_graph = SimilarityGraph::empty(Axis::users, model.users.rows());
  model.item_graph = SimilarityGraph::empty(Axis::items, model.items.rows());
  model.validate();
  return model;
}

}  // namespace chiron
