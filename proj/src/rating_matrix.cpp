#include "chiron/rating_matrix.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include "chiron/rng.hpp"

namespace chiron {

RatingScale RatingScale::make(int min_rating, int max_rating) {
  if (min_rating >= max_rating) {
    throw std::invalid_argument("rating scale needs min_rating < max_rating, got " +
                                std::to_string(min_rating) + ".." + std::to_string(max_rating));
  }
  return RatingScale{min_rating, max_rating};
}

double RatingScale::clamp(double value) const {
  return std::clamp(value, static_cast<double>(min_rating), static_cast<double>(max_rating));
}

ParseError::ParseError(std::string path, std::size_t line, const std::string& what)
    : DataError(path + ":" + std::to_string(line) + ": " + what), line_(line) {}

namespace {

template <class Key>
void build_index(int count, std::span<const Triple> triples, Key key_of,
                 std::vector<std::size_t>& offsets, std::vector<Cell>& cells) {
  offsets.assign(static_cast<std::size_t>(count) + 1, 0);
  for (const Triple& t : triples) ++offsets[static_cast<std::size_t>(key_of(t).first) + 1];
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  cells.resize(triples.size());
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  // triples are sorted by (user, item) so both indices come out sorted by the other axis
  for (const Triple& t : triples) {
    auto [row, other] = key_of(t);
    cells[cursor[static_cast<std::size_t>(row)]++] = Cell{other, t.rating};
  }
}

std::vector<std::string> default_ids(int count) {
  std::vector<std::string> ids(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) ids[static_cast<std::size_t>(i)] = std::to_string(i);
  return ids;
}

}  // namespace

RatingMatrix RatingMatrix::from_triples(int users, int items, RatingScale scale,
                                        std::vector<Triple> triples,
                                        std::vector<std::string> user_ids,
                                        std::vector<std::string> item_ids) {
  if (users < 0 || items < 0) throw DataError("negative matrix dimensions");
  RatingScale::make(scale.min_rating, scale.max_rating);
  for (const Triple& t : triples) {
    if (t.user < 0 || t.user >= users || t.item < 0 || t.item >= items) {
      throw DataError("rating (" + std::to_string(t.user) + ", " + std::to_string(t.item) +
                      ") outside " + std::to_string(users) + "x" + std::to_string(items));
    }
    if (!scale.contains(t.rating)) {
      throw DataError("rating " + std::to_string(t.rating) + " outside scale " +
                      std::to_string(scale.min_rating) + ".." + std::to_string(scale.max_rating));
    }
  }
  std::sort(triples.begin(), triples.end(), [](const Triple& a, const Triple& b) {
    return a.user != b.user ? a.user < b.user : a.item < b.item;
  });
  auto dup = std::adjacent_find(triples.begin(), triples.end(), [](const Triple& a, const Triple& b) {
    return a.user == b.user && a.item == b.item;
  });
  if (dup != triples.end()) {
    throw DataError("duplicate rating for (user " + std::to_string(dup->user) + ", item " +
                    std::to_string(dup->item) + ")");
  }
  if (user_ids.empty()) user_ids = default_ids(users);
  if (item_ids.empty()) item_ids = default_ids(items);
  if (user_ids.size() != static_cast<std::size_t>(users) ||
      item_ids.size() != static_cast<std::size_t>(items)) {
    throw DataError("id map size does not match matrix dimensions");
  }

  RatingMatrix m;
  m.users_ = users;
  m.items_ = items;
  m.scale_ = scale;
  m.triples_ = std::move(triples);
  m.user_ids_ = std::move(user_ids);
  m.item_ids_ = std::move(item_ids);
  build_index(users, m.triples_, [](const Triple& t) { return std::pair{t.user, t.item}; },
              m.user_offsets_, m.user_cells_);
  build_index(items, m.triples_, [](const Triple& t) { return std::pair{t.item, t.user}; },
              m.item_offsets_, m.item_cells_);
  return m;
}

std::span<const Cell> RatingMatrix::by_user(int user) const {
  const auto u = static_cast<std::size_t>(user);
  return std::span(user_cells_).subspan(user_offsets_[u], user_offsets_[u + 1] - user_offsets_[u]);
}

std::span<const Cell> RatingMatrix::by_item(int item) const {
  const auto i = static_cast<std::size_t>(item);
  return std::span(item_cells_).subspan(item_offsets_[i], item_offsets_[i + 1] - item_offsets_[i]);
}

std::optional<int> RatingMatrix::rating(int user, int item) const {
  auto row = by_user(user);
  auto it = std::lower_bound(row.begin(), row.end(), item,
                             [](const Cell& c, int value) { return c.index < value; });
  if (it == row.end() || it->index != item) return std::nullopt;
  return it->rating;
}

RatingMatrix RatingMatrix::with_triples(std::vector<Triple> triples) const {
  return from_triples(users_, items_, scale_, std::move(triples), user_ids_, item_ids_);
}

FileFormat parse_file_format(const std::string& name) {
  if (name == "tsv" || name == "tab" || name == "tab-separated") return FileFormat::tab_separated;
  if (name == "csv" || name == "comma" || name == "comma-separated") return FileFormat::comma_separated;
  throw std::invalid_argument("unknown file format '" + name + "' (expected tsv or csv)");
}

char separator_of(FileFormat format) {
  return format == FileFormat::tab_separated ? '\t' : ',';
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    fields.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

RatingMatrix parse_ratings(const std::filesystem::path& path, FileFormat format, RatingScale scale) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open ratings file " + path.string());

  const char sep = separator_of(format);
  std::unordered_map<std::string, std::int32_t> user_index;
  std::unordered_map<std::string, std::int32_t> item_index;
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
  std::vector<Triple> triples;
  std::unordered_map<std::uint64_t, std::size_t> first_line;

  auto intern = [](std::unordered_map<std::string, std::int32_t>& index,
                   std::vector<std::string>& ids, std::string_view key) {
    auto [it, inserted] = index.try_emplace(std::string(key), static_cast<std::int32_t>(ids.size()));
    if (inserted) ids.emplace_back(key);
    return it->second;
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    auto fields = split_fields(view, sep);
    if (fields.size() < 3 || fields.size() > 4) {
      throw ParseError(path.string(), line_no,
                       "expected 3 or 4 fields, found " + std::to_string(fields.size()));
    }
    auto user = trim(fields[0]);
    auto item = trim(fields[1]);
    auto rating_text = trim(fields[2]);
    if (user.empty() || item.empty()) throw ParseError(path.string(), line_no, "empty id field");
    int rating = 0;
    auto [ptr, ec] = std::from_chars(rating_text.data(), rating_text.data() + rating_text.size(), rating);
    if (ec != std::errc() || ptr != rating_text.data() + rating_text.size()) {
      throw ParseError(path.string(), line_no, "rating '" + std::string(rating_text) + "' is not an integer");
    }
    if (!scale.contains(rating)) {
      throw ParseError(path.string(), line_no,
                       "rating " + std::to_string(rating) + " outside scale " +
                           std::to_string(scale.min_rating) + ".." + std::to_string(scale.max_rating));
    }
    const Triple t{intern(user_index, user_ids, user), intern(item_index, item_ids, item), rating};
    const auto key = (static_cast<std::uint64_t>(t.user) << 32) | static_cast<std::uint32_t>(t.item);
    if (auto [it, inserted] = first_line.try_emplace(key, line_no); !inserted) {
      throw ParseError(path.string(), line_no,
                       "duplicate rating for user " + std::string(user) + ", item " + std::string(item) +
                           " (first seen on line " + std::to_string(it->second) + ")");
    }
    triples.push_back(t);
  }

  const int users = static_cast<int>(user_ids.size());
  const int items = static_cast<int>(item_ids.size());
  return RatingMatrix::from_triples(users, items, scale, std::move(triples), std::move(user_ids),
                                    std::move(item_ids));
}

void write_ratings(const std::filesystem::path& path, const RatingMatrix& ratings, FileFormat format) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  const char sep = separator_of(format);
  for (const Triple& t : ratings.triples()) {
    out << ratings.user_ids()[static_cast<std::size_t>(t.user)] << sep
        << ratings.item_ids()[static_cast<std::size_t>(t.item)] << sep << t.rating << '\n';
  }
}

void write_id_map(const std::filesystem::path& path, const std::vector<std::string>& ids) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (std::size_t i = 0; i < ids.size(); ++i) out << ids[i] << '\t' << i << '\n';
}

std::array<std::size_t, 3> split_sizes(std::size_t total, const SplitFractions& fractions) {
  const std::array<double, 3> f{fractions.train, fractions.validation, fractions.test};
  for (double x : f) {
    if (!(x >= 0.0)) throw std::invalid_argument("split fractions must be nonnegative");
  }
  if (std::abs(f[0] + f[1] + f[2] - 1.0) > 1e-9) {
    throw std::invalid_argument("split fractions must sum to 1");
  }
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double exact = f[k] * static_cast<double>(total);
    sizes[k] = static_cast<std::size_t>(std::floor(exact));
    remainder[k] = exact - static_cast<double>(sizes[k]);
    assigned += sizes[k];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < total; k = (k + 1) % 3, ++assigned) ++sizes[order[k]];
  return sizes;
}

DatasetSplit split(const RatingMatrix& ratings, const SplitFractions& fractions, std::uint64_t seed) {
  if (ratings.empty()) throw DataError("cannot split an empty rating matrix");
  const auto sizes = split_sizes(ratings.entries(), fractions);

  std::vector<Triple> shuffled(ratings.triples().begin(), ratings.triples().end());
  Rng rng(seed);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);

  auto first = shuffled.begin();
  auto take = [&](std::size_t count) {
    std::vector<Triple> part(first, first + static_cast<std::ptrdiff_t>(count));
    first += static_cast<std::ptrdiff_t>(count);
    return ratings.with_triples(std::move(part));
  };
  DatasetSplit out;
  out.train = take(sizes[0]);
  out.validation = take(sizes[1]);
  out.test = take(sizes[2]);
  out.seed = seed;
  return out;
}

std::optional<double> item_mean(const RatingMatrix& ratings, int item) {
  auto cells = ratings.by_item(item);
  if (cells.empty()) return std::nullopt;
  double sum = 0.0;
  for (const Cell& c : cells) sum += c.rating;
  return sum / static_cast<double>(cells.size());
}

std::optional<double> user_mean(const RatingMatrix& ratings, int user) {
  auto cells = ratings.by_user(user);
  if (cells.empty()) return std::nullopt;
  double sum = 0.0;
  for (const Cell& c : cells) sum += c.rating;
  return sum / static_cast<double>(cells.size());
}

double global_mean(const RatingMatrix& ratings) {
  if (ratings.empty()) throw DataError("global mean of an empty rating matrix");
  double sum = 0.0;
  for (const Triple& t : ratings.triples()) sum += t.rating;
  return sum / static_cast<double>(ratings.entries());
}

}  // namespace chiron
