#include "lkl/grid_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "lkl/error.hpp"

namespace lkl {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

namespace {

constexpr char kDensityMagic[8] = {'L', 'K', 'L', 'G', 'R', 'D', '0', '1'};
constexpr char kEnsembleMagic[8] = {'L', 'K', 'L', 'P', 'R', 'T', '0', '1'};
constexpr const char* kDensityBanner = "# lkl grid density v1";
constexpr const char* kEnsembleBanner = "# lkl particle ensemble v1";

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw InvalidArgument("binary read: unexpected end of stream");
  }
  return v;
}

void expect_magic(std::istream& is, const char (&magic)[8]) {
  char buf[8];
  if (!is.read(buf, 8) || std::memcmp(buf, magic, 8) != 0) {
    throw InvalidArgument("binary read: bad magic header");
  }
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

class CsvReader {
 public:
  explicit CsvReader(std::istream& is) : is_(is) {}

  std::vector<std::string> row() {
    std::string line;
    if (!std::getline(is_, line)) {
      throw InvalidArgument("csv read: unexpected end of input");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return split(line);
  }

  std::vector<std::string> keyed(const std::string& key, std::size_t fields) {
    auto r = row();
    if (r.size() != fields + 1 || r[0] != key) {
      throw InvalidArgument("csv read: expected '" + key + "' row");
    }
    return r;
  }

  void banner(const char* expected) {
    std::string line;
    if (!std::getline(is_, line) || line.rfind(expected, 0) != 0) {
      throw InvalidArgument(std::string("csv read: missing banner '") +
                            expected + "'");
    }
  }

 private:
  std::istream& is_;
};

double to_double(const std::string& s) {
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw InvalidArgument("csv read: bad number '" + s + "'");
  return v;
}

std::uint64_t to_u64(const std::string& s) {
  std::size_t pos = 0;
  const auto v = std::stoull(s, &pos);
  if (pos != s.size()) throw InvalidArgument("csv read: bad integer '" + s + "'");
  return v;
}

struct PrecisionGuard {
  explicit PrecisionGuard(std::ostream& os) : os_(os), old_(os.precision(17)) {}
  ~PrecisionGuard() { os_.precision(old_); }
  std::ostream& os_;
  std::streamsize old_;
};

}  // namespace

void write_density_csv(std::ostream& os, const GridDensity& q) {
  PrecisionGuard guard(os);
  os << kDensityBanner << '\n';
  os << "dimension," << q.grid.dimension() << '\n';
  for (const auto& a : q.grid.axes()) {
    os << "axis," << a.lo << ',' << a.hi << ',' << a.cells << '\n';
  }
  os << "time," << q.time << '\n';
  os << "values," << q.values.size() << '\n';
  for (double v : q.values) os << v << '\n';
}

void write_density_binary(std::ostream& os, const GridDensity& q) {
  os.write(kDensityMagic, 8);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(q.grid.dimension()));
  for (const auto& a : q.grid.axes()) {
    put<double>(os, a.lo);
    put<double>(os, a.hi);
    put<std::uint64_t>(os, a.cells);
  }
  put<double>(os, q.time);
  put<std::uint64_t>(os, q.values.size());
  os.write(reinterpret_cast<const char*>(q.values.data()),
           static_cast<std::streamsize>(q.values.size() * sizeof(double)));
}

GridDensity read_density_csv(std::istream& is) {
  CsvReader in(is);
  in.banner(kDensityBanner);
  const auto d = to_u64(in.keyed("dimension", 1)[1]);
  std::vector<Axis> axes;
  for (std::uint64_t k = 0; k < d; ++k) {
    const auto r = in.keyed("axis", 3);
    axes.push_back(Axis{to_double(r[1]), to_double(r[2]), to_u64(r[3])});
  }
  const double t = to_double(in.keyed("time", 1)[1]);
  const auto count = to_u64(in.keyed("values", 1)[1]);
  Grid grid(std::move(axes), static_cast<std::size_t>(count));
  std::vector<double> values;
  values.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto r = in.row();
    if (r.size() != 1) throw InvalidArgument("csv read: expected one value per row");
    values.push_back(to_double(r[0]));
  }
  return GridDensity(std::move(grid), std::move(values), t);
}

GridDensity read_density_binary(std::istream& is) {
  expect_magic(is, kDensityMagic);
  const auto d = get<std::uint32_t>(is);
  if (d == 0 || d > 2) throw InvalidArgument("binary read: bad dimension");
  std::vector<Axis> axes;
  for (std::uint32_t k = 0; k < d; ++k) {
    const double lo = get<double>(is);
    const double hi = get<double>(is);
    const auto cells = get<std::uint64_t>(is);
    axes.push_back(Axis{lo, hi, static_cast<std::size_t>(cells)});
  }
  const double t = get<double>(is);
  const auto count = get<std::uint64_t>(is);
  Grid grid(std::move(axes), static_cast<std::size_t>(count));
  std::vector<double> values(count);
  if (!is.read(reinterpret_cast<char*>(values.data()),
               static_cast<std::streamsize>(count * sizeof(double)))) {
    throw InvalidArgument("binary read: truncated values");
  }
  return GridDensity(std::move(grid), std::move(values), t);
}

void write_ensemble_csv(std::ostream& os, const ParticleEnsemble& e) {
  PrecisionGuard guard(os);
  os << kEnsembleBanner << '\n';
  os << "dimension," << e.dimension << '\n';
  os << "time," << e.time << '\n';
  os << "seed," << e.seed << '\n';
  os << "stream_base," << e.stream_base << '\n';
  os << "step," << e.step << '\n';
  os << "positions," << e.size() << '\n';
  for (std::size_t i = 0; i < e.size(); ++i) {
    const auto x = e.position(i);
    for (std::size_t k = 0; k < x.size(); ++k) os << (k ? "," : "") << x[k];
    os << '\n';
  }
}

void write_ensemble_binary(std::ostream& os, const ParticleEnsemble& e) {
  os.write(kEnsembleMagic, 8);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(e.dimension));
  put<double>(os, e.time);
  put<std::uint64_t>(os, e.seed);
  put<std::uint64_t>(os, e.stream_base);
  put<std::uint64_t>(os, e.step);
  put<std::uint64_t>(os, e.size());
  os.write(reinterpret_cast<const char*>(e.positions.data()),
           static_cast<std::streamsize>(e.positions.size() * sizeof(double)));
}

ParticleEnsemble read_ensemble_csv(std::istream& is) {
  CsvReader in(is);
  in.banner(kEnsembleBanner);
  ParticleEnsemble e;
  e.dimension = to_u64(in.keyed("dimension", 1)[1]);
  if (e.dimension == 0) throw InvalidArgument("csv read: dimension must be >= 1");
  e.time = to_double(in.keyed("time", 1)[1]);
  e.seed = to_u64(in.keyed("seed", 1)[1]);
  e.stream_base = to_u64(in.keyed("stream_base", 1)[1]);
  e.step = to_u64(in.keyed("step", 1)[1]);
  const auto count = to_u64(in.keyed("positions", 1)[1]);
  e.positions.reserve(count * e.dimension);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto r = in.row();
    if (r.size() != e.dimension) {
      throw InvalidArgument("csv read: position row has wrong arity");
    }
    for (const auto& s : r) e.positions.push_back(to_double(s));
  }
  return e;
}

ParticleEnsemble read_ensemble_binary(std::istream& is) {
  expect_magic(is, kEnsembleMagic);
  ParticleEnsemble e;
  e.dimension = get<std::uint32_t>(is);
  if (e.dimension == 0) throw InvalidArgument("binary read: bad dimension");
  e.time = get<double>(is);
  e.seed = get<std::uint64_t>(is);
  e.stream_base = get<std::uint64_t>(is);
  e.step = get<std::uint64_t>(is);
  const auto count = get<std::uint64_t>(is);
  e.positions.resize(count * e.dimension);
  if (!is.read(reinterpret_cast<char*>(e.positions.data()),
               static_cast<std::streamsize>(e.positions.size() * sizeof(double)))) {
    throw InvalidArgument("binary read: truncated positions");
  }
  return e;
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::function<void(std::ostream&)>& writer,
                       bool binary) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, binary ? std::ios::binary | std::ios::trunc
                                 : std::ios::out | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp.string());
    writer(os);
    os.flush();
    if (!os) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace lkl
