#include "metaworld/io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "metaworld/errors.hpp"

namespace metaworld::io {

static_assert(std::endian::native == std::endian::little,
              "snapshot container assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'M', 'W', 'S', 'N', 'A', 'P', '0', '1'};
constexpr std::uint32_t kWavefunctionKind = 0;
constexpr std::uint32_t kEnsembleKind = 1;

template <class T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw Error("snapshot container truncated");
  return value;
}

std::ofstream open_out(const std::filesystem::path& path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

void put_header(std::ostream& out, std::uint32_t kind, const Grid& g) {
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kind);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(g.dims()));
  for (std::size_t d = 0; d < g.dims(); ++d) {
    put<std::uint64_t>(out, g.points(d));
    put<double>(out, g.extent(d).lo);
    put<double>(out, g.extent(d).hi);
  }
}

Grid get_header(std::istream& in, std::uint32_t expected_kind) {
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw Error("not a snapshot container (bad magic)");
  }
  if (get<std::uint32_t>(in) != expected_kind) throw Error("snapshot container has the wrong kind");
  const auto dims = get<std::uint32_t>(in);
  if (dims == 0 || dims > 16) throw Error("snapshot container has an invalid dimension count");
  std::vector<Interval> extent(dims);
  std::vector<std::size_t> points(dims);
  for (std::uint32_t d = 0; d < dims; ++d) {
    points[d] = get<std::uint64_t>(in);
    extent[d].lo = get<double>(in);
    extent[d].hi = get<double>(in);
  }
  return Grid(std::move(extent), std::move(points));
}

}  // namespace

void write_wavefunction(const std::filesystem::path& path, const Wavefunction& psi) {
  auto out = open_out(path, true);
  put_header(out, kWavefunctionKind, psi.grid());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(psi.components()));
  put<double>(out, psi.time());
  const auto v = psi.values();
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(cplx)));
  if (!out) throw Error("failed writing " + path.string());
}

Wavefunction read_wavefunction(const std::filesystem::path& path) {
  auto in = open_in(path);
  Grid g = get_header(in, kWavefunctionKind);
  const auto components = get<std::uint32_t>(in);
  const double time = get<double>(in);
  if (components != 1 && components != 2) throw Error("snapshot has an invalid component count");
  std::vector<cplx> values(components * g.size());
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(cplx)));
  if (!in) throw Error("snapshot payload truncated: " + path.string());
  return Wavefunction(std::move(g), components, std::move(values), time);
}

void write_ensemble(const std::filesystem::path& path, const WorldEnsemble& e, const Grid& grid) {
  if (e.dims != grid.dims()) throw InvalidArgument("write_ensemble: dimension mismatch");
  auto out = open_out(path, true);
  put_header(out, kEnsembleKind, grid);
  put<std::uint64_t>(out, e.size());
  put<double>(out, e.time);
  put<double>(out, e.birth_time);
  put<std::uint64_t>(out, e.seed);
  out.write(reinterpret_cast<const char*>(e.ids.data()),
            static_cast<std::streamsize>(e.ids.size() * sizeof(std::uint64_t)));
  out.write(reinterpret_cast<const char*>(e.alive.data()), static_cast<std::streamsize>(e.alive.size()));
  out.write(reinterpret_cast<const char*>(e.positions.data()),
            static_cast<std::streamsize>(e.positions.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(e.unwrapped.data()),
            static_cast<std::streamsize>(e.unwrapped.size() * sizeof(double)));
  if (!out) throw Error("failed writing " + path.string());
}

WorldEnsemble read_ensemble(const std::filesystem::path& path, Grid* grid) {
  auto in = open_in(path);
  Grid g = get_header(in, kEnsembleKind);
  WorldEnsemble e;
  e.dims = g.dims();
  const auto count = get<std::uint64_t>(in);
  e.time = get<double>(in);
  e.birth_time = get<double>(in);
  e.seed = get<std::uint64_t>(in);
  e.ids.resize(count);
  e.alive.resize(count);
  e.positions.resize(count * e.dims);
  e.unwrapped.resize(count * e.dims);
  in.read(reinterpret_cast<char*>(e.ids.data()), static_cast<std::streamsize>(count * sizeof(std::uint64_t)));
  in.read(reinterpret_cast<char*>(e.alive.data()), static_cast<std::streamsize>(count));
  in.read(reinterpret_cast<char*>(e.positions.data()),
          static_cast<std::streamsize>(e.positions.size() * sizeof(double)));
  in.read(reinterpret_cast<char*>(e.unwrapped.data()),
          static_cast<std::streamsize>(e.unwrapped.size() * sizeof(double)));
  if (!in) throw Error("ensemble payload truncated: " + path.string());
  if (grid != nullptr) *grid = g;
  return e;
}

std::string format_number(double value) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) throw Error("number formatting failed");
  return std::string(buf, end);
}

void write_wavefunction_csv(const std::filesystem::path& path, const Wavefunction& psi) {
  auto out = open_out(path, false);
  const Grid& g = psi.grid();
  for (std::size_t d = 0; d < g.dims(); ++d) out << "q_" << d + 1 << ',';
  for (std::size_t c = 0; c < psi.components(); ++c) {
    out << "re_" << c << ",im_" << c << (c + 1 < psi.components() ? "," : "\n");
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t d = 0; d < g.dims(); ++d) out << format_number(g.coordinate(i, d)) << ',';
    for (std::size_t c = 0; c < psi.components(); ++c) {
      const cplx v = psi.component(c)[i];
      out << format_number(v.real()) << ',' << format_number(v.imag())
          << (c + 1 < psi.components() ? "," : "\n");
    }
  }
}

void write_evolution_log_csv(const std::filesystem::path& path, const EvolutionLog& log) {
  auto out = open_out(path, false);
  out << "time,norm,edge_mass,continuity_summary\n";
  for (std::size_t i = 0; i < log.times.size(); ++i) {
    out << format_number(log.times[i]) << ',' << format_number(log.norms[i]) << ','
        << format_number(log.edge_masses[i]) << ',' << format_number(log.continuity[i]) << '\n';
  }
}

void write_trajectories_csv(const std::filesystem::path& path, const TrajectoryRecord& record,
                            const WorldEnsemble& ensemble, const TrajectoryCsvOptions& options) {
  auto out = open_out(path, false);
  const std::size_t dims = ensemble.dims;
  out << "world_id,t";
  for (std::size_t d = 0; d < dims; ++d) out << ",q_" << d + 1;
  out << ",alive\n";
  const std::size_t worlds =
      options.max_worlds == 0 ? ensemble.size() : std::min(options.max_worlds, ensemble.size());
  const std::size_t stride = std::max<std::size_t>(1, options.time_stride);
  const std::size_t last = record.times.size() - 1;
  for (std::size_t t = 0; t < record.times.size(); ++t) {
    if (t % stride != 0 && t != last) continue;
    const auto& pos = options.unwrapped ? record.unwrapped[t] : record.positions[t];
    for (std::size_t w = 0; w < worlds; ++w) {
      out << ensemble.ids[w] << ',' << format_number(record.times[t]);
      for (std::size_t d = 0; d < dims; ++d) out << ',' << format_number(pos[w * dims + d]);
      out << ',' << static_cast<int>(record.alive[t][w]) << '\n';
    }
  }
}

void write_field_csv(const std::filesystem::path& path, const RealField& field,
                     const std::string& value_name) {
  auto out = open_out(path, false);
  const Grid& g = field.grid;
  for (std::size_t d = 0; d < g.dims(); ++d) out << "x_" << d + 1 << ',';
  out << value_name << '\n';
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t d = 0; d < g.dims(); ++d) out << format_number(g.coordinate(i, d)) << ',';
    out << format_number(field.values[i]) << '\n';
  }
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw Error("CSV column '" + name + "' not found");
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line) || line.empty()) throw Error("empty CSV: " + path.string());
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) table.header.push_back(cell);
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
        throw Error(path.string() + ":" + std::to_string(line_no) + ": malformed number '" + cell + "'");
      }
      row.push_back(v);
    }
    if (row.size() != table.header.size()) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": wrong column count");
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace metaworld::io
