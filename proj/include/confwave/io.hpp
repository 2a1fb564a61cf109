#pragma once

// Deterministic file output: CSV series and the raw little-endian binary
// field layout. Doubles are printed with std::to_chars (shortest
// round-trip form), so identical data always produces identical bytes.

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "confwave/diagnostics.hpp"
#include "confwave/errors.hpp"
#include "confwave/grid.hpp"

static_assert(std::endian::native == std::endian::little,
              "binary field layout assumes a little-endian host");

namespace confwave {

inline void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

inline std::string format_double(double v) {
  std::string s;
  append_double(s, v);
  return s;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::string header) { buf_ = std::move(header); buf_ += '\n'; }

  void begin_row() { first_ = true; }
  void cell(double v) {
    sep();
    append_double(buf_, v);
  }
  void cell(long v) {
    sep();
    buf_ += std::to_string(v);
  }
  void cell(const std::string& v) {
    sep();
    buf_ += v;
  }
  void end_row() { buf_ += '\n'; }

  void save(const std::filesystem::path& path) const {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + path.string());
    os.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!os) throw IoError("short write: " + path.string());
  }

  const std::string& str() const { return buf_; }

 private:
  void sep() {
    if (!first_) buf_ += ',';
    first_ = false;
  }
  std::string buf_;
  bool first_ = true;
};

// ---------------------------------------------------------------------------
// Field snapshots as CSV: columns t, r, phi, chi for selected stored levels.
// ---------------------------------------------------------------------------

inline void write_field_csv(const SpacetimeField& field,
                            const std::filesystem::path& path,
                            const std::vector<long>& levels) {
  CsvWriter csv("t,r,phi,chi");
  const double h = field.spec().h;
  for (long n : levels) {
    if (n < 0 || n >= field.stored_levels())
      throw DomainError("snapshot level out of range");
    const double t = field.time_of(n);
    const auto row = field.row(n);
    for (long j = 0; j < field.radial_nodes(); ++j) {
      const double r = field.radius(j);
      double phi;
      if (j == 0)
        phi = detail::axis_derivative(row[1], row[2], row[3], h);
      else
        phi = row[j] / r;
      csv.begin_row();
      csv.cell(t);
      csv.cell(r);
      csv.cell(phi);
      csv.cell(row[j]);
      csv.end_row();
    }
  }
  csv.save(path);
}

// ---------------------------------------------------------------------------
// Raw binary field layout (all 64-bit little-endian):
//   u64 stored_levels, u64 radial_nodes,
//   f64 t_start, t_end, r_max, h, lambda, p,
//   u64 kind (0 forward, 1 transformed), u64 time_stride,
//   payload: stored_levels x radial_nodes f64, time-major.
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u64(std::string& out, std::uint64_t v) {
  char b[8];
  std::memcpy(b, &v, 8);
  out.append(b, 8);
}

inline void put_f64(std::string& out, double v) {
  char b[8];
  std::memcpy(b, &v, 8);
  out.append(b, 8);
}

} // namespace detail

inline void write_field_binary(const SpacetimeField& field,
                               const std::filesystem::path& path) {
  std::string buf;
  buf.reserve(80 + field.values().size() * 8);
  detail::put_u64(buf, static_cast<std::uint64_t>(field.stored_levels()));
  detail::put_u64(buf, static_cast<std::uint64_t>(field.radial_nodes()));
  detail::put_f64(buf, field.spec().t_start);
  detail::put_f64(buf, field.spec().t_end);
  detail::put_f64(buf, field.spec().r_max);
  detail::put_f64(buf, field.spec().h);
  detail::put_f64(buf, field.spec().lambda);
  detail::put_f64(buf, field.p());
  detail::put_u64(buf, static_cast<std::uint64_t>(field.kind()));
  detail::put_u64(buf, static_cast<std::uint64_t>(field.time_stride()));
  const char* raw = reinterpret_cast<const char*>(field.values().data());
  buf.append(raw, field.values().size() * 8);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) throw IoError("short write: " + path.string());
}

inline SpacetimeField read_field_binary(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open for reading: " + path.string());
  auto get_u64 = [&is, &path]() {
    std::uint64_t v;
    char b[8];
    is.read(b, 8);
    if (!is) throw IoError("truncated field file: " + path.string());
    std::memcpy(&v, b, 8);
    return v;
  };
  auto get_f64 = [&is, &path]() {
    double v;
    char b[8];
    is.read(b, 8);
    if (!is) throw IoError("truncated field file: " + path.string());
    std::memcpy(&v, b, 8);
    return v;
  };
  const std::uint64_t nt = get_u64();
  const std::uint64_t nr = get_u64();
  GridSpec spec;
  spec.t_start = get_f64();
  spec.t_end = get_f64();
  spec.r_max = get_f64();
  spec.h = get_f64();
  spec.lambda = get_f64();
  const double p = get_f64();
  const std::uint64_t kind = get_u64();
  const std::uint64_t stride = get_u64();
  if (kind > 1) throw IoError("invalid field kind in " + path.string());
  SpacetimeField field(spec, p, static_cast<FieldKind>(kind),
                       static_cast<int>(stride));
  if (static_cast<std::uint64_t>(field.stored_levels()) != nt ||
      static_cast<std::uint64_t>(field.radial_nodes()) != nr)
    throw IoError("field header inconsistent with grid spec in " +
                  path.string());
  is.read(reinterpret_cast<char*>(field.values().data()),
          static_cast<std::streamsize>(field.values().size() * 8));
  if (!is) throw IoError("truncated field payload: " + path.string());
  return field;
}

// ---------------------------------------------------------------------------
// Series writers
// ---------------------------------------------------------------------------

inline void write_energy_csv(const std::vector<EnergyRecord>& records,
                             const std::filesystem::path& path) {
  CsvWriter csv("t,kinetic,gradient,potential,total");
  for (const auto& e : records) {
    csv.begin_row();
    csv.cell(e.t);
    csv.cell(e.kinetic);
    csv.cell(e.gradient);
    csv.cell(e.potential);
    csv.cell(e.total);
    csv.end_row();
  }
  csv.save(path);
}

inline void write_flux_csv(const std::vector<FluxRecord>& records,
                           const std::filesystem::path& path) {
  CsvWriter csv("t0,flux,e0,ratio,potential_part");
  for (const auto& f : records) {
    csv.begin_row();
    csv.cell(f.t0);
    csv.cell(f.flux);
    csv.cell(f.e0);
    csv.cell(f.ratio);
    csv.cell(f.potential_part);
    csv.end_row();
  }
  csv.save(path);
}

inline void write_series_csv(const std::vector<DiagnosticsSeries>& series,
                             const std::filesystem::path& path) {
  CsvWriter csv("t,value,kind");
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.t.size(); ++i) {
      csv.begin_row();
      csv.cell(s.t[i]);
      csv.cell(s.value[i]);
      csv.cell(s.kind);
      csv.end_row();
    }
  }
  csv.save(path);
}

inline void write_fits_csv(const std::vector<DecayFit>& fits,
                           const std::filesystem::path& path) {
  CsvWriter csv(
      "r_probe,t_lo,t_hi,exponent,amplitude,rms_residual,oscillation_flagged,"
      "points");
  for (const auto& f : fits) {
    csv.begin_row();
    csv.cell(f.r_probe);
    csv.cell(f.t_lo);
    csv.cell(f.t_hi);
    csv.cell(f.exponent);
    csv.cell(f.amplitude);
    csv.cell(f.rms_residual);
    csv.cell(std::string(f.oscillation_flagged ? "1" : "0"));
    csv.cell(f.points);
    csv.end_row();
  }
  csv.save(path);
}

} // namespace confwave
