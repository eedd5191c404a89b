#include "cellpol/field_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "cellpol/error.hpp"

namespace cellpol {

static_assert(std::endian::native == std::endian::little, "little-endian host assumed");

namespace {

void put_u32(std::ofstream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }

void put_f64(std::ofstream& os, const std::vector<double>& v) {
  os.write(reinterpret_cast<const char*>(v.data()), std::streamsize(v.size() * 8));
}

std::vector<char> slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

struct Reader {
  const std::vector<char>& buf;
  std::size_t pos = 0;
  const std::string& path;
  void need(std::size_t n) {
    if (pos + n > buf.size()) throw IoError(path + ": truncated file");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, buf.data() + pos, 4);
    pos += 4;
    return v;
  }
  std::vector<double> f64(std::size_t n) {
    need(n * 8);
    std::vector<double> v(n);
    std::memcpy(v.data(), buf.data() + pos, n * 8);
    pos += n * 8;
    return v;
  }
};

void check_magic(Reader& r, const char* magic) {
  r.need(4);
  if (std::memcmp(r.buf.data(), magic, 4) != 0) throw IoError(r.path + ": bad magic");
  r.pos = 4;
}

GridPtr grid_from_header(std::uint32_t L, std::uint32_t nlat, std::uint32_t nlon,
                         const std::string& path) {
  if (L < 1 || L > 512 || nlat < L + 1 || nlon < 2 * L + 1 || nlat > 4096 || nlon > 8192)
    throw IoError(path + ": inconsistent grid header");
  return SphereGrid::make(int(L), int(nlat), int(nlon));
}

}  // namespace

void write_psf1(const std::string& path, const SurfaceField& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path);
  os.write("PSF1", 4);
  put_u32(os, f.grid()->L());
  put_u32(os, f.grid()->nlat());
  put_u32(os, f.grid()->nlon());
  put_f64(os, f.values());
  put_f64(os, f.coeffs());
  if (!os) throw IoError("write failed: " + path);
}

SurfaceField read_psf1(const std::string& path) {
  auto buf = slurp(path);
  Reader r{buf, 0, path};
  check_magic(r, "PSF1");
  auto L = r.u32(), nlat = r.u32(), nlon = r.u32();
  auto grid = grid_from_header(L, nlat, nlon, path);
  auto values = r.f64(std::size_t(nlat) * nlon);
  auto coeffs = r.f64(std::size_t(grid->ncoeff()));
  if (r.pos != buf.size()) throw IoError(path + ": trailing bytes after coefficients");
  for (double v : values)
    if (!std::isfinite(v)) throw IoError(path + ": non-finite sample");
  SurfaceField f;
  try {
    f = SurfaceField::from_coeffs(grid, coeffs);
  } catch (const DomainError&) {
    throw IoError(path + ": non-finite coefficient");
  }
  double scale = 1.0, diff = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    scale = std::max(scale, std::abs(values[k]));
    diff = std::max(diff, std::abs(values[k] - f.values()[k]));
  }
  if (diff > 1e-9 * scale) throw IoError(path + ": values do not match coefficients");
  return f;
}

void write_pbf1(const std::string& path, const BulkField& w) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path);
  os.write("PBF1", 4);
  put_u32(os, w.grid()->L());
  put_u32(os, w.grid()->nlat());
  put_u32(os, w.grid()->nlon());
  put_u32(os, w.nr());
  put_f64(os, w.data());
  if (!os) throw IoError("write failed: " + path);
}

BulkField read_pbf1(const std::string& path) {
  auto buf = slurp(path);
  Reader r{buf, 0, path};
  check_magic(r, "PBF1");
  auto L = r.u32(), nlat = r.u32(), nlon = r.u32(), nr = r.u32();
  auto grid = grid_from_header(L, nlat, nlon, path);
  if (nr < 4 || nr > 100000) throw IoError(path + ": bad radial count");
  auto data = r.f64(std::size_t(grid->ncoeff()) * nr);
  if (r.pos != buf.size()) throw IoError(path + ": trailing bytes after profiles");
  for (double v : data)
    if (!std::isfinite(v)) throw IoError(path + ": non-finite profile value");
  return BulkField(grid, int(nr), std::move(data));
}

}  // namespace cellpol
