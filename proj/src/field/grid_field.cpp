#include "homog/field/grid_field.hpp"

#include "homog/field/potential.hpp"
#include "homog/util/errors.hpp"
#include "homog/util/parallel.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>

namespace homog {
namespace {

void check_shape(const GridShape& s) {
  if (s.dim < 1 || s.dim > 3) throw InvalidInput("grid: dimension must be 1, 2 or 3");
  if (s.n < 4 || !is_power_of_two(s.n)) throw InvalidInput("grid: resolution must be a power of two >= 4");
}

}  // namespace

std::size_t GridShape::size() const noexcept {
  std::size_t s = 1;
  for (int a = 0; a < dim; ++a) s *= static_cast<std::size_t>(n);
  return s;
}

std::size_t GridShape::stride(int axis) const noexcept {
  std::size_t s = 1;
  for (int a = dim - 1; a > axis; --a) s *= static_cast<std::size_t>(n);
  return s;
}

std::array<int, 3> GridShape::unflatten(std::size_t flat) const noexcept {
  std::array<int, 3> idx{0, 0, 0};
  for (int a = dim - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(flat % n);
    flat /= n;
  }
  return idx;
}

std::size_t GridShape::flatten(const std::array<int, 3>& idx) const noexcept {
  std::size_t flat = 0;
  for (int a = 0; a < dim; ++a) flat = flat * n + static_cast<std::size_t>(((idx[a] % n) + n) % n);
  return flat;
}

GridField::GridField(GridShape s, Eigen::VectorXd v) : shape(s), samples(std::move(v)) {
  check_shape(shape);
  if (static_cast<std::size_t>(samples.size()) != shape.size()) throw InvalidInput("grid: sample count mismatch");
  if (!samples.allFinite()) throw InvalidInput("grid: non-finite sample");
}

GridField::GridField(GridShape s) : shape(s) {
  check_shape(shape);
  samples = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(shape.size()));
}

GridField GridField::decimated(int factor) const {
  if (factor < 1 || shape.n % factor != 0) throw InvalidInput("grid: decimation factor must divide N");
  GridShape coarse{shape.dim, shape.n / factor};
  GridField out(coarse);
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    auto idx = coarse.unflatten(i);
    for (int a = 0; a < shape.dim; ++a) idx[a] *= factor;
    out.samples[static_cast<Eigen::Index>(i)] = samples[static_cast<Eigen::Index>(shape.flatten(idx))];
  }
  return out;
}

GridField GridField::shifted(const std::array<int, 3>& offset) const {
  GridField out(shape);
  periodic_roll(shape, samples.data(), offset, out.samples.data());
  return out;
}

void GridField::write(const std::string& stem) const {
  static_assert(std::endian::native == std::endian::little, "dump format is little-endian");
  std::ofstream bin(stem + ".f64", std::ios::binary);
  if (!bin) throw InvalidInput("grid: cannot write " + stem + ".f64");
  bin.write(reinterpret_cast<const char*>(samples.data()), static_cast<std::streamsize>(samples.size() * sizeof(double)));
  std::ofstream side(stem + ".json");
  side << nlohmann::json{{"d", shape.dim}, {"N", shape.n}, {"layout", "row-major"}}.dump() << "\n";
}

GridField GridField::read(const std::string& stem) {
  std::ifstream side(stem + ".json");
  if (!side) throw InvalidInput("grid: missing sidecar " + stem + ".json");
  nlohmann::json j;
  try {
    side >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("grid: bad sidecar: ") + e.what());
  }
  if (j.value("layout", "") != "row-major") throw InvalidInput("grid: unsupported layout");
  GridShape s{j.at("d").get<int>(), j.at("N").get<int>()};
  check_shape(s);
  Eigen::VectorXd v(static_cast<Eigen::Index>(s.size()));
  std::ifstream bin(stem + ".f64", std::ios::binary);
  bin.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (bin.gcount() != static_cast<std::streamsize>(v.size() * sizeof(double)))
    throw InvalidInput("grid: truncated sample file");
  return GridField(s, std::move(v));
}

bool is_power_of_two(long n) noexcept { return n > 0 && (n & (n - 1)) == 0; }

long next_power_of_two(long n) noexcept {
  long p = 1;
  while (p < n) p <<= 1;
  return p;
}

GridField sample_grid(const PotentialExpr& expr, int n) {
  return sample_grid(expr.dimension(), n, [&](const double* x) { return expr.evaluate(x, nullptr); });
}

GridField sample_grid(int dim, int n, const std::function<double(const double*)>& f) {
  GridShape shape{dim, n};
  GridField out(shape);
  const double h = shape.spacing();
  const std::size_t rows = shape.size() / n;
  // One task per row of the last axis keeps per-task overhead low.
  parallel_for(rows, [&](std::size_t r) {
    double x[3] = {0, 0, 0};
    auto idx = shape.unflatten(r * n);
    for (int a = 0; a < dim; ++a) x[a] = idx[a] * h;
    for (int j = 0; j < n; ++j) {
      x[dim - 1] = j * h;
      out.samples[static_cast<Eigen::Index>(r * n + j)] = f(x);
    }
  });
  if (!out.samples.allFinite()) throw InvalidInput("grid: potential produced non-finite samples");
  return out;
}

void periodic_roll(const GridShape& shape, const double* src, const std::array<int, 3>& offset, double* dst) {
  const int n = shape.n;
  const std::size_t total = shape.size();
  if (shape.dim == 1) {
    int o = ((offset[0] % n) + n) % n;
    std::memcpy(dst, src + o, sizeof(double) * (n - o));
    std::memcpy(dst + (n - o), src, sizeof(double) * o);
    return;
  }
  // Roll the leading axes by block index, the last axis by two memcpy runs.
  const int last = shape.dim - 1;
  const int o_last = ((offset[last] % n) + n) % n;
  const std::size_t rows = total / n;
  for (std::size_t r = 0; r < rows; ++r) {
    auto idx = shape.unflatten(r * n);
    for (int a = 0; a < last; ++a) idx[a] += offset[a];
    idx[last] = 0;
    const double* s = src + shape.flatten(idx);
    double* d = dst + r * n;
    std::memcpy(d, s + o_last, sizeof(double) * (n - o_last));
    std::memcpy(d + (n - o_last), s, sizeof(double) * o_last);
  }
}

}  // namespace homog
