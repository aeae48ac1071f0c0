#include "linear_model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "rng.hpp"

namespace sparselab {

namespace {
// Substream ids so that A, x0 and omega are independently reproducible.
enum : std::uint64_t { kStreamMatrix = 0, kStreamSignal = 1, kStreamNoise = 2 };
}  // namespace

ProblemInstance generate_instance(Eigen::Index n, double delta,
                                  double sigma0_2, const Prior& prior,
                                  std::uint64_t seed) {
  prior.validate();
  if (n < 1) fail(ErrorCode::InvalidArgument, "generate_instance: n must be >= 1");
  if (!(delta > 0.0 && delta <= 1.0))
    fail(ErrorCode::InvalidArgument, "generate_instance: delta must be in (0,1]");
  if (sigma0_2 < 0.0)
    fail(ErrorCode::InvalidArgument, "generate_instance: sigma0_2 must be >= 0");
  const auto m = static_cast<Eigen::Index>(std::floor(delta * n + 0.5));
  if (m < 1)
    fail(ErrorCode::InvalidArgument,
         "generate_instance: n*delta rounds below 1 measurement");

  ProblemInstance inst;
  inst.seed = seed;
  inst.sigma0_2 = sigma0_2;
  inst.delta = static_cast<double>(m) / static_cast<double>(n);

  {
    Rng rng(substream_seed(seed, kStreamMatrix));
    const double sd = 1.0 / std::sqrt(static_cast<double>(m));
    inst.A.resize(m, n);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < n; ++j) inst.A(i, j) = sd * rng.gaussian();
  }
  {
    Rng rng(substream_seed(seed, kStreamSignal));
    const double sd = std::sqrt(prior.amp_variance);
    inst.x0.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double u = rng.uniform();
      const double g = rng.gaussian();  // drawn unconditionally, keeps the
                                        // stream aligned across priors
      inst.x0(j) = (u < prior.epsilon) ? sd * g : 0.0;
    }
  }
  {
    Rng rng(substream_seed(seed, kStreamNoise));
    const double sd = std::sqrt(sigma0_2);
    inst.omega.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) inst.omega(i) = sd * rng.gaussian();
  }
  inst.y = inst.A * inst.x0 + inst.omega;
  return inst;
}

double decorrelation_residual(const Eigen::Ref<const Matrix>& W,
                              const Eigen::Ref<const Matrix>& A) {
  if (W.rows() != A.cols() || W.cols() != A.rows())
    fail(ErrorCode::InvalidArgument,
         "decorrelation_residual: W must be N x M for an M x N matrix A");
  const Eigen::Index n = A.cols();
  // tr(I - WA)/N without forming the N x N product
  double tr_wa = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) tr_wa += W.row(j).dot(A.col(j));
  return (static_cast<double>(n) - tr_wa) / static_cast<double>(n);
}

namespace {

constexpr char kMagic[4] = {'S', 'L', 'I', 'N'};
constexpr std::uint32_t kVersion = 1;

void write_doubles(std::ofstream& os, const double* p, std::size_t count) {
  os.write(reinterpret_cast<const char*>(p),
           static_cast<std::streamsize>(count * sizeof(double)));
}

void read_doubles(std::ifstream& is, double* p, std::size_t count) {
  is.read(reinterpret_cast<char*>(p),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!is) fail(ErrorCode::Io, "load_instance: truncated payload");
}

}  // namespace

void dump_instance(const ProblemInstance& inst, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorCode::Io, "dump_instance: cannot open " + path);
  os.write(kMagic, 4);
  const std::uint32_t version = kVersion;
  const std::uint64_t m = static_cast<std::uint64_t>(inst.m());
  const std::uint64_t n = static_cast<std::uint64_t>(inst.n());
  os.write(reinterpret_cast<const char*>(&version), sizeof(version));
  os.write(reinterpret_cast<const char*>(&m), sizeof(m));
  os.write(reinterpret_cast<const char*>(&n), sizeof(n));
  os.write(reinterpret_cast<const char*>(&inst.seed), sizeof(inst.seed));
  os.write(reinterpret_cast<const char*>(&inst.sigma0_2),
           sizeof(inst.sigma0_2));
  write_doubles(os, inst.A.data(), static_cast<std::size_t>(m * n));
  write_doubles(os, inst.x0.data(), static_cast<std::size_t>(n));
  write_doubles(os, inst.omega.data(), static_cast<std::size_t>(m));
  write_doubles(os, inst.y.data(), static_cast<std::size_t>(m));
  if (!os) fail(ErrorCode::Io, "dump_instance: write failed for " + path);
}

ProblemInstance load_instance(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::Io, "load_instance: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    fail(ErrorCode::Io, "load_instance: bad magic in " + path);
  std::uint32_t version = 0;
  std::uint64_t m = 0, n = 0;
  ProblemInstance inst;
  is.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (version != kVersion)
    fail(ErrorCode::Io, "load_instance: unsupported version");
  is.read(reinterpret_cast<char*>(&m), sizeof(m));
  is.read(reinterpret_cast<char*>(&n), sizeof(n));
  is.read(reinterpret_cast<char*>(&inst.seed), sizeof(inst.seed));
  is.read(reinterpret_cast<char*>(&inst.sigma0_2), sizeof(inst.sigma0_2));
  if (!is) fail(ErrorCode::Io, "load_instance: truncated header");
  inst.A.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  inst.x0.resize(static_cast<Eigen::Index>(n));
  inst.omega.resize(static_cast<Eigen::Index>(m));
  inst.y.resize(static_cast<Eigen::Index>(m));
  read_doubles(is, inst.A.data(), m * n);
  read_doubles(is, inst.x0.data(), n);
  read_doubles(is, inst.omega.data(), m);
  read_doubles(is, inst.y.data(), m);
  inst.delta = static_cast<double>(m) / static_cast<double>(n);
  return inst;
}

}  // namespace sparselab
