#include "ddm/serialize.hpp"

#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>

namespace ddm {

namespace {

constexpr char kDataMagic[8] = {'D', 'D', 'M', 'D', 'A', 'T', 'A', '\0'};
constexpr char kCkptMagic[8] = {'D', 'D', 'M', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

void put_raw(std::ostream& os, const void* p, std::size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  if (!os) throw IoError("serialize: write failed");
}

template <class T>
void put(std::ostream& os, T v) {
  static_assert(std::is_arithmetic_v<T>);
  put_raw(os, &v, sizeof v);
}

void put_str(std::ostream& os, const std::string& s) {
  put<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  put_raw(os, s.data(), s.size());
}

void put_f64(std::ostream& os, const std::vector<double>& v) {
  put_raw(os, v.data(), v.size() * sizeof(double));
}

void get_raw(std::istream& is, void* p, std::size_t n) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n) throw IoError("serialize: short read");
}

template <class T>
T get(std::istream& is) {
  static_assert(std::is_arithmetic_v<T>);
  T v;
  get_raw(is, &v, sizeof v);
  return v;
}

std::string get_str(std::istream& is) {
  const std::uint32_t len = get<std::uint32_t>(is);
  if (len > 4096) throw IoError("serialize: implausible string length");
  std::string s(len, '\0');
  get_raw(is, s.data(), len);
  return s;
}

std::vector<double> get_f64(std::istream& is, std::size_t count) {
  std::vector<double> v(count);
  get_raw(is, v.data(), count * sizeof(double));
  return v;
}

void check_magic(std::istream& is, const char (&magic)[8], const char* what) {
  char buf[8];
  get_raw(is, buf, 8);
  if (std::memcmp(buf, magic, 8) != 0)
    throw IoError(std::string("serialize: not a ") + what + " file (bad magic)");
  const std::uint32_t version = get<std::uint32_t>(is);
  if (version != kVersion)
    throw IoError(std::string("serialize: unsupported ") + what + " version");
}

void expect_end(std::istream& is, const char* what) {
  if (is.peek() != std::istream::traits_type::eof())
    throw IoError(std::string("serialize: trailing bytes in ") + what + " file");
}

void put_data_config(std::ostream& os, const DataConfig& c) {
  put<std::int32_t>(os, c.n_s);
  put<double>(os, c.k);
  put<std::int32_t>(os, c.m);
  put<std::int32_t>(os, c.n_lambda);
  put<double>(os, c.s);
  put<double>(os, c.sigma);
  put<double>(os, c.obs.lo_pi);
  put<double>(os, c.obs.hi_pi);
  put<double>(os, c.inc.lo_pi);
  put<double>(os, c.inc.hi_pi);
  put<std::uint64_t>(os, c.seed);
  put<double>(os, c.train_fraction);
  put<std::int32_t>(os, c.solver.n_q);
  put<std::uint8_t>(os, c.solver.combined_field ? 1 : 0);
  put<double>(os, c.solver.cond_limit);
}

DataConfig get_data_config(std::istream& is) {
  DataConfig c;
  c.n_s = get<std::int32_t>(is);
  c.k = get<double>(is);
  c.m = get<std::int32_t>(is);
  c.n_lambda = get<std::int32_t>(is);
  c.s = get<double>(is);
  c.sigma = get<double>(is);
  c.obs.lo_pi = get<double>(is);
  c.obs.hi_pi = get<double>(is);
  c.inc.lo_pi = get<double>(is);
  c.inc.hi_pi = get<double>(is);
  c.seed = get<std::uint64_t>(is);
  c.train_fraction = get<double>(is);
  c.solver.n_q = get<std::int32_t>(is);
  c.solver.combined_field = get<std::uint8_t>(is) != 0;
  c.solver.cond_limit = get<double>(is);
  if (c.m < 1 || c.m > 4096 || c.n_lambda < 1 || c.n_s < 0)
    throw IoError("serialize: implausible configuration block");
  return c;
}

void put_train_config(std::ostream& os, const TrainConfig& c) {
  put<std::int32_t>(os, c.epochs);
  put<std::int32_t>(os, c.batch);
  put<double>(os, c.adam.lr);
  put<double>(os, c.adam.beta1);
  put<double>(os, c.adam.beta2);
  put<double>(os, c.adam.eps);
  put<double>(os, c.weights.alpha);
  put<double>(os, c.weights.gamma);
  put<double>(os, c.weights.beta_dc);
  put<std::int32_t>(os, c.n_t);
  put<double>(os, c.source.z.x);
  put<double>(os, c.source.z.y);
  put<std::uint64_t>(os, c.seed);
  put<std::uint8_t>(os, c.shuffle ? 1 : 0);
}

TrainConfig get_train_config(std::istream& is) {
  TrainConfig c;
  c.epochs = get<std::int32_t>(is);
  c.batch = get<std::int32_t>(is);
  c.adam.lr = get<double>(is);
  c.adam.beta1 = get<double>(is);
  c.adam.beta2 = get<double>(is);
  c.adam.eps = get<double>(is);
  c.weights.alpha = get<double>(is);
  c.weights.gamma = get<double>(is);
  c.weights.beta_dc = get<double>(is);
  c.n_t = get<std::int32_t>(is);
  c.source.z.x = get<double>(is);
  c.source.z.y = get<double>(is);
  c.seed = get<std::uint64_t>(is);
  c.shuffle = get<std::uint8_t>(is) != 0;
  return c;
}

void put_params(std::ostream& os, const std::vector<Param>& params) {
  put<std::int32_t>(os, static_cast<std::int32_t>(params.size()));
  for (const Param& p : params) {
    put_str(os, p.name);
    put<std::int32_t>(os, p.shape.rank);
    for (int d : p.shape.dim) put<std::int32_t>(os, d);
    put<std::int64_t>(os, static_cast<std::int64_t>(p.value.size()));
    put_f64(os, p.value);
    put_f64(os, p.m1);
    put_f64(os, p.m2);
  }
}

// Reads a parameter list and verifies it matches the expected layout
// name-for-name and shape-for-shape.
std::vector<Param> get_params(std::istream& is, const std::vector<Param>& layout) {
  const std::int32_t count = get<std::int32_t>(is);
  if (count != static_cast<std::int32_t>(layout.size()))
    throw IoError("serialize: checkpoint parameter count mismatch");
  std::vector<Param> out;
  out.reserve(count);
  for (std::int32_t i = 0; i < count; ++i) {
    Param p;
    p.name = get_str(is);
    p.shape.rank = get<std::int32_t>(is);
    for (int d = 0; d < 4; ++d) p.shape.dim[d] = get<std::int32_t>(is);
    const std::int64_t numel = get<std::int64_t>(is);
    if (p.name != layout[i].name || !(p.shape == layout[i].shape) ||
        numel != static_cast<std::int64_t>(layout[i].value.size()))
      throw IoError("serialize: checkpoint parameter layout mismatch at " + p.name);
    p.value = get_f64(is, static_cast<std::size_t>(numel));
    p.m1 = get_f64(is, static_cast<std::size_t>(numel));
    p.m2 = get_f64(is, static_cast<std::size_t>(numel));
    out.push_back(std::move(p));
  }
  return out;
}

void put_bn(std::ostream& os, const std::vector<BnBuffers>& bn) {
  put<std::int32_t>(os, static_cast<std::int32_t>(bn.size()));
  for (const BnBuffers& b : bn) {
    put_str(os, b.name);
    put<std::int64_t>(os, static_cast<std::int64_t>(b.mean.size()));
    put_f64(os, b.mean);
    put_f64(os, b.var);
  }
}

std::vector<BnBuffers> get_bn(std::istream& is, const std::vector<BnBuffers>& layout) {
  const std::int32_t count = get<std::int32_t>(is);
  if (count != static_cast<std::int32_t>(layout.size()))
    throw IoError("serialize: checkpoint batchnorm buffer count mismatch");
  std::vector<BnBuffers> out;
  out.reserve(count);
  for (std::int32_t i = 0; i < count; ++i) {
    BnBuffers b;
    b.name = get_str(is);
    const std::int64_t channels = get<std::int64_t>(is);
    if (b.name != layout[i].name || channels != static_cast<std::int64_t>(layout[i].mean.size()))
      throw IoError("serialize: checkpoint batchnorm layout mismatch at " + b.name);
    b.mean = get_f64(is, static_cast<std::size_t>(channels));
    b.var = get_f64(is, static_cast<std::size_t>(channels));
    out.push_back(std::move(b));
  }
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("serialize: cannot open " + path + " for writing");
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("serialize: cannot open " + path);
  return is;
}

}  // namespace

void save_dataset(const Dataset& data, const std::string& path) {
  std::ofstream os = open_out(path);
  put_raw(os, kDataMagic, 8);
  put<std::uint32_t>(os, kVersion);
  put_data_config(os, data.config);
  put<std::int32_t>(os, data.n_train);
  put<std::int64_t>(os, data.retries);
  put<std::int32_t>(os, static_cast<std::int32_t>(data.samples.size()));
  const int n = 2 * data.config.m;
  for (const Sample& s : data.samples) {
    const std::vector<double> q = s.q_true.coeffs();
    put<std::int32_t>(os, static_cast<std::int32_t>(q.size()));
    put_f64(os, q);
    put<std::int32_t>(os, n);
    put_raw(os, s.f_f.entries.data.data(), s.f_f.entries.data.size() * sizeof(Complex));
    put<std::int32_t>(os, s.f_l.n_obs);
    put<std::int32_t>(os, s.f_l.big_n_obs);
    put<std::int32_t>(os, s.f_l.n_inc);
    put<std::int32_t>(os, s.f_l.big_n_inc);
    put_raw(os, s.f_l.entries.data.data(), s.f_l.entries.data.size() * sizeof(Complex));
  }
  os.flush();
  if (!os.good()) throw IoError("serialize: failed writing " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream is = open_in(path);
  check_magic(is, kDataMagic, "dataset");
  Dataset data;
  data.config = get_data_config(is);
  data.n_train = get<std::int32_t>(is);
  data.retries = get<std::int64_t>(is);
  const std::int32_t count = get<std::int32_t>(is);
  if (count != data.config.n_s || data.n_train < 0 || data.n_train > count)
    throw IoError("serialize: dataset sample counts are inconsistent");
  const auto [olo, ohi] = aperture_indices(data.config.obs, data.config.m);
  const auto [ilo, ihi] = aperture_indices(data.config.inc, data.config.m);
  const int n = 2 * data.config.m;
  const int coeffs = 2 * data.config.n_lambda + 1;
  data.samples.reserve(count);
  for (std::int32_t si = 0; si < count; ++si) {
    Sample s;
    if (get<std::int32_t>(is) != coeffs)
      throw IoError("serialize: dataset curve record does not match the configuration");
    s.q_true = FourierCurve::from_coeffs(get_f64(is, coeffs), data.config.s);
    if (get<std::int32_t>(is) != n)
      throw IoError("serialize: dataset matrix record does not match the configuration");
    s.f_f.m = data.config.m;
    s.f_f.entries = CMatrix(n, n);
    get_raw(is, s.f_f.entries.data.data(), s.f_f.entries.data.size() * sizeof(Complex));
    s.f_l.m = data.config.m;
    s.f_l.n_obs = get<std::int32_t>(is);
    s.f_l.big_n_obs = get<std::int32_t>(is);
    s.f_l.n_inc = get<std::int32_t>(is);
    s.f_l.big_n_inc = get<std::int32_t>(is);
    if (s.f_l.n_obs != olo || s.f_l.big_n_obs != ohi || s.f_l.n_inc != ilo ||
        s.f_l.big_n_inc != ihi)
      throw IoError("serialize: dataset aperture block does not match the configuration");
    s.f_l.entries = CMatrix(s.f_l.obs_count(), s.f_l.inc_count());
    get_raw(is, s.f_l.entries.data.data(), s.f_l.entries.data.size() * sizeof(Complex));
    data.samples.push_back(std::move(s));
  }
  expect_end(is, "dataset");
  return data;
}

std::uint64_t dataset_file_size(const DataConfig& cfg) {
  const auto [olo, ohi] = aperture_indices(cfg.obs, cfg.m);
  const auto [ilo, ihi] = aperture_indices(cfg.inc, cfg.m);
  const std::uint64_t rows = static_cast<std::uint64_t>(ohi - olo + 1);
  const std::uint64_t cols = static_cast<std::uint64_t>(ihi - ilo + 1);
  const std::uint64_t n = 2ull * cfg.m;
  const std::uint64_t coeffs = 2ull * cfg.n_lambda + 1;
  const std::uint64_t header = 8 + 4;
  const std::uint64_t config = 97;
  const std::uint64_t counts = 4 + 8 + 4;
  const std::uint64_t sample = 4 + 8 * coeffs + 4 + 16 * n * n + 16 + 16 * rows * cols;
  return header + config + counts + static_cast<std::uint64_t>(cfg.n_s) * sample;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream os = open_out(path);
  put_raw(os, kCkptMagic, 8);
  put<std::uint32_t>(os, kVersion);
  put_data_config(os, ckpt.data);
  put_train_config(os, ckpt.train);
  put<std::int64_t>(os, ckpt.net.step());
  put_params(os, ckpt.net.params());
  put_bn(os, ckpt.net.bn_buffers());
  put<std::uint8_t>(os, ckpt.has_best() ? 1 : 0);
  if (ckpt.has_best()) {
    put<std::int32_t>(os, ckpt.best_epoch);
    put<double>(os, ckpt.best_l_ddm);
    put<std::int64_t>(os, ckpt.best_step);
    put_params(os, ckpt.best_params);
    put_bn(os, ckpt.best_bn);
  }
  os.flush();
  if (!os.good()) throw IoError("serialize: failed writing " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is = open_in(path);
  check_magic(is, kCkptMagic, "checkpoint");
  Checkpoint ckpt;
  ckpt.data = get_data_config(is);
  ckpt.train = get_train_config(is);
  ckpt.net = DdmNetwork::empty(ckpt.data.m, ckpt.data.n_lambda);
  ckpt.net.set_step(get<std::int64_t>(is));
  ckpt.net.params() = get_params(is, ckpt.net.params());
  ckpt.net.bn_buffers() = get_bn(is, ckpt.net.bn_buffers());
  if (get<std::uint8_t>(is) != 0) {
    ckpt.best_epoch = get<std::int32_t>(is);
    ckpt.best_l_ddm = get<double>(is);
    ckpt.best_step = get<std::int64_t>(is);
    ckpt.best_params = get_params(is, ckpt.net.params());
    ckpt.best_bn = get_bn(is, ckpt.net.bn_buffers());
  }
  expect_end(is, "checkpoint");
  return ckpt;
}

namespace {

std::ofstream open_csv(const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("serialize: cannot open " + path + " for writing");
  os << std::setprecision(17);
  return os;
}

void finish_csv(std::ofstream& os, const std::string& path) {
  os.flush();
  if (!os.good()) throw IoError("serialize: failed writing " + path);
}

}  // namespace

void write_history_csv(const std::string& path, const std::vector<EpochStats>& history) {
  std::ofstream os = open_csv(path);
  os << "epoch,l_ddm,l_phy,l_dc,err\n";
  for (std::size_t i = 0; i < history.size(); ++i)
    os << i + 1 << ',' << history[i].l_ddm << ',' << history[i].l_phy << ',' << history[i].l_dc
       << ',' << history[i].err << '\n';
  finish_csv(os, path);
}

void write_objective_csv(const std::string& path, const std::vector<double>& objective) {
  std::ofstream os = open_csv(path);
  os << "iteration,objective\n";
  for (std::size_t i = 0; i < objective.size(); ++i) os << i << ',' << objective[i] << '\n';
  finish_csv(os, path);
}

void write_grid_csv(const std::string& path, const SamplingGrid& grid) {
  std::ofstream os = open_csv(path);
  os << "h_x,h_y,indicator\n";
  for (int iy = 0; iy < grid.resolution; ++iy)
    for (int ix = 0; ix < grid.resolution; ++ix)
      os << grid.coord(ix) << ',' << grid.coord(iy) << ',' << grid.at(iy, ix) << '\n';
  finish_csv(os, path);
}

void write_noise_csv(const std::string& path, const NoiseStudy& study) {
  std::ofstream os = open_csv(path);
  os << "sigma,mean_dj,std_err,warned\n";
  for (const NoisePoint& p : study.points)
    os << p.sigma << ',' << p.mean_dj << ',' << p.std_err << ',' << (p.warned ? 1 : 0) << '\n';
  finish_csv(os, path);
}

}  // namespace ddm
