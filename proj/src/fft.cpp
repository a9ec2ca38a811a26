#include "slipstokes/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace slipstokes {

Spectrum::Spectrum(const Grid2& g, int rank_) : grid(g), rank(rank_) {
  SS_REQUIRE(rank >= 0 && rank <= 2, "Spectrum: rank must be 0, 1 or 2 (got %d)", rank);
  ncomp = 1;
  for (int r = 0; r < rank; ++r) ncomp *= 2;
  data.assign(static_cast<size_t>(ncomp) * grid.npts(), cplx(0.0, 0.0));
}

namespace fft {
namespace {

// One cached FFTW plan per (nx, ny, direction), with its own aligned buffer.
// FFTW_ESTIMATE keeps planning deterministic (FFTW_MEASURE would let timing
// noise pick different algorithms between runs).
struct PlanSlot {
  fftw_plan plan = nullptr;
  fftw_complex* buf = nullptr;
  int n = 0;
};

std::mutex g_mutex;
std::map<std::tuple<int, int, int>, PlanSlot> g_plans;

PlanSlot& get_plan(int nx, int ny, int sign) {
  std::lock_guard<std::mutex> lock(g_mutex);
  auto key = std::make_tuple(nx, ny, sign);
  auto it = g_plans.find(key);
  if (it != g_plans.end()) return it->second;
  PlanSlot slot;
  slot.n = nx * std::max(ny, 1);
  slot.buf = fftw_alloc_complex(slot.n);
  SS_REQUIRE(slot.buf != nullptr, "fft: allocation failed for %d points", slot.n);
  if (ny > 0) {
    slot.plan = fftw_plan_dft_2d(ny, nx, slot.buf, slot.buf, sign, FFTW_ESTIMATE);
  } else {
    slot.plan = fftw_plan_dft_1d(nx, slot.buf, slot.buf, sign, FFTW_ESTIMATE);
  }
  SS_REQUIRE(slot.plan != nullptr, "fft: plan creation failed (%d x %d)", nx, ny);
  return g_plans.emplace(key, slot).first->second;
}

void run_2d(const cplx* in, cplx* out, int nx, int ny, int sign) {
  PlanSlot& slot = get_plan(nx, ny, sign);
  for (int k = 0; k < slot.n; ++k) {
    slot.buf[k][0] = in[k].real();
    slot.buf[k][1] = in[k].imag();
  }
  fftw_execute(slot.plan);
  for (int k = 0; k < slot.n; ++k) out[k] = cplx(slot.buf[k][0], slot.buf[k][1]);
}

void run_1d(const cplx* in, cplx* out, int n, int sign) {
  PlanSlot& slot = get_plan(n, 0, sign);
  for (int k = 0; k < n; ++k) {
    slot.buf[k][0] = in[k].real();
    slot.buf[k][1] = in[k].imag();
  }
  fftw_execute(slot.plan);
  for (int k = 0; k < n; ++k) out[k] = cplx(slot.buf[k][0], slot.buf[k][1]);
}

}  // namespace

Spectrum forward(const GridField& f) {
  SS_REQUIRE(!f.empty(), "fft::forward: empty field");
  const Grid2& g = f.grid();
  Spectrum s(g, f.rank());
  const int n = g.npts();
  std::vector<cplx> in(n);
  const double scale = 1.0 / n;
  for (int c = 0; c < f.ncomp(); ++c) {
    const double* p = f.comp(c);
    for (int k = 0; k < n; ++k) in[k] = cplx(p[k], 0.0);
    run_2d(in.data(), s.data.data() + static_cast<size_t>(c) * n, g.nx, g.ny, FFTW_FORWARD);
    cplx* out = s.data.data() + static_cast<size_t>(c) * n;
    for (int k = 0; k < n; ++k) out[k] *= scale;
  }
  return s;
}

GridField backward(const Spectrum& s) {
  const Grid2& g = s.grid;
  GridField f(g, s.rank);
  const int n = g.npts();
  std::vector<cplx> out(n);
  for (int c = 0; c < s.ncomp; ++c) {
    run_2d(s.data.data() + static_cast<size_t>(c) * n, out.data(), g.nx, g.ny, FFTW_BACKWARD);
    double* p = f.comp(c);
    for (int k = 0; k < n; ++k) p[k] = out[k].real();
  }
  return f;
}

Spectrum derivative(const Spectrum& s, int axis) {
  SS_REQUIRE(axis == 0 || axis == 1, "fft::derivative: axis must be 0 or 1");
  const Grid2& g = s.grid;
  Spectrum d(g, s.rank);
  const int nyq_x = (g.nx % 2 == 0) ? g.nx / 2 : -1;
  const int nyq_y = (g.ny % 2 == 0) ? g.ny / 2 : -1;
  for (int c = 0; c < s.ncomp; ++c)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const bool nyq = (axis == 0) ? (i == nyq_x) : (j == nyq_y);
        if (nyq) {
          d.at(c, i, j) = 0.0;
          continue;
        }
        const double k = (axis == 0) ? s.kx(i) : s.ky(j);
        d.at(c, i, j) = cplx(0.0, k) * s.at(c, i, j);
      }
  return d;
}

GridField derivative(const GridField& f, int axis) {
  return backward(derivative(forward(f), axis));
}

GridField poisson_periodic(const GridField& rhs) {
  SS_REQUIRE(rhs.rank() == 0, "poisson_periodic: scalar right-hand side expected");
  Spectrum s = forward(rhs);
  const Grid2& g = s.grid;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double k2 = sq(s.kx(i)) + sq(s.ky(j));
      s.at(0, i, j) = (k2 > 0.0) ? s.at(0, i, j) / (-k2) : cplx(0.0, 0.0);
    }
  return backward(s);
}

std::vector<cplx> forward1d(const std::vector<double>& f) {
  const int n = static_cast<int>(f.size());
  SS_REQUIRE(n >= 2, "fft::forward1d: need at least 2 samples");
  std::vector<cplx> in(n), out(n);
  for (int k = 0; k < n; ++k) in[k] = cplx(f[k], 0.0);
  run_1d(in.data(), out.data(), n, FFTW_FORWARD);
  const double scale = 1.0 / n;
  for (auto& v : out) v *= scale;
  return out;
}

std::vector<double> backward1d_real(const std::vector<cplx>& c) {
  const int n = static_cast<int>(c.size());
  std::vector<cplx> out(n);
  run_1d(c.data(), out.data(), n, FFTW_BACKWARD);
  std::vector<double> f(n);
  for (int k = 0; k < n; ++k) f[k] = out[k].real();
  return f;
}

}  // namespace fft
}  // namespace slipstokes
