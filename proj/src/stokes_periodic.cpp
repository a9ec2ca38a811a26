#include "slipstokes/stokes_periodic.hpp"

namespace slipstokes {
namespace stokes {

void solve_periodic_spectral(const Spectrum* G, const Spectrum* f, const Spectrum* h,
                             Spectrum& w, Spectrum& q) {
  const Spectrum* any = G ? G : (f ? f : h);
  SS_REQUIRE(any != nullptr, "solve_periodic: all inputs null");
  const Grid2& g = any->grid;
  SS_REQUIRE(!G || G->rank == 2, "solve_periodic: G must be rank 2");
  SS_REQUIRE(!f || f->rank == 1, "solve_periodic: f must be rank 1");
  SS_REQUIRE(!h || h->rank == 0, "solve_periodic: h must be rank 0");
  SS_REQUIRE((!G || G->grid == g) && (!f || f->grid == g) && (!h || h->grid == g),
             "solve_periodic: mismatched grids");

  w = Spectrum(g, 1);
  q = Spectrum(g, 0);
  const int nyq_x = (g.nx % 2 == 0) ? g.nx / 2 : -1;
  const int nyq_y = (g.ny % 2 == 0) ? g.ny / 2 : -1;
  const cplx iu(0.0, 1.0);

  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      if ((i == 0 && j == 0) || i == nyq_x || j == nyq_y) continue;
      const double kx = any->kx(i), ky = any->ky(j);
      const double k2 = kx * kx + ky * ky;

      cplx m0(0.0, 0.0), m1(0.0, 0.0);
      if (f) {
        m0 = f->at(0, i, j);
        m1 = f->at(1, i, j);
      }
      if (G) {
        m0 += iu * (kx * G->at(0, i, j) + ky * G->at(1, i, j));
        m1 += iu * (kx * G->at(2, i, j) + ky * G->at(3, i, j));
      }
      const cplx kdotm = kx * m0 + ky * m1;
      cplx qh = -iu * kdotm / k2;
      if (h) qh += h->at(0, i, j);
      w.at(0, i, j) = (m0 - iu * kx * qh) / k2;
      w.at(1, i, j) = (m1 - iu * ky * qh) / k2;
      q.at(0, i, j) = qh;
    }
  }
}

Fields solve_periodic(const GridField* G, const GridField* f, const GridField* h) {
  Spectrum sG, sf, sh;
  if (G) sG = fft::forward(*G);
  if (f) sf = fft::forward(*f);
  if (h) sh = fft::forward(*h);
  Spectrum w, q;
  solve_periodic_spectral(G ? &sG : nullptr, f ? &sf : nullptr, h ? &sh : nullptr, w, q);
  return {fft::backward(w), fft::backward(q)};
}

}  // namespace stokes
}  // namespace slipstokes
