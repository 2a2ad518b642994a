#pragma once

#include <vector>

#include "gaplab/frequency.hpp"

namespace gaplab {

// one of the q bands of a rational-frequency spectrum
struct Band {
  double lo = 0.0, hi = 0.0;
  int index = 0;                      // 1..q
  double res_lo = 0.0, res_hi = 0.0;  // |Delta| - 2 at the located edges
  bool degenerate = false;            // bracket failure: band narrower than tol
};

// gap between band j and band j+1; the IDS is constant j/q across it
struct GapReport {
  double lo = 0.0, hi = 0.0;
  double length = 0.0;
  int j = 0;            // IDS numerator: N = j/q in this gap
  long long label = 0;  // l with l p = j (mod q), |l| <= q/2, ties positive
  bool open = false;    // length above the edge tolerance
};

struct Spectrum {
  double lambda = 0.0;
  long long p = 0, q = 1;
  std::vector<Band> bands;      // exactly q, sorted
  std::vector<GapReport> gaps;  // q-1 internal gaps once labeled
};

// trace of the q-step transfer matrix S(theta+(q-1)p/q) ... S(theta)
double discriminant(double E, double theta, double lambda, long long p,
                    long long q);

// all q bands over the theta-union spectrum: the discriminant splits as
// D(E) + 2|c_q| cos(2 pi q theta + phase) with an E-independent wave, so the
// 2q edges are roots of the two extremal-theta curves hitting -+2.  Seeds
// come from companion-matrix eigenvalues, then bracketed bisection to tol.
Spectrum spectrum_rational(double lambda, long long p, long long q,
                           double tol = 1e-12);

// populate gaps: IDS value j/q, congruence label, openness; each gap midpoint
// IDS is cross-checked against ids_sturm within 2/M + 1e-3
void gap_labels(Spectrum& s, int theta_grid = 16, int M = 600);

// averaged integrated density of states of the size-(2M+1) truncation via
// Sturm sign counts; discretization error O(1/M) plus boundary states
double ids_sturm(double E, double lambda, const AlphaSpec& alpha,
                 int theta_grid, int M);

// exact Hausdorff distance between finite unions of closed intervals
double hausdorff_distance(const std::vector<Band>& s1,
                          const std::vector<Band>& s2);
double hausdorff_distance(const Spectrum& s1, const Spectrum& s2);

// sum of band lengths
double lebesgue_measure(const Spectrum& s);

// bands scaled by a constant factor (Aubry-duality comparisons)
std::vector<Band> scaled_bands(const std::vector<Band>& b, double factor);

}  // namespace gaplab
