//! Polarimetric guided nonlocal means.
//!
//! For every pixel `s` the covariance estimate is a convex combination of
//! single-look outer products `s_t s_tᴴ` taken from a search window around
//! `s`. Weights come from
//!
//! ```text
//! w(t, s) = C · exp(-λ [γ d_SAR(t, s) + (1 - γ) d_OPT(t, s)])
//! ```
//!
//! where `d_SAR` averages the normalised vector distance
//! `|s_s - s_t|² / |s_s|²` over a patch and `d_OPT` averages squared band
//! differences of the optical guide over the same patch. Candidates whose
//! `d_SAR` exceeds `tau_sar` are discarded, keeping at least `n_min` of the
//! most similar ones and always the centre. The guide only shapes weights;
//! output values are built from SAR pixels alone.
//!
//! Patches reach outside the image through symmetric (edge-duplicating)
//! mirror padding; the search window is clipped at the image bounds.
//!
//! [`PgnlmFilter`] evaluates whole row bands at once: for each displacement
//! `d = t - s` it computes the pixel dissimilarity image once and sums it over
//! the patch, instead of re-evaluating every patch pair from scratch. Each
//! output pixel depends only on its own accumulators, so the result is the
//! same however rows are split across workers.

use alloc::vec;
use alloc::vec::Vec;

use crate::cov::{HermitianCov3, ScatteringVector};
use crate::error::{Error, Result};
use crate::grid::{CovGrid, Grid, OpticalGrid, SlcGrid};

/// Floor on `|s_s|²` in the pixel dissimilarity denominator.
pub const NORM_FLOOR: f64 = 1e-300;

/// Rows processed together by [`PgnlmFilter::filter_rows`].
pub const BAND_ROWS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    /// Search window is `(2 r + 1)²` pixels.
    pub search_radius: usize,
    /// Patch is `(2 r + 1)²` offsets.
    pub patch_radius: usize,
    /// Balance between SAR (`gamma`) and optical (`1 - gamma`) dissimilarity.
    pub gamma: f64,
    pub lambda: f64,
    /// Candidates with patch SAR dissimilarity above this are unreliable.
    /// `f64::INFINITY` disables pruning.
    pub tau_sar: f64,
    /// Minimum number of predictors kept after pruning.
    pub n_min: usize,
}

impl Default for FilterParams {
    /// 39x39 search window, 9x9 patches, γ = 0.85, λ = 0.5. The null
    /// distribution of `d_SAR` between independent 9x9 patches depends on
    /// the covariance: its 97th percentile is about 3.0 for `Σ = I` but 4.6
    /// for a double-bounce `Σ` with |ρ13| = 0.9. The cutoff sits above both.
    fn default() -> Self {
        Self {
            search_radius: 19,
            patch_radius: 4,
            gamma: 0.85,
            lambda: 0.5,
            tau_sar: 5.0,
            n_min: 9,
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<()> {
        if self.search_radius < 1 {
            return Err(Error::param("search_radius", "must be >= 1"));
        }
        if self.patch_radius > self.search_radius {
            return Err(Error::param(
                "patch_radius",
                "must not exceed search_radius",
            ));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::param("gamma", "must lie in [0, 1]"));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::param("lambda", "must be finite and > 0"));
        }
        if !(self.tau_sar > 0.0) {
            return Err(Error::param("tau_sar", "must be > 0"));
        }
        if self.n_min < 1 {
            return Err(Error::param("n_min", "must be >= 1"));
        }
        Ok(())
    }

    /// Number of offsets in a patch.
    pub fn patch_len(&self) -> usize {
        let side = 2 * self.patch_radius + 1;
        side * side
    }

    /// `γ d_SAR + (1 - γ) d_OPT`, skipping terms with zero weight so an
    /// infinite dissimilarity never meets a zero factor.
    #[inline]
    pub fn fused_dissimilarity(&self, d_sar: f64, d_opt: f64) -> f64 {
        let sar = if self.gamma == 0.0 {
            0.0
        } else {
            self.gamma * d_sar
        };
        let opt = if self.gamma == 1.0 {
            0.0
        } else {
            (1.0 - self.gamma) * d_opt
        };
        sar + opt
    }

    /// Unnormalised weight `exp(-λ [γ d_SAR + (1 - γ) d_OPT])`.
    #[inline]
    pub fn raw_score(&self, d_sar: f64, d_opt: f64) -> f64 {
        (-self.lambda * self.fused_dissimilarity(d_sar, d_opt)).exp()
    }
}

/// `(s_s - s_t)ᴴ(s_s - s_t) / s_sᴴ s_s`, with `center` the pixel being
/// estimated. The denominator is floored at [`NORM_FLOOR`].
#[inline]
pub fn sar_pixel_dissimilarity(target: &ScatteringVector, center: &ScatteringVector) -> f64 {
    center.distance_sqr(target) / center.norm_sqr().max(NORM_FLOOR)
}

/// Symmetric mirror index: `-1 -> 0`, `n -> n - 1`, periodic with period `2n`.
#[inline]
pub fn mirror(i: isize, n: usize) -> usize {
    let n = n as isize;
    let m = i.rem_euclid(2 * n);
    (if m < n { m } else { 2 * n - 1 - m }) as usize
}

fn offset(p: usize, k: isize, n: usize) -> usize {
    mirror(p as isize + k, n)
}

/// Mean pixel dissimilarity over the patch offsets, `t` against centre `s`.
pub fn sar_patch_dissimilarity(
    slc: &SlcGrid,
    t: (usize, usize),
    s: (usize, usize),
    patch_radius: usize,
) -> f64 {
    let (h, w) = slc.dims();
    let rp = patch_radius as isize;
    let mut sum = 0.0;
    for ky in -rp..=rp {
        for kx in -rp..=rp {
            let target = slc.get(offset(t.0, ky, h), offset(t.1, kx, w));
            let center = slc.get(offset(s.0, ky, h), offset(s.1, kx, w));
            sum += sar_pixel_dissimilarity(target, center);
        }
    }
    let side = 2 * patch_radius + 1;
    sum / (side * side) as f64
}

/// Squared band differences averaged over bands and patch offsets.
pub fn opt_patch_dissimilarity(
    opt: &OpticalGrid,
    t: (usize, usize),
    s: (usize, usize),
    patch_radius: usize,
) -> f64 {
    let (h, w) = opt.dims();
    let rp = patch_radius as isize;
    let mut sum = 0.0;
    for ky in -rp..=rp {
        for kx in -rp..=rp {
            let a = opt.pixel(offset(t.0, ky, h), offset(t.1, kx, w));
            let b = opt.pixel(offset(s.0, ky, h), offset(s.1, kx, w));
            sum += a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
        }
    }
    let side = 2 * patch_radius + 1;
    sum / (side * side * opt.bands()) as f64
}

/// One retained predictor for a pixel estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Predictor {
    pub row: usize,
    pub col: usize,
    pub d_sar: f64,
    pub d_opt: f64,
    pub weight: f64,
}

fn check_inputs(slc: &SlcGrid, opt: &OpticalGrid, params: &FilterParams) -> Result<()> {
    params.validate()?;
    opt.check_matches(slc)?;
    slc.validate()
}

fn search_bounds(p: usize, radius: usize, n: usize) -> (usize, usize) {
    (p.saturating_sub(radius), (p + radius + 1).min(n))
}

/// Retained predictors and normalised weights for pixel `s`.
///
/// Candidates are every pixel of the clipped search window, in raster order.
pub fn predictor_weights(
    slc: &SlcGrid,
    opt: &OpticalGrid,
    s: (usize, usize),
    params: &FilterParams,
) -> Result<Vec<Predictor>> {
    check_inputs(slc, opt, params)?;
    let (h, w) = slc.dims();
    if s.0 >= h || s.1 >= w {
        return Err(Error::param("pixel", "outside the grid"));
    }
    Ok(direct_predictors(slc, opt, s, params))
}

fn direct_predictors(
    slc: &SlcGrid,
    opt: &OpticalGrid,
    s: (usize, usize),
    params: &FilterParams,
) -> Vec<Predictor> {
    let (h, w) = slc.dims();
    let (r0, r1) = search_bounds(s.0, params.search_radius, h);
    let (c0, c1) = search_bounds(s.1, params.search_radius, w);
    let mut candidates = Vec::with_capacity((r1 - r0) * (c1 - c0));
    for row in r0..r1 {
        for col in c0..c1 {
            let t = (row, col);
            candidates.push(Predictor {
                row,
                col,
                d_sar: sar_patch_dissimilarity(slc, t, s, params.patch_radius),
                d_opt: opt_patch_dissimilarity(opt, t, s, params.patch_radius),
                weight: 0.0,
            });
        }
    }
    let mut kept = select_reliable(candidates, s, params);
    let mut total = 0.0;
    for p in kept.iter_mut() {
        p.weight = params.raw_score(p.d_sar, p.d_opt);
        total += p.weight;
    }
    for p in kept.iter_mut() {
        p.weight /= total;
    }
    kept
}

/// Applies the `tau_sar` cutoff with the `n_min` floor; keeps raster order.
fn select_reliable(
    mut candidates: Vec<Predictor>,
    s: (usize, usize),
    params: &FilterParams,
) -> Vec<Predictor> {
    let survivors = candidates
        .iter()
        .filter(|p| p.d_sar <= params.tau_sar)
        .count();
    if survivors >= params.n_min {
        candidates.retain(|p| p.d_sar <= params.tau_sar);
        return candidates;
    }
    if candidates.len() <= params.n_min {
        return candidates;
    }
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    let is_center = |p: &Predictor| (p.row, p.col) == s;
    order.sort_by(|&a, &b| {
        let (pa, pb) = (&candidates[a], &candidates[b]);
        pa.d_sar
            .total_cmp(&pb.d_sar)
            .then(is_center(pb).cmp(&is_center(pa)))
            .then(a.cmp(&b))
    });
    let mut keep = vec![false; candidates.len()];
    for &i in &order[..params.n_min] {
        keep[i] = true;
    }
    candidates
        .into_iter()
        .zip(keep)
        .filter_map(|(p, k)| k.then_some(p))
        .collect()
}

/// `Σ w_t s_t s_tᴴ`, accumulated as offsets from the centre's own outer
/// product so that identical predictors reproduce it exactly.
fn combine(
    outer: &[HermitianCov3],
    width: usize,
    s: (usize, usize),
    predictors: &[Predictor],
) -> HermitianCov3 {
    let center = outer[s.0 * width + s.1];
    let delta = predictors.iter().fold(HermitianCov3::ZERO, |acc, p| {
        acc.add_scaled(&(outer[p.row * width + p.col] - center), p.weight)
    });
    center + delta
}

/// PGNLM estimate for a single pixel, evaluated candidate by candidate.
pub fn estimate_pixel(
    slc: &SlcGrid,
    opt: &OpticalGrid,
    s: (usize, usize),
    params: &FilterParams,
) -> Result<HermitianCov3> {
    let predictors = predictor_weights(slc, opt, s, params)?;
    let outer: Vec<HermitianCov3> = slc.data().iter().map(HermitianCov3::outer).collect();
    Ok(combine(&outer, slc.width(), s, &predictors))
}

/// Filters the whole image on the calling thread.
pub fn pgnlm_filter(slc: &SlcGrid, opt: &OpticalGrid, params: &FilterParams) -> Result<CovGrid> {
    PgnlmFilter::new(slc, opt, *params)?.run()
}

/// Prepared filter state shared read-only by all row bands.
#[derive(Debug)]
pub struct PgnlmFilter<'a> {
    slc: &'a SlcGrid,
    opt: &'a OpticalGrid,
    params: FilterParams,
    pad: usize,
    padded_width: usize,
    /// Mirror-padded scattering vectors as `(re, im)` triples.
    sar: Vec<[f64; 6]>,
    /// `1 / max(|s|², NORM_FLOOR)` on the padded lattice.
    inv_norm: Vec<f64>,
    /// Mirror-padded optical bands, band-interleaved.
    guide: Vec<f64>,
    outer: Vec<HermitianCov3>,
}

/// Per-band scratch buffers, reused across displacements.
struct Scratch {
    d_sar: Vec<f64>,
    d_opt: Vec<f64>,
    v_sar: Vec<f64>,
    v_opt: Vec<f64>,
    acc: Vec<HermitianCov3>,
    weight_sum: Vec<f64>,
    count: Vec<usize>,
    /// The `n_min` most similar candidates per pixel, for the pruning floor.
    best: Vec<Ranked>,
    best_len: Vec<usize>,
}

/// Candidate ranked by `(d_sar, centre first, raster order)`.
#[derive(Clone, Copy)]
struct Ranked {
    d_sar: f64,
    not_center: bool,
    order: usize,
    d_opt: f64,
    target: usize,
}

impl Ranked {
    fn precedes(&self, other: &Ranked) -> bool {
        self.d_sar
            .total_cmp(&other.d_sar)
            .then(self.not_center.cmp(&other.not_center))
            .then(self.order.cmp(&other.order))
            .is_lt()
    }
}

/// Inserts `cand` into a pixel's sorted top-`n_min` list if it ranks high enough.
#[inline]
fn offer(best: &mut [Ranked], best_len: &mut [usize], local: usize, n_min: usize, cand: Ranked) {
    let list = &mut best[local * n_min..(local + 1) * n_min];
    let len = &mut best_len[local];
    if *len == n_min {
        if !cand.precedes(&list[n_min - 1]) {
            return;
        }
    } else {
        *len += 1;
    }
    let mut i = *len - 1;
    while i > 0 && cand.precedes(&list[i - 1]) {
        list[i] = list[i - 1];
        i -= 1;
    }
    list[i] = cand;
}

impl<'a> PgnlmFilter<'a> {
    pub fn new(slc: &'a SlcGrid, opt: &'a OpticalGrid, params: FilterParams) -> Result<Self> {
        check_inputs(slc, opt, &params)?;
        let (h, w) = slc.dims();
        let bands = opt.bands();
        let pad = params.search_radius + params.patch_radius;
        let (ph, pw) = (h + 2 * pad, w + 2 * pad);
        let mut sar = Vec::with_capacity(ph * pw);
        let mut inv_norm = Vec::with_capacity(ph * pw);
        let mut guide = Vec::with_capacity(ph * pw * bands);
        for pr in 0..ph {
            let r = mirror(pr as isize - pad as isize, h);
            for pc in 0..pw {
                let c = mirror(pc as isize - pad as isize, w);
                let s = slc.get(r, c);
                sar.push(s.to_parts());
                inv_norm.push(1.0 / s.norm_sqr().max(NORM_FLOOR));
                guide.extend_from_slice(opt.pixel(r, c));
            }
        }
        let outer = slc.data().iter().map(HermitianCov3::outer).collect();
        Ok(Self {
            slc,
            opt,
            params,
            pad,
            padded_width: pw,
            sar,
            inv_norm,
            guide,
            outer,
        })
    }

    pub fn params(&self) -> &FilterParams {
        &self.params
    }

    pub fn dims(&self) -> (usize, usize) {
        self.slc.dims()
    }

    /// Filters every row sequentially.
    pub fn run(&self) -> Result<CovGrid> {
        let (h, w) = self.dims();
        let mut out = vec![HermitianCov3::ZERO; h * w];
        self.filter_rows(0, &mut out);
        Grid::new(h, w, out)
    }

    /// Estimates rows `row0 .. row0 + out.len() / width` into `out`.
    pub fn filter_rows(&self, row0: usize, out: &mut [HermitianCov3]) {
        let (h, w) = self.dims();
        assert!(out.len() % w == 0, "output slice must hold whole rows");
        let rows = out.len() / w;
        assert!(row0 + rows <= h, "row range outside the grid");
        for (i, chunk) in out.chunks_mut(BAND_ROWS * w).enumerate() {
            self.filter_band(row0 + i * BAND_ROWS, chunk);
        }
    }

    fn filter_band(&self, b0: usize, out: &mut [HermitianCov3]) {
        let (h, w) = self.dims();
        let nb = out.len() / w;
        let b1 = b0 + nb;
        let p = &self.params;
        let rs = p.search_radius as isize;
        let rp = p.patch_radius;
        let side = 2 * rp + 1;
        let bands = self.opt.bands();
        let inv_np = 1.0 / p.patch_len() as f64;
        let inv_bnp = 1.0 / (p.patch_len() * bands) as f64;
        let pw = self.padded_width;
        let max_q = (nb + 2 * rp) * (w + 2 * rp);
        let mut sc = Scratch {
            d_sar: vec![0.0; max_q],
            d_opt: vec![0.0; max_q],
            v_sar: vec![0.0; nb * (w + 2 * rp)],
            v_opt: vec![0.0; nb * (w + 2 * rp)],
            acc: vec![HermitianCov3::ZERO; nb * w],
            weight_sum: vec![0.0; nb * w],
            count: vec![0; nb * w],
            best: vec![
                Ranked {
                    d_sar: 0.0,
                    not_center: false,
                    order: 0,
                    d_opt: 0.0,
                    target: 0
                };
                nb * w * p.n_min
            ],
            best_len: vec![0; nb * w],
        };
        let search_side = 2 * p.search_radius + 1;

        for dy in -rs..=rs {
            // rows of s whose partner t = s + d lies inside the image
            let r_lo = (b0 as isize).max(-dy) as usize;
            let r_hi = (b1 as isize).min(h as isize - dy);
            if r_hi <= r_lo as isize {
                continue;
            }
            let r_hi = r_hi as usize;
            for dx in -rs..=rs {
                let c_lo = (-dx).max(0) as usize;
                let c_hi = (w as isize).min(w as isize - dx);
                if c_hi <= c_lo as isize {
                    continue;
                }
                let c_hi = c_hi as usize;
                let (nr, nc) = (r_hi - r_lo, c_hi - c_lo);
                let (qh, qw) = (nr + 2 * rp, nc + 2 * rp);

                // pixel dissimilarity images over the patch support
                let shift = dy * pw as isize + dx;
                for qr in 0..qh {
                    let base = (r_lo + self.pad - rp + qr) * pw + (c_lo + self.pad - rp);
                    let row_sar = &mut sc.d_sar[qr * qw..(qr + 1) * qw];
                    let row_opt = &mut sc.d_opt[qr * qw..(qr + 1) * qw];
                    for j in 0..qw {
                        let center = base + j;
                        let target = (center as isize + shift) as usize;
                        let (a, b) = (&self.sar[center], &self.sar[target]);
                        let mut dist = 0.0;
                        for k in 0..6 {
                            let e = a[k] - b[k];
                            dist += e * e;
                        }
                        row_sar[j] = dist * self.inv_norm[center];
                        let ga = &self.guide[center * bands..(center + 1) * bands];
                        let gb = &self.guide[target * bands..(target + 1) * bands];
                        let mut g = 0.0;
                        for k in 0..bands {
                            let e = gb[k] - ga[k];
                            g += e * e;
                        }
                        row_opt[j] = g;
                    }
                }
                // column sums over the patch height
                for r in 0..nr {
                    let v_sar = &mut sc.v_sar[r * qw..(r + 1) * qw];
                    let v_opt = &mut sc.v_opt[r * qw..(r + 1) * qw];
                    v_sar.copy_from_slice(&sc.d_sar[r * qw..(r + 1) * qw]);
                    v_opt.copy_from_slice(&sc.d_opt[r * qw..(r + 1) * qw]);
                    for k in 1..side {
                        let src = (r + k) * qw;
                        for j in 0..qw {
                            v_sar[j] += sc.d_sar[src + j];
                            v_opt[j] += sc.d_opt[src + j];
                        }
                    }
                }
                // row sums over the patch width, then accumulate
                for r in 0..nr {
                    let s_row = r_lo + r;
                    let t_row = (s_row as isize + dy) as usize;
                    let v_sar = &sc.v_sar[r * qw..(r + 1) * qw];
                    let v_opt = &sc.v_opt[r * qw..(r + 1) * qw];
                    for c in 0..nc {
                        let mut ssum = 0.0;
                        let mut osum = 0.0;
                        for k in 0..side {
                            ssum += v_sar[c + k];
                            osum += v_opt[c + k];
                        }
                        let d_sar = ssum * inv_np;
                        let d_opt = osum * inv_bnp;
                        let s_col = c_lo + c;
                        let t_col = (s_col as isize + dx) as usize;
                        let local = (s_row - b0) * w + s_col;
                        let ranked = Ranked {
                            d_sar,
                            not_center: dy != 0 || dx != 0,
                            order: (dy + rs) as usize * search_side + (dx + rs) as usize,
                            d_opt,
                            target: t_row * w + t_col,
                        };
                        offer(&mut sc.best, &mut sc.best_len, local, p.n_min, ranked);
                        if !(d_sar <= p.tau_sar) {
                            continue;
                        }
                        let score = p.raw_score(d_sar, d_opt);
                        let delta = self.outer[t_row * w + t_col] - self.outer[s_row * w + s_col];
                        sc.acc[local] = sc.acc[local].add_scaled(&delta, score);
                        sc.weight_sum[local] += score;
                        sc.count[local] += 1;
                    }
                }
            }
        }

        for (local, slot) in out.iter_mut().enumerate() {
            if sc.count[local] >= p.n_min {
                let center = &self.outer[(b0 * w) + local];
                *slot = center.add_scaled(&sc.acc[local], 1.0 / sc.weight_sum[local]);
            } else {
                *slot = self.estimate_from_best(&mut sc, b0 * w + local, local);
            }
        }
    }

    /// Estimate from the `n_min` most similar candidates, in raster order.
    fn estimate_from_best(&self, sc: &mut Scratch, center: usize, local: usize) -> HermitianCov3 {
        let n_min = self.params.n_min;
        let kept = &mut sc.best[local * n_min..local * n_min + sc.best_len[local]];
        kept.sort_by_key(|r| r.order);
        let scores: Vec<f64> = kept
            .iter()
            .map(|r| self.params.raw_score(r.d_sar, r.d_opt))
            .collect();
        let total: f64 = scores.iter().sum();
        let c = self.outer[center];
        let delta = kept
            .iter()
            .zip(&scores)
            .fold(HermitianCov3::ZERO, |acc, (r, score)| {
                acc.add_scaled(&(self.outer[r.target] - c), score / total)
            });
        c + delta
    }

    /// Weighted covariance at one pixel via the per-candidate path.
    #[cfg(test)]
    fn estimate_direct(&self, s: (usize, usize)) -> HermitianCov3 {
        let w = self.slc.width();
        combine(
            &self.outer,
            w,
            s,
            &direct_predictors(self.slc, self.opt, s, &self.params),
        )
    }

    /// Retained predictors for one pixel; same result as [`predictor_weights`].
    pub fn predictors(&self, s: (usize, usize)) -> Vec<Predictor> {
        direct_predictors(self.slc, self.opt, s, &self.params)
    }
}
