//! Straightforward nested-loop PGNLM used as a test oracle.
//!
//! Shares nothing with the library's filter beyond the grid containers:
//! mirror indexing, dissimilarities, pruning, normalisation and the
//! weighted sum of outer products are all re-derived here.

#![allow(dead_code)]

use num_complex::Complex64;
use pgnlm_core::{CovGrid, FilterParams, Grid, HermitianCov3, OpticalGrid, SlcGrid};

pub fn reflect(i: i64, n: usize) -> usize {
    let n = n as i64;
    let mut i = i;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}

fn vec3(slc: &SlcGrid, r: usize, c: usize) -> [Complex64; 3] {
    let s = slc.get(r, c);
    [s.hh, s.hv, s.vv]
}

pub fn pixel_dissim(target: [Complex64; 3], center: [Complex64; 3]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..3 {
        let d = center[k] - target[k];
        num += (d.conj() * d).re;
        den += (center[k].conj() * center[k]).re;
    }
    num / den.max(1e-300)
}

pub fn d_sar(slc: &SlcGrid, t: (usize, usize), s: (usize, usize), rp: usize) -> f64 {
    let rp = rp as i64;
    let mut sum = 0.0;
    let mut n = 0.0;
    for ky in -rp..=rp {
        for kx in -rp..=rp {
            let tr = reflect(t.0 as i64 + ky, slc.height());
            let tc = reflect(t.1 as i64 + kx, slc.width());
            let sr = reflect(s.0 as i64 + ky, slc.height());
            let sc = reflect(s.1 as i64 + kx, slc.width());
            sum += pixel_dissim(vec3(slc, tr, tc), vec3(slc, sr, sc));
            n += 1.0;
        }
    }
    sum / n
}

pub fn d_opt(opt: &OpticalGrid, t: (usize, usize), s: (usize, usize), rp: usize) -> f64 {
    let rp = rp as i64;
    let mut sum = 0.0;
    let mut n = 0.0;
    for b in 0..opt.bands() {
        for ky in -rp..=rp {
            for kx in -rp..=rp {
                let a = opt.value(
                    reflect(t.0 as i64 + ky, opt.height()),
                    reflect(t.1 as i64 + kx, opt.width()),
                    b,
                );
                let c = opt.value(
                    reflect(s.0 as i64 + ky, opt.height()),
                    reflect(s.1 as i64 + kx, opt.width()),
                    b,
                );
                sum += (a - c) * (a - c);
                n += 1.0;
            }
        }
    }
    sum / n
}

/// `(row, col, weight)` of every retained predictor, raster order.
pub fn weights(
    slc: &SlcGrid,
    opt: &OpticalGrid,
    s: (usize, usize),
    p: &FilterParams,
) -> Vec<(usize, usize, f64)> {
    let (h, w) = slc.dims();
    let rs = p.search_radius as i64;
    let mut cands = Vec::new();
    for dy in -rs..=rs {
        for dx in -rs..=rs {
            let (r, c) = (s.0 as i64 + dy, s.1 as i64 + dx);
            if r < 0 || c < 0 || r >= h as i64 || c >= w as i64 {
                continue;
            }
            let t = (r as usize, c as usize);
            cands.push((
                t,
                d_sar(slc, t, s, p.patch_radius),
                d_opt(opt, t, s, p.patch_radius),
            ));
        }
    }
    let reliable: Vec<_> = cands.iter().copied().filter(|c| c.1 <= p.tau_sar).collect();
    let kept = if reliable.len() >= p.n_min {
        reliable
    } else {
        let mut ranked: Vec<(usize, _)> = cands.iter().copied().enumerate().collect();
        ranked.sort_by(|a, b| {
            let ca = (a.1).0 == s;
            let cb = (b.1).0 == s;
            (a.1)
                .1
                .partial_cmp(&(b.1).1)
                .unwrap()
                .then(cb.cmp(&ca))
                .then(a.0.cmp(&b.0))
        });
        ranked.truncate(p.n_min);
        ranked.sort_by_key(|x| x.0);
        ranked.into_iter().map(|x| x.1).collect()
    };
    let raw: Vec<f64> = kept
        .iter()
        .map(|&(_, ds, dopt)| {
            let mut arg = 0.0;
            if p.gamma > 0.0 {
                arg += p.gamma * ds;
            }
            if p.gamma < 1.0 {
                arg += (1.0 - p.gamma) * dopt;
            }
            (-p.lambda * arg).exp()
        })
        .collect();
    let norm: f64 = raw.iter().sum();
    kept.iter()
        .zip(raw)
        .map(|(&(t, _, _), r)| (t.0, t.1, r / norm))
        .collect()
}

pub fn outer(v: [Complex64; 3]) -> [[Complex64; 3]; 3] {
    let mut m = [[Complex64::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = v[i] * v[j].conj();
        }
    }
    m
}

pub fn estimate(
    slc: &SlcGrid,
    opt: &OpticalGrid,
    s: (usize, usize),
    p: &FilterParams,
) -> [[Complex64; 3]; 3] {
    let mut acc = [[Complex64::new(0.0, 0.0); 3]; 3];
    for (r, c, w) in weights(slc, opt, s, p) {
        let m = outer(vec3(slc, r, c));
        for i in 0..3 {
            for j in 0..3 {
                acc[i][j] += m[i][j] * w;
            }
        }
    }
    acc
}

pub fn filter(slc: &SlcGrid, opt: &OpticalGrid, p: &FilterParams) -> Vec<[[Complex64; 3]; 3]> {
    let (h, w) = slc.dims();
    let mut out = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            out.push(estimate(slc, opt, (r, c), p));
        }
    }
    out
}

/// Largest elementwise absolute difference between the library output and
/// full reference matrices.
pub fn max_abs_diff(ours: &CovGrid, reference: &[[[Complex64; 3]; 3]]) -> f64 {
    ours.data()
        .iter()
        .zip(reference)
        .map(|(a, b)| {
            let m = a.to_matrix();
            let mut worst = 0.0f64;
            for i in 0..3 {
                for j in 0..3 {
                    worst = worst.max((m[i][j] - b[i][j]).norm());
                }
            }
            worst
        })
        .fold(0.0, f64::max)
}

/// Boxcar average with clipped borders, by direct summation.
pub fn boxcar(slc: &SlcGrid, window: usize) -> Vec<[[Complex64; 3]; 3]> {
    let (h, w) = slc.dims();
    let r = (window / 2) as i64;
    let mut out = Vec::new();
    for row in 0..h as i64 {
        for col in 0..w as i64 {
            let mut acc = [[Complex64::new(0.0, 0.0); 3]; 3];
            let mut n = 0.0;
            for tr in row - r..=row + r {
                for tc in col - r..=col + r {
                    if tr < 0 || tc < 0 || tr >= h as i64 || tc >= w as i64 {
                        continue;
                    }
                    let m = outer(vec3(slc, tr as usize, tc as usize));
                    for i in 0..3 {
                        for j in 0..3 {
                            acc[i][j] += m[i][j];
                        }
                    }
                    n += 1.0;
                }
            }
            for row in acc.iter_mut() {
                for v in row.iter_mut() {
                    *v /= n;
                }
            }
            out.push(acc);
        }
    }
    out
}

pub fn to_cov(m: &[[Complex64; 3]; 3]) -> HermitianCov3 {
    HermitianCov3::from_matrix(m)
}

pub fn to_grid(h: usize, w: usize, ms: &[[[Complex64; 3]; 3]]) -> CovGrid {
    Grid::new(h, w, ms.iter().map(to_cov).collect()).unwrap()
}
