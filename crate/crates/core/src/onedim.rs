//! One-dimensional global maximization: coarse scan plus golden-section
//! refinement.
//!
//! The nonlinearity constants are maxima of continuous but possibly kinked
//! ratios, so derivative-free bracketing is used throughout: a log-spaced
//! scan locates every local bracket and golden section refines each one.

/// A located maximum.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Peak {
    /// Maximum value found.
    pub value: f64,
    /// Argument at which it is attained.
    pub at: f64,
}

const INV_GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximization of `f` on `[a, b]`.
///
/// Stops when the bracket width drops below `xtol` (absolute, in the search
/// coordinate) or after `max_iter` shrink steps.
pub fn golden_max(f: impl Fn(f64) -> f64, a: f64, b: f64, xtol: f64, max_iter: usize) -> Peak {
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut x1 = hi - INV_GOLDEN * (hi - lo);
    let mut x2 = lo + INV_GOLDEN * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iter = 0;
    while (hi - lo) > xtol && iter < max_iter {
        iter += 1;
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_GOLDEN * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_GOLDEN * (hi - lo);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    let fm = f(mid);
    // return the best of the three evaluated candidates
    let mut best = Peak { value: fm, at: mid };
    if f1 > best.value {
        best = Peak { value: f1, at: x1 };
    }
    if f2 > best.value {
        best = Peak { value: f2, at: x2 };
    }
    best
}

/// Outcome of a log-spaced scan for the global maximum of `f` on `[lo, hi]`.
pub enum ScanOutcome {
    Found(Peak),
    /// The sampled ratio was still strictly rising at a scan boundary, so
    /// the maximum is suspect of being unattained on `(0, ∞)`.
    RisingAtBoundary {
        side: &'static str,
        last: f64,
    },
}

/// Global maximum of `f` over `[lo, hi]`, `lo > 0`: evaluate on `n` log-spaced
/// points, golden-refine every local bracket in the log coordinate to relative
/// tolerance `rel_tol`, and return the largest refined peak.
#[allow(clippy::needless_range_loop)]
pub fn scan_then_refine_log(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    n: usize,
    rel_tol: f64,
) -> ScanOutcome {
    assert!(lo > 0.0 && hi > lo && n >= 8);
    let (ylo, yhi) = (lo.ln(), hi.ln());
    let dy = (yhi - ylo) / (n - 1) as f64;
    let ys: Vec<f64> = (0..n).map(|i| ylo + i as f64 * dy).collect();
    let vals: Vec<f64> = ys.iter().map(|&y| f(y.exp())).collect();

    let best_idx = vals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    if best_idx == n - 1 && vals[n - 1] > vals[n - 2] {
        return ScanOutcome::RisingAtBoundary {
            side: "upper",
            last: vals[n - 1],
        };
    }
    if best_idx == 0 && vals[0] > vals[1] {
        return ScanOutcome::RisingAtBoundary {
            side: "lower",
            last: vals[0],
        };
    }

    let g = |y: f64| f(y.exp());
    let mut best = Peak {
        value: vals[best_idx],
        at: ys[best_idx].exp(),
    };
    for i in 1..n - 1 {
        if vals[i] >= vals[i - 1] && vals[i] >= vals[i + 1] {
            let refined = golden_max(g, ys[i - 1], ys[i + 1], rel_tol, 400);
            if refined.value > best.value {
                best = Peak {
                    value: refined.value,
                    at: refined.at.exp(),
                };
            }
        }
    }
    ScanOutcome::Found(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_peak() {
        let p = golden_max(|x| -(x - 0.3) * (x - 0.3), -1.0, 1.0, 1e-12, 200);
        assert!((p.at - 0.3).abs() < 1e-10);
        assert!(p.value.abs() < 1e-18);
    }

    #[test]
    fn golden_handles_kinked_peak() {
        // tent function with apex at x = 2
        let p = golden_max(|x: f64| 1.0 - (x - 2.0).abs(), 0.5, 5.0, 1e-12, 300);
        assert!((p.at - 2.0).abs() < 1e-10);
        assert!((p.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn scan_detects_rising_boundary() {
        match scan_then_refine_log(|s| s, 1e-6, 1e6, 512, 1e-10) {
            ScanOutcome::RisingAtBoundary { side, .. } => assert_eq!(side, "upper"),
            ScanOutcome::Found(_) => panic!("monotone ratio must be flagged"),
        }
    }

    #[test]
    fn scan_refines_smooth_peak() {
        // s·exp(-s) has its maximum 1/e at s = 1
        match scan_then_refine_log(|s: f64| s * (-s).exp(), 1e-6, 1e6, 2048, 1e-12) {
            ScanOutcome::Found(p) => {
                assert!((p.at - 1.0).abs() < 1e-8);
                assert!((p.value - (-1.0_f64).exp()).abs() < 1e-12);
            }
            _ => panic!("peak expected"),
        }
    }
}
