//! Distortion metrics and equivariance measurements.
//!
//! PSNR values are in dB with peak 1 by default. Identical tensors give
//! `f64::INFINITY`; aggregates cap such values at [`IDENTICAL_CAP_DB`].

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::spectral::{grid_rings, translate, translate_adversarial_grid, Displacement};
use crate::{Error, Result, Tensor};

pub const DEFAULT_PEAK: f64 = 1.0;

/// Value that stands in for an infinite PSNR inside means and deviations.
pub const IDENTICAL_CAP_DB: f64 = 300.0;

pub fn psnr(a: &Tensor, b: &Tensor, peak: f64) -> Result<f64> {
    a.expect_same_shape(b)?;
    Ok(psnr_slices(a.data(), b.data(), peak))
}

fn psnr_slices(a: &[f64], b: &[f64], peak: f64) -> f64 {
    let n = a.len().max(1) as f64;
    let mse = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / n;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * libm::log10(peak * peak / mse)
    }
}

/// PSNR of each batch sample separately.
pub fn psnr_per_sample(a: &Tensor, b: &Tensor, peak: f64) -> Result<Vec<f64>> {
    a.expect_same_shape(b)?;
    Ok((0..a.shape().batch).map(|i| psnr_slices(a.sample(i), b.sample(i), peak)).collect())
}

pub fn cap_db(db: f64) -> f64 {
    db.min(IDENTICAL_CAP_DB)
}

/// Mean of capped dB values; infinite when every value is infinite.
fn mean_db(values: &[f64]) -> f64 {
    if values.iter().all(|v| v.is_infinite() && *v > 0.0) {
        return f64::INFINITY;
    }
    values.iter().map(|&v| cap_db(v)).sum::<f64>() / values.len() as f64
}

/// Mean and population standard deviation of capped dB values.
pub fn db_stats(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().map(|&v| cap_db(v)).sum::<f64>() / n;
    let var = values.iter().map(|&v| (cap_db(v) - mean).powi(2)).sum::<f64>() / n;
    (mean, libm::sqrt(var))
}

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = libm::exp(-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA));
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// Separable 'valid' filtering of one plane with the SSIM window.
fn filter_valid(plane: &[f64], h: usize, w: usize, win: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let k = SSIM_WINDOW;
    let (oh, ow) = (h - k + 1, w - k + 1);
    let mut rows = vec![0.0; h * ow];
    for i in 0..h {
        for j in 0..ow {
            rows[i * ow + j] = (0..k).map(|t| win[t] * plane[i * w + j + t]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for i in 0..oh {
        for j in 0..ow {
            out[i * ow + j] = (0..k).map(|t| win[t] * rows[(i + t) * ow + j]).sum();
        }
    }
    out
}

/// Mean structural similarity with an 11×11 Gaussian window (σ = 1.5),
/// evaluated where the window fits, averaged over channels and positions.
pub fn ssim(a: &Tensor, b: &Tensor) -> Result<f64> {
    ssim_with_peak(a, b, DEFAULT_PEAK)
}

pub fn ssim_with_peak(a: &Tensor, b: &Tensor, peak: f64) -> Result<f64> {
    a.expect_same_shape(b)?;
    let s = a.shape();
    if s.height < SSIM_WINDOW || s.width < SSIM_WINDOW {
        return Err(Error::ShapeMismatch(format!(
            "SSIM needs spatial size >= {SSIM_WINDOW}, got {}x{}",
            s.height, s.width
        )));
    }
    let c1 = (0.01 * peak) * (0.01 * peak);
    let c2 = (0.03 * peak) * (0.03 * peak);
    let win = gaussian_window();
    let (h, w) = (s.height, s.width);
    let (mut total, mut count) = (0.0, 0usize);
    for (pa, pb) in a.planes().zip(b.planes()) {
        let aa: Vec<f64> = pa.iter().map(|v| v * v).collect();
        let bb: Vec<f64> = pb.iter().map(|v| v * v).collect();
        let ab: Vec<f64> = pa.iter().zip(pb).map(|(x, y)| x * y).collect();
        let mu_a = filter_valid(pa, h, w, &win);
        let mu_b = filter_valid(pb, h, w, &win);
        let e_aa = filter_valid(&aa, h, w, &win);
        let e_bb = filter_valid(&bb, h, w, &win);
        let e_ab = filter_valid(&ab, h, w, &win);
        for k in 0..mu_a.len() {
            let (ma, mb) = (mu_a[k], mu_b[k]);
            let va = e_aa[k] - ma * ma;
            let vb = e_bb[k] - mb * mb;
            let cov = e_ab[k] - ma * mb;
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// Outcome at one displacement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivRecord {
    pub g: Displacement,
    /// PSNR between `f(T_g x)` and `T_g f(x)`.
    pub error_psnr: Option<f64>,
    /// PSNR between `f(T_g x)` and `T_g x_ref`.
    pub restoration_psnr: Option<f64>,
}

impl EquivRecord {
    /// The value aggregated into the report: the equivariance error when
    /// measured, otherwise the restoration PSNR.
    pub fn headline(&self) -> Option<f64> {
        self.error_psnr.or(self.restoration_psnr)
    }
}

/// Worst restoration PSNR among displacements up to `max_disp`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdversarialLevel {
    pub max_disp: f64,
    pub worst_db: f64,
    pub worst_g: Displacement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivReport {
    pub records: Vec<EquivRecord>,
    pub mean_db: f64,
    pub std_db: f64,
    pub n: usize,
    pub adversarial: Vec<AdversarialLevel>,
}

impl EquivReport {
    /// Sorts records by `(gx, gy)` and computes the aggregates.
    pub fn from_records(mut records: Vec<EquivRecord>, adversarial: Vec<AdversarialLevel>) -> Self {
        records.sort_by(|a, b| {
            a.g.gx.total_cmp(&b.g.gx).then(a.g.gy.total_cmp(&b.g.gy))
        });
        let values: Vec<f64> = records.iter().filter_map(|r| r.headline()).collect();
        let (mean_db, std_db) = db_stats(&values);
        EquivReport { n: values.len(), records, mean_db, std_db, adversarial }
    }

    /// Pools several reports (e.g. one per image batch) into one.
    pub fn merge(reports: &[EquivReport]) -> Self {
        let records = reports.iter().flat_map(|r| r.records.iter().copied()).collect();
        EquivReport::from_records(records, Vec::new())
    }
}

/// Measures `f` at one displacement. `fx` must be `f(x)`; batch samples are
/// scored separately and their PSNRs averaged.
pub fn equiv_record<F>(
    f: &F,
    x: &Tensor,
    fx: &Tensor,
    g: Displacement,
    reference: Option<&Tensor>,
) -> Result<EquivRecord>
where
    F: Fn(&Tensor) -> Result<Tensor> + ?Sized,
{
    let y = f(&translate(x, g))?;
    let expected = translate(fx, g);
    let error_psnr = Some(mean_db(&psnr_per_sample(&y, &expected, DEFAULT_PEAK)?));
    let restoration_psnr = match reference {
        Some(r) => Some(mean_db(&psnr_per_sample(&y, &translate(r, g), DEFAULT_PEAK)?)),
        None => None,
    };
    Ok(EquivRecord { g, error_psnr, restoration_psnr })
}

/// Equivariance error of `f` at every displacement.
pub fn equiv<F>(
    f: &F,
    x: &Tensor,
    displacements: &[Displacement],
    reference: Option<&Tensor>,
) -> Result<EquivReport>
where
    F: Fn(&Tensor) -> Result<Tensor> + ?Sized,
{
    let fx = f(x)?;
    let records = displacements
        .iter()
        .map(|&g| equiv_record(f, x, &fx, g, reference))
        .collect::<Result<Vec<_>>>()?;
    Ok(EquivReport::from_records(records, Vec::new()))
}

/// Restoration PSNR of `f(T_g x)` against `T_g x_ref` at one displacement.
pub fn restoration_record<F>(f: &F, x: &Tensor, x_ref: &Tensor, g: Displacement) -> Result<EquivRecord>
where
    F: Fn(&Tensor) -> Result<Tensor> + ?Sized,
{
    let y = f(&translate(x, g))?;
    let db = mean_db(&psnr_per_sample(&y, &translate(x_ref, g), DEFAULT_PEAK)?);
    Ok(EquivRecord { g, error_psnr: None, restoration_psnr: Some(db) })
}

/// Cumulative worst case over the square displacement grid: level `l`
/// covers every grid point with Chebyshev length at most `l * step`.
pub fn adversarial_levels(records: &[EquivRecord], max_disp: f64, step: f64) -> Vec<AdversarialLevel> {
    let rings = grid_rings(max_disp, step);
    let mut levels = Vec::with_capacity(rings);
    let mut worst: Option<(f64, Displacement)> = None;
    for level in 1..=rings {
        for r in records {
            let ring = libm::round(r.g.max_abs() / step) as usize;
            if ring != level {
                continue;
            }
            let Some(db) = r.restoration_psnr else { continue };
            if worst.is_none_or(|(w, _)| db < w) {
                worst = Some((db, r.g));
            }
        }
        if let Some((worst_db, worst_g)) = worst {
            levels.push(AdversarialLevel { max_disp: level as f64 * step, worst_db, worst_g });
        }
    }
    levels
}

/// Worst-case restoration PSNR over translations of growing magnitude.
pub fn adversarial_sweep<F>(
    f: &F,
    x: &Tensor,
    x_ref: &Tensor,
    max_disp: f64,
    step: f64,
) -> Result<EquivReport>
where
    F: Fn(&Tensor) -> Result<Tensor> + ?Sized,
{
    let grid = translate_adversarial_grid(max_disp, step)?;
    let records = grid
        .iter()
        .map(|&g| restoration_record(f, x, x_ref, g))
        .collect::<Result<Vec<_>>>()?;
    let levels = adversarial_levels(&records, max_disp, step);
    Ok(EquivReport::from_records(records, levels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synthetic_images;
    use crate::Rng;
    use core::f64::consts::PI;

    /// Direct SSIM: explicit 2-D window, explicit moments.
    fn ssim_oracle(a: &Tensor, b: &Tensor) -> f64 {
        let s = a.shape();
        let g = gaussian_window();
        let (c1, c2) = (1e-4, 9e-4);
        let mut total = 0.0;
        let mut n = 0;
        for (pa, pb) in a.planes().zip(b.planes()) {
            for i in 0..=s.height - 11 {
                for j in 0..=s.width - 11 {
                    let (mut ma, mut mb) = (0.0, 0.0);
                    for u in 0..11 {
                        for v in 0..11 {
                            let wt = g[u] * g[v];
                            ma += wt * pa[(i + u) * s.width + j + v];
                            mb += wt * pb[(i + u) * s.width + j + v];
                        }
                    }
                    let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
                    for u in 0..11 {
                        for v in 0..11 {
                            let wt = g[u] * g[v];
                            let da = pa[(i + u) * s.width + j + v] - ma;
                            let db = pb[(i + u) * s.width + j + v] - mb;
                            va += wt * da * da;
                            vb += wt * db * db;
                            cov += wt * da * db;
                        }
                    }
                    total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                        / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                    n += 1;
                }
            }
        }
        total / n as f64
    }

    fn psnr_oracle(a: &Tensor, b: &Tensor) -> f64 {
        let d = a.sub(b).unwrap();
        let mse = d.data().iter().map(|v| v * v).sum::<f64>() / d.data().len() as f64;
        -10.0 * libm::log10(mse)
    }

    #[test]
    fn psnr_examples() {
        let a = Rng::new(0).randn((1, 3, 8, 8));
        assert_eq!(psnr(&a, &a, 1.0).unwrap(), f64::INFINITY);
        let b = a.map(|v| v + 0.1);
        assert!((psnr(&a, &b, 1.0).unwrap() - 20.0).abs() < 1e-9);
        let b = a.map(|v| v + 0.01);
        assert!((psnr(&a, &b, 1.0).unwrap() - 40.0).abs() < 1e-9);
        assert!(psnr(&a, &Tensor::zeros((1, 3, 8, 9)), 1.0).is_err());
    }

    #[test]
    fn metrics_match_direct_formulas() {
        let mut rng = Rng::new(1);
        for _ in 0..5 {
            let a = synthetic_images(&mut rng, 1, 2, 16).unwrap();
            let b = a.add(&rng.randn((1, 2, 16, 16)).scale(0.05)).unwrap();
            assert!((psnr(&a, &b, 1.0).unwrap() - psnr_oracle(&a, &b)).abs() < 1e-9);
            assert!((ssim(&a, &b).unwrap() - ssim_oracle(&a, &b)).abs() < 1e-9);
        }
    }

    #[test]
    fn ssim_examples() {
        let a = synthetic_images(&mut Rng::new(2), 1, 3, 16).unwrap();
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!(ssim(&a, &a.map(|v| v + 1e-3)).unwrap() > 0.99);

        let checker = Tensor::from_fn((1, 1, 11, 11), |_, _, i, j| ((i + j) % 2) as f64);
        let inverted = checker.map(|v| 1.0 - v);
        let score = ssim(&checker, &inverted).unwrap();
        assert!(score < 0.0, "{score}");
        assert!((score - ssim_oracle(&checker, &inverted)).abs() < 1e-12);

        assert!(ssim(&Tensor::zeros((1, 1, 10, 12)), &Tensor::zeros((1, 1, 10, 12))).is_err());
    }

    #[test]
    fn identity_and_constant_maps_are_exactly_equivariant() {
        let x = synthetic_images(&mut Rng::new(3), 2, 1, 16).unwrap();
        let grid = [Displacement::new(0.5, 0.0), Displacement::new(-1.3, 2.2)];
        let identity = |t: &Tensor| Ok(t.clone());
        let report = equiv(&identity, &x, &grid, None).unwrap();
        assert!(report.records.iter().all(|r| r.error_psnr == Some(f64::INFINITY)));
        assert_eq!(report.mean_db, IDENTICAL_CAP_DB);

        let global_mean = |t: &Tensor| Ok(Tensor::full(t.shape(), t.mean()));
        let report = equiv(&global_mean, &x, &grid, None).unwrap();
        for r in &report.records {
            let e = r.error_psnr.unwrap();
            assert!(e.is_infinite() || e > 250.0, "{e}");
        }
    }

    #[test]
    fn squared_cosine_aliasing_matches_closed_form() {
        // cos(2π 5j/16)² carries frequency 10, which aliases to 6 on a grid
        // of 16. The equivariance error is then a pure cosine of amplitude
        // |sin(πg)|, so MSE = sin²(πg)/2.
        let x = Tensor::from_fn((1, 1, 16, 16), |_, _, _, j| libm::cos(2.0 * PI * 5.0 * j as f64 / 16.0));
        let square = |t: &Tensor| Ok(t.map(|v| v * v));
        for gx in [0.5, 0.25, 0.1] {
            let report = equiv(&square, &x, &[Displacement::horizontal(gx)], None).unwrap();
            let s = libm::sin(PI * gx);
            let expected = 10.0 * libm::log10(2.0 / (s * s));
            let got = report.records[0].error_psnr.unwrap();
            assert!((got - expected).abs() < 0.1, "g={gx}: {got} vs {expected}");
        }
    }

    #[test]
    fn adversarial_sweep_of_identity() {
        let x = synthetic_images(&mut Rng::new(4), 1, 1, 16).unwrap();
        let identity = |t: &Tensor| Ok(t.clone());
        let report = adversarial_sweep(&identity, &x, &x, 0.5, 0.25).unwrap();
        assert_eq!(report.records.len(), 24);
        assert_eq!(report.adversarial.len(), 2);
        assert!(report.adversarial.iter().all(|l| l.worst_db == f64::INFINITY));
    }

    #[test]
    fn adversarial_minima_do_not_increase() {
        let x = synthetic_images(&mut Rng::new(5), 1, 1, 16).unwrap();
        let clip = |t: &Tensor| Ok(t.map(|v| v.clamp(0.2, 0.8)));
        let report = adversarial_sweep(&clip, &x, &x, 1.0, 0.25).unwrap();
        assert_eq!(report.adversarial.len(), 4);
        for pair in report.adversarial.windows(2) {
            assert!(pair[1].worst_db <= pair[0].worst_db);
        }
    }

    #[test]
    fn stats_cap_infinite_values() {
        let (m, s) = db_stats(&[f64::INFINITY, 100.0]);
        assert_eq!(m, 200.0);
        assert_eq!(s, 100.0);
    }
}
