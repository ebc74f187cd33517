use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// A bivariate normal with full covariance `[[xx, xy], [xy, yy]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Gaussian2 {
    pub mean: Point,
    pub cov: [[f64; 2]; 2],
}

impl Gaussian2 {
    fn det(&self) -> f64 {
        self.cov[0][0] * self.cov[1][1] - self.cov[0][1] * self.cov[1][0]
    }

    pub fn is_positive_definite(&self) -> bool {
        self.cov[0][0] > 0.0 && self.det() > 0.0 && self.cov[0][1] == self.cov[1][0]
    }

    pub fn log_pdf(&self, x: Point) -> f64 {
        let det = self.det();
        let (dx, dy) = (x[0] - self.mean[0], x[1] - self.mean[1]);
        let [[a, b], [_, d]] = self.cov;
        let maha = (d * dx * dx - 2.0 * b * dx * dy + a * dy * dy) / det;
        -0.5 * maha - (2.0 * PI).ln() - 0.5 * det.ln()
    }

    fn min_eigenvalue(&self) -> f64 {
        let [[a, b], [_, d]] = self.cov;
        (a + d) / 2.0 - (((a - d) / 2.0).powi(2) + b * b).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mixture {
    pub weights: Vec<f64>,
    pub components: Vec<Gaussian2>,
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl Mixture {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    /// Free parameters of a `k`-component bivariate mixture.
    pub fn n_params(k: usize) -> usize {
        6 * k - 1
    }

    fn log_joint(&self, x: Point, out: &mut [f64]) {
        for (o, (w, c)) in out
            .iter_mut()
            .zip(self.weights.iter().zip(&self.components))
        {
            *o = w.ln() + c.log_pdf(x);
        }
    }

    pub fn log_likelihood(&self, points: &[Point]) -> f64 {
        let mut buf = vec![0.0; self.k()];
        points
            .iter()
            .map(|&x| {
                self.log_joint(x, &mut buf);
                log_sum_exp(&buf)
            })
            .sum()
    }

    /// Posterior component probabilities, one row per point.
    pub fn responsibilities(&self, points: &[Point]) -> Vec<Vec<f64>> {
        let mut buf = vec![0.0; self.k()];
        points
            .iter()
            .map(|&x| {
                self.log_joint(x, &mut buf);
                let total = log_sum_exp(&buf);
                buf.iter().map(|l| (l - total).exp()).collect()
            })
            .collect()
    }

    /// Most probable component per point; ties go to the lower index.
    pub fn predict(&self, points: &[Point]) -> Vec<usize> {
        self.responsibilities(points)
            .iter()
            .map(|r| argmax(r))
            .collect()
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmConfig {
    pub max_iter: usize,
    /// Stop once the log-likelihood gains less than this.
    pub tol: f64,
    pub restarts: usize,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            max_iter: 500,
            tol: 1e-6,
            restarts: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmFit {
    pub mixture: Mixture,
    pub log_likelihood: f64,
    /// Log-likelihood after every E-step.
    pub trace: Vec<f64>,
    pub converged: bool,
}

/// Covariance floor: `1e-6 · trace(Σ_data) / 2`.
pub fn covariance_floor(points: &[Point]) -> f64 {
    let n = points.len() as f64;
    let mut trace = 0.0;
    for d in 0..2 {
        let m = points.iter().map(|p| p[d]).sum::<f64>() / n;
        trace += points.iter().map(|p| (p[d] - m).powi(2)).sum::<f64>() / n;
    }
    let floor = 1e-6 * trace / 2.0;
    if floor > 0.0 {
        floor
    } else {
        1e-6
    }
}

fn sq_dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// k-means++ seeding. `None` when fewer than `k` distinct points exist.
fn kmeans_pp(points: &[Point], k: usize, rng: &mut ChaCha8Rng) -> Option<Vec<Point>> {
    let mut centers = vec![points[rng.gen_range(0..points.len())]];
    let mut d2: Vec<f64> = points.iter().map(|&p| sq_dist(p, centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        if !(total > 0.0) {
            return None;
        }
        let mut target = rng.gen::<f64>() * total;
        let mut pick = points.len() - 1;
        for (i, &d) in d2.iter().enumerate() {
            if target < d {
                pick = i;
                break;
            }
            target -= d;
        }
        if d2[pick] == 0.0 {
            pick = d2.iter().rposition(|&d| d > 0.0)?;
        }
        let c = points[pick];
        centers.push(c);
        for (d, &p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, c));
        }
    }
    Some(centers)
}

/// M-step from soft assignments `resp` (row per point). `None` if a component
/// loses all of its mass or stays singular after regularizing.
fn m_step(points: &[Point], resp: &[Vec<f64>], k: usize, floor: f64) -> Option<Mixture> {
    let n = points.len() as f64;
    let mut weights = Vec::with_capacity(k);
    let mut components = Vec::with_capacity(k);
    for j in 0..k {
        let nk: f64 = resp.iter().map(|r| r[j]).sum();
        if !(nk > 1e-10 * n) {
            return None;
        }
        let mut mean = [0.0; 2];
        for (r, p) in resp.iter().zip(points) {
            mean[0] += r[j] * p[0];
            mean[1] += r[j] * p[1];
        }
        mean = [mean[0] / nk, mean[1] / nk];
        let (mut xx, mut xy, mut yy) = (0.0, 0.0, 0.0);
        for (r, p) in resp.iter().zip(points) {
            let (dx, dy) = (p[0] - mean[0], p[1] - mean[1]);
            xx += r[j] * dx * dx;
            xy += r[j] * dx * dy;
            yy += r[j] * dy * dy;
        }
        let mut g = Gaussian2 {
            mean,
            cov: [[xx / nk, xy / nk], [xy / nk, yy / nk]],
        };
        if g.min_eigenvalue() < floor {
            g.cov[0][0] += floor;
            g.cov[1][1] += floor;
        }
        if !g.is_positive_definite() {
            return None;
        }
        weights.push(nk / n);
        components.push(g);
    }
    Some(Mixture {
        weights,
        components,
    })
}

/// One EM run from a k-means++ start.
fn em_once(
    points: &[Point],
    k: usize,
    config: &EmConfig,
    floor: f64,
    rng: &mut ChaCha8Rng,
) -> Option<EmFit> {
    let centers = kmeans_pp(points, k, rng)?;
    let mut resp: Vec<Vec<f64>> = points
        .iter()
        .map(|&p| {
            let mut row = vec![0.0; k];
            let nearest = (0..k)
                .min_by(|&a, &b| sq_dist(p, centers[a]).total_cmp(&sq_dist(p, centers[b])))
                .expect("k >= 1");
            row[nearest] = 1.0;
            row
        })
        .collect();
    let mut mixture = m_step(points, &resp, k, floor)?;
    let mut trace = Vec::new();
    let mut buf = vec![0.0; k];
    let mut converged = false;
    for _ in 0..config.max_iter {
        // E-step
        let mut ll = 0.0;
        for (row, &x) in resp.iter_mut().zip(points) {
            mixture.log_joint(x, &mut buf);
            let total = log_sum_exp(&buf);
            ll += total;
            for (r, l) in row.iter_mut().zip(&buf) {
                *r = (l - total).exp();
            }
        }
        if !ll.is_finite() {
            return None;
        }
        let gain = trace.last().map(|&prev| ll - prev);
        trace.push(ll);
        if gain.is_some_and(|g| g < config.tol) {
            converged = true;
            break;
        }
        mixture = m_step(points, &resp, k, floor)?;
    }
    let log_likelihood = *trace.last()?;
    Some(EmFit {
        mixture,
        log_likelihood,
        trace,
        converged,
    })
}

fn restart_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn stream_id(k: usize, fold: usize, restart: usize) -> u64 {
    ((k as u64) << 32) | ((fold as u64) << 16) | restart as u64
}

fn fit_restarts(
    points: &[Point],
    k: usize,
    fold: usize,
    config: &EmConfig,
    seed: u64,
) -> Result<EmFit> {
    if points.len() < k {
        return Err(Error::Fit(format!(
            "{} points cannot support {k} components",
            points.len()
        )));
    }
    let floor = covariance_floor(points);
    (0..config.restarts.max(1))
        .into_par_iter()
        .filter_map(|r| {
            em_once(
                points,
                k,
                config,
                floor,
                &mut restart_rng(seed, stream_id(k, fold, r)),
            )
        })
        .collect::<Vec<_>>()
        .into_iter()
        // collect keeps restart order, so ties resolve to the earliest restart
        .reduce(|best, fit| {
            if fit.log_likelihood > best.log_likelihood {
                fit
            } else {
                best
            }
        })
        .ok_or_else(|| Error::Fit(format!("all EM restarts failed for K = {k}")))
}

/// Fits a `k`-component mixture with EM, keeping the best of the restarts.
pub fn fit_em(points: &[Point], k: usize, config: &EmConfig, seed: u64) -> Result<EmFit> {
    if k == 0 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    check_points(points)?;
    fit_restarts(points, k, usize::MAX >> 48, config, seed)
}

fn check_points(points: &[Point]) -> Result<()> {
    if points
        .iter()
        .any(|p| !p[0].is_finite() || !p[1].is_finite())
    {
        return Err(Error::InvalidArgument("points must be finite".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GmmConfig {
    pub k_max: usize,
    pub folds: usize,
    pub em: EmConfig,
    pub seed: u64,
}

impl Default for GmmConfig {
    fn default() -> Self {
        GmmConfig {
            k_max: 10,
            folds: 5,
            em: EmConfig::default(),
            seed: 0,
        }
    }
}

/// Held-out information criteria for one K. Infinite when some fold could
/// not be fitted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvScore {
    pub k: usize,
    pub mean_bic: f64,
    pub mean_aic: f64,
    pub fold_bic: Vec<f64>,
    pub fold_aic: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GmmModel {
    pub selected_k: usize,
    pub mixture: Mixture,
    pub log_likelihood: f64,
    pub cv: Vec<CvScore>,
    #[serde(skip)]
    pub responsibilities: Vec<Vec<f64>>,
    pub assignment: Vec<usize>,
}

impl GmmModel {
    /// K with the smallest mean held-out AIC.
    pub fn aic_k(&self) -> usize {
        select(&self.cv, |s| s.mean_aic)
    }
}

fn select(cv: &[CvScore], key: impl Fn(&CvScore) -> f64) -> usize {
    let mut best = &cv[0];
    for s in &cv[1..] {
        if key(s) < key(best) {
            best = s;
        }
    }
    best.k
}

/// Splits `0..n` into `folds` shuffled, near-equal test sets.
fn fold_indices(n: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut restart_rng(seed, u64::MAX));
    let mut out = vec![Vec::new(); folds];
    for (pos, i) in idx.into_iter().enumerate() {
        out[pos % folds].push(i);
    }
    for f in &mut out {
        f.sort_unstable();
    }
    out
}

/// Chooses the number of components by cross-validated held-out BIC over
/// `1..=k_max`, then refits on all points.
///
/// Each fold scores `-2·LL_test + p·ln(n_test)` (BIC) and
/// `-2·LL_test + 2p` (AIC) with parameters fit on the remaining folds. Ties in
/// mean BIC go to the smaller K.
pub fn fit_gmm(points: &[Point], config: &GmmConfig) -> Result<GmmModel> {
    check_points(points)?;
    if config.k_max == 0 || config.folds < 2 {
        return Err(Error::InvalidArgument(
            "need k_max >= 1 and at least 2 folds".into(),
        ));
    }
    if points.len() < 2 * config.k_max || points.len() < config.folds {
        return Err(Error::InsufficientData(format!(
            "{} points is too few for up to {} components",
            points.len(),
            config.k_max
        )));
    }
    let folds = fold_indices(points.len(), config.folds, config.seed);
    let jobs: Vec<(usize, usize)> = (1..=config.k_max)
        .flat_map(|k| (0..config.folds).map(move |f| (k, f)))
        .collect();
    let scores: Vec<(f64, f64)> = jobs
        .par_iter()
        .map(|&(k, f)| {
            let test: Vec<Point> = folds[f].iter().map(|&i| points[i]).collect();
            let train: Vec<Point> = folds
                .iter()
                .enumerate()
                .filter(|&(g, _)| g != f)
                .flat_map(|(_, idx)| idx.iter().map(|&i| points[i]))
                .collect();
            match fit_restarts(&train, k, f, &config.em, config.seed) {
                Ok(fit) => {
                    let ll = fit.mixture.log_likelihood(&test);
                    let p = Mixture::n_params(k) as f64;
                    (
                        -2.0 * ll + p * (test.len() as f64).ln(),
                        -2.0 * ll + 2.0 * p,
                    )
                }
                Err(_) => (f64::INFINITY, f64::INFINITY),
            }
        })
        .collect();
    let cv: Vec<CvScore> = (1..=config.k_max)
        .map(|k| {
            let s = &scores[(k - 1) * config.folds..k * config.folds];
            let fold_bic: Vec<f64> = s.iter().map(|x| x.0).collect();
            let fold_aic: Vec<f64> = s.iter().map(|x| x.1).collect();
            CvScore {
                k,
                mean_bic: fold_bic.iter().sum::<f64>() / config.folds as f64,
                mean_aic: fold_aic.iter().sum::<f64>() / config.folds as f64,
                fold_bic,
                fold_aic,
            }
        })
        .collect();
    if cv.iter().all(|s| !s.mean_bic.is_finite()) {
        return Err(Error::Fit(
            "no component count could be cross-validated".into(),
        ));
    }
    let selected_k = select(&cv, |s| s.mean_bic);
    let fit = fit_restarts(points, selected_k, config.folds, &config.em, config.seed)?;
    let responsibilities = fit.mixture.responsibilities(points);
    let assignment = responsibilities.iter().map(|r| argmax(r)).collect();
    Ok(GmmModel {
        selected_k,
        mixture: fit.mixture,
        log_likelihood: fit.log_likelihood,
        cv,
        responsibilities,
        assignment,
    })
}

#[cfg(test)]
mod tests {
    use rand_distr::{Distribution, StandardNormal};

    use super::*;

    fn cloud(rng: &mut ChaCha8Rng, n: usize, center: Point, sd: f64) -> Vec<Point> {
        (0..n)
            .map(|_| {
                let dx: f64 = StandardNormal.sample(rng);
                let dy: f64 = StandardNormal.sample(rng);
                [center[0] + sd * dx, center[1] + sd * dy]
            })
            .collect()
    }

    #[test]
    fn log_pdf_standard_normal() {
        let g = Gaussian2 {
            mean: [0.0, 0.0],
            cov: [[1.0, 0.0], [0.0, 1.0]],
        };
        assert!((g.log_pdf([0.0, 0.0]) + (2.0 * PI).ln()).abs() < 1e-12);
        // correlated case against the explicit inverse
        let g = Gaussian2 {
            mean: [1.0, -1.0],
            cov: [[2.0, 0.5], [0.5, 1.0]],
        };
        let (dx, dy) = (0.5, 1.0);
        let det = 1.75;
        let maha = (1.0 * dx * dx - 2.0 * 0.5 * dx * dy + 2.0 * dy * dy) / det;
        let expected = -0.5 * maha - (2.0 * PI).ln() - 0.5 * f64::ln(det);
        assert!((g.log_pdf([1.5, 0.0]) - expected).abs() < 1e-12);
    }

    #[test]
    fn em_trace_is_monotone() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut pts = cloud(&mut rng, 60, [0.0, 0.0], 1.0);
            pts.extend(cloud(&mut rng, 40, [3.0, 1.0], 0.7));
            let fit = fit_em(&pts, 3, &EmConfig::default(), seed).unwrap();
            for w in fit.trace.windows(2) {
                assert!(
                    w[1] >= w[0] - 1e-9 * w[0].abs(),
                    "seed {seed}: {} -> {}",
                    w[0],
                    w[1]
                );
            }
            let total: f64 = fit.mixture.weights.iter().sum();
            assert!((total - 1.0).abs() < 1e-9);
            for r in fit.mixture.responsibilities(&pts) {
                assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
            assert!(fit
                .mixture
                .components
                .iter()
                .all(Gaussian2::is_positive_definite));
        }
    }

    #[test]
    fn two_separated_clouds() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut pts = cloud(&mut rng, 100, [0.0, 0.0], 1.0);
        pts.extend(cloud(&mut rng, 100, [10.0, 0.0], 1.0));
        let model = fit_gmm(
            &pts,
            &GmmConfig {
                seed: 42,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(model.selected_k, 2);
        let first = model.assignment[0];
        let correct = (0..200)
            .filter(|&i| (model.assignment[i] == first) == (i < 100))
            .count();
        assert!(correct as f64 / 200.0 >= 0.98, "{correct}");
    }

    #[test]
    fn single_cloud_selects_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts = cloud(&mut rng, 200, [3.0, -2.0], 2.0);
        let model = fit_gmm(
            &pts,
            &GmmConfig {
                seed: 5,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(model.selected_k, 1);
        assert_eq!(model.cv.len(), 10);
    }

    #[test]
    fn identical_points_fall_back_to_one_component() {
        let pts = vec![[4.0, 4.0]; 30];
        let model = fit_gmm(&pts, &GmmConfig::default()).unwrap();
        assert_eq!(model.selected_k, 1);
        assert!(model.cv[1..].iter().all(|s| s.mean_bic.is_infinite()));
    }

    #[test]
    fn deterministic_given_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut pts = cloud(&mut rng, 30, [0.0, 0.0], 1.0);
        pts.extend(cloud(&mut rng, 30, [5.0, 5.0], 1.0));
        let cfg = GmmConfig {
            seed: 3,
            ..Default::default()
        };
        assert_eq!(fit_gmm(&pts, &cfg).unwrap(), fit_gmm(&pts, &cfg).unwrap());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_gmm(&[[0.0, 0.0]; 5], &GmmConfig::default()).is_err());
        let mut pts = vec![[0.0, 1.0]; 30];
        pts[3] = [f64::NAN, 0.0];
        assert!(fit_gmm(&pts, &GmmConfig::default()).is_err());
    }
}
