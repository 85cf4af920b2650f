//! Seeded Monte Carlo studies.
//!
//! Trial `k` of a study phase always draws from
//! `RngStream::substream(phase, k)` of the study root, trials run through
//! rayon, and aggregation happens sequentially in trial order. Reports are
//! therefore identical for any worker count.

use rayon::prelude::*;
use serde::Serialize;

use crate::domains::{in_section, in_u, DomainEcho, DomainSpec};
use crate::error::{Error, Result};
use crate::lift::{cross, rough_distance, RoughLift};
use crate::path::{sample_brownian, DiscretePath};
use crate::rng::RngStream;
use crate::variation::{dyadic_norm, level2_norm, VarParams};

/// Two-sided 99% standard normal quantile.
pub const WILSON_Z99: f64 = 2.5758293035489;

const PHASE_MEASURE: u16 = 1;
const PHASE_CONVERGENCE: u16 = 2;
const PHASE_CROSS: u16 = 3;
const PHASE_CONDITIONAL: u16 = 4;
const PHASE_PREFIX: u16 = 5;
const PHASE_TAIL: u16 = 6;
const PHASE_OVERLAP: u16 = 7;

/// Wilson score interval for `hits` successes out of `trials`.
pub fn wilson_interval(hits: u64, trials: u64, z: f64) -> (f64, f64) {
    assert!(trials > 0 && hits <= trials);
    let n = trials as f64;
    let ph = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (ph + z2 / (2.0 * n)) / denom;
    let half = z * (ph * (1.0 - ph) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // clamp so that the interval always contains the point estimate
    ((center - half).max(0.0).min(ph), (center + half).min(1.0).max(ph))
}

/// Binomial proportion with its Wilson 99% interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub trials: u64,
    pub hits: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Estimate {
    pub fn new(hits: u64, trials: u64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::InvalidParameter("trials must be positive".into()));
        }
        if hits > trials {
            return Err(Error::InvalidParameter(format!("hits {hits} exceed trials {trials}")));
        }
        let (ci_low, ci_high) = wilson_interval(hits, trials, WILSON_Z99);
        Ok(Self { trials, hits, estimate: hits as f64 / trials as f64, ci_low, ci_high })
    }

    /// Plug-in standard error `sqrt(p (1 - p) / n)`.
    pub fn std_error(&self) -> f64 {
        (self.estimate * (1.0 - self.estimate) / self.trials as f64).sqrt()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimateReport {
    #[serde(flatten)]
    pub estimate: Estimate,
    pub seed: u64,
    pub spec: DomainEcho,
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    Ok(())
}

/// Fraction of Brownian samples on the spec's grid that fall in the set.
pub fn estimate_measure(spec: &DomainSpec, trials: u64, root: RngStream) -> Result<EstimateReport> {
    check_trials(trials)?;
    let (dim, level) = (spec.sample_dim(), spec.level());
    let flags: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|k| spec.contains(&sample_brownian(dim, level, &root.substream(PHASE_MEASURE, k))?))
        .collect::<Result<_>>()?;
    let hits = flags.iter().filter(|&&b| b).count() as u64;
    Ok(EstimateReport { estimate: Estimate::new(hits, trials)?, seed: root.seed, spec: spec.echo() })
}

/// Quantities tracked by [`convergence_study`] as functions of the
/// projection level `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceQuantity {
    /// `||lift(P_n w) - lift(w)||_{C^p}`.
    RoughDistance,
    /// `||(w - P_n w)_2||_{p/2}`.
    SecondLevel,
    /// `||C_{w - P_n w, P_n w}||_{p/2}`.
    Cross,
}

impl ConvergenceQuantity {
    pub const ALL: [ConvergenceQuantity; 3] =
        [ConvergenceQuantity::RoughDistance, ConvergenceQuantity::SecondLevel, ConvergenceQuantity::Cross];

    pub fn name(self) -> &'static str {
        match self {
            ConvergenceQuantity::RoughDistance => "rough_distance",
            ConvergenceQuantity::SecondLevel => "second_level",
            ConvergenceQuantity::Cross => "cross",
        }
    }

    fn evaluate(self, w: &DiscretePath, lift_w: &RoughLift, pn: &DiscretePath, params: VarParams) -> Result<f64> {
        let p = params.p();
        match self {
            ConvergenceQuantity::RoughDistance => rough_distance(&RoughLift::new(pn), lift_w, p),
            ConvergenceQuantity::SecondLevel => level2_norm(&RoughLift::new(&w.sub(pn)?), p),
            ConvergenceQuantity::Cross => cross(&w.sub(pn)?, pn)?.norm(params.half_p()),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceConfig {
    /// Fine grid level `N` of the sampled paths.
    pub level: u32,
    pub ns: Vec<u32>,
    pub trials: u64,
    pub dim: usize,
    pub params: VarParams,
    pub quantities: Vec<ConvergenceQuantity>,
}

impl ConvergenceConfig {
    pub fn new(level: u32, ns: Vec<u32>, trials: u64, dim: usize, params: VarParams) -> Self {
        Self { level, ns, trials, dim, params, quantities: ConvergenceQuantity::ALL.to_vec() }
    }

    fn validate(&self) -> Result<()> {
        check_trials(self.trials)?;
        if self.dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if self.ns.is_empty() || self.quantities.is_empty() {
            return Err(Error::InvalidParameter("need at least one level n and one quantity".into()));
        }
        if self.ns.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("levels n must be strictly increasing".into()));
        }
        let top = *self.ns.last().unwrap();
        if top >= self.level {
            return Err(Error::InvalidParameter(format!(
                "projection level {top} must be below the sampling level {}",
                self.level
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: u32,
    pub mean: f64,
    pub std: f64,
    pub trials: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuantitySeries {
    pub quantity: ConvergenceQuantity,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log2(mean)` against `n`; `None` when fewer than
    /// two rows have a positive mean.
    pub slope: Option<f64>,
    /// Root-mean-square residual of that fit.
    pub residual: Option<f64>,
}

impl QuantitySeries {
    /// Whether `mean` never increases over rows with `n >= from`.
    pub fn non_increasing_from(&self, from: u32) -> bool {
        let tail: Vec<f64> = self.rows.iter().filter(|r| r.n >= from).map(|r| r.mean).collect();
        tail.windows(2).all(|w| w[1] <= w[0])
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceTable {
    pub config: ConvergenceConfig,
    pub seed: u64,
    pub series: Vec<QuantitySeries>,
}

/// Least-squares line through `(x, y)`; returns slope and RMS residual.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let ss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum();
    Some((slope, (ss / nf).sqrt()))
}

fn mean_std(values: impl Iterator<Item = f64>) -> (f64, f64, usize) {
    let v: Vec<f64> = values.collect();
    let n = v.len();
    let mean = v.iter().sum::<f64>() / n as f64;
    let std = if n > 1 { (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() } else { 0.0 };
    (mean, std, n)
}

/// Decay of the projection error `lift(P_n w)` against the finest-level
/// lift of a Brownian sample.
pub fn convergence_study(config: &ConvergenceConfig, root: RngStream) -> Result<ConvergenceTable> {
    config.validate()?;
    let (nq, nn) = (config.quantities.len(), config.ns.len());
    let per_trial: Vec<Vec<f64>> = (0..config.trials)
        .into_par_iter()
        .map(|k| {
            let w = sample_brownian(config.dim, config.level, &root.substream(PHASE_CONVERGENCE, k))?;
            let lift_w = RoughLift::new(&w);
            let mut out = Vec::with_capacity(nq * nn);
            for &n in &config.ns {
                let pn = w.dyadic_project(n)?;
                for q in &config.quantities {
                    out.push(q.evaluate(&w, &lift_w, &pn, config.params)?);
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let series = config
        .quantities
        .iter()
        .enumerate()
        .map(|(qi, &quantity)| {
            let rows: Vec<ConvergenceRow> = config
                .ns
                .iter()
                .enumerate()
                .map(|(ni, &n)| {
                    let (mean, std, _) = mean_std(per_trial.iter().map(|t| t[ni * nq + qi]));
                    ConvergenceRow { n, mean, std, trials: config.trials }
                })
                .collect();
            let (xs, ys): (Vec<f64>, Vec<f64>) =
                rows.iter().filter(|r| r.mean > 0.0).map(|r| (r.n as f64, r.mean.log2())).unzip();
            let fit = fit_line(&xs, &ys);
            QuantitySeries { quantity, rows, slope: fit.map(|f| f.0), residual: fit.map(|f| f.1) }
        })
        .collect();
    Ok(ConvergenceTable { config: config.clone(), seed: root.seed, series })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CrossBoundRow {
    pub scale: f64,
    pub dyadic_norm: f64,
    /// Sample mean of `||C_{w, c z}||_{p/2}^{p/2}`.
    pub mean_power: f64,
    pub std_error: f64,
    /// `mean_power / dyadic_norm^{p/2}`.
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CrossBoundReport {
    pub trials: u64,
    pub dim: usize,
    pub seed: u64,
    pub params: VarParams,
    pub rows: Vec<CrossBoundRow>,
    /// `(max ratio - min ratio) / min ratio` across scalings.
    pub relative_spread: f64,
}

/// Ratio of `E ||C_{w,z}||_{p/2}^{p/2}` to `||z||_{p,kappa}^{p/2}` over
/// scalings `c z`. Every scaling reuses the same Brownian samples.
pub fn cross_bound_study(
    z: &DiscretePath,
    scales: &[f64],
    trials: u64,
    dim: usize,
    params: VarParams,
    root: RngStream,
) -> Result<CrossBoundReport> {
    check_trials(trials)?;
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    if scales.is_empty() || scales.iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
        return Err(Error::InvalidParameter("scales must be positive and finite".into()));
    }
    if !(dyadic_norm(z, params) > 0.0) {
        return Err(Error::InvalidParameter("reference path has zero dyadic norm".into()));
    }
    let half = params.half_p();
    let scaled: Vec<DiscretePath> = scales.iter().map(|&c| z.scale(c)).collect();
    let per_trial: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let w = sample_brownian(dim, z.level(), &root.substream(PHASE_CROSS, k))?;
            scaled.iter().map(|zc| Ok(cross(&w, zc)?.norm(half)?.powf(half))).collect()
        })
        .collect::<Result<_>>()?;
    let rows: Vec<CrossBoundRow> = scales
        .iter()
        .zip(&scaled)
        .enumerate()
        .map(|(s, (&scale, zc))| {
            let (mean, std, n) = mean_std(per_trial.iter().map(|t| t[s]));
            let dn = dyadic_norm(zc, params);
            CrossBoundRow {
                scale,
                dyadic_norm: dn,
                mean_power: mean,
                std_error: std / (n as f64).sqrt(),
                ratio: mean / dn.powf(half),
            }
        })
        .collect();
    let lo = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    let relative_spread = if lo > 0.0 { (hi - lo) / lo } else { 0.0 };
    Ok(CrossBoundReport { trials, dim, seed: root.seed, params, rows, relative_spread })
}

/// Parameters of the conditional-overlap study. The sampled variable splits
/// as a `prefix_dim`-dimensional prefix and one extra coordinate.
#[derive(Clone, Debug, Serialize)]
pub struct OverlapConfig {
    pub level: u32,
    pub prefix_dim: usize,
    pub a: f64,
    pub epsilon: f64,
    pub r: f64,
    pub params: VarParams,
    /// One-dimensional draws for the conditioning event (its rate is the
    /// small-ball probability, accepted draws are the conditional sample).
    pub conditional_trials: u64,
    /// Prefix draws for the prefix event.
    pub prefix_trials: u64,
    /// Independent (prefix, conditional) pairs for the tail probability.
    pub tail_trials: u64,
    /// Prefix candidates, taken from accepted prefix draws, tested for V.
    pub candidates: usize,
    /// Unconditional one-dimensional draws shared by all overlap estimates.
    pub overlap_samples: u64,
    /// Smallest acceptable acceptance rate of the rejection sampler.
    pub acceptance_floor: f64,
}

impl OverlapConfig {
    pub fn new(level: u32, prefix_dim: usize, a: f64, epsilon: f64, r: f64, params: VarParams) -> Self {
        Self {
            level,
            prefix_dim,
            a,
            epsilon,
            r,
            params,
            conditional_trials: 2000,
            prefix_trials: 500,
            tail_trials: 500,
            candidates: 16,
            overlap_samples: 2000,
            acceptance_floor: 1e-4,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r < 1.0 / 3.0) {
            return Err(Error::InvalidParameter(format!("r must lie in (0, 1/3), got {}", self.r)));
        }
        if !(self.a > 0.0) || !(self.epsilon > 0.0) {
            return Err(Error::InvalidParameter("a and epsilon must be positive".into()));
        }
        if self.prefix_dim == 0 {
            return Err(Error::InvalidParameter("prefix dimension must be positive".into()));
        }
        for t in [self.conditional_trials, self.prefix_trials, self.tail_trials, self.overlap_samples] {
            check_trials(t)?;
        }
        if self.candidates == 0 {
            return Err(Error::InvalidParameter("need at least one prefix candidate".into()));
        }
        if !(self.acceptance_floor > 0.0 && self.acceptance_floor < 1.0) {
            return Err(Error::InvalidParameter("acceptance floor must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// One prefix candidate of the overlap study.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PrefixRow {
    /// Index of the prefix draw the candidate came from.
    pub draw: u64,
    /// Conditional measure of its section, estimated on the conditional sample.
    pub conditional_section: f64,
    pub in_v: bool,
    /// Unconditional measure of its section.
    pub section: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OverlapReport {
    pub config: OverlapConfig,
    pub seed: u64,
    /// Probability of the conditioning event for the extra coordinate.
    pub alpha_bar: Estimate,
    /// Probability that the prefix lies in `U_{a,z}`.
    pub alpha: Estimate,
    /// Probability, under the conditional law, that a fresh prefix gives a
    /// cross norm of at least `a`.
    pub tail: Estimate,
    /// `(alpha r)^2`.
    pub tail_bound: f64,
    pub tail_bound_holds: bool,
    pub prefixes: Vec<PrefixRow>,
    /// Fraction of candidates in the empirical V (compare with `1 - r`).
    pub v_fraction: f64,
    pub pairs: usize,
    pub min_overlap: Option<f64>,
    pub min_overlap_se: Option<f64>,
    /// `alpha_bar / 3`.
    pub benchmark: f64,
    /// Combined standard error of `min_overlap - benchmark`.
    pub combined_se: Option<f64>,
    /// `min_overlap >= benchmark - 3 combined_se`; `None` without pairs.
    pub overlap_holds: Option<bool>,
}

fn conditioning_event(w: &DiscretePath, z: &DiscretePath, cfg: &OverlapConfig) -> Result<bool> {
    let half = cfg.params.half_p();
    Ok(dyadic_norm(w, cfg.params) < cfg.epsilon && cross(w, z)?.norm(half)? < cfg.a && cross(z, w)?.norm(half)? < cfg.a)
}

fn cross_max(x: &DiscretePath, y: &DiscretePath, half: f64) -> Result<f64> {
    Ok(cross(x, y)?.norm(half)?.max(cross(y, x)?.norm(half)?))
}

/// Conditional overlap structure of sections over prefixes.
pub fn overlap_study(z: &DiscretePath, cfg: &OverlapConfig, root: RngStream) -> Result<OverlapReport> {
    cfg.validate()?;
    if z.level() != cfg.level {
        return Err(Error::LevelMismatch { left: cfg.level, right: z.level() });
    }
    let half = cfg.params.half_p();

    // (i) conditioning event by direct sampling; accepted draws form the
    // conditional sample
    let draws: Vec<Option<DiscretePath>> = (0..cfg.conditional_trials)
        .into_par_iter()
        .map(|k| {
            let w = sample_brownian(1, cfg.level, &root.substream(PHASE_CONDITIONAL, k))?;
            Ok(conditioning_event(&w, z, cfg)?.then_some(w))
        })
        .collect::<Result<_>>()?;
    let conditional: Vec<DiscretePath> = draws.into_iter().flatten().collect();
    let alpha_bar = Estimate::new(conditional.len() as u64, cfg.conditional_trials)?;
    if conditional.is_empty() || alpha_bar.estimate < cfg.acceptance_floor {
        return Err(Error::RareEvent {
            rate: alpha_bar.estimate,
            floor: cfg.acceptance_floor,
            attempts: cfg.conditional_trials,
        });
    }

    let prefix_hits: Vec<bool> = (0..cfg.prefix_trials)
        .into_par_iter()
        .map(|k| {
            let w = sample_brownian(cfg.prefix_dim, cfg.level, &root.substream(PHASE_PREFIX, k))?;
            in_u(&w, z, cfg.a, cfg.params)
        })
        .collect::<Result<_>>()?;
    let alpha = Estimate::new(prefix_hits.iter().filter(|&&b| b).count() as u64, cfg.prefix_trials)?;

    // (iii) tail under the product of the prefix law and the conditional law
    let tail_flags: Vec<bool> = (0..cfg.tail_trials)
        .into_par_iter()
        .map(|k| {
            let w = sample_brownian(cfg.prefix_dim, cfg.level, &root.substream(PHASE_TAIL, k))?;
            let extra = &conditional[k as usize % conditional.len()];
            Ok(cross_max(&w, extra, half)? >= cfg.a)
        })
        .collect::<Result<_>>()?;
    let tail = Estimate::new(tail_flags.iter().filter(|&&b| b).count() as u64, cfg.tail_trials)?;
    let tail_bound = (alpha.estimate * cfg.r).powi(2);

    // (iv) candidates from accepted prefix draws, membership in V, overlaps
    let candidate_draws: Vec<u64> =
        prefix_hits.iter().enumerate().filter(|(_, &b)| b).map(|(k, _)| k as u64).take(cfg.candidates).collect();
    let unconditional: Vec<DiscretePath> = (0..cfg.overlap_samples)
        .into_par_iter()
        .map(|k| sample_brownian(1, cfg.level, &root.substream(PHASE_OVERLAP, k)))
        .collect::<Result<_>>()?;
    let threshold = 1.0 - cfg.r * alpha.estimate;
    let rows: Vec<(PrefixRow, Vec<bool>)> = candidate_draws
        .par_iter()
        .map(|&k| {
            let prefix = sample_brownian(cfg.prefix_dim, cfg.level, &root.substream(PHASE_PREFIX, k))?;
            let member = |w: &DiscretePath| in_section(w, Some(&prefix), z, cfg.a, cfg.params);
            let mut cond_hits = 0usize;
            for w in &conditional {
                cond_hits += member(w)? as usize;
            }
            let bits = unconditional.iter().map(member).collect::<Result<Vec<bool>>>()?;
            let conditional_section = cond_hits as f64 / conditional.len() as f64;
            let section = bits.iter().filter(|&&b| b).count() as f64 / bits.len() as f64;
            let row = PrefixRow { draw: k, conditional_section, in_v: conditional_section >= threshold, section };
            Ok((row, bits))
        })
        .collect::<Result<_>>()?;

    let in_v: Vec<&Vec<bool>> = rows.iter().filter(|(r, _)| r.in_v).map(|(_, b)| b).collect();
    let mut min_overlap: Option<f64> = None;
    let mut pairs = 0usize;
    for (i, b1) in in_v.iter().enumerate() {
        for b2 in &in_v[i + 1..] {
            let joint = b1.iter().zip(b2.iter()).filter(|(x, y)| **x && **y).count();
            let o = joint as f64 / cfg.overlap_samples as f64;
            min_overlap = Some(min_overlap.map_or(o, |m: f64| m.min(o)));
            pairs += 1;
        }
    }
    let n_over = cfg.overlap_samples as f64;
    let min_overlap_se = min_overlap.map(|o| (o * (1.0 - o) / n_over).sqrt());
    let benchmark = alpha_bar.estimate / 3.0;
    let combined_se = min_overlap_se.map(|se| (se * se + (alpha_bar.std_error() / 3.0).powi(2)).sqrt());
    let overlap_holds = min_overlap.zip(combined_se).map(|(o, se)| o >= benchmark - 3.0 * se);
    let v_fraction = if rows.is_empty() { 0.0 } else { in_v.len() as f64 / rows.len() as f64 };

    Ok(OverlapReport {
        config: cfg.clone(),
        seed: root.seed,
        alpha_bar,
        alpha,
        tail,
        tail_bound,
        tail_bound_holds: tail.estimate <= tail_bound,
        prefixes: rows.into_iter().map(|(r, _)| r).collect(),
        v_fraction,
        pairs,
        min_overlap,
        min_overlap_se,
        benchmark,
        combined_se,
        overlap_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::DomainKind;

    #[test]
    fn wilson_matches_closed_form() {
        // hits = 0: upper end z^2 / (n + z^2)
        let (lo, hi) = wilson_interval(0, 100, WILSON_Z99);
        let z2 = WILSON_Z99 * WILSON_Z99;
        assert_eq!(lo, 0.0);
        assert!((hi - z2 / (100.0 + z2)).abs() < 1e-15);
        let (lo, hi) = wilson_interval(100, 100, WILSON_Z99);
        assert!((lo - 100.0 / (100.0 + z2)).abs() < 1e-15);
        assert_eq!(hi, 1.0);
        let e = Estimate::new(37, 120).unwrap();
        assert!(e.ci_low <= e.estimate && e.estimate <= e.ci_high);
        assert!(Estimate::new(3, 2).is_err());
        assert!(Estimate::new(0, 0).is_err());
    }

    #[test]
    fn line_fit_recovers_slope() {
        let xs = [2.0, 3.0, 4.0, 5.0];
        let ys: Vec<f64> = xs.iter().map(|x| 1.5 - 0.25 * x).collect();
        let (s, r) = fit_line(&xs, &ys).unwrap();
        assert!((s + 0.25).abs() < 1e-14 && r < 1e-14);
        assert!(fit_line(&[1.0], &[1.0]).is_none());
    }

    fn u_spec(a: f64, level: u32) -> DomainSpec {
        DomainSpec::new(DomainKind::U { z: DiscretePath::zeros(1, level), dim: 2 }, a, VarParams::default()).unwrap()
    }

    #[test]
    fn measure_extremes() {
        let r = estimate_measure(&u_spec(1e6, 6), 100, RngStream::new(42, 0)).unwrap();
        assert_eq!(r.estimate.hits, 100);
        let r = estimate_measure(&u_spec(0.0, 6), 50, RngStream::new(42, 0)).unwrap();
        assert_eq!(r.estimate.hits, 0);
        assert!(r.estimate.ci_high > 0.0);
        assert!(estimate_measure(&u_spec(1.0, 6), 0, RngStream::new(42, 0)).is_err());
    }

    #[test]
    fn measure_is_deterministic() {
        let a = estimate_measure(&u_spec(1.5, 5), 64, RngStream::new(9, 0)).unwrap();
        let b = estimate_measure(&u_spec(1.5, 5), 64, RngStream::new(9, 0)).unwrap();
        assert_eq!(a.estimate, b.estimate);
        assert!(a.estimate.hits > 0 && a.estimate.hits < 64);
    }

    #[test]
    fn convergence_validation() {
        let p = VarParams::default();
        let bad = [
            ConvergenceConfig::new(6, vec![2, 6], 2, 1, p),
            ConvergenceConfig::new(6, vec![3, 2], 2, 1, p),
            ConvergenceConfig::new(6, vec![], 2, 1, p),
            ConvergenceConfig::new(6, vec![2], 0, 1, p),
        ];
        for cfg in bad {
            assert!(convergence_study(&cfg, RngStream::new(1, 0)).is_err());
        }
    }

    #[test]
    fn convergence_small_run_shape() {
        let cfg = ConvergenceConfig::new(7, vec![1, 3, 5], 6, 2, VarParams::default());
        let t = convergence_study(&cfg, RngStream::new(3, 0)).unwrap();
        assert_eq!(t.series.len(), 3);
        for s in &t.series {
            assert_eq!(s.rows.iter().map(|r| r.n).collect::<Vec<_>>(), vec![1, 3, 5]);
            assert!(s.rows.iter().all(|r| r.mean > 0.0 && r.std >= 0.0 && r.trials == 6));
            assert!(s.slope.is_some());
        }
    }

    #[test]
    fn cross_bound_homogeneity_and_errors() {
        let z = DiscretePath::from_fn(1, 6, |t| vec![(3.0 * t).sin()]).unwrap();
        let r = cross_bound_study(&z, &[1.0, 2.0], 40, 1, VarParams::default(), RngStream::new(5, 0)).unwrap();
        assert!(r.relative_spread < 1e-2, "{r:?}");
        let zero = DiscretePath::zeros(1, 6);
        assert!(cross_bound_study(&zero, &[1.0], 4, 1, VarParams::default(), RngStream::new(5, 0)).is_err());
        assert!(cross_bound_study(&z, &[0.0], 4, 1, VarParams::default(), RngStream::new(5, 0)).is_err());
    }

    fn small_overlap(a: f64, eps: f64, r: f64) -> OverlapConfig {
        let mut cfg = OverlapConfig::new(5, 1, a, eps, r, VarParams::default());
        cfg.conditional_trials = 200;
        cfg.prefix_trials = 60;
        cfg.tail_trials = 60;
        cfg.candidates = 6;
        cfg.overlap_samples = 150;
        cfg
    }

    #[test]
    fn overlap_degenerate_conditioning() {
        let z = DiscretePath::zeros(1, 5);
        let rep = overlap_study(&z, &small_overlap(1e6, 1e6, 0.2), RngStream::new(11, 0)).unwrap();
        assert_eq!(rep.alpha_bar.hits, 200);
        assert_eq!(rep.tail.hits, 0);
        assert_eq!(rep.v_fraction, 1.0);
        assert_eq!(rep.min_overlap, Some(1.0));
        assert_eq!(rep.overlap_holds, Some(true));
    }

    #[test]
    fn overlap_preconditions() {
        let z = DiscretePath::zeros(1, 5);
        for r in [1.0 / 3.0, 0.5, 0.0] {
            assert!(overlap_study(&z, &small_overlap(1.0, 1.0, r), RngStream::new(1, 0)).is_err());
        }
        let err = overlap_study(&z, &small_overlap(1.0, 1e-9, 0.2), RngStream::new(1, 0)).unwrap_err();
        assert!(matches!(err, Error::RareEvent { .. }));
        assert!(overlap_study(&DiscretePath::zeros(1, 4), &small_overlap(1.0, 1.0, 0.2), RngStream::new(1, 0)).is_err());
    }
}
