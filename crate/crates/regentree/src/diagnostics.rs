//! Numerical verification of the convergence conditions behind the scaling
//! limits: tree/mass condition series for step-program measures, the
//! corollary mismatch quantities, the unlabelled-split identity, and the
//! height/residual scaling experiments.

use num::{One, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::{qu, to_f64, Q};
use crate::laws::{lambda_seq, lambda_seq_f64, unlabelled_split, DislocationMeasure};
use crate::models::{grow, GrowthModel};
use crate::partitions::{
    enumerate_partitions, evil_family_b, evil_family_mixed, good_family, paintbox_sample,
    x_limit, PartitionFamily, RankedFreq, StepFamily,
};
use crate::residual::{lamperti_path, JumpLaw, ResidualSampler};
use crate::stats::{mean, std_err};

// ---------------------------------------------------------------------------
// Step-program measures (the j-indexed atom families)
// ---------------------------------------------------------------------------

/// Weight `λ_j − λ_{j−1} = γ j^{γ−1}` of the atom at `Γ(j)`.
pub fn atom_weight(gamma: f64, j: usize) -> f64 {
    gamma * (j as f64).powf(gamma - 1.0)
}

/// `λ_n = Σ_{j=2}^n γ j^{γ−1}` for the step-program measures.
pub fn lambda_step(gamma: f64, n: usize) -> f64 {
    (2..=n).map(|j| atom_weight(gamma, j)).sum()
}

/// One atom `(λ_j − λ_{j−1})·δ_{Γ(j)}` of a step-program measure.
pub struct StepAtom {
    pub j: usize,
    pub weight: f64,
    pub family: StepFamily,
}

/// A truncated `κ = Σ_{j=2}^J (λ_j − λ_{j−1}) δ_{Γ(j)}` with the tail
/// `j > J` certified analytically (beyond the horizon every family restricts
/// to the one-block partition, contributing exactly `(1/j)·w_j` to both
/// condition series).
pub struct StepMeasure {
    pub gamma: f64,
    pub atoms: Vec<StepAtom>,
    pub horizon: usize,
}

impl StepMeasure {
    /// Upper bound on the beyond-horizon series contribution:
    /// `Σ_{j>J} (1/j) γ j^{γ−1} ≤ γ J^{γ−1}/(1−γ)`.
    pub fn tail_bound(&self) -> f64 {
        self.gamma * (self.horizon as f64).powf(self.gamma - 1.0) / (1.0 - self.gamma)
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidParameter("gamma must lie in (0,1)".into()));
    }
    Ok(())
}

/// The convergent example: all families run Step `A_{x^{(j)}}` from birth.
pub fn example_a_measure(gamma: f64, horizon: usize) -> Result<StepMeasure> {
    check_gamma(gamma)?;
    let atoms = (2..=horizon)
        .map(|j| {
            Ok(StepAtom {
                j,
                weight: atom_weight(gamma, j),
                family: good_family(j)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StepMeasure {
        gamma,
        atoms,
        horizon,
    })
}

/// The divergent example: families hold frequency ≈ 1/2 during a window
/// `[2j, a_j]` before recovering, with `(a_j)` chosen greedily so the total
/// weight of in-window families always lies in `(1, ~2]`.  Returns the
/// measure and the schedule `(j, a_j)` (None = never released inside the
/// horizon).
pub fn example_b_measure(
    gamma: f64,
    horizon: usize,
) -> Result<(StepMeasure, Vec<(usize, Option<usize>)>)> {
    check_gamma(gamma)?;
    let mut a: Vec<Option<usize>> = vec![None; horizon + 1];
    let mut active: Vec<usize> = Vec::new(); // js currently in-window, increasing
    let mut s = 0.0f64;
    for n in 4..=horizon {
        if n % 2 == 0 && n / 2 >= 2 && n / 2 <= horizon {
            active.push(n / 2);
            s += atom_weight(gamma, n / 2);
        }
        // release small js while the window can spare their weight
        while let Some(&jmin) = active.first() {
            let w = atom_weight(gamma, jmin);
            if s - w > 1.0 {
                a[jmin] = Some(n);
                active.remove(0);
                s -= w;
            } else {
                break;
            }
        }
    }
    let schedule: Vec<(usize, Option<usize>)> = (2..=horizon).map(|j| (j, a[j])).collect();
    let atoms = (2..=horizon)
        .map(|j| {
            Ok(StepAtom {
                j,
                weight: atom_weight(gamma, j),
                family: evil_family_b(j, a[j])?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((
        StepMeasure {
            gamma,
            atoms,
            horizon,
        },
        schedule,
    ))
}

/// One stage of the mixed good/evil schedule.
#[derive(Debug, Clone, Copy)]
pub struct MixedStage {
    /// Released evil family and its recovery onset `a_e = j_m`.
    pub e: usize,
    pub a_e: usize,
    /// Fresh evil batch `Γ(j_m)..Γ(k_m)`.
    pub batch: (usize, usize),
    /// End of the good stretch (`ℓ_m`); the next stage starts at `ℓ_m + 1`.
    pub ell: usize,
}

/// Absolute tolerance defining "frequency ≈ target" in the mixed schedule.
/// A cursor tracking a settled step program keeps `|#B₁ − x·n| ≤ 1`, so the
/// achievable deviation at level `n` is of order `1/n`; the effective
/// tolerance is `max(MIXED_ABS_TOL, 1.5/n)`.
pub const MIXED_ABS_TOL: f64 = 5e-4;

fn mixed_tol(n: usize) -> f64 {
    MIXED_ABS_TOL.max(1.5 / n as f64)
}

/// The mixed schedule separating the tree condition (holds) from the mass
/// condition (fails): evil families approach the wrong frequency `1 − x^{(j)}`
/// and are released one by one, each release backed by a fresh evil batch of
/// at least the released weight.  Stages are constructed until the next one
/// would exceed `max_horizon` (settling a batch born at level `j` takes
/// roughly `j²` levels, which grows beyond desk scale after two stages).
pub fn example_mixed_measure(
    gamma: f64,
    max_horizon: usize,
) -> Result<(StepMeasure, Vec<MixedStage>)> {
    check_gamma(gamma)?;
    // kinds: 0 = evil with a_j not yet fixed, 1 = good; a[j] = recovery onset
    #[derive(Clone, Copy, PartialEq)]
    enum Kind {
        Evil,
        Good,
    }
    let ell0 = (3.0 / (1.0 - x_limit(3))).round() as usize; // = 9
    let mut kind: Vec<(usize, Kind)> = vec![(2, Kind::Evil), (3, Kind::Evil)];
    kind.extend((4..=ell0).map(|j| (j, Kind::Good)));
    let mut a: std::collections::BTreeMap<usize, usize> = std::collections::BTreeMap::new();
    let mut pending: Vec<usize> = vec![2, 3]; // E_m, increasing
    let mut j_m = ell0 + 1;
    let mut stages = Vec::new();
    loop {
        // a fresh batch born at j_m settles near 1−x at level ~ j_m(j_m−1)
        if j_m.saturating_mul(j_m) > max_horizon || pending.is_empty() {
            break;
        }
        let e = pending.remove(0);
        a.insert(e, j_m);
        // k_m = inf{j ≥ j_m: λ_j − λ_{j_m} ≥ λ_e − λ_{e−1}}
        let target = atom_weight(gamma, e);
        let mut k_m = j_m;
        let mut acc = 0.0;
        while acc < target {
            k_m += 1;
            acc += atom_weight(gamma, k_m);
        }
        // ℓ_m: first level ≥ k_m where e has recovered to x^{(e)} and the
        // whole batch sits near 1 − x^{(i)}
        let fam_e = evil_family_mixed(e, Some(j_m))?;
        let batch: Vec<StepFamily> = (j_m..=k_m)
            .map(|i| evil_family_mixed(i, None))
            .collect::<Result<Vec<_>>>()?;
        let mut cur_e = fam_e.cursor();
        let mut cur_b: Vec<_> = batch.iter().map(|f| f.cursor()).collect();
        let mut ell = None;
        for n in 2..=max_horizon {
            if cur_e.n < n {
                cur_e.advance();
                for c in cur_b.iter_mut() {
                    c.advance();
                }
            }
            if n < k_m {
                continue;
            }
            let tol = mixed_tol(n);
            let ok_e = (cur_e.freq() - x_limit(e)).abs() <= tol;
            let ok_b = cur_b
                .iter()
                .zip(j_m..=k_m)
                .all(|(c, i)| (c.freq() - (1.0 - x_limit(i))).abs() <= tol);
            if ok_e && ok_b {
                ell = Some(n);
                break;
            }
        }
        let ell = ell.ok_or_else(|| {
            Error::ResourceGuard("mixed schedule stage does not settle within max_horizon".into())
        })?;
        kind.extend((j_m..=k_m).map(|j| (j, Kind::Evil)));
        kind.extend((k_m + 1..=ell).map(|j| (j, Kind::Good)));
        pending.extend(j_m..=k_m);
        stages.push(MixedStage {
            e,
            a_e: j_m,
            batch: (j_m, k_m),
            ell,
        });
        j_m = ell + 1;
    }
    let horizon = stages.last().map(|s| s.ell).unwrap_or(ell0);
    let mut atoms = Vec::with_capacity(horizon - 1);
    for &(j, k) in kind.iter().filter(|&&(j, _)| j <= horizon) {
        let family = match k {
            Kind::Good => good_family(j)?,
            Kind::Evil => evil_family_mixed(j, a.get(&j).copied())?,
        };
        atoms.push(StepAtom {
            j,
            weight: atom_weight(gamma, j),
            family,
        });
    }
    Ok((
        StepMeasure {
            gamma,
            atoms,
            horizon,
        },
        stages,
    ))
}

// ---------------------------------------------------------------------------
// Condition series
// ---------------------------------------------------------------------------

/// One evaluation of a condition series: the computed value over the
/// truncated measure, the certified positive tail bound for the part beyond
/// the horizon, and the total negative contribution (`deficiency`).
#[derive(Debug, Clone, Copy)]
pub struct SeriesPoint {
    pub n: usize,
    pub value: f64,
    pub tail: f64,
    pub deficiency: f64,
}

fn step_series(meas: &StepMeasure, ns: &[usize], ranked: bool) -> Vec<SeriesPoint> {
    let mut ns: Vec<usize> = ns.to_vec();
    ns.sort_unstable();
    let mut cursors: Vec<_> = meas.atoms.iter().map(|a| a.family.cursor()).collect();
    let mut out = Vec::with_capacity(ns.len());
    for &n in &ns {
        cursors.par_iter_mut().for_each(|c| {
            while c.n < n {
                c.advance();
            }
        });
        let mut value = 0.0;
        let mut deficiency = 0.0;
        for (atom, c) in meas.atoms.iter().zip(&cursors) {
            let f = c.freq();
            let current = if ranked { f.max(1.0 - f) } else { f };
            let dev = current - x_limit(atom.j);
            value += dev * atom.weight;
            if dev < 0.0 {
                deficiency -= dev * atom.weight;
            }
        }
        out.push(SeriesPoint {
            n,
            value,
            tail: meas.tail_bound(),
            deficiency,
        });
    }
    out
}

/// `Σ_j (|Γ(j)^{[n]}|↓₁ − x^{(j)})·w_j` — the tree-convergence condition.
pub fn tree_condition_series_step(meas: &StepMeasure, ns: &[usize]) -> Vec<SeriesPoint> {
    step_series(meas, ns, true)
}

/// `Σ_j (|Γ(j)₁^{[n]}| − x^{(j)})·w_j` — the residual-mass condition.
pub fn mass_condition_series_step(meas: &StepMeasure, ns: &[usize]) -> Vec<SeriesPoint> {
    step_series(meas, ns, false)
}

fn atom_dev(
    family: &PartitionFamily,
    weight: f64,
    n: usize,
    ranked: bool,
    mc: usize,
) -> Result<f64> {
    let limit = if ranked {
        family
            .limit_ranked_freqs()
            .map(|v| v.first().copied().unwrap_or(0.0))
    } else {
        family.limit_first_block_freq()
    }
    .ok_or_else(|| Error::Unsupported("asymptotic frequencies unavailable".into()))?;
    let _ = mc;
    let pi = family.restrict(n);
    let current = if ranked {
        pi.ranked_sizes()[0] as f64 / n as f64
    } else {
        pi.blocks()[0].len() as f64 / n as f64
    };
    Ok(weight * (current - limit))
}

fn measure_series(
    d: &DislocationMeasure,
    ns: &[usize],
    ranked: bool,
) -> Result<Vec<SeriesPoint>> {
    match d {
        DislocationMeasure::FiniteAtomic { atoms } => {
            let mut out = Vec::new();
            for &n in ns {
                let mut value = 0.0;
                let mut deficiency = 0.0;
                for a in atoms {
                    let dev = atom_dev(&a.family, to_f64(&a.weight), n, ranked, 0)?;
                    value += dev;
                    if dev < 0.0 {
                        deficiency -= dev;
                    }
                }
                out.push(SeriesPoint {
                    n,
                    value,
                    tail: 0.0,
                    deficiency,
                });
            }
            Ok(out)
        }
        DislocationMeasure::PaintboxMixture { atoms } => {
            // Monte Carlo over the paintbox law of each component
            let reps = 400usize;
            let mut out = Vec::new();
            for &n in ns {
                let mut value = 0.0;
                let mut deficiency = 0.0;
                for (ai, a) in atoms.iter().enumerate() {
                    let s: Vec<f64> = a.s.iter().map(to_f64).collect();
                    let rf = RankedFreq::new(s.clone())?;
                    let limit = if ranked {
                        s[0]
                    } else {
                        // E|Γ₁| = Σ s_j² (size-biased pick; dust has frequency 0)
                        s.iter().map(|x| x * x).sum()
                    };
                    let mut rng = ChaCha12Rng::seed_from_u64(0xD1A6 + ai as u64);
                    let mut acc = 0.0;
                    for _ in 0..reps {
                        let pi = paintbox_sample(&rf, n, &mut rng);
                        acc += if ranked {
                            pi.ranked_sizes()[0] as f64 / n as f64
                        } else {
                            pi.blocks()[0].len() as f64 / n as f64
                        };
                    }
                    let dev = to_f64(&a.weight) * (acc / reps as f64 - limit);
                    value += dev;
                    if dev < 0.0 {
                        deficiency -= dev;
                    }
                }
                out.push(SeriesPoint {
                    n,
                    value,
                    tail: 0.0,
                    deficiency,
                });
            }
            Ok(out)
        }
        _ => Err(Error::Unsupported(
            "condition series needs declared frequencies (finite-atomic or paintbox measure)"
                .into(),
        )),
    }
}

/// Tree-convergence condition series `∫(|Γ^{[n]}|↓₁ − |Γ|↓₁) κ(dΓ)` for
/// finite-atomic and paintbox-mixture measures.
pub fn tree_condition_series(d: &DislocationMeasure, ns: &[usize]) -> Result<Vec<SeriesPoint>> {
    measure_series(d, ns, true)
}

/// Residual-mass condition series `∫(|Γ₁^{[n]}| − |Γ₁|) κ(dΓ)`.
pub fn mass_condition_series(d: &DislocationMeasure, ns: &[usize]) -> Result<Vec<SeriesPoint>> {
    measure_series(d, ns, false)
}

// ---------------------------------------------------------------------------
// Corollary quantities
// ---------------------------------------------------------------------------

/// The two quantities of the first-leaf/uniform-leaf comparison: the κ-mass
/// of `{|Γ₁| ≠ |Γ|↓₁}` and the mass-condition series restricted to the
/// equality set.
#[derive(Debug, Clone)]
pub struct CorollaryReport {
    pub mismatch_mass: f64,
    pub equal_series: Vec<SeriesPoint>,
}

pub fn corollary_terms(d: &DislocationMeasure, ns: &[usize]) -> Result<CorollaryReport> {
    match d {
        DislocationMeasure::FiniteAtomic { atoms } => {
            let mut mismatch = 0.0;
            let mut equal = Vec::new();
            for a in atoms {
                let x1 = a
                    .family
                    .limit_first_block_freq()
                    .ok_or_else(|| Error::Unsupported("first-block frequency unavailable".into()))?;
                let top = a
                    .family
                    .limit_ranked_freqs()
                    .and_then(|v| v.first().copied())
                    .unwrap_or(0.0);
                if (x1 - top).abs() > 1e-12 {
                    mismatch += to_f64(&a.weight);
                } else {
                    equal.push(a);
                }
            }
            let mut series = Vec::new();
            for &n in ns {
                let mut value = 0.0;
                for a in &equal {
                    value += atom_dev(&a.family, to_f64(&a.weight), n, false, 0)?;
                }
                series.push(SeriesPoint {
                    n,
                    value,
                    tail: 0.0,
                    deficiency: 0.0,
                });
            }
            Ok(CorollaryReport {
                mismatch_mass: mismatch,
                equal_series: series,
            })
        }
        DislocationMeasure::OrderedBetaMixture { alpha, theta } => {
            let (al, th) = (to_f64(alpha), to_f64(theta));
            // mismatch set {u < 1/2}: κ-mass by quadrature (finite for the
            // ordered-beta family: the u → 0 singularity is u^{θ−1}·θ(1−u),
            // integrable for θ > 0, and exactly α for θ = 0)
            let mismatch = crate::residual::obm_integral_trapezoid(
                al,
                th,
                |u, _v| if u < 0.5 { 1.0 } else { 0.0 },
                200_000,
            );
            // equality set {u > 1/2}: E|Γ₁^{[n]}| − u = (1−u)/n for the
            // ordered paintbox, so the equal-set series is (1/n)·∫_{u>1/2}(1−u)κ
            let right_mass = crate::residual::obm_integral_trapezoid(
                al,
                th,
                |u, v| if u > 0.5 { v } else { 0.0 },
                200_000,
            );
            let series = ns
                .iter()
                .map(|&n| SeriesPoint {
                    n,
                    value: right_mass / n as f64,
                    tail: 0.0,
                    deficiency: 0.0,
                })
                .collect();
            Ok(CorollaryReport {
                mismatch_mass: mismatch,
                equal_series: series,
            })
        }
        _ => Err(Error::Unsupported(
            "corollary terms implemented for finite-atomic and ordered-beta measures".into(),
        )),
    }
}

// ---------------------------------------------------------------------------
// Unlabelled-split measure and the §-identity
// ---------------------------------------------------------------------------

/// The finite measure `λ_n (1−s₁) p̄_n^∘(ds)` as an exact atom list over
/// ranked block-size fractions.
pub fn hm_condition_measure(
    m: &GrowthModel,
    lambda2: &Q,
    n: usize,
    force: bool,
) -> Result<Vec<(Vec<Q>, Q)>> {
    let lam = lambda_seq(m, lambda2, n)?.pop().unwrap();
    let table = unlabelled_split(m, n, force)?;
    let mut out = Vec::new();
    for (sizes, p) in table {
        let s: Vec<Q> = sizes.iter().map(|&b| qu(b) / qu(n)).collect();
        let mass = &lam * &p * (Q::one() - &s[0]);
        if !mass.is_zero() {
            out.push((s, mass));
        }
    }
    Ok(out)
}

/// Independent right-hand side of the identity: `∫(1−|Γ^{[n]}|↓₁)·s₁^k κ(dΓ)`
/// computed over cylinders of the growth-rule measure.
pub fn hm_identity_rhs(
    m: &GrowthModel,
    lambda2: &Q,
    n: usize,
    k: u32,
    force: bool,
) -> Result<Q> {
    let d = DislocationMeasure::from_growth_rule(m.clone(), lambda2.clone())?;
    let mut acc = Q::zero();
    for pi in enumerate_partitions(n, force)? {
        if pi.is_one_block() {
            continue; // integrand vanishes where Γ^{[n]} does not split [n]
        }
        let top = qu(pi.ranked_sizes()[0]) / qu(n);
        let mut f = Q::one();
        for _ in 0..k {
            f *= &top;
        }
        acc += d.kappa_cylinder_exact(&pi)? * (Q::one() - &top) * f;
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Scaling experiments
// ---------------------------------------------------------------------------

/// Regular-variation index estimate from the λ sequence:
/// `γ̂ = log(λ_n/λ_{n/2})/log 2`.
pub fn gamma_hat(m: &GrowthModel, lambda2: f64, n: usize) -> Result<f64> {
    let lams = lambda_seq_f64(m, lambda2, n)?;
    Ok((lams[n - 2] / lams[n / 2 - 2]).ln() / 2f64.ln())
}

/// Per-n height statistics of grown trees rescaled by `λ_n`.
#[derive(Debug, Clone)]
pub struct HeightStats {
    pub n: usize,
    pub lambda_n: f64,
    pub mean: f64,
    pub se: f64,
    /// All rescaled heights (for KS comparisons downstream).
    pub scaled: Vec<f64>,
}

/// Grow `samples` trees at each `n` and report `height/λ_n` statistics.
pub fn height_scaling_experiment(
    m: &GrowthModel,
    lambda2: f64,
    n_list: &[usize],
    samples: usize,
    seed: u64,
) -> Result<Vec<HeightStats>> {
    let mut out = Vec::new();
    for (bi, &n) in n_list.iter().enumerate() {
        let lambda_n = *lambda_seq_f64(m, lambda2, n)?.last().unwrap();
        let scaled: Vec<f64> = (0..samples)
            .into_par_iter()
            .map(|s| {
                let t = grow(m, n, seed ^ ((bi as u64) << 32) ^ s as u64).unwrap();
                t.height_edges() as f64 / lambda_n
            })
            .collect();
        out.push(HeightStats {
            n,
            lambda_n,
            mean: mean(&scaled),
            se: std_err(&scaled),
            scaled,
        });
    }
    Ok(out)
}

/// Comparison report between the rescaled residual chain and the simulated
/// self-similar limit.
#[derive(Debug, Clone)]
pub struct ResidualReport {
    /// `(t, two-sample KS distance)` per requested time.
    pub per_t: Vec<(f64, f64)>,
    pub chain_abs_mean: f64,
    pub chain_abs_se: f64,
    pub limit_abs_mean: f64,
    pub limit_abs_se: f64,
}

/// Compare scaled residual-chain marginals of the growth rule `m` (alpha-
/// theta fast path) against the Lamperti-transformed limit driven by the
/// jump law of the dislocation measure `d`.
#[allow(clippy::too_many_arguments)]
pub fn residual_limit_test(
    m: &GrowthModel,
    lambda2: f64,
    d: &DislocationMeasure,
    gamma: f64,
    eps: f64,
    n: usize,
    t_list: &[f64],
    samples: usize,
    seed: u64,
) -> Result<ResidualReport> {
    let lambda_n = *lambda_seq_f64(m, lambda2, n)?.last().unwrap();
    let sampler = ResidualSampler::new(m, n)?;
    let chain: Vec<(Vec<f64>, f64)> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(s as u64);
            let path = sampler.sample_path(n, &mut rng);
            let vals: Vec<f64> = t_list
                .iter()
                .map(|&t| {
                    let idx = (lambda_n * t).floor() as usize;
                    *path.values.get(idx).unwrap_or(&0) as f64 / n as f64
                })
                .collect();
            (vals, (path.values.len() - 1) as f64 / lambda_n)
        })
        .collect();
    let jumps = JumpLaw::from_measure(d, eps)?;
    let limit: Vec<(Vec<f64>, f64)> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x4C61_6D70);
            rng.set_stream(s as u64);
            let p = lamperti_path(&jumps, gamma, t_list, &mut rng).unwrap();
            (p.values, p.absorption)
        })
        .collect();
    let mut per_t = Vec::new();
    for (i, &t) in t_list.iter().enumerate() {
        let a: Vec<f64> = chain.iter().map(|(v, _)| v[i]).collect();
        let b: Vec<f64> = limit.iter().map(|(v, _)| v[i]).collect();
        per_t.push((t, crate::stats::ks2_stat(&a, &b)));
    }
    let ca: Vec<f64> = chain.iter().map(|(_, a)| *a).collect();
    let la: Vec<f64> = limit.iter().map(|(_, a)| *a).collect();
    Ok(ResidualReport {
        per_t,
        chain_abs_mean: mean(&ca),
        chain_abs_se: std_err(&ca),
        limit_abs_mean: mean(&la),
        limit_abs_se: std_err(&la),
    })
}

// ---------------------------------------------------------------------------
// Fast residual chain for step-program measures
// ---------------------------------------------------------------------------

/// Residual chain driven directly by a good-family step measure: from mass
/// `m` the split is the atom `Γ(i)` (i ≤ m) with probability `w_i/λ_m`, and
/// the block of 1 has `⌈x^{(i)} m⌉` elements (the settled step program keeps
/// `|#Γ(i)₁^{[m]} − x^{(i)} m| ≤ 1`).  Returns the path and `λ_n`.
pub fn step_chain_path(gamma: f64, n: usize, seed: u64) -> Result<(Vec<usize>, f64)> {
    check_gamma(gamma)?;
    // prefix sums of atom weights: lam[m] = λ_m
    let mut lam = vec![0.0f64; n + 1];
    for j in 2..=n {
        lam[j] = lam[j - 1] + atom_weight(gamma, j);
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut values = vec![n];
    let mut m = n;
    while m > 1 {
        let u = rng.gen::<f64>() * lam[m];
        // atom index by binary search on the prefix sums over 2..=m
        let i = match lam[2..=m].binary_search_by(|x| x.partial_cmp(&u).unwrap()) {
            Ok(k) => k + 2 + 1,
            Err(k) => k + 2,
        }
        .min(m);
        let b1 = ((x_limit(i) * m as f64).ceil() as usize).clamp(1, m - 1);
        m = b1;
        values.push(m);
    }
    values.push(0);
    Ok((values, lam[n]))
}

/// ε-truncated jump law of the limit subordinator of the good-family step
/// measure: jumps `−log x^{(i)}` at rate `w_i`, for all `i` with jump ≥ ε.
/// Also returns the neglected mean drift `Σ_{smaller} w_i·(−log x^{(i)})`
/// truncated at `i ≤ i_report` for reporting.
pub fn step_limit_jumps(gamma: f64, eps: f64) -> Result<(JumpLaw, f64)> {
    check_gamma(gamma)?;
    if eps <= 0.0 {
        return Err(Error::InvalidParameter(
            "infinite-activity step measure needs eps > 0".into(),
        ));
    }
    let mut atoms = Vec::new();
    let mut i = 2usize;
    loop {
        let y = -(x_limit(i)).ln();
        if y < eps {
            break;
        }
        atoms.push((atom_weight(gamma, i), y));
        i += 1;
    }
    // neglected drift bound: Σ_{j>I} w_j·(1/j) ≤ γ I^{γ−1}/(1−γ)
    let neglected = gamma * (i as f64).powf(gamma - 1.0) / (1.0 - gamma);
    Ok((JumpLaw::Atoms(atoms), neglected))
}
