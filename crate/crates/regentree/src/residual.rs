//! Residual mass of leaf 1: the decreasing Markov chain `X^{(n)}`, its
//! composition representation, Laplace exponents of the limiting
//! subordinator, and simulation of the Lamperti-transformed limit process.

use num::{One, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::exact::{binomial, gamma_ratio_alpha, qu, rising, to_f64, Q};
use crate::laws::{lambda_seq_f64, splitting_distribution, DislocationMeasure};
use crate::models::GrowthModel;
use crate::stats::ln_gamma;
use crate::trees::LabelledTree;

// ---------------------------------------------------------------------------
// Chains and compositions
// ---------------------------------------------------------------------------

/// The residual-mass path `(X_0 = n, X_1, …, 1, 0)`: block sizes of the block
/// containing leaf 1 along the path from the root, strictly decreasing until
/// absorption at 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MassChainPath {
    pub values: Vec<usize>,
}

impl MassChainPath {
    /// Absorption index `A_n`: the first index with value 0.
    pub fn absorption_index(&self) -> usize {
        self.values.len() - 1
    }

    /// The composition of `n`: successive differences of the path.
    pub fn composition(&self) -> Composition {
        let parts = self
            .values
            .windows(2)
            .map(|w| w[0] - w[1])
            .filter(|&p| p > 0)
            .collect();
        Composition { parts }
    }
}

/// A composition of `n`: ordered positive parts summing to `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Composition {
    pub parts: Vec<usize>,
}

impl Composition {
    pub fn total(&self) -> usize {
        self.parts.iter().sum()
    }
}

/// Extract the residual chain of leaf 1 from a tree: walk from the root
/// towards leaf 1, recording the size of 1's block at every branch point.
pub fn residual_chain(t: &LabelledTree) -> Result<(MassChainPath, Composition)> {
    let n = t.n();
    let mut values = vec![n];
    if n > 1 {
        let mut v = t.children_of(t.root_id())[0];
        loop {
            // 1's block is the subtree with least label 1 — the first child
            let child = *t
                .children_of(v)
                .iter()
                .find(|&&c| t.min_label_of(c) == 1)
                .ok_or_else(|| Error::InvalidTree("leaf 1 not found".into()))?;
            let size = t.subtree_size(child);
            values.push(size);
            if size == 1 {
                break;
            }
            v = child;
        }
    }
    values.push(0);
    let path = MassChainPath { values };
    let comp = path.composition();
    Ok((path, comp))
}

// ---------------------------------------------------------------------------
// First-step law
// ---------------------------------------------------------------------------

/// Exact law of `X^{(n)}_1` (the size of 1's block at the first split):
/// `P(X_1 = j) = Σ_{π: #B₁ = j} p_n(π)`, returned as `(j, probability)` for
/// `j = 1..n−1`.  Uses the alpha-theta closed form when available (any `n`),
/// otherwise exhaustive enumeration (guarded at `n ≤ 10`).
pub fn first_step_law(m: &GrowthModel, n: usize, force: bool) -> Result<Vec<(usize, Q)>> {
    if n < 2 {
        return Err(Error::InvalidParameter("first_step_law needs n >= 2".into()));
    }
    if let GrowthModel::AlphaTheta { alpha, theta } = m {
        // P(X₁=j) = [αC(n−2,j−2) + θC(n−2,j−1)]·Γ(j−1+θ)Γ(n−j−α)/(Γ(n−1+θ)Γ(1−α))
        let mut out = Vec::with_capacity(n - 1);
        for j in 1..n {
            // Γ(j−1+θ)/Γ(n−1+θ) = 1/rising(j−1+θ, n−j); the j = 1, θ-term
            // pairing θ·Γ(θ)/... is handled by the identity θ·Γ(θ) = Γ(θ+1):
            // fold θ into the rising factorial starting at θ.
            let a_term = if j >= 2 {
                alpha * binomial(n - 2, j - 2) / rising(&(qu(j - 1) + theta), n - j)
            } else {
                Q::zero()
            };
            // at j = 1 the θ-term pairs as θΓ(θ) = Γ(θ+1), valid down to θ = 0
            let t_term = if j == 1 {
                Q::one() / rising(&(theta + Q::one()), n - 2)
            } else {
                theta * binomial(n - 2, j - 1) / rising(&(qu(j - 1) + theta), n - j)
            };
            out.push((j, (a_term + t_term) * gamma_ratio_alpha(alpha, n - j)));
        }
        return Ok(out);
    }
    let table = splitting_distribution(m, n, force)?;
    let mut probs = vec![Q::zero(); n];
    for (pi, p) in table {
        probs[pi.block_sizes()[0]] += p;
    }
    Ok((1..n).map(|j| (j, probs[j].clone())).collect())
}

// ---------------------------------------------------------------------------
// Fast alpha-theta chain sampler
// ---------------------------------------------------------------------------

/// Direct sampler for the alpha-theta residual chain, using the closed-form
/// first-step law at every level (Markov property from the regeneration of
/// the chain).  Probability mass concentrates near `j = m−1`, so the CDF is
/// scanned downward from there.
pub struct ResidualSampler {
    alpha: f64,
    theta: f64,
    /// lnΓ(i + θ) for i = 0..=n
    lg_theta: Vec<f64>,
    /// lnΓ(i − α) for i = 1..=n
    lg_alpha: Vec<f64>,
    /// lnΓ(i + 1) for i = 0..=n
    lg_int: Vec<f64>,
}

impl ResidualSampler {
    pub fn new(m: &GrowthModel, n_max: usize) -> Result<Self> {
        let (alpha, theta) = match m {
            GrowthModel::AlphaTheta { alpha, theta } => (to_f64(alpha), to_f64(theta)),
            _ => {
                return Err(Error::Unsupported(
                    "fast residual sampling is implemented for the alpha-theta rule".into(),
                ))
            }
        };
        let lg_theta = (0..=n_max)
            .map(|i| {
                if i == 0 && theta == 0.0 {
                    f64::INFINITY // Γ(0); callers route around this pole
                } else {
                    ln_gamma(i as f64 + theta)
                }
            })
            .collect();
        let lg_alpha = (0..=n_max).map(|i| ln_gamma(i as f64 - alpha + 1.0)).collect();
        let lg_int = (0..=n_max).map(|i| ln_gamma(i as f64 + 1.0)).collect();
        Ok(ResidualSampler {
            alpha,
            theta,
            lg_theta,
            lg_alpha,
            lg_int,
        })
    }

    fn ln_choose(&self, n: usize, k: usize) -> f64 {
        if k > n {
            return f64::NEG_INFINITY;
        }
        self.lg_int[n] - self.lg_int[k] - self.lg_int[n - k]
    }

    /// `lnΓ(i − α)` through the shifted table (`lg_alpha[i-1] = lnΓ(i − α)`).
    fn lg_a(&self, i: usize) -> f64 {
        self.lg_alpha[i - 1]
    }

    /// `P(X₁ = j)` starting from mass `m`.
    fn step_prob(&self, m: usize, j: usize) -> f64 {
        let ln_z = self.lg_theta[m - 1] + self.lg_a(1);
        let ln_g = |jj: usize| self.lg_theta[jj - 1] + self.lg_a(m - jj);
        let mut p = 0.0;
        if j >= 2 && self.alpha > 0.0 {
            p += (self.ln_choose(m - 2, j - 2) + self.alpha.ln() + ln_g(j) - ln_z).exp();
        }
        // θΓ(j−1+θ): at j = 1 use θΓ(θ) = Γ(θ+1)
        if self.theta > 0.0 || j == 1 {
            let ln_theta_gamma = if j == 1 {
                self.lg_theta[1] // Γ(θ+1)
            } else if self.theta > 0.0 {
                self.theta.ln() + self.lg_theta[j - 1]
            } else {
                f64::NEG_INFINITY
            };
            if ln_theta_gamma.is_finite() {
                p += (self.ln_choose(m - 2, j - 1) + ln_theta_gamma + self.lg_a(m - j)
                    - self.lg_theta[m - 1]
                    - self.lg_a(1))
                .exp();
            }
        }
        p
    }

    /// One chain step from mass `m ≥ 2`.
    pub fn step<R: Rng>(&self, m: usize, rng: &mut R) -> usize {
        if m == 2 {
            return 1;
        }
        let u: f64 = rng.gen();
        let mut cum = 0.0;
        for j in (1..m).rev() {
            cum += self.step_prob(m, j);
            if u < cum {
                return j;
            }
        }
        1
    }

    /// Full path from `n` to absorption.
    pub fn sample_path<R: Rng>(&self, n: usize, rng: &mut R) -> MassChainPath {
        let mut values = vec![n];
        let mut m = n;
        while m > 1 {
            m = self.step(m, rng);
            values.push(m);
        }
        values.push(0);
        MassChainPath { values }
    }
}

// ---------------------------------------------------------------------------
// Scaled chain paths
// ---------------------------------------------------------------------------

/// The rescaled chain `t ↦ X^{(n)}_{⌊λ_n t⌋}/n` together with `A_n/λ_n`.
#[derive(Debug, Clone)]
pub struct ScaledPath {
    pub n: usize,
    pub lambda_n: f64,
    /// Raw chain values `X_0, …, 0`.
    pub steps: Vec<usize>,
}

impl ScaledPath {
    /// Path value at rescaled time `t` (constant between chain steps).
    pub fn value_at(&self, t: f64) -> f64 {
        let idx = (self.lambda_n * t).floor() as usize;
        let x = *self.steps.get(idx).unwrap_or(&0);
        x as f64 / self.n as f64
    }

    /// `A_n / λ_n`.
    pub fn scaled_absorption(&self) -> f64 {
        (self.steps.len() - 1) as f64 / self.lambda_n
    }
}

/// Grow (or directly sample, for the alpha-theta rule) the residual chain of
/// a tree of size `n` and rescale by `λ_n` (from `λ₂`) and `n`.
pub fn scaled_chain_path(
    m: &GrowthModel,
    lambda2: f64,
    n: usize,
    seed: u64,
) -> Result<ScaledPath> {
    let lambda_n = *lambda_seq_f64(m, lambda2, n)?.last().unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let steps = match ResidualSampler::new(m, n) {
        Ok(s) => s.sample_path(n, &mut rng).values,
        Err(_) => {
            let t = crate::models::grow(m, n, seed)?;
            residual_chain(&t)?.0.values
        }
    };
    Ok(ScaledPath {
        n,
        lambda_n,
        steps,
    })
}

// ---------------------------------------------------------------------------
// Laplace exponents
// ---------------------------------------------------------------------------

/// Evaluable Laplace exponent `s ↦ ψ(s)` with its provenance.
#[derive(Debug, Clone)]
pub struct LaplaceExponent {
    kind: ExponentKind,
    pub provenance: String,
}

#[derive(Debug, Clone)]
enum ExponentKind {
    /// `ψ(s) = Σ w (1 − x₁^s)` over atoms with first-block frequency `x₁`.
    FirstAtoms(Vec<(f64, f64)>),
    /// `ψ_U(s) = Σ w (1 − Σᵢ xᵢ^{s+1})` over atoms with ranked frequencies.
    UniformAtoms(Vec<(f64, Vec<f64>)>),
    /// `ψ(s) = ∫ (1−u^s)(αu+θ(1−u)) u^{θ−1} (1−u)^{−α−1} du`.
    ObmFirst { alpha: f64, theta: f64 },
    /// `ψ_U(s) = ∫ (1−u^{s+1}−(1−u)^{s+1})(αu+θ(1−u)) u^{θ−1} (1−u)^{−α−1} du`.
    ObmUniform { alpha: f64, theta: f64 },
}

impl LaplaceExponent {
    pub fn eval(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        match &self.kind {
            ExponentKind::FirstAtoms(atoms) => {
                atoms.iter().map(|&(w, x)| w * (1.0 - x.powf(s))).sum()
            }
            ExponentKind::UniformAtoms(atoms) => atoms
                .iter()
                .map(|(w, xs)| w * (1.0 - xs.iter().map(|x| x.powf(s + 1.0)).sum::<f64>()))
                .sum(),
            ExponentKind::ObmFirst { alpha, theta } => {
                // 1 − u^s = −expm1(s·log1p(−(1−u))), stable as u → 1
                obm_integral(*alpha, *theta, |_u, v| -((s * (-v).ln_1p()).exp_m1()))
            }
            ExponentKind::ObmUniform { alpha, theta } => {
                obm_integral(*alpha, *theta, |_u, v| {
                    -(((s + 1.0) * (-v).ln_1p()).exp_m1()) - v.powf(s + 1.0)
                })
            }
        }
    }
}

/// Laplace exponent of the leaf-1 residual subordinator,
/// `ψ(s) = ∫ (1 − |Γ₁|^s) κ(dΓ)`.
pub fn laplace_exponent(d: &DislocationMeasure) -> Result<LaplaceExponent> {
    match d {
        DislocationMeasure::FiniteAtomic { atoms } => {
            let mut list = Vec::new();
            for a in atoms {
                let x1 = a.family.limit_first_block_freq().ok_or_else(|| {
                    Error::Unsupported(
                        "atom without a declared first-block frequency".into(),
                    )
                })?;
                if !(x1 > 0.0 && x1 < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "|Γ₁| = {x1} outside (0,1): the subordinator transform needs |Γ₁| ∈ (0,1) a.e."
                    )));
                }
                list.push((to_f64(&a.weight), x1));
            }
            Ok(LaplaceExponent {
                kind: ExponentKind::FirstAtoms(list),
                provenance: "finite_atomic".into(),
            })
        }
        DislocationMeasure::OrderedBetaMixture { alpha, theta } => {
            let (a, t) = (to_f64(alpha), to_f64(theta));
            if t <= 0.0 {
                return Err(Error::InvalidParameter(
                    "theta = 0 puts mass at |Γ₁| = 0; the transform needs |Γ₁| ∈ (0,1) a.e."
                        .into(),
                ));
            }
            Ok(LaplaceExponent {
                kind: ExponentKind::ObmFirst { alpha: a, theta: t },
                provenance: "ordered_beta_mixture".into(),
            })
        }
        DislocationMeasure::PaintboxMixture { atoms } => {
            // |Γ₁| is the size-biased pick from s; dust would put mass at 0
            let mut list = Vec::new();
            for a in atoms {
                let total: Q = a.s.iter().sum();
                if total != Q::one() {
                    return Err(Error::InvalidParameter(
                        "paintbox atom with dust has |Γ₁| = 0 with positive mass".into(),
                    ));
                }
                let w = to_f64(&a.weight);
                for sj in &a.s {
                    let x = to_f64(sj);
                    list.push((w * x, x));
                }
            }
            Ok(LaplaceExponent {
                kind: ExponentKind::FirstAtoms(list),
                provenance: "paintbox_mixture".into(),
            })
        }
        DislocationMeasure::FromGrowthRule { .. } => Err(Error::Unsupported(
            "no direct first-block frequency law for growth-rule measures".into(),
        )),
    }
}

/// Laplace exponent of the uniform-leaf residual subordinator,
/// `ψ_U(s) = ∫ (1 − Σᵢ (|Γ|↓ᵢ)^{s+1}) κ(dΓ)`.
pub fn uniform_leaf_exponent(d: &DislocationMeasure) -> Result<LaplaceExponent> {
    match d {
        DislocationMeasure::FiniteAtomic { atoms } => {
            let mut list = Vec::new();
            for a in atoms {
                let xs = a.family.limit_ranked_freqs().ok_or_else(|| {
                    Error::Unsupported("atom without declared ranked frequencies".into())
                })?;
                list.push((to_f64(&a.weight), xs));
            }
            Ok(LaplaceExponent {
                kind: ExponentKind::UniformAtoms(list),
                provenance: "finite_atomic".into(),
            })
        }
        DislocationMeasure::OrderedBetaMixture { alpha, theta } => Ok(LaplaceExponent {
            kind: ExponentKind::ObmUniform {
                alpha: to_f64(alpha),
                theta: to_f64(theta),
            },
            provenance: "ordered_beta_mixture".into(),
        }),
        DislocationMeasure::PaintboxMixture { atoms } => {
            let list = atoms
                .iter()
                .map(|a| {
                    (
                        to_f64(&a.weight),
                        a.s.iter().map(to_f64).collect::<Vec<f64>>(),
                    )
                })
                .collect();
            Ok(LaplaceExponent {
                kind: ExponentKind::UniformAtoms(list),
                provenance: "paintbox_mixture".into(),
            })
        }
        DislocationMeasure::FromGrowthRule { .. } => Err(Error::Unsupported(
            "no direct ranked-frequency law for growth-rule measures".into(),
        )),
    }
}

/// `∫₀¹ h(u)·(αu + θ(1−u)) u^{θ−1} (1−u)^{−α−1} du` for `h` vanishing fast
/// enough at the endpoints.  `h` receives `(u, 1−u)` so it can stay accurate
/// where `u` is within roundoff of 1 (there `1−u` is carried exactly through
/// the endpoint substitution).  Singularity-absorbing power substitutions at
/// both ends, then adaptive Simpson.
fn obm_integral<F: Fn(f64, f64) -> f64>(alpha: f64, theta: f64, h: F) -> f64 {
    let density = |u: f64, v: f64| {
        (alpha * u + theta * v) * u.powf(theta - 1.0) * v.powf(-alpha - 1.0)
    };
    // left half u ∈ (0, 1/2]: substitute u = w^q, q chosen so w^{qθ−1}·q is
    // at worst bounded (q ≥ 2/θ when θ < 1; the θ = 0 case is rejected by
    // callers of the first-exponent; for the uniform exponent h(0) = 0 keeps
    // the integrand finite even then, but we still guard q)
    let q = if theta > 0.0 {
        (2.0 / theta).ceil().clamp(1.0, 64.0)
    } else {
        1.0
    };
    let left = adaptive_simpson(
        &|w: f64| {
            let u = w.powf(q);
            if u <= 0.0 {
                return 0.0;
            }
            h(u, 1.0 - u) * density(u, 1.0 - u) * q * w.powf(q - 1.0)
        },
        1e-12,
        0.5f64.powf(1.0 / q),
        1e-12,
        48,
    );
    // right half u ∈ (1/2, 1): substitute u = 1 − v^p with p ≥ 3/(1−α);
    // 1−u = v^p is kept exact even where u rounds to 1
    let p = (3.0 / (1.0 - alpha)).ceil().clamp(2.0, 512.0);
    let right = adaptive_simpson(
        &|v: f64| {
            let vp = v.powf(p);
            if vp <= 0.0 {
                return 0.0;
            }
            let u = 1.0 - vp;
            h(u, vp) * density(u, vp) * p * v.powf(p - 1.0)
        },
        1e-12,
        0.5f64.powf(1.0 / p),
        1e-12,
        48,
    );
    left + right
}

/// Plain recursive adaptive Simpson quadrature.
fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            // per-interval tolerance kept constant: halving it each level can
            // push it below roundoff and force full-depth subdivision
            rec(f, a, m, fa, flm, fm, left, tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol, depth - 1)
        }
    }
    let whole = simpson(fa, fm, fb, b - a);
    rec(f, a, b, fa, fm, fb, whole, tol, depth)
}

/// Brute-force trapezoid oracle for the same integral (used by the tests as
/// an independent check of the adaptive scheme).
pub fn obm_integral_trapezoid<F: Fn(f64, f64) -> f64>(
    alpha: f64,
    theta: f64,
    h: F,
    panels: usize,
) -> f64 {
    // same substitutions as the adaptive scheme, but with fixed uniform panels
    let density = |u: f64, v: f64| {
        (alpha * u + theta * v) * u.powf(theta - 1.0) * v.powf(-alpha - 1.0)
    };
    let q = if theta > 0.0 {
        (2.0 / theta).ceil().clamp(1.0, 64.0)
    } else {
        1.0
    };
    let p = (3.0 / (1.0 - alpha)).ceil().clamp(2.0, 512.0);
    let trap = |f: &dyn Fn(f64) -> f64, a: f64, b: f64| {
        let mut s = 0.5 * (f(a) + f(b));
        for i in 1..panels {
            s += f(a + (b - a) * i as f64 / panels as f64);
        }
        s * (b - a) / panels as f64
    };
    let fl = |w: f64| {
        let u = w.powf(q);
        if u <= 0.0 {
            0.0
        } else {
            h(u, 1.0 - u) * density(u, 1.0 - u) * q * w.powf(q - 1.0)
        }
    };
    let fr = |v: f64| {
        let vp = v.powf(p);
        if vp <= 0.0 {
            0.0
        } else {
            h(1.0 - vp, vp) * density(1.0 - vp, vp) * p * v.powf(p - 1.0)
        }
    };
    trap(&fl, 1e-12, 0.5f64.powf(1.0 / q)) + trap(&fr, 1e-12, 0.5f64.powf(1.0 / p))
}

// ---------------------------------------------------------------------------
// Lamperti-transformed limit simulation
// ---------------------------------------------------------------------------

/// ε-truncated Lévy measure of the subordinator `ξ = −log |Γ₁|`, presented as
/// a total rate plus a jump-size sampler.
pub enum JumpLaw {
    /// Finite atomic Λ: `(rate wᵢ, jump size yᵢ)` pairs.
    Atoms(Vec<(f64, f64)>),
    /// Ordered-beta-mixture Λ truncated at jump size ε.
    ObmTruncated(ObmJumpSampler),
}

impl JumpLaw {
    /// Total jump rate `Λ([ε, ∞))`.
    pub fn rate(&self) -> f64 {
        match self {
            JumpLaw::Atoms(atoms) => atoms.iter().map(|&(w, _)| w).sum(),
            JumpLaw::ObmTruncated(s) => s.rate,
        }
    }

    /// Sample one jump size.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            JumpLaw::Atoms(atoms) => {
                let total = self.rate();
                let mut u: f64 = rng.gen::<f64>() * total;
                for &(w, y) in atoms {
                    if u < w {
                        return y;
                    }
                    u -= w;
                }
                atoms.last().unwrap().1
            }
            JumpLaw::ObmTruncated(s) => -s.sample_u(rng).ln(),
        }
    }

    /// Build the truncated jump law of a dislocation measure.
    pub fn from_measure(d: &DislocationMeasure, eps: f64) -> Result<JumpLaw> {
        match d {
            DislocationMeasure::FiniteAtomic { atoms } => {
                let mut list = Vec::new();
                for a in atoms {
                    let x1 = a.family.limit_first_block_freq().ok_or_else(|| {
                        Error::Unsupported("atom without first-block frequency".into())
                    })?;
                    if !(x1 > 0.0 && x1 < 1.0) {
                        return Err(Error::InvalidParameter(format!(
                            "|Γ₁| = {x1} outside (0,1)"
                        )));
                    }
                    let y = -x1.ln();
                    if y >= eps {
                        list.push((to_f64(&a.weight), y));
                    }
                }
                if list.is_empty() {
                    return Err(Error::InvalidParameter(
                        "no jumps of size >= eps".into(),
                    ));
                }
                Ok(JumpLaw::Atoms(list))
            }
            DislocationMeasure::OrderedBetaMixture { alpha, theta } => {
                if eps <= 0.0 {
                    return Err(Error::InvalidParameter(
                        "infinite-activity measure needs eps > 0".into(),
                    ));
                }
                Ok(JumpLaw::ObmTruncated(ObmJumpSampler::new(
                    to_f64(alpha),
                    to_f64(theta),
                    eps,
                )?))
            }
            _ => Err(Error::Unsupported(
                "jump law available for finite-atomic and ordered-beta measures".into(),
            )),
        }
    }
}

/// Rejection/inverse-CDF sampler for `u = |Γ₁|` restricted to
/// `u ≤ e^{−ε}` under the ordered-beta-mixture density.
pub struct ObmJumpSampler {
    alpha: f64,
    theta: f64,
    /// total rate Λ([ε,∞))
    pub rate: f64,
    /// probability that a jump falls in the bulk region u ∈ (0, 3/4]
    p_bulk: f64,
    /// inverse-CDF table for the bulk, in w = u^θ coordinates
    bulk_w: Vec<f64>,
    bulk_cdf: Vec<f64>,
    /// tail region v = 1−u ∈ [v0, 1/4]: power-law proposal parameters
    v0: f64,
    tail_env: f64,
}

impl ObmJumpSampler {
    fn density(alpha: f64, theta: f64, u: f64) -> f64 {
        (alpha * u + theta * (1.0 - u)) * u.powf(theta - 1.0) * (1.0 - u).powf(-alpha - 1.0)
    }

    pub fn new(alpha: f64, theta: f64, eps: f64) -> Result<Self> {
        if theta <= 0.0 {
            return Err(Error::InvalidParameter(
                "theta = 0 puts subordinator mass at infinite jumps".into(),
            ));
        }
        let u_max = (-eps).exp();
        if u_max <= 0.75 {
            return Err(Error::InvalidParameter(
                "truncation eps too large (e^{-eps} <= 3/4)".into(),
            ));
        }
        let v0 = 1.0 - u_max;
        // bulk u ∈ (0, 3/4]: tabulate the CDF in w = u^θ coordinates, where
        // the transformed density (αu+θ(1−u))(1−u)^{−α−1}/θ is bounded
        let n_tab = 4096;
        let w_hi = 0.75f64.powf(theta);
        let g = |w: f64| {
            let u = w.powf(1.0 / theta);
            (alpha * u + theta * (1.0 - u)) * (1.0 - u).powf(-alpha - 1.0) / theta
        };
        let mut bulk_w = Vec::with_capacity(n_tab + 1);
        let mut bulk_cdf = Vec::with_capacity(n_tab + 1);
        let mut acc = 0.0;
        let mut prev = g(0.0);
        bulk_w.push(0.0);
        bulk_cdf.push(0.0);
        for i in 1..=n_tab {
            let w = w_hi * i as f64 / n_tab as f64;
            let cur = g(w);
            acc += 0.5 * (prev + cur) * w_hi / n_tab as f64;
            prev = cur;
            bulk_w.push(w);
            bulk_cdf.push(acc);
        }
        let rate_bulk = acc;
        // tail v ∈ [v0, 1/4]: exact integral via r = v^{−α} substitution
        let smooth = |v: f64| {
            let u = 1.0 - v;
            (alpha * u + theta * v) * u.powf(theta - 1.0)
        };
        let rate_tail = if alpha > 0.0 {
            adaptive_simpson(
                &|r: f64| smooth(r.powf(-1.0 / alpha)) / alpha,
                0.25f64.powf(-alpha),
                v0.powf(-alpha),
                1e-10,
                48,
            )
        } else {
            // α = 0: density is (θ(1−u)+0)u^{θ−1}(1−u)^{−1} = θu^{θ−1}, smooth
            adaptive_simpson(&|v: f64| Self::density(0.0, theta, 1.0 - v), v0, 0.25, 1e-12, 40)
        };
        let rate = rate_bulk + rate_tail;
        // rejection envelope constant over the tail: f(u) ≤ env · v^{−α−1}
        let mut tail_env: f64 = 0.0;
        for i in 0..=512 {
            let v = v0 + (0.25 - v0) * i as f64 / 512.0;
            tail_env = tail_env.max(smooth(v));
        }
        tail_env *= 1.0001;
        Ok(ObmJumpSampler {
            alpha,
            theta,
            rate,
            p_bulk: rate_bulk / rate,
            bulk_w,
            bulk_cdf,
            v0,
            tail_env,
        })
    }

    /// Sample `u` from the truncated density.
    pub fn sample_u<R: Rng>(&self, rng: &mut R) -> f64 {
        if rng.gen::<f64>() < self.p_bulk {
            // inverse CDF by binary search + linear interpolation
            let target = rng.gen::<f64>() * self.bulk_cdf.last().unwrap();
            let idx = self
                .bulk_cdf
                .partition_point(|&c| c < target)
                .clamp(1, self.bulk_cdf.len() - 1);
            let (c0, c1) = (self.bulk_cdf[idx - 1], self.bulk_cdf[idx]);
            let frac = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.5 };
            let w = self.bulk_w[idx - 1] + frac * (self.bulk_w[idx] - self.bulk_w[idx - 1]);
            w.powf(1.0 / self.theta).clamp(1e-300, 0.75)
        } else if self.alpha > 0.0 {
            // tail: proposal ∝ v^{−α−1} on [v0, 1/4], analytic inverse CDF
            let (a, c_lo, c_hi) = (self.alpha, self.v0.powf(-self.alpha), 0.25f64.powf(-self.alpha));
            loop {
                let r = c_hi + rng.gen::<f64>() * (c_lo - c_hi);
                let v = r.powf(-1.0 / a);
                let u = 1.0 - v;
                let f_smooth = (self.alpha * u + self.theta * v) * u.powf(self.theta - 1.0);
                if rng.gen::<f64>() * self.tail_env < f_smooth {
                    return u;
                }
            }
        } else {
            // α = 0: θ u^{θ−1} on [3/4, u_max]: analytic inverse CDF
            let (lo, hi) = (0.75f64.powf(self.theta), (1.0 - self.v0).powf(self.theta));
            let w = lo + rng.gen::<f64>() * (hi - lo);
            w.powf(1.0 / self.theta)
        }
    }
}

/// A simulated path of the Lamperti-transformed limit
/// `X_t = exp(−ξ_{τ(t)})` on a fixed time grid, plus the absorption-time
/// estimate `∫₀^∞ exp(−γ ξ_s) ds`.
#[derive(Debug, Clone)]
pub struct LampertiPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub absorption: f64,
}

/// Simulate the limit process: compound-Poisson subordinator `ξ` with the
/// given (possibly truncated) jump law, Lamperti time change of index `γ`.
pub fn lamperti_path<R: Rng>(
    jumps: &JumpLaw,
    gamma: f64,
    grid: &[f64],
    rng: &mut R,
) -> Result<LampertiPath> {
    if gamma <= 0.0 {
        return Err(Error::InvalidParameter("gamma must be positive".into()));
    }
    let rate = jumps.rate();
    let mut xi = 0.0f64;
    let mut t = 0.0f64; // X-clock time
    let mut gi = 0usize;
    let mut values = vec![0.0; grid.len()];
    loop {
        let speed = (-gamma * xi).exp();
        if speed < 1e-12 {
            break;
        }
        let e: f64 = -rng.gen::<f64>().ln() / rate; // Exp(rate) in the ξ-clock
        let dt = e * speed;
        // snap sub-threshold masses to the absorption state so that marginal
        // comparisons see the atom at 0 rather than values like 1e-25
        let x = (-xi).exp();
        let x = if x < 1e-12 { 0.0 } else { x };
        while gi < grid.len() && grid[gi] < t + dt {
            values[gi] = x;
            gi += 1;
        }
        t += dt;
        xi += jumps.sample(rng);
    }
    while gi < grid.len() {
        values[gi] = 0.0;
        gi += 1;
    }
    Ok(LampertiPath {
        times: grid.to_vec(),
        values,
        absorption: t,
    })
}
