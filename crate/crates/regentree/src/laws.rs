//! Exact finite-n laws: splitting rules, tree probabilities, the λ sequence,
//! dislocation-measure cylinder masses, and the κ ↔ growth-rule dictionary.
//!
//! All computations in this module run over arbitrary-precision rationals.
//! For the ordered beta mixture, whose cylinder masses carry the irrational
//! scale `B(θ+1, 1−α)`, the exact values are reported in units of that Beta
//! factor; every ratio of cylinder masses (and hence every derived growth
//! probability) is scale-free, so the unit cancels wherever it matters.

use num::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::{
    binomial, format_ratio, gamma_ratio_alpha, parse_ratio, qi, qu, rising, to_f64, Q,
};
use crate::models::GrowthModel;
use crate::partitions::{enumerate_partitions, PartitionFamily, PartitionN};
use crate::stats::ln_beta;
use crate::trees::LabelledTree;

// ---------------------------------------------------------------------------
// Splitting rules and tree probabilities
// ---------------------------------------------------------------------------

/// Exact splitting-rule probability
/// `p_n(π) = g_{min B₂ − 1}(0) · ∏_{j=min B₂}^{n−1} g_j(π^[j], I_j)`,
/// with the convention `g_1(0) = 1`.
pub fn splitting_rule(m: &GrowthModel, pi: &PartitionN) -> Result<Q> {
    if pi.is_one_block() {
        return Err(Error::InvalidPartition(
            "splitting rule is defined on partitions with at least 2 blocks".into(),
        ));
    }
    let n = pi.n();
    let min_b2 = pi.blocks()[1][0];
    let mut p = if min_b2 == 2 {
        Q::one() // g_1(0) = 1
    } else {
        m.g0_exact(min_b2 - 1)?
    };
    let mut cur = pi.restrict_to(min_b2);
    for j in min_b2..n {
        // insert element j+1; find its block index in π^[j+1]
        let b_orig = pi.block_index_of(j + 1).unwrap();
        let i = pi
            .blocks()
            .iter()
            .take(b_orig + 1)
            .filter(|b| b[0] <= j + 1)
            .count(); // 1-based index among blocks alive at level j+1
        let probs = m.growth_probs_exact(&cur)?;
        let g = if i <= cur.num_blocks() {
            probs[i].clone()
        } else {
            probs[cur.num_blocks() + 1].clone()
        };
        if g.is_zero() {
            return Ok(Q::zero());
        }
        p *= g;
        cur = cur.insert_element(i - 1)?;
    }
    Ok(p)
}

/// The full first-split table on `𝒫_n ∖ {1_[n]}` (exact; sums to 1).
pub fn splitting_distribution(
    m: &GrowthModel,
    n: usize,
    force: bool,
) -> Result<Vec<(PartitionN, Q)>> {
    if n > 10 && !force {
        return Err(Error::ResourceGuard(format!(
            "splitting distribution for n = {n} > 10"
        )));
    }
    let mut out = Vec::new();
    for pi in enumerate_partitions(n, force)? {
        if pi.is_one_block() {
            continue;
        }
        let p = splitting_rule(m, &pi)?;
        out.push((pi, p));
    }
    Ok(out)
}

/// Exact probability of a labelled tree: the product over branch points of
/// the splitting rule applied to the relabelled child partition.
pub fn tree_prob(m: &GrowthModel, t: &LabelledTree) -> Result<Q> {
    let mut p = Q::one();
    for (_labels, pi) in t.branch_partitions()? {
        p *= splitting_rule(m, &pi)?;
        if p.is_zero() {
            return Ok(p);
        }
    }
    Ok(p)
}

/// Exact λ sequence `(λ_2, …, λ_{n_max})` from
/// `λ_n = λ₂ ∏_{j=2}^{n−1} 1/(1 − g_j(0))`.
pub fn lambda_seq(m: &GrowthModel, lambda2: &Q, n_max: usize) -> Result<Vec<Q>> {
    if !lambda2.is_positive() {
        return Err(Error::InvalidParameter("lambda_2 must be positive".into()));
    }
    if n_max < 2 {
        return Err(Error::InvalidParameter("lambda_seq needs n_max >= 2".into()));
    }
    let mut out = vec![lambda2.clone()];
    for j in 2..n_max {
        let g0 = m.g0_exact(j)?;
        if g0 >= Q::one() {
            return Err(Error::InvalidParameter(format!(
                "assumption (A) fails at j = {j}: g_j(0) = {}",
                format_ratio(&g0)
            )));
        }
        let prev = out.last().unwrap().clone();
        out.push(prev / (Q::one() - g0));
    }
    Ok(out)
}

/// Double-precision λ sequence (same recursion; fast closed-form `g_j(0)`).
pub fn lambda_seq_f64(m: &GrowthModel, lambda2: f64, n_max: usize) -> Result<Vec<f64>> {
    if lambda2 <= 0.0 {
        return Err(Error::InvalidParameter("lambda_2 must be positive".into()));
    }
    let mut out = vec![lambda2];
    for j in 2..n_max {
        let g0 = m.g0_f64(j)?;
        out.push(out.last().unwrap() / (1.0 - g0));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Dislocation measures
// ---------------------------------------------------------------------------

/// Weighted point mass of a finite atomic dislocation measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub weight: Q,
    pub family: PartitionFamily,
}

/// Weighted ranked-frequency paintbox atom.
#[derive(Debug, Clone, PartialEq)]
pub struct PaintboxAtom {
    pub weight: Q,
    /// Ranked frequencies, non-increasing rationals in (0, 1), sum ≤ 1.
    pub s: Vec<Q>,
}

/// A σ-finite dislocation measure on partitions of ℕ, presented in one of
/// four forms.  Invariants: `κ({1_ℕ}) = 0`, `0 < κ(𝒫^{{1},{2}}) < ∞`, and all
/// `λ_n = κ(𝒫 ∖ 𝒫^[n])` finite.
#[derive(Debug, Clone, PartialEq)]
pub enum DislocationMeasure {
    /// Finitely many atoms at explicit partitions of ℕ.
    FiniteAtomic { atoms: Vec<Atom> },
    /// The ordered beta mixture with density
    /// `(αu + θ(1−u)) u^{θ−1} (1−u)^{−α−1} du` over ordered paintboxes
    /// `(u, 1−u)`; induces the alpha-theta growth rule.
    OrderedBetaMixture { alpha: Q, theta: Q },
    /// Finite mixture of Kingman paintboxes over ranked frequencies.
    PaintboxMixture { atoms: Vec<PaintboxAtom> },
    /// The measure `κ(𝒫^π) = λ_n p_n(π)` built from a growth rule
    /// (Thm. 1.3 direction (i) → (ii)).
    FromGrowthRule { model: GrowthModel, lambda2: Q },
}

impl DislocationMeasure {
    /// Finite atomic measure; rejects non-positive weights, the `1_ℕ` atom,
    /// and measures with `κ(𝒫^{{1},{2}}) = 0`.
    pub fn finite_atomic(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidParameter("no atoms".into()));
        }
        for a in &atoms {
            if !a.weight.is_positive() {
                return Err(Error::InvalidParameter("atom weight must be > 0".into()));
            }
            if a.family == PartitionFamily::OneBlock {
                return Err(Error::InvalidParameter(
                    "kappa({1_N}) must be 0: the one-block atom is not allowed".into(),
                ));
            }
        }
        let d = DislocationMeasure::FiniteAtomic { atoms };
        if d.lambda_exact(2)?.is_zero() {
            return Err(Error::InvalidParameter(
                "normalization kappa(P^{{1},{2}}) is zero (all atoms split after 2)".into(),
            ));
        }
        Ok(d)
    }

    /// Ordered beta mixture with `0 ≤ α < 1`, `θ ≥ 0`, `(α, θ) ≠ (0, 0)`.
    pub fn ordered_beta_mixture(alpha: Q, theta: Q) -> Result<Self> {
        if alpha.is_negative() || alpha >= Q::one() || theta.is_negative() {
            return Err(Error::InvalidParameter(format!(
                "ordered beta mixture requires 0 <= alpha < 1 and theta >= 0, got alpha={}, theta={}",
                format_ratio(&alpha),
                format_ratio(&theta)
            )));
        }
        if alpha.is_zero() && theta.is_zero() {
            return Err(Error::InvalidParameter(
                "ordered beta mixture with alpha = theta = 0 is the zero measure".into(),
            ));
        }
        Ok(DislocationMeasure::OrderedBetaMixture { alpha, theta })
    }

    /// Finite paintbox mixture; frequencies must be non-increasing, in
    /// (0, 1), and sum to at most 1.
    pub fn paintbox_mixture(atoms: Vec<PaintboxAtom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidParameter("no paintbox atoms".into()));
        }
        for a in &atoms {
            if !a.weight.is_positive() {
                return Err(Error::InvalidParameter("atom weight must be > 0".into()));
            }
            let mut sum = Q::zero();
            for (i, s) in a.s.iter().enumerate() {
                if !s.is_positive() || s >= &Q::one() {
                    return Err(Error::InvalidParameter(
                        "paintbox frequencies must lie in (0, 1)".into(),
                    ));
                }
                if i > 0 && s > &a.s[i - 1] {
                    return Err(Error::InvalidParameter(
                        "paintbox frequencies must be non-increasing".into(),
                    ));
                }
                sum += s;
            }
            if sum > Q::one() {
                return Err(Error::InvalidParameter(
                    "paintbox frequencies must sum to at most 1".into(),
                ));
            }
        }
        let d = DislocationMeasure::PaintboxMixture { atoms };
        if d.lambda_exact(2)?.is_zero() {
            return Err(Error::InvalidParameter(
                "normalization kappa(P^{{1},{2}}) is zero".into(),
            ));
        }
        Ok(d)
    }

    /// Measure induced by a growth rule, scaled so `λ_2` takes the given
    /// positive value.
    pub fn from_growth_rule(model: GrowthModel, lambda2: Q) -> Result<Self> {
        if !lambda2.is_positive() {
            return Err(Error::InvalidParameter("lambda_2 must be positive".into()));
        }
        if matches!(model, GrowthModel::FromKappa(_)) {
            return Err(Error::Unsupported(
                "from_growth_rule over a kappa-derived model; use the measure directly".into(),
            ));
        }
        Ok(DislocationMeasure::FromGrowthRule { model, lambda2 })
    }

    /// Exact `λ_n = κ(𝒫 ∖ 𝒫^[n])` in canonical units.
    pub fn lambda_exact(&self, n: usize) -> Result<Q> {
        if n < 2 {
            return Ok(Q::zero());
        }
        match self {
            DislocationMeasure::FiniteAtomic { atoms } => {
                let mut s = Q::zero();
                for a in atoms {
                    if !a.family.restrict(n).is_one_block() {
                        s += &a.weight;
                    }
                }
                Ok(s)
            }
            DislocationMeasure::OrderedBetaMixture { alpha, theta } => {
                // sum the two-block cylinder masses over all of 𝒫_n
                let mut s = Q::zero();
                for n1 in 1..n {
                    let n2 = n - n1;
                    if n1 >= 2 {
                        s += binomial(n - 2, n1 - 2)
                            * obm_cylinder_units(alpha, theta, n1, n2, true);
                    }
                    s += binomial(n - 2, n1 - 1)
                        * obm_cylinder_units(alpha, theta, n1, n2, false);
                }
                Ok(s)
            }
            DislocationMeasure::PaintboxMixture { atoms } => {
                let mut s = Q::zero();
                for a in atoms {
                    let mut same: Q = a.s.iter().map(|x| num::pow::pow(x.clone(), n)).sum();
                    if a.s.is_empty() {
                        same = Q::zero();
                    }
                    s += &a.weight * (Q::one() - same);
                }
                Ok(s)
            }
            DislocationMeasure::FromGrowthRule { model, lambda2 } => {
                Ok(lambda_seq(model, lambda2, n)?.pop().unwrap())
            }
        }
    }

    /// Exact cylinder mass `κ(𝒫^π)` in canonical units (absolute for all
    /// variants except the ordered beta mixture, whose unit is
    /// `B(θ+1, 1−α)`).  `π = 1_[n]` is allowed when the mass is finite.
    pub fn kappa_cylinder_exact(&self, pi: &PartitionN) -> Result<Q> {
        let n = pi.n();
        if pi.is_one_block() {
            return match self {
                DislocationMeasure::FiniteAtomic { atoms } => {
                    let mut s = Q::zero();
                    for a in atoms {
                        if a.family.restrict(n) == *pi {
                            s += &a.weight;
                        }
                    }
                    Ok(s)
                }
                DislocationMeasure::OrderedBetaMixture { alpha, theta } => {
                    if alpha.is_positive() {
                        return Err(Error::InfiniteMass(format!(
                            "kappa(P^[{n}]) is infinite for the ordered beta mixture with alpha > 0"
                        )));
                    }
                    if n < 2 {
                        return Err(Error::InfiniteMass(
                            "total mass request on a sigma-finite measure".into(),
                        ));
                    }
                    // α = 0: ∫ u^{n−1} θ u^{θ−1} du = θ/(θ+n−1), in units of
                    // B(θ+1, 1) = 1/(θ+1).
                    Ok(theta * (theta + Q::one()) / (theta + qu(n - 1)))
                }
                DislocationMeasure::PaintboxMixture { atoms } => {
                    if n < 2 {
                        let mut s = Q::zero();
                        for a in atoms {
                            s += &a.weight;
                        }
                        return Ok(s);
                    }
                    let mut s = Q::zero();
                    for a in atoms {
                        let same: Q = a.s.iter().map(|x| num::pow::pow(x.clone(), n)).sum();
                        s += &a.weight * same;
                    }
                    Ok(s)
                }
                DislocationMeasure::FromGrowthRule { .. } => Err(Error::InfiniteMass(
                    "kappa(P^[n]) is not determined by a growth rule (only complements are)"
                        .into(),
                )),
            };
        }
        match self {
            DislocationMeasure::FiniteAtomic { atoms } => {
                let mut s = Q::zero();
                for a in atoms {
                    if a.family.restrict(n) == *pi {
                        s += &a.weight;
                    }
                }
                Ok(s)
            }
            DislocationMeasure::OrderedBetaMixture { alpha, theta } => {
                if pi.num_blocks() != 2 {
                    return Ok(Q::zero());
                }
                let sizes = pi.block_sizes();
                let two_in_b1 = pi.block_index_of(2) == Some(0);
                Ok(obm_cylinder_units(alpha, theta, sizes[0], sizes[1], two_in_b1))
            }
            DislocationMeasure::PaintboxMixture { atoms } => {
                let mut s = Q::zero();
                for a in atoms {
                    s += &a.weight * paintbox_cylinder_exact(&a.s, pi);
                }
                Ok(s)
            }
            DislocationMeasure::FromGrowthRule { model, lambda2 } => {
                let lam = lambda_seq(model, lambda2, n)?.pop().unwrap();
                Ok(lam * splitting_rule(model, pi)?)
            }
        }
    }

    /// Absolute double-precision cylinder mass `κ(𝒫^π)`.
    pub fn kappa_cylinder(&self, pi: &PartitionN) -> Result<f64> {
        Ok(to_f64(&self.kappa_cylinder_exact(pi)?) * self.unit_scale())
    }

    /// The absolute scale of one canonical unit.
    fn unit_scale(&self) -> f64 {
        match self {
            DislocationMeasure::OrderedBetaMixture { alpha, theta } => {
                ln_beta(to_f64(theta) + 1.0, 1.0 - to_f64(alpha)).exp()
            }
            _ => 1.0,
        }
    }

    /// The normalization `κ(𝒫^{{1},{2}})`, absolute.
    pub fn normalization(&self) -> Result<f64> {
        let pi2 = PartitionN::new(2, vec![vec![1], vec![2]])?;
        self.kappa_cylinder(&pi2)
    }

    /// `g_n(0) = 1 − λ_n/λ_{n+1}` induced by this measure.
    pub fn growth_zero_exact(&self, n: usize) -> Result<Q> {
        let ln = self.lambda_exact(n)?;
        let ln1 = self.lambda_exact(n + 1)?;
        if !ln.is_positive() || !ln1.is_positive() {
            return Err(Error::InvalidParameter(format!(
                "lambda_{n} or lambda_{} not positive",
                n + 1
            )));
        }
        Ok(Q::one() - ln / ln1)
    }

    /// The full induced growth vector `(g_n(0), g_n(π,1), …, g_n(π,k+1))`,
    /// with `g_n(π,i) = (λ_n/λ_{n+1}) κ(𝒫^{π+i}) / κ(𝒫^π)`.
    pub fn growth_probs_exact(&self, pi: &PartitionN) -> Result<Vec<Q>> {
        if pi.is_one_block() {
            return Err(Error::InvalidPartition(
                "growth probabilities need a partition with at least 2 blocks".into(),
            ));
        }
        let n = pi.n();
        let kappa_pi = self.kappa_cylinder_exact(pi)?;
        if kappa_pi.is_zero() {
            return Err(Error::NullCylinder(format!(
                "kappa(P^pi) = 0 for pi = {pi:?}"
            )));
        }
        let ln = self.lambda_exact(n)?;
        let ln1 = self.lambda_exact(n + 1)?;
        let ratio = ln / &ln1;
        let mut v = Vec::with_capacity(pi.num_blocks() + 2);
        v.push(Q::one() - ratio.clone());
        for i in 0..=pi.num_blocks() {
            let refined = pi.insert_element(i)?;
            v.push(&ratio * self.kappa_cylinder_exact(&refined)? / &kappa_pi);
        }
        Ok(v)
    }

    /// Measure spec as JSON with rational-string scalars.
    pub fn to_spec(&self) -> serde_json::Value {
        match self {
            DislocationMeasure::FiniteAtomic { atoms } => serde_json::json!({
                "variant": "finite_atomic",
                "atoms": atoms.iter().map(|a| serde_json::json!({
                    "weight": format_ratio(&a.weight),
                    "family": serde_json::to_value(&a.family).unwrap(),
                })).collect::<Vec<_>>(),
            }),
            DislocationMeasure::OrderedBetaMixture { alpha, theta } => serde_json::json!({
                "variant": "ordered_beta_mixture",
                "alpha": format_ratio(alpha),
                "theta": format_ratio(theta),
            }),
            DislocationMeasure::PaintboxMixture { atoms } => serde_json::json!({
                "variant": "paintbox_mixture",
                "atoms": atoms.iter().map(|a| serde_json::json!({
                    "weight": format_ratio(&a.weight),
                    "s": a.s.iter().map(format_ratio).collect::<Vec<_>>(),
                })).collect::<Vec<_>>(),
            }),
            DislocationMeasure::FromGrowthRule { model, lambda2 } => serde_json::json!({
                "variant": "from_growth_rule",
                "model": model.to_spec(),
                "lambda2": format_ratio(lambda2),
            }),
        }
    }

    /// Parse a measure spec produced by [`DislocationMeasure::to_spec`].
    pub fn from_spec(v: &serde_json::Value) -> Result<DislocationMeasure> {
        let bad = |m: String| Error::Parse(format!("measure spec: {m}"));
        let variant = v["variant"]
            .as_str()
            .ok_or_else(|| bad("missing variant".into()))?;
        let ratio_field = |o: &serde_json::Value, name: &str| -> Result<Q> {
            o[name]
                .as_str()
                .ok_or_else(|| bad(format!("missing {name}")))
                .and_then(parse_ratio)
        };
        match variant {
            "finite_atomic" => {
                let arr = v["atoms"]
                    .as_array()
                    .ok_or_else(|| bad("missing atoms".into()))?;
                let mut atoms = Vec::new();
                for a in arr {
                    let family: PartitionFamily = serde_json::from_value(a["family"].clone())
                        .map_err(|e| bad(format!("family: {e}")))?;
                    atoms.push(Atom {
                        weight: ratio_field(a, "weight")?,
                        family,
                    });
                }
                DislocationMeasure::finite_atomic(atoms)
            }
            "ordered_beta_mixture" => DislocationMeasure::ordered_beta_mixture(
                ratio_field(v, "alpha")?,
                ratio_field(v, "theta")?,
            ),
            "paintbox_mixture" => {
                let arr = v["atoms"]
                    .as_array()
                    .ok_or_else(|| bad("missing atoms".into()))?;
                let mut atoms = Vec::new();
                for a in arr {
                    let s_arr = a["s"].as_array().ok_or_else(|| bad("missing s".into()))?;
                    let s: Result<Vec<Q>> = s_arr
                        .iter()
                        .map(|x| {
                            x.as_str()
                                .ok_or_else(|| bad("s entry not a string".into()))
                                .and_then(parse_ratio)
                        })
                        .collect();
                    atoms.push(PaintboxAtom {
                        weight: ratio_field(a, "weight")?,
                        s: s?,
                    });
                }
                DislocationMeasure::paintbox_mixture(atoms)
            }
            "from_growth_rule" => DislocationMeasure::from_growth_rule(
                GrowthModel::from_spec(&v["model"])?,
                ratio_field(v, "lambda2")?,
            ),
            other => Err(bad(format!("unknown variant {other:?}"))),
        }
    }
}

/// Ordered-beta-mixture cylinder mass for a two-block partition with sizes
/// `(n1, n2)` (block 1 contains 1), in units of `B(θ+1, 1−α)`:
/// `κ(𝒫^π) = (α·1{2∈B₁} + θ·1{2∈B₂}) · B(θ+n₁−1, n₂−α)`.
fn obm_cylinder_units(alpha: &Q, theta: &Q, n1: usize, n2: usize, two_in_b1: bool) -> Q {
    let n = n1 + n2;
    // prefactor · Γ(θ+n₁−1)/Γ(θ+1); for n₁ = 1 with 2 ∈ B₂ the pole cancels:
    // θ·Γ(θ)/Γ(θ+1) = 1 identically.
    let head = if two_in_b1 {
        debug_assert!(n1 >= 2);
        alpha * rising(&(theta + Q::one()), n1 - 2)
    } else if n1 == 1 {
        Q::one()
    } else {
        theta * rising(&(theta + Q::one()), n1 - 2)
    };
    if head.is_zero() {
        return Q::zero();
    }
    // Γ(n₂−α)/Γ(1−α)
    let mid = gamma_ratio_alpha(alpha, n2);
    // Γ(θ+2−α)/Γ(θ+n−1−α)
    let tail = if n >= 3 {
        Q::one() / rising(&(theta + qi(2) - alpha), n - 3)
    } else {
        // n = 2: Γ(θ+2−α)/Γ(θ+1−α) = θ+1−α
        theta + Q::one() - alpha
    };
    head * mid * tail
}

/// Exact Kingman-paintbox cylinder probability `κ_s(𝒫^π)` for ranked
/// frequencies `s` (rationals, sum ≤ 1; the remainder is dust).  Blocks of
/// size ≥ 2 must take distinct colors; singleton blocks may be dust.
fn paintbox_cylinder_exact(s: &[Q], pi: &PartitionN) -> Q {
    let dust = Q::one() - s.iter().sum::<Q>();
    let sizes = pi.block_sizes();
    fn rec(s: &[Q], dust: &Q, sizes: &[usize], bi: usize, used: u64) -> Q {
        if bi == sizes.len() {
            return Q::one();
        }
        let b = sizes[bi];
        let mut acc = Q::zero();
        for (j, sj) in s.iter().enumerate() {
            if used & (1 << j) != 0 {
                continue;
            }
            acc += num::pow::pow(sj.clone(), b) * rec(s, dust, sizes, bi + 1, used | (1 << j));
        }
        if b == 1 && dust.is_positive() {
            acc += dust * rec(s, dust, sizes, bi + 1, used);
        }
        acc
    }
    rec(s, &dust, &sizes, 0, 0)
}

/// Thm. 1.3 growth probability `g_n(π, i)` induced by a dislocation measure
/// (`i` is 1-based; `i = k+1` opens a new block).
pub fn growth_from_kappa(d: &DislocationMeasure, pi: &PartitionN, i: usize) -> Result<Q> {
    if i == 0 || i > pi.num_blocks() + 1 {
        return Err(Error::InvalidParameter(format!(
            "growth index {i} out of range 1..={}",
            pi.num_blocks() + 1
        )));
    }
    Ok(d.growth_probs_exact(pi)?[i].clone())
}

/// Thm. 1.3 new-branch probability `g_n(0) = 1 − λ_n/λ_{n+1}`.
pub fn growth_from_kappa_zero(d: &DislocationMeasure, n: usize) -> Result<Q> {
    d.growth_zero_exact(n)
}

/// Unlabelled (Markov-branching) first-split law: the splitting distribution
/// pushed to decreasing block-size compositions.
pub fn unlabelled_split(
    m: &GrowthModel,
    n: usize,
    force: bool,
) -> Result<Vec<(Vec<usize>, Q)>> {
    let table = splitting_distribution(m, n, force)?;
    let mut map: std::collections::BTreeMap<Vec<usize>, Q> = std::collections::BTreeMap::new();
    for (pi, p) in table {
        let key = pi.ranked_sizes();
        *map.entry(key).or_insert_with(Q::zero) += p;
    }
    Ok(map.into_iter().filter(|(_, p)| !p.is_zero()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q;
    use crate::trees::enumerate_trees;

    fn pi(n: usize, blocks: Vec<Vec<usize>>) -> PartitionN {
        PartitionN::new(n, blocks).unwrap()
    }

    fn at(alpha: (i64, i64), theta: (i64, i64)) -> GrowthModel {
        GrowthModel::alpha_theta(q(alpha.0, alpha.1), q(theta.0, theta.1)).unwrap()
    }

    #[test]
    fn p2_is_one() {
        let models = [
            GrowthModel::ford(q(1, 2)).unwrap(),
            at((1, 2), (1, 2)),
            GrowthModel::poisson_dirichlet(q(1, 3), q(1, 5)).unwrap(),
        ];
        let pi2 = pi(2, vec![vec![1], vec![2]]);
        for m in &models {
            assert_eq!(splitting_rule(m, &pi2).unwrap(), Q::one());
        }
    }

    #[test]
    fn ford_p3_cherry() {
        // p_3(({1,2},{3})) = g_2(0) = α/(2−α)
        let a = q(2, 5);
        let m = GrowthModel::ford(a.clone()).unwrap();
        let p = splitting_rule(&m, &pi(3, vec![vec![1, 2], vec![3]])).unwrap();
        assert_eq!(p, &a / (qi(2) - &a));
    }

    #[test]
    fn ford_half_t3_distribution() {
        let m = GrowthModel::ford(q(1, 2)).unwrap();
        let table = splitting_distribution(&m, 3, false).unwrap();
        assert_eq!(table.len(), 4);
        for (pi, p) in &table {
            if pi.num_blocks() == 3 {
                assert_eq!(*p, Q::zero());
            } else {
                assert_eq!(*p, q(1, 3), "{pi:?}");
            }
        }
    }

    #[test]
    fn splitting_distribution_sums_to_one() {
        let models = [
            GrowthModel::ford(q(1, 3)).unwrap(),
            at((1, 2), (1, 2)),
            GrowthModel::alpha_gamma(q(1, 2), q(3, 10)).unwrap(),
            GrowthModel::poisson_dirichlet(q(1, 2), q(-1, 2)).unwrap(),
        ];
        for m in &models {
            for n in 2..=6 {
                let s: Q = splitting_distribution(m, n, false)
                    .unwrap()
                    .into_iter()
                    .map(|(_, p)| p)
                    .sum();
                assert_eq!(s, Q::one(), "{m:?} n={n}");
            }
        }
        assert!(splitting_distribution(&models[0], 11, false).is_err());
    }

    #[test]
    fn alpha_theta_closed_form() {
        // p_n(B₁,B₂) = (α1{2∈B₁}+θ1{2∈B₂})·Γ(#B₁−1+θ)Γ(#B₂−α)/(Γ(n−1+θ)Γ(1−α))
        let (alpha, theta) = (q(1, 2), q(3, 4));
        let m = GrowthModel::alpha_theta(alpha.clone(), theta.clone()).unwrap();
        for n in 2..=8 {
            for p in enumerate_partitions(n, false).unwrap() {
                if p.num_blocks() != 2 {
                    continue;
                }
                let sizes = p.block_sizes();
                let (n1, n2) = (sizes[0], sizes[1]);
                let pref = if p.block_index_of(2) == Some(0) {
                    alpha.clone()
                } else {
                    theta.clone()
                };
                // Γ(n1−1+θ)/Γ(n−1+θ) = 1/rising(n1−1+θ, n−n1)
                let closed = pref * gamma_ratio_alpha(&alpha, n2)
                    / rising(&(qu(n1 - 1) + &theta), n - n1);
                assert_eq!(splitting_rule(&m, &p).unwrap(), closed, "{p:?}");
            }
        }
    }

    #[test]
    fn pg_marginal_recursion() {
        // p_n(π) = Σ over refinements π' ∈ 𝒫_{n+1} restricting to π of p_{n+1}(π'),
        // plus the mass where the first split happens after n:
        // p_n(π) = p_{n+1}(π ∪ n+1 placements) summed — including the case of
        // the first branch moving is excluded since restriction of any
        // π' ∈ 𝒫_{n+1}∖{1} with π'^{[n]} = π. For π ≠ 1_[n] every placement
        // of n+1 in a block or new block gives such a π'.
        let models = [
            GrowthModel::ford(q(1, 2)).unwrap(),
            GrowthModel::alpha_gamma(q(1, 2), q(3, 10)).unwrap(),
            GrowthModel::poisson_dirichlet(q(1, 2), q(1, 2)).unwrap(),
        ];
        for m in &models {
            for n in 2..=6 {
                for p in enumerate_partitions(n, false).unwrap() {
                    if p.is_one_block() {
                        continue;
                    }
                    let p_n = splitting_rule(m, &p).unwrap();
                    // late-first-split term: p_{n+1}(([n],{n+1})) · p_n(π)
                    let late = {
                        let mut blocks = vec![(1..=n).collect::<Vec<_>>()];
                        blocks.push(vec![n + 1]);
                        splitting_rule(m, &PartitionN::new(n + 1, blocks).unwrap()).unwrap()
                    };
                    let mut total = &late * &p_n;
                    for i in 0..=p.num_blocks() {
                        total += splitting_rule(m, &p.insert_element(i).unwrap()).unwrap();
                    }
                    assert_eq!(total, p_n, "{m:?} {p:?}");
                }
            }
        }
    }

    #[test]
    fn tree_prob_examples_and_sum() {
        let m = GrowthModel::ford(q(1, 2)).unwrap();
        let t2 = crate::models::grow(&m, 2, 0).unwrap();
        assert_eq!(tree_prob(&m, &t2).unwrap(), Q::one());
        let models = [
            GrowthModel::ford(q(1, 2)).unwrap(),
            at((1, 2), (1, 2)),
            GrowthModel::alpha_gamma(q(1, 2), q(3, 10)).unwrap(),
            GrowthModel::poisson_dirichlet(q(1, 2), q(-1, 4)).unwrap(),
        ];
        for m in &models {
            for n in 2..=5 {
                let s: Q = enumerate_trees(n, false)
                    .unwrap()
                    .iter()
                    .map(|t| tree_prob(m, t).unwrap())
                    .sum();
                assert_eq!(s, Q::one(), "{m:?} n={n}");
            }
        }
    }

    #[test]
    fn tree_prob_regenerative_factorization() {
        let m = GrowthModel::alpha_gamma(q(1, 2), q(3, 10)).unwrap();
        for t in enumerate_trees(5, false).unwrap().iter().step_by(7) {
            let split = t.first_split().unwrap();
            let mut expect = splitting_rule(&m, &split).unwrap();
            for block in t.first_split_blocks().unwrap() {
                if block.len() >= 2 {
                    let sub = t.reduced_subtree(&block).unwrap();
                    expect *= tree_prob(&m, &sub).unwrap();
                }
            }
            assert_eq!(tree_prob(&m, t).unwrap(), expect);
        }
    }

    #[test]
    fn tree_prob_consistency_under_leaf_removal() {
        let m = GrowthModel::poisson_dirichlet(q(1, 2), q(1, 2)).unwrap();
        for n in 2..=4 {
            let big = enumerate_trees(n + 1, false).unwrap();
            for t in enumerate_trees(n, false).unwrap() {
                let mut s = Q::zero();
                for t1 in &big {
                    if t1.remove_leaf(n + 1).unwrap() == t {
                        s += tree_prob(&m, t1).unwrap();
                    }
                }
                assert_eq!(s, tree_prob(&m, &t).unwrap());
            }
        }
    }

    #[test]
    fn lambda_examples() {
        let m = GrowthModel::ford(q(1, 3)).unwrap();
        let lam = lambda_seq(&m, &Q::one(), 3).unwrap();
        // λ₃ = 1/(1−α/(2−α)) = (2−α)/(2−2α) with α=1/3: (5/3)/(4/3) = 5/4
        assert_eq!(lam, vec![Q::one(), q(5, 4)]);
        let m = at((1, 2), (1, 2));
        let lam = lambda_seq(&m, &Q::one(), 3).unwrap();
        assert_eq!(lam[1], q(3, 2));
        // identity λ_n(1 − g_{n-1}(0)) = λ_{n-1}
        let lam = lambda_seq(&m, &q(7, 2), 40).unwrap();
        for n in 3..=39 {
            let g0 = m.g0_exact(n - 1).unwrap();
            assert_eq!(&lam[n - 2] * (Q::one() - g0), lam[n - 3]);
        }
        // f64 variant agrees
        let lamf = lambda_seq_f64(&m, 3.5, 40).unwrap();
        for (a, b) in lam.iter().zip(&lamf) {
            assert!((to_f64(a) - b).abs() < 1e-9 * b);
        }
    }

    fn odds_evens_atom(w: Q) -> Atom {
        Atom {
            weight: w,
            family: PartitionFamily::OddsEvens,
        }
    }

    #[test]
    fn finite_atomic_cylinders() {
        let d = DislocationMeasure::finite_atomic(vec![
            odds_evens_atom(q(3, 7)),
            Atom {
                weight: q(1, 2),
                family: PartitionFamily::Singletons,
            },
        ])
        .unwrap();
        // κ(𝒫^({1,3},{2})) = weight of the odds/evens atom
        assert_eq!(
            d.kappa_cylinder_exact(&pi(3, vec![vec![1, 3], vec![2]])).unwrap(),
            q(3, 7)
        );
        assert_eq!(
            d.kappa_cylinder_exact(&pi(3, vec![vec![1], vec![2], vec![3]]))
                .unwrap(),
            q(1, 2)
        );
        assert_eq!(d.lambda_exact(5).unwrap(), q(3, 7) + q(1, 2));
        assert_eq!(d.kappa_cylinder_exact(&PartitionN::one_block(4)).unwrap(), Q::zero());
        // rejects the one-block atom and zero normalization
        assert!(DislocationMeasure::finite_atomic(vec![Atom {
            weight: Q::one(),
            family: PartitionFamily::OneBlock
        }])
        .is_err());
    }

    #[test]
    fn cylinder_additivity() {
        let obm = DislocationMeasure::ordered_beta_mixture(q(1, 2), q(1, 2)).unwrap();
        let fa = DislocationMeasure::finite_atomic(vec![
            odds_evens_atom(Q::one()),
            Atom {
                weight: q(2, 3),
                family: PartitionFamily::Singletons,
            },
        ])
        .unwrap();
        let fgr = DislocationMeasure::from_growth_rule(
            GrowthModel::alpha_gamma(q(1, 2), q(3, 10)).unwrap(),
            Q::one(),
        )
        .unwrap();
        let pbm = DislocationMeasure::paintbox_mixture(vec![PaintboxAtom {
            weight: q(5, 4),
            s: vec![q(1, 2), q(1, 4)],
        }])
        .unwrap();
        for d in [&obm, &fa, &fgr, &pbm] {
            for n in 2..=6 {
                for p in enumerate_partitions(n, false).unwrap() {
                    if p.is_one_block() {
                        continue;
                    }
                    let mass = d.kappa_cylinder_exact(&p).unwrap();
                    let mut refined = Q::zero();
                    for i in 0..=p.num_blocks() {
                        refined += d
                            .kappa_cylinder_exact(&p.insert_element(i).unwrap())
                            .unwrap();
                    }
                    assert_eq!(refined, mass, "{d:?} {p:?}");
                }
            }
        }
    }

    #[test]
    fn lambda_equals_two_block_sum_for_obm() {
        // λ_n must equal the sum of κ over all of 𝒫_n ∖ {1_[n]} (all mass is
        // on two-block partitions)
        let d = DislocationMeasure::ordered_beta_mixture(q(1, 2), q(3, 4)).unwrap();
        for n in 2..=6 {
            let mut s = Q::zero();
            for p in enumerate_partitions(n, false).unwrap() {
                if !p.is_one_block() {
                    s += d.kappa_cylinder_exact(&p).unwrap();
                }
            }
            assert_eq!(s, d.lambda_exact(n).unwrap());
        }
    }

    #[test]
    fn obm_normalization_value() {
        // α = θ = 1/2: κ(𝒫^{{1},{2}}) = (θ+1−α)B(θ+1,1−α) = B(3/2,1/2) = π/2
        let d = DislocationMeasure::ordered_beta_mixture(q(1, 2), q(1, 2)).unwrap();
        let norm = d.normalization().unwrap();
        assert!((norm - std::f64::consts::PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn obm_reproduces_alpha_theta_growth() {
        let (alpha, theta) = (q(1, 2), q(1, 2));
        let d = DislocationMeasure::ordered_beta_mixture(alpha.clone(), theta.clone()).unwrap();
        let m = GrowthModel::alpha_theta(alpha, theta).unwrap();
        for n in 2..=8 {
            assert_eq!(d.growth_zero_exact(n).unwrap(), m.g0_exact(n).unwrap());
            for p in enumerate_partitions(n, false).unwrap() {
                if p.num_blocks() != 2 {
                    continue;
                }
                let from_kappa = d.growth_probs_exact(&p).unwrap();
                let named = m.growth_probs_exact(&p).unwrap();
                assert_eq!(from_kappa, named, "n={n} {p:?}");
            }
        }
    }

    #[test]
    fn from_growth_rule_round_trip() {
        let models = [
            GrowthModel::ford(q(1, 2)).unwrap(),
            GrowthModel::alpha_gamma(q(2, 3), q(1, 4)).unwrap(),
            GrowthModel::poisson_dirichlet(q(1, 2), q(1, 3)).unwrap(),
        ];
        for m in &models {
            let d = DislocationMeasure::from_growth_rule(m.clone(), q(7, 3)).unwrap();
            for n in 2..=6 {
                assert_eq!(d.growth_zero_exact(n).unwrap(), m.g0_exact(n).unwrap());
                for p in enumerate_partitions(n, false).unwrap() {
                    if p.is_one_block() {
                        continue;
                    }
                    let named = m.growth_probs_exact(&p).unwrap();
                    match d.growth_probs_exact(&p) {
                        Ok(v) => assert_eq!(v, named, "{m:?} {p:?}"),
                        Err(Error::NullCylinder(_)) => {
                            // off-support partition: the named model must
                            // assign it probability 0 as a first split
                            assert_eq!(splitting_rule(m, &p).unwrap(), Q::zero());
                        }
                        Err(e) => panic!("{e}"),
                    }
                }
            }
        }
    }

    #[test]
    fn pkappa_identity() {
        // p_n(π) = κ(𝒫^π)/λ_n for FromGrowthRule measures
        let m = GrowthModel::alpha_gamma(q(1, 2), q(3, 10)).unwrap();
        let d = DislocationMeasure::from_growth_rule(m.clone(), q(5, 2)).unwrap();
        for n in 2..=6 {
            let lam = d.lambda_exact(n).unwrap();
            for p in enumerate_partitions(n, false).unwrap() {
                if p.is_one_block() {
                    continue;
                }
                assert_eq!(
                    d.kappa_cylinder_exact(&p).unwrap() / &lam,
                    splitting_rule(&m, &p).unwrap()
                );
            }
        }
    }

    #[test]
    fn scale_invariance_of_induced_growth() {
        let base = vec![
            odds_evens_atom(q(1, 3)),
            Atom {
                weight: q(4, 5),
                family: PartitionFamily::Singletons,
            },
        ];
        let scaled: Vec<Atom> = base
            .iter()
            .map(|a| Atom {
                weight: &a.weight * q(17, 3),
                family: a.family.clone(),
            })
            .collect();
        let d1 = DislocationMeasure::finite_atomic(base).unwrap();
        let d2 = DislocationMeasure::finite_atomic(scaled).unwrap();
        for n in 2..=6 {
            for p in enumerate_partitions(n, false).unwrap() {
                if p.is_one_block() {
                    continue;
                }
                match (d1.growth_probs_exact(&p), d2.growth_probs_exact(&p)) {
                    (Ok(a), Ok(b)) => assert_eq!(a, b),
                    (Err(Error::NullCylinder(_)), Err(Error::NullCylinder(_))) => {}
                    (a, b) => panic!("asymmetric outcomes: {a:?} vs {b:?}"),
                }
            }
        }
    }

    #[test]
    fn obm_infinite_one_block_mass() {
        let d = DislocationMeasure::ordered_beta_mixture(q(1, 2), q(1, 2)).unwrap();
        assert!(matches!(
            d.kappa_cylinder_exact(&PartitionN::one_block(4)),
            Err(Error::InfiniteMass(_))
        ));
        // α = 0 is finite: θ(θ+1)/(θ+n−1) units
        let d0 = DislocationMeasure::ordered_beta_mixture(Q::zero(), q(1, 2)).unwrap();
        let v = d0.kappa_cylinder_exact(&PartitionN::one_block(4)).unwrap();
        assert_eq!(v, q(1, 2) * q(3, 2) / q(7, 2));
    }

    #[test]
    fn unlabelled_split_examples() {
        let m = GrowthModel::ford(q(1, 2)).unwrap();
        let u2 = unlabelled_split(&m, 2, false).unwrap();
        assert_eq!(u2, vec![(vec![1, 1], Q::one())]);
        let u3 = unlabelled_split(&m, 3, false).unwrap();
        assert_eq!(u3, vec![(vec![2, 1], Q::one())]);
        let m = GrowthModel::alpha_gamma(q(1, 2), q(3, 10)).unwrap();
        let u3 = unlabelled_split(&m, 3, false).unwrap();
        let total: Q = u3.iter().map(|(_, p)| p.clone()).sum();
        assert_eq!(total, Q::one());
        let p_star = u3
            .iter()
            .find(|(k, _)| k == &vec![1, 1, 1])
            .map(|(_, p)| p.clone())
            .unwrap();
        // singleton split at n=3 comes only from the star:
        // p_3({1},{2},{3}) = p_2 · g_2(({1},{2}), 3) = 1 · ((k−1)α−γ)/(2−α)
        // with k = 2 existing blocks: (1/2 − 3/10)/(3/2) = 2/15
        let expect = (q(1, 2) - q(3, 10)) / q(3, 2);
        assert_eq!(p_star, expect);
        let p_21 = u3
            .iter()
            .find(|(k, _)| k == &vec![2, 1])
            .map(|(_, p)| p.clone())
            .unwrap();
        assert_eq!(p_21, Q::one() - expect);
    }

    #[test]
    fn measure_spec_round_trip() {
        let measures = [
            DislocationMeasure::finite_atomic(vec![odds_evens_atom(q(3, 7))]).unwrap(),
            DislocationMeasure::ordered_beta_mixture(q(1, 2), q(1, 2)).unwrap(),
            DislocationMeasure::paintbox_mixture(vec![PaintboxAtom {
                weight: Q::one(),
                s: vec![q(1, 2), q(1, 3)],
            }])
            .unwrap(),
            DislocationMeasure::from_growth_rule(
                GrowthModel::ford(q(1, 2)).unwrap(),
                Q::one(),
            )
            .unwrap(),
        ];
        for d in &measures {
            let v = d.to_spec();
            let back = DislocationMeasure::from_spec(&v).unwrap();
            assert_eq!(&back, d);
        }
    }

    #[test]
    fn from_kappa_model_grows() {
        // a FromKappa growth model over the OBM behaves like alpha-theta
        let d = DislocationMeasure::ordered_beta_mixture(q(1, 2), q(1, 2)).unwrap();
        let mk = GrowthModel::from_kappa(d).unwrap();
        let t = crate::models::grow(&mk, 6, 11).unwrap();
        assert_eq!(t.n(), 6);
        // binary everywhere
        for b in t.branch_points() {
            assert_eq!(t.children_of(b).len(), 2);
        }
    }

    #[test]
    fn paintbox_cylinder_hand_value() {
        // s = (1/2, 1/4), dust 1/4; π = ({1,2},{3}):
        // block {1,2} takes color j: s_j²; block {3} takes the other color or dust:
        // (1/2)²(1/4 + 1/4) + (1/4)²(1/2 + 1/4) = 1/8 + 3/64 = 11/64
        let s = vec![q(1, 2), q(1, 4)];
        let v = paintbox_cylinder_exact(&s, &pi(3, vec![vec![1, 2], vec![3]]));
        assert_eq!(v, q(11, 64));
    }
}
