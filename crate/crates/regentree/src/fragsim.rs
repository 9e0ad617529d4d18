//! Continuous-time constructions: the partition-valued fragmentation chain
//! restricted to `[n]` (genealogies with exponential holding times), and
//! self-similar mass-fragmentation reference simulations.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde_json::json;

use crate::error::{Error, Result};
use crate::laws::lambda_seq_f64;
use crate::models::{grow, GrowthModel};
use crate::trees::{tree_from_raw, LabelledTree, RawNode};

// ---------------------------------------------------------------------------
// Timed genealogies (restricted fragmentation chain)
// ---------------------------------------------------------------------------

/// Genealogy of the fragmentation chain restricted to `[n]`: a labelled tree
/// whose internal edge lengths are the exponential holding times of the
/// blocks, plus the birth time of every block.  Leaf edges have length 0 (a
/// singleton block never splits, so the genealogy is cut at its birth).
#[derive(Debug, Clone)]
pub struct TimedGenealogy {
    pub tree: LabelledTree,
    /// `(sorted block labels, birth time)` for every block that ever exists.
    pub births: Vec<(Vec<usize>, f64)>,
}

impl TimedGenealogy {
    /// Newick export with edge lengths.
    pub fn newick(&self) -> String {
        self.tree.newick()
    }

    /// Holding time of the block with exactly these (sorted) labels, when it
    /// is a block of the genealogy with ≥ 2 elements.
    pub fn holding_time(&self, labels: &[usize]) -> Option<f64> {
        let birth = self
            .births
            .iter()
            .find(|(b, _)| b.as_slice() == labels)?
            .1;
        // the block splits when its children are born
        let child_birth = self
            .births
            .iter()
            .filter(|(b, _)| b.len() < labels.len() && b.iter().all(|l| labels.contains(l)))
            .map(|(_, t)| *t)
            .fold(f64::INFINITY, f64::min);
        if child_birth.is_finite() {
            Some(child_birth - birth)
        } else {
            None
        }
    }
}

/// Simulate the genealogy of the restricted chain `Π^{[n]}`: every block `B`
/// holds an `Exp(λ_{#B})` time and then splits according to `p_{#B}`, the
/// split being sampled exactly by growing a fresh `#B`-leaf tree under the
/// growth rule and reading off its first split.
pub fn ctmc_genealogy(
    m: &GrowthModel,
    lambda2: f64,
    n: usize,
    seed: u64,
) -> Result<TimedGenealogy> {
    if n < 2 {
        return Err(Error::InvalidParameter("ctmc_genealogy needs n >= 2".into()));
    }
    let lambdas = lambda_seq_f64(m, lambda2, n)?; // λ_j = lambdas[j-2]
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut births = Vec::new();
    fn build(
        m: &GrowthModel,
        lambdas: &[f64],
        block: Vec<usize>,
        birth: f64,
        rng: &mut ChaCha12Rng,
        births: &mut Vec<(Vec<usize>, f64)>,
    ) -> Result<RawNode> {
        births.push((block.clone(), birth));
        if block.len() == 1 {
            return Ok(RawNode {
                label: Some(block[0]),
                elen: Some(0.0),
                children: vec![],
            });
        }
        let b = block.len();
        let hold = -rng.gen::<f64>().ln() / lambdas[b - 2];
        let fresh = grow(m, b, rng.gen::<u64>())?;
        let split = fresh.first_split_blocks()?;
        let mut children = Vec::with_capacity(split.len());
        for sub in split {
            let mapped: Vec<usize> = sub.iter().map(|&i| block[i - 1]).collect();
            children.push(build(m, lambdas, mapped, birth + hold, rng, births)?);
        }
        Ok(RawNode {
            label: None,
            elen: Some(hold),
            children,
        })
    }
    let top = build(
        m,
        &lambdas,
        (1..=n).collect(),
        0.0,
        &mut rng,
        &mut births,
    )?;
    Ok(TimedGenealogy {
        tree: tree_from_raw(top)?,
        births,
    })
}

// ---------------------------------------------------------------------------
// Self-similar mass fragmentation
// ---------------------------------------------------------------------------

/// Sampler interface for a (possibly truncated) dislocation measure ν on
/// ranked mass fractions: total mass plus fraction sampling.
pub trait NuSampler {
    /// `ν(𝒮↓)` after truncation — the splitting rate of a unit-mass block.
    fn total_mass(&self) -> f64;
    /// One draw of ranked fractions (decreasing, summing to ≤ 1).
    fn sample_fractions<R: Rng>(&self, rng: &mut R) -> Vec<f64>;
}

/// Finite atomic ν: weighted atoms of ranked fraction vectors.
pub struct AtomicNu {
    pub atoms: Vec<(f64, Vec<f64>)>,
}

impl NuSampler for AtomicNu {
    fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|(w, _)| w).sum()
    }
    fn sample_fractions<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let total = self.total_mass();
        let mut u = rng.gen::<f64>() * total;
        for (w, s) in &self.atoms {
            if u < *w {
                return s.clone();
            }
            u -= w;
        }
        self.atoms.last().unwrap().1.clone()
    }
}

/// Node of a self-similar mass fragmentation: a block of the given mass held
/// for `hold` time units before splitting into the children (leaves are
/// blocks at or below the simulation's mass floor, with `hold = 0`).
#[derive(Debug, Clone)]
pub struct MassFragNode {
    pub mass: f64,
    pub hold: f64,
    pub children: Vec<MassFragNode>,
}

impl MassFragNode {
    fn height(&self) -> f64 {
        self.hold
            + self
                .children
                .iter()
                .map(MassFragNode::height)
                .fold(0.0, f64::max)
    }
    fn leaves<'a>(&'a self, depth: f64, out: &mut Vec<(f64, f64)>) {
        if self.children.is_empty() {
            out.push((self.mass, depth + self.hold));
        } else {
            for c in &self.children {
                c.leaves(depth + self.hold, out);
            }
        }
    }
    fn to_json(&self) -> serde_json::Value {
        json!({
            "mass": self.mass,
            "hold": self.hold,
            "children": self.children.iter().map(MassFragNode::to_json).collect::<Vec<_>>(),
        })
    }
}

/// A simulated self-similar fragmentation of a unit mass.
#[derive(Debug, Clone)]
pub struct MassFragTree {
    pub root: MassFragNode,
    pub gamma: f64,
    pub mass_floor: f64,
}

impl MassFragTree {
    /// Height functional: supremum over leaves of summed holding times.
    pub fn height(&self) -> f64 {
        self.root.height()
    }

    /// `(mass, death time)` of every floor-level leaf.
    pub fn leaf_masses(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        self.root.leaves(0.0, &mut out);
        out
    }

    /// JSON export `{mass, hold, children: [...]}`.
    pub fn to_json(&self) -> serde_json::Value {
        self.root.to_json()
    }
}

/// Simulate a self-similar mass fragmentation: a block of mass `x` splits
/// into `x·s` (s ~ normalized ν) at rate `x^{−γ}·ν-total-mass`; recursion
/// stops at blocks of mass ≤ `mass_floor`.
pub fn mass_frag_tree<S: NuSampler>(
    gamma: f64,
    nu: &S,
    mass_floor: f64,
    seed: u64,
) -> Result<MassFragTree> {
    if gamma <= 0.0 || mass_floor <= 0.0 {
        return Err(Error::InvalidParameter(
            "mass_frag_tree needs gamma > 0 and mass_floor > 0".into(),
        ));
    }
    let rate0 = nu.total_mass();
    if !(rate0 > 0.0) {
        return Err(Error::InvalidParameter("nu has no mass".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    fn build<S: NuSampler>(
        gamma: f64,
        nu: &S,
        rate0: f64,
        mass: f64,
        floor: f64,
        rng: &mut ChaCha12Rng,
    ) -> MassFragNode {
        if mass <= floor {
            return MassFragNode {
                mass,
                hold: 0.0,
                children: vec![],
            };
        }
        let rate = mass.powf(-gamma) * rate0;
        let hold = -rng.gen::<f64>().ln() / rate;
        let fractions = nu.sample_fractions(rng);
        let children = fractions
            .into_iter()
            .filter(|&s| s > 0.0)
            .map(|s| build(gamma, nu, rate0, mass * s, floor, rng))
            .collect();
        MassFragNode {
            mass,
            hold,
            children,
        }
    }
    Ok(MassFragTree {
        root: build(gamma, nu, rate0, 1.0, mass_floor, &mut rng),
        gamma,
        mass_floor,
    })
}

// ---------------------------------------------------------------------------
// Brownian dislocation measure
// ---------------------------------------------------------------------------

/// Binary dislocation density `√(2/π)·(s₁(1−s₁))^{−3/2}` on `s₁ ∈ (1/2, 1)`,
/// ε-truncated to `s₁ ≤ 1−ε` (the measure is infinite at `s₁ = 1`).
/// Sampling is by an inverse-CDF table in `w = (1−s₁)^{−1/2}` coordinates,
/// where the transformed density is nearly constant.
pub struct BrownianNu {
    pub eps: f64,
    total: f64,
    /// grid in w = (1−s₁)^{−1/2}, increasing
    w_grid: Vec<f64>,
    cdf: Vec<f64>,
}

impl BrownianNu {
    pub fn new(eps: f64) -> Result<BrownianNu> {
        if !(eps > 0.0 && eps < 0.5) {
            return Err(Error::InvalidParameter(
                "truncation eps must lie in (0, 1/2)".into(),
            ));
        }
        // v = 1−s₁ ∈ [ε, 1/2]; density √(2/π)(v(1−v))^{−3/2};
        // substitute v = w^{−2}: dv = −2w^{−3}dw and the integrand becomes
        // 2√(2/π)(1−w^{−2})^{−3/2}, smooth on w ∈ [√2, ε^{−1/2}]
        let c = (2.0 / std::f64::consts::PI).sqrt();
        let g = |w: f64| 2.0 * c * (1.0 - w.powi(-2)).powf(-1.5);
        let (w_lo, w_hi) = (2f64.sqrt(), eps.powf(-0.5));
        let n_tab = 4096;
        let mut w_grid = Vec::with_capacity(n_tab + 1);
        let mut cdf = Vec::with_capacity(n_tab + 1);
        let mut acc = 0.0;
        let mut prev = g(w_lo);
        w_grid.push(w_lo);
        cdf.push(0.0);
        for i in 1..=n_tab {
            let w = w_lo + (w_hi - w_lo) * i as f64 / n_tab as f64;
            let cur = g(w);
            acc += 0.5 * (prev + cur) * (w_hi - w_lo) / n_tab as f64;
            prev = cur;
            w_grid.push(w);
            cdf.push(acc);
        }
        Ok(BrownianNu {
            eps,
            total: acc,
            w_grid,
            cdf,
        })
    }

    /// One draw of `s₁ ∈ (1/2, 1−ε]`.
    pub fn sample_s1<R: Rng>(&self, rng: &mut R) -> f64 {
        let target = rng.gen::<f64>() * self.total;
        let idx = self
            .cdf
            .partition_point(|&x| x < target)
            .clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[idx - 1], self.cdf[idx]);
        let frac = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.5 };
        let w = self.w_grid[idx - 1] + frac * (self.w_grid[idx] - self.w_grid[idx - 1]);
        (1.0 - w.powi(-2)).clamp(0.5, 1.0 - self.eps)
    }

    /// Truncated density value at `s₁`.
    pub fn density(&self, s1: f64) -> f64 {
        let c = (2.0 / std::f64::consts::PI).sqrt();
        c * (s1 * (1.0 - s1)).powf(-1.5)
    }
}

impl NuSampler for BrownianNu {
    fn total_mass(&self) -> f64 {
        self.total
    }
    fn sample_fractions<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let s1 = self.sample_s1(rng);
        vec![s1, 1.0 - s1]
    }
}
