//! Partitions of `[n]` and of ℕ.
//!
//! A split of a label set is recorded as an ordered partition whose blocks are
//! indexed by their least elements.  Partitions of all of ℕ are represented by
//! prefix generators: a rule that produces the restriction `Γ^[n]` for every
//! `n`, consistently under further restriction.  Two generator kinds are
//! provided — seeded paintbox samplers and deterministic threshold ("Step A_x")
//! programs — which together cover every partition family the library needs.

use std::sync::RwLock;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// PartitionN
// ---------------------------------------------------------------------------

/// Ordered partition of `[n] = {1, ..., n}` with blocks indexed by least
/// elements: block 0 contains 1, and least elements increase with block index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartitionN {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl PartitionN {
    /// Validating constructor.  Blocks are sorted internally and reordered by
    /// least element; the union must be exactly `[n]` with no repeats.
    pub fn new(n: usize, mut blocks: Vec<Vec<usize>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidPartition("n must be positive".into()));
        }
        for b in &mut blocks {
            if b.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            b.sort_unstable();
        }
        blocks.sort_by_key(|b| b[0]);
        let mut seen = vec![false; n + 1];
        let mut count = 0usize;
        for b in &blocks {
            for &e in b {
                if e == 0 || e > n {
                    return Err(Error::InvalidPartition(format!(
                        "element {e} outside [{n}]"
                    )));
                }
                if seen[e] {
                    return Err(Error::InvalidPartition(format!("element {e} repeated")));
                }
                seen[e] = true;
                count += 1;
            }
        }
        if count != n {
            return Err(Error::InvalidPartition(format!(
                "blocks cover {count} of {n} elements"
            )));
        }
        Ok(PartitionN { n, blocks })
    }

    /// The one-block partition `1_[n]`.
    pub fn one_block(n: usize) -> Self {
        PartitionN {
            n,
            blocks: vec![(1..=n).collect()],
        }
    }

    /// The all-singletons partition `0_[n]`.
    pub fn singletons(n: usize) -> Self {
        PartitionN {
            n,
            blocks: (1..=n).map(|i| vec![i]).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of blocks `k`.
    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Blocks in least-element order; each block is sorted ascending.
    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Block sizes `(#B_1, ..., #B_k)` in block order.
    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.len()).collect()
    }

    pub fn is_one_block(&self) -> bool {
        self.blocks.len() == 1
    }

    /// 0-based index of the block containing `e`.
    pub fn block_index_of(&self, e: usize) -> Option<usize> {
        self.blocks
            .iter()
            .position(|b| b.binary_search(&e).is_ok())
    }

    /// Restriction to `[m]`: intersect every block with `[m]`, drop empties.
    pub fn restrict_to(&self, m: usize) -> PartitionN {
        let blocks: Vec<Vec<usize>> = self
            .blocks
            .iter()
            .map(|b| b.iter().copied().filter(|&e| e <= m).collect::<Vec<_>>())
            .filter(|b: &Vec<usize>| !b.is_empty())
            .collect();
        // Least-element order survives restriction of least-element-ordered
        // blocks, but empty-block removal can only delete entries, so the
        // order is still valid.
        PartitionN { n: m, blocks }
    }

    /// The partition of `[n+1]` obtained by inserting `n+1` into block `i`
    /// (0-based), or as a new singleton block when `i == k`.
    pub fn insert_element(&self, i: usize) -> Result<PartitionN> {
        let k = self.blocks.len();
        if i > k {
            return Err(Error::InvalidPartition(format!(
                "insertion index {i} exceeds block count {k}"
            )));
        }
        let mut blocks = self.blocks.clone();
        if i == k {
            blocks.push(vec![self.n + 1]);
        } else {
            blocks[i].push(self.n + 1);
        }
        PartitionN::new(self.n + 1, blocks)
    }

    /// Block frequencies `(#B_i / n)` in block order.
    pub fn empirical_freqs(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.blocks.iter().map(|b| b.len() as f64 / n).collect()
    }

    /// Block frequencies sorted non-increasingly.
    pub fn ranked_freqs(&self) -> Vec<f64> {
        let mut f = self.empirical_freqs();
        f.sort_by(|a, b| b.partial_cmp(a).unwrap());
        f
    }

    /// Decreasing rearrangement of the block sizes, e.g. `(n_1 ≥ n_2 ≥ ...)`.
    pub fn ranked_sizes(&self) -> Vec<usize> {
        let mut s = self.block_sizes();
        s.sort_unstable_by(|a, b| b.cmp(a));
        s
    }
}

/// Relabel a partition of an arbitrary finite label set `B ⊂ ℕ` to the
/// standard set `[#B]` via the increasing bijection; block order is preserved
/// (least-element order is invariant under increasing maps).
pub fn relabel(blocks: &[Vec<usize>]) -> Result<PartitionN> {
    let mut all: Vec<usize> = blocks.iter().flatten().copied().collect();
    all.sort_unstable();
    all.dedup();
    let total: usize = blocks.iter().map(|b| b.len()).sum();
    if all.len() != total {
        return Err(Error::InvalidPartition("repeated element in blocks".into()));
    }
    let index = |e: usize| all.binary_search(&e).unwrap() + 1;
    let relabelled: Vec<Vec<usize>> = blocks
        .iter()
        .map(|b| b.iter().map(|&e| index(e)).collect())
        .collect();
    PartitionN::new(all.len(), relabelled)
}

// -- serde: serialize as {"n": .., "blocks": [[..], ..]}, validating on read --

#[derive(Serialize, Deserialize)]
struct PartitionNRaw {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl Serialize for PartitionN {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PartitionNRaw {
            n: self.n,
            blocks: self.blocks.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PartitionN {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = PartitionNRaw::deserialize(d)?;
        PartitionN::new(raw.n, raw.blocks).map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Enumeration of 𝒫_n
// ---------------------------------------------------------------------------

/// All partitions of `[n]`, enumerated through restricted-growth strings.
/// Guarded at `n ≤ 12` (Bell(12) ≈ 4.2e6) unless `force` is set.
pub fn enumerate_partitions(n: usize, force: bool) -> Result<Vec<PartitionN>> {
    if n == 0 {
        return Err(Error::InvalidPartition("n must be positive".into()));
    }
    if n > 12 && !force {
        return Err(Error::ResourceGuard(format!(
            "partition enumeration for n = {n} > 12"
        )));
    }
    let mut out = Vec::new();
    // Restricted-growth string: rgs[0] = 0 and rgs[i] ≤ max(rgs[..i]) + 1.
    let mut rgs = vec![0usize; n];
    fn rec(rgs: &mut Vec<usize>, i: usize, maxv: usize, n: usize, out: &mut Vec<PartitionN>) {
        if i == n {
            let k = maxv + 1;
            let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); k];
            for (e, &c) in rgs.iter().enumerate() {
                blocks[c].push(e + 1);
            }
            // Restricted-growth strings index blocks by first appearance,
            // which is exactly least-element order.
            out.push(PartitionN { n, blocks });
            return;
        }
        for c in 0..=maxv + 1 {
            rgs[i] = c;
            rec(rgs, i + 1, maxv.max(c), n, out);
        }
    }
    // The first element always opens block 0.
    rec(&mut rgs, 1, 0, n, &mut out);
    Ok(out)
}

/// Integer partitions of `n` in non-increasing part order (the support of the
/// unlabelled split laws `𝒫_n°`).
pub fn integer_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(rem: usize, maxp: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rem == 0 {
            out.push(cur.clone());
            return;
        }
        for p in (1..=rem.min(maxp)).rev() {
            cur.push(p);
            rec(rem - p, p, cur, out);
            cur.pop();
        }
    }
    rec(n, n, &mut cur, &mut out);
    out
}

// ---------------------------------------------------------------------------
// RankedFreq and the decreasing rearrangement
// ---------------------------------------------------------------------------

/// Non-increasing frequency sequence in `[0,1]` with implicit zero tail and
/// total mass at most 1 (an element of 𝒮↓, stored to finite support).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFreq {
    entries: Vec<f64>,
}

impl RankedFreq {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        let mut sum = 0.0;
        for w in entries.windows(2) {
            if w[1] > w[0] {
                return Err(Error::InvalidParameter(
                    "ranked frequencies must be non-increasing".into(),
                ));
            }
        }
        for &e in &entries {
            if !(0.0..=1.0).contains(&e) {
                return Err(Error::InvalidParameter(format!(
                    "frequency {e} outside [0,1]"
                )));
            }
            sum += e;
        }
        if sum > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "frequencies sum to {sum} > 1"
            )));
        }
        Ok(RankedFreq { entries })
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Mass not carried by listed frequencies (the "dust").
    pub fn dust(&self) -> f64 {
        (1.0 - self.entries.iter().sum::<f64>()).max(0.0)
    }
}

/// Non-increasing rearrangement of a finitely supported sequence with entries
/// in `[0,1]`.  The multiset of non-zero entries is preserved exactly.
pub fn decreasing_rearrangement(seq: &[f64]) -> Result<Vec<f64>> {
    for &e in seq {
        if !(0.0..=1.0).contains(&e) {
            return Err(Error::InvalidParameter(format!(
                "entry {e} outside [0,1]"
            )));
        }
    }
    let mut s = seq.to_vec();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(s)
}

// ---------------------------------------------------------------------------
// Paintbox samplers
// ---------------------------------------------------------------------------

/// Color of element `i` in the Kingman paintbox with frequencies `s`: each
/// element independently picks color `k ≥ 1` with probability `s_k`, or dust
/// (color 0, a singleton) with the remaining probability.  The color depends
/// only on `(seed, i)`, which makes the induced partition family consistent
/// across `n`.
fn paintbox_color(s: &[f64], seed: u64, i: usize) -> usize {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (k, &sk) in s.iter().enumerate() {
        acc += sk;
        if u < acc {
            return k + 1;
        }
    }
    0
}

fn partition_from_colors(n: usize, color: impl Fn(usize) -> usize) -> PartitionN {
    // Elements with equal color ≥ 1 share a block; color 0 is a singleton.
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut by_color: Vec<(usize, usize)> = Vec::new(); // (color, block idx)
    for i in 1..=n {
        let c = color(i);
        if c == 0 {
            blocks.push(vec![i]);
        } else if let Some(&(_, b)) = by_color.iter().find(|&&(cc, _)| cc == c) {
            blocks[b].push(i);
        } else {
            by_color.push((c, blocks.len()));
            blocks.push(vec![i]);
        }
    }
    blocks.sort_by_key(|b| b[0]);
    PartitionN { n, blocks }
}

/// One sample of the paintbox `κ_s` restricted to `[n]`.
pub fn paintbox_sample<R: Rng>(s: &RankedFreq, n: usize, rng: &mut R) -> PartitionN {
    let seed: u64 = rng.gen();
    partition_from_colors(n, |i| paintbox_color(&s.entries, seed, i))
}

/// One sample of the ordered two-color paintbox of the alpha-theta
/// representation: element 1 always takes color 1; each `i ≥ 2` joins the
/// first block independently with probability `u`.
pub fn ordered_paintbox_sample<R: Rng>(u: f64, n: usize, rng: &mut R) -> Result<PartitionN> {
    if !(0.0..1.0).contains(&u) || u <= 0.0 {
        return Err(Error::InvalidParameter(format!("u = {u} outside (0,1)")));
    }
    let mut b1 = vec![1usize];
    let mut b2 = Vec::new();
    for i in 2..=n {
        if rng.gen::<f64>() < u {
            b1.push(i);
        } else {
            b2.push(i);
        }
    }
    let mut blocks = vec![b1];
    if !b2.is_empty() {
        blocks.push(b2);
    }
    Ok(PartitionN { n, blocks })
}

// ---------------------------------------------------------------------------
// Step A_x programs (deterministic families)
// ---------------------------------------------------------------------------

/// One application of Step `A_x` to a (one- or two-block) partition: when the
/// first-block frequency exceeds `x`, element `n+1` extends (or starts) the
/// second block, otherwise it joins the first block.
pub fn step_ax(pi: &PartitionN, x: f64) -> Result<PartitionN> {
    if pi.num_blocks() > 2 {
        return Err(Error::InvalidPartition(
            "Step A_x is defined for partitions with at most two blocks".into(),
        ));
    }
    let f1 = pi.blocks[0].len() as f64 / pi.n as f64;
    let target = if f1 > x {
        // goes to the second block
        1
    } else {
        0
    };
    if target == 1 && pi.num_blocks() == 1 {
        pi.insert_element(1)
    } else {
        pi.insert_element(target)
    }
}

/// One phase of a threshold program: Step `A_x` is applied at every level `n`
/// with `n < until` (`None` = for all remaining levels).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub x: f64,
    pub until: Option<usize>,
}

/// Deterministic two-block partition of ℕ given by a threshold program:
/// `Γ^[j] = ([j-1], {j})`, extended one element at a time by Step `A_x` with
/// phase-dependent threshold `x`.  Restrictions below level `j` collapse to
/// the one-block partition.
#[derive(Debug, Serialize, Deserialize)]
pub struct StepFamily {
    /// Level at which the second block opens (`j ≥ 2`).
    pub j: usize,
    /// Threshold phases, consulted in order at each extension step.
    pub phases: Vec<Phase>,
    /// Memoized first-block membership for elements `1..=len`.
    #[serde(skip)]
    memo: RwLock<Vec<bool>>,
}

impl Clone for StepFamily {
    fn clone(&self) -> Self {
        StepFamily {
            j: self.j,
            phases: self.phases.clone(),
            memo: RwLock::new(self.memo.read().unwrap().clone()),
        }
    }
}

impl PartialEq for StepFamily {
    fn eq(&self, other: &Self) -> bool {
        self.j == other.j && self.phases == other.phases
    }
}

impl StepFamily {
    pub fn new(j: usize, phases: Vec<Phase>) -> Result<Self> {
        if j < 2 {
            return Err(Error::InvalidParameter("StepFamily requires j ≥ 2".into()));
        }
        if phases.is_empty() || phases.last().unwrap().until.is_some() {
            return Err(Error::InvalidParameter(
                "threshold program must end with an open-ended phase".into(),
            ));
        }
        for p in &phases {
            if !(0.0..=1.0).contains(&p.x) {
                return Err(Error::InvalidParameter(format!(
                    "threshold {} outside [0,1]",
                    p.x
                )));
            }
        }
        Ok(StepFamily {
            j,
            phases,
            memo: RwLock::new(Vec::new()),
        })
    }

    /// The threshold in force for the step extending level `n` to `n+1`.
    fn threshold(&self, n: usize) -> f64 {
        for p in &self.phases {
            match p.until {
                Some(u) if n >= u => continue,
                _ => return p.x,
            }
        }
        self.phases.last().unwrap().x
    }

    /// A stateless single-pass cursor over first-block counts (used by the
    /// diagnostics sweeps, which track thousands of families at once).
    pub fn cursor(&self) -> StepCursor<'_> {
        StepCursor {
            fam: self,
            n: 1,
            b1: 1,
        }
    }

    fn extend_memo(&self, n: usize) {
        let mut memo = self.memo.write().unwrap();
        if memo.is_empty() {
            memo.push(true); // element 1
        }
        while memo.len() < n {
            let m = memo.len(); // current level
            let next = m + 1; // element being placed
            let in_b1 = if next < self.j {
                true
            } else if next == self.j {
                false
            } else {
                let b1 = memo.iter().filter(|&&b| b).count();
                (b1 as f64 / m as f64) <= self.threshold(m)
            };
            memo.push(in_b1);
        }
    }

    /// `Γ^[n]` for this family.
    pub fn restrict(&self, n: usize) -> PartitionN {
        self.extend_memo(n);
        let memo = self.memo.read().unwrap();
        let mut b1 = Vec::new();
        let mut b2 = Vec::new();
        for i in 1..=n {
            if memo[i - 1] {
                b1.push(i);
            } else {
                b2.push(i);
            }
        }
        let mut blocks = vec![b1];
        if !b2.is_empty() {
            blocks.push(b2);
        }
        PartitionN { n, blocks }
    }

    /// Number of elements of `[n]` in the first block.
    pub fn b1_count(&self, n: usize) -> usize {
        let mut c = self.cursor();
        while c.n < n {
            c.advance();
        }
        c.b1
    }
}

/// Incremental first-block counter for a [`StepFamily`]; `advance` costs O(1).
pub struct StepCursor<'a> {
    fam: &'a StepFamily,
    /// Current level `n`.
    pub n: usize,
    /// `#Γ_1^[n]`.
    pub b1: usize,
}

impl StepCursor<'_> {
    pub fn advance(&mut self) {
        let next = self.n + 1;
        let in_b1 = if next < self.fam.j {
            true
        } else if next == self.fam.j {
            false
        } else {
            (self.b1 as f64 / self.n as f64) <= self.fam.threshold(self.n)
        };
        self.n = next;
        if in_b1 {
            self.b1 += 1;
        }
    }

    /// First-block frequency at the current level.
    pub fn freq(&self) -> f64 {
        self.b1 as f64 / self.n as f64
    }
}

/// Limit first-block frequency `x^(j) = 1 - 1/j` of the family `Γ(j)`.
pub fn x_limit(j: usize) -> f64 {
    1.0 - 1.0 / j as f64
}

/// "Good" family of Example family (a): Step `A_{x^(j)}` from `([j-1], {j})`.
pub fn good_family(j: usize) -> Result<StepFamily> {
    StepFamily::new(
        j,
        vec![Phase {
            x: x_limit(j),
            until: None,
        }],
    )
}

/// "Evil" family of variant (b): hold the first-block frequency near `1/2`
/// (Step `A_{1/2}`) until level `a_j`, then recover to `x^(j)`.
pub fn evil_family_b(j: usize, a_j: Option<usize>) -> Result<StepFamily> {
    match a_j {
        Some(a) => StepFamily::new(
            j,
            vec![
                Phase {
                    x: 0.5,
                    until: Some(a),
                },
                Phase {
                    x: x_limit(j),
                    until: None,
                },
            ],
        ),
        None => StepFamily::new(
            j,
            vec![Phase {
                x: 0.5,
                until: None,
            }],
        ),
    }
}

/// "Evil" family of the mixed schedule: approach the *wrong* frequency
/// `1 - x^(j)` until level `a_j`, then recover to `x^(j)`.
pub fn evil_family_mixed(j: usize, a_j: Option<usize>) -> Result<StepFamily> {
    match a_j {
        Some(a) => StepFamily::new(
            j,
            vec![
                Phase {
                    x: 1.0 - x_limit(j),
                    until: Some(a),
                },
                Phase {
                    x: x_limit(j),
                    until: None,
                },
            ],
        ),
        None => StepFamily::new(
            j,
            vec![Phase {
                x: 1.0 - x_limit(j),
                until: None,
            }],
        ),
    }
}

// ---------------------------------------------------------------------------
// PartitionFamily: the common interface
// ---------------------------------------------------------------------------

/// A partition of ℕ presented through its restrictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PartitionFamily {
    /// `1_ℕ`: everything in one block.
    OneBlock,
    /// `0_ℕ`: all singletons.
    Singletons,
    /// Odd numbers in one block, even numbers in the other.
    OddsEvens,
    /// Kingman paintbox with ranked frequencies `s` (seeded, consistent in n).
    Paintbox { s: RankedFreq, seed: u64 },
    /// Ordered two-color paintbox: 1 in the first block, others join it
    /// independently with probability `u` (seeded, consistent in n).
    OrderedPaintbox { u: f64, seed: u64 },
    /// Deterministic threshold program.
    Step(StepFamily),
}

impl PartitionFamily {
    /// `Γ^[n]`.
    pub fn restrict(&self, n: usize) -> PartitionN {
        match self {
            PartitionFamily::OneBlock => PartitionN::one_block(n),
            PartitionFamily::Singletons => PartitionN::singletons(n),
            PartitionFamily::OddsEvens => {
                let odds: Vec<usize> = (1..=n).filter(|i| i % 2 == 1).collect();
                let evens: Vec<usize> = (1..=n).filter(|i| i % 2 == 0).collect();
                let mut blocks = vec![odds];
                if !evens.is_empty() {
                    blocks.push(evens);
                }
                PartitionN { n, blocks }
            }
            PartitionFamily::Paintbox { s, seed } => {
                partition_from_colors(n, |i| paintbox_color(s.entries(), *seed, i))
            }
            PartitionFamily::OrderedPaintbox { u, seed } => partition_from_colors(n, |i| {
                if i == 1 {
                    1
                } else {
                    let mut rng = ChaCha12Rng::seed_from_u64(*seed);
                    rng.set_stream(i as u64);
                    if rng.gen::<f64>() < *u {
                        1
                    } else {
                        // a second shared color: all non-joiners form block 2
                        2
                    }
                }
            }),
            PartitionFamily::Step(f) => f.restrict(n),
        }
    }

    /// Declared asymptotic first-block frequency, when known.
    pub fn limit_first_block_freq(&self) -> Option<f64> {
        match self {
            PartitionFamily::OneBlock => Some(1.0),
            PartitionFamily::Singletons => Some(0.0),
            PartitionFamily::OddsEvens => Some(0.5),
            PartitionFamily::Paintbox { .. } => None,
            PartitionFamily::OrderedPaintbox { u, .. } => Some(*u),
            PartitionFamily::Step(f) => Some(x_limit(f.j)),
        }
    }

    /// Declared asymptotic ranked frequencies, when known.
    pub fn limit_ranked_freqs(&self) -> Option<Vec<f64>> {
        match self {
            PartitionFamily::OneBlock => Some(vec![1.0]),
            PartitionFamily::Singletons => Some(vec![]),
            PartitionFamily::OddsEvens => Some(vec![0.5, 0.5]),
            PartitionFamily::Paintbox { s, .. } => Some(s.entries().to_vec()),
            PartitionFamily::OrderedPaintbox { u, .. } => {
                Some(decreasing_rearrangement(&[*u, 1.0 - *u]).unwrap())
            }
            PartitionFamily::Step(f) => {
                let x = x_limit(f.j);
                Some(decreasing_rearrangement(&[x, 1.0 - x]).unwrap())
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
