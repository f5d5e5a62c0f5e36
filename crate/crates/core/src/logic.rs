//! Two-level minimization of thresholded truth tables.
//!
//! Prime implicants come from Quine-McCluskey merging; the cover is chosen
//! exactly by branch and bound over the prime/minterm covering matrix, with
//! essential-column extraction, row dominance and column dominance at every
//! node. The product count is minimized exactly; among covers with the fewest
//! products the search prefers primes with fewer literals but does not prove
//! literal optimality.
//!
//! Variable `k` of an `n`-variable function is bit `n - 1 - k` of a minterm
//! index, so the input string `I_0 I_1 … I_{n-1}` read as binary is the index.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{threshold_map, FrequencyTable};

pub const MAX_VARS: usize = 16;

/// A product term over minterm bits: bits set in `care` are literals, and
/// `value` gives their polarity. Bits of `value` outside `care` are zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cube {
    pub value: u32,
    pub care: u32,
}

impl Cube {
    pub fn minterm(m: u32, n_vars: usize) -> Self {
        Cube {
            value: m,
            care: full_mask(n_vars),
        }
    }

    #[inline]
    pub fn contains(&self, minterm: u32) -> bool {
        minterm & self.care == self.value
    }

    pub fn literal_count(&self) -> u32 {
        self.care.count_ones()
    }

    /// Literal for variable `var` of an `n_vars`-variable function.
    pub fn literal(&self, var: usize, n_vars: usize) -> Literal {
        let bit = 1u32 << (n_vars - 1 - var);
        if self.care & bit == 0 {
            Literal::Absent
        } else if self.value & bit != 0 {
            Literal::Positive
        } else {
            Literal::Negated
        }
    }
}

/// Appearance of one variable in a product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Literal {
    Positive,
    Negated,
    Absent,
}

fn full_mask(n_vars: usize) -> u32 {
    if n_vars >= 32 {
        u32::MAX
    } else {
        (1u32 << n_vars) - 1
    }
}

/// Sum of products over `n_vars` variables. An empty product list is the
/// constant FALSE; a single product without literals is the constant TRUE.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BooleanCover {
    n_vars: usize,
    products: Vec<Cube>,
}

impl BooleanCover {
    /// Builds a cover, rejecting duplicate products.
    pub fn new(n_vars: usize, mut products: Vec<Cube>) -> Result<Self> {
        if n_vars > MAX_VARS {
            return Err(Error::Config(format!("at most {MAX_VARS} variables supported")));
        }
        let mask = full_mask(n_vars);
        if products.iter().any(|c| c.care & !mask != 0 || c.value & !c.care != 0) {
            return Err(Error::Contract("product references variables outside the function".into()));
        }
        products.sort_by_key(|c| (c.literal_count(), std::cmp::Reverse(c.care), c.value));
        let before = products.len();
        products.dedup();
        if products.len() != before {
            return Err(Error::Contract("duplicate product terms".into()));
        }
        Ok(Self { n_vars, products })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn products(&self) -> &[Cube] {
        &self.products
    }

    pub fn len(&self) -> usize {
        self.products.len()
    }

    pub fn is_empty(&self) -> bool {
        self.products.is_empty()
    }

    pub fn literal_count(&self) -> u32 {
        self.products.iter().map(Cube::literal_count).sum()
    }

    pub fn is_false(&self) -> bool {
        self.products.is_empty()
    }

    pub fn is_true(&self) -> bool {
        self.products.iter().any(|c| c.care == 0)
    }

    /// Value at minterm index `m`.
    pub fn evaluate(&self, m: u32) -> bool {
        self.products.iter().any(|c| c.contains(m))
    }

    /// Literal markers of product `k`, variable 0 first.
    pub fn literals(&self, k: usize) -> Vec<Literal> {
        (0..self.n_vars).map(|v| self.products[k].literal(v, self.n_vars)).collect()
    }

    /// Minterm indices on which the cover is 1.
    pub fn minterms(&self) -> Vec<u32> {
        (0..1u32 << self.n_vars).filter(|&m| self.evaluate(m)).collect()
    }
}

impl fmt::Display for BooleanCover {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_expression(self, &default_names(self.n_vars)))
    }
}

/// `I_0`, `I_1`, …
pub fn default_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("I_{i}")).collect()
}

/// 1 iff some product is satisfied by `bits` (variable 0 first).
pub fn evaluate_cover(cover: &BooleanCover, bits: &[bool]) -> Result<bool> {
    if bits.len() != cover.n_vars {
        return Err(Error::Contract(format!(
            "{} input bits for a {}-variable cover",
            bits.len(),
            cover.n_vars
        )));
    }
    Ok(cover.evaluate(crate::domains::index_from_bits(bits) as u32))
}

/// Indices where `table` holds 1. The length must be a power of two.
pub fn minterms_for_output(table: &[bool]) -> Result<Vec<u32>> {
    if !table.len().is_power_of_two() || table.len() > 1 << MAX_VARS {
        return Err(Error::Contract(format!(
            "truth table length {} is not 2^n with n <= {MAX_VARS}",
            table.len()
        )));
    }
    Ok(table
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| i as u32)
        .collect())
}

fn product_string(cube: &Cube, n_vars: usize, names: &[String]) -> String {
    let lits: Vec<String> = (0..n_vars)
        .filter_map(|v| match cube.literal(v, n_vars) {
            Literal::Positive => Some(names[v].clone()),
            Literal::Negated => Some(format!("~{}", names[v])),
            Literal::Absent => None,
        })
        .collect();
    if lits.is_empty() {
        "1".to_string()
    } else {
        lits.join("·")
    }
}

/// Renders `~I_0·I_1 + I_2`-style text. Products are ordered by literal count,
/// then lexicographically; variables ascend within a product. Constants
/// render as `0` and `1`.
pub fn format_expression(cover: &BooleanCover, names: &[String]) -> String {
    assert!(names.len() >= cover.n_vars, "one name per variable");
    if cover.is_false() {
        return "0".into();
    }
    let mut terms: Vec<(u32, String)> = cover
        .products
        .iter()
        .map(|c| (c.literal_count(), product_string(c, cover.n_vars, names)))
        .collect();
    terms.sort();
    terms.into_iter().map(|(_, s)| s).collect::<Vec<_>>().join(" + ")
}

/// All prime implicants of `on ∪ dc`, sorted.
pub fn prime_implicants(on: &[u32], dc: &[u32], n_vars: usize) -> Vec<Cube> {
    let mut level: HashSet<Cube> = on
        .iter()
        .chain(dc)
        .map(|&m| Cube::minterm(m, n_vars))
        .collect();
    let mut primes = Vec::new();
    while !level.is_empty() {
        let mut next = HashSet::new();
        let mut merged = HashSet::new();
        for c in &level {
            let mut bits = c.care;
            while bits != 0 {
                let bit = bits & bits.wrapping_neg();
                bits &= bits - 1;
                let partner = Cube {
                    value: c.value ^ bit,
                    care: c.care,
                };
                if level.contains(&partner) {
                    merged.insert(*c);
                    next.insert(Cube {
                        value: c.value & !bit,
                        care: c.care & !bit,
                    });
                }
            }
        }
        primes.extend(level.iter().filter(|c| !merged.contains(c)).copied());
        level = next;
    }
    primes.sort();
    primes
}

/// Cover of `minterms` with the fewest products over `n_vars` variables.
pub fn minimize(minterms: &[u32], n_vars: usize) -> Result<BooleanCover> {
    minimize_with_dont_cares(minterms, &[], n_vars)
}

/// Cover of the on-set `on` with the fewest products, free to use the `dc` set.
pub fn minimize_with_dont_cares(on: &[u32], dc: &[u32], n_vars: usize) -> Result<BooleanCover> {
    if n_vars > MAX_VARS {
        return Err(Error::Config(format!("at most {MAX_VARS} variables supported")));
    }
    let limit = 1u64 << n_vars;
    if let Some(&m) = on.iter().chain(dc).find(|&&m| m as u64 >= limit) {
        return Err(Error::Contract(format!("minterm {m} out of range for {n_vars} variables")));
    }
    let mut on: Vec<u32> = on.to_vec();
    on.sort_unstable();
    on.dedup();
    let on_set: HashSet<u32> = on.iter().copied().collect();
    let dc: Vec<u32> = dc.iter().copied().filter(|m| !on_set.contains(m)).collect();
    if on.is_empty() {
        return BooleanCover::new(n_vars, Vec::new());
    }
    let primes: Vec<Cube> = prime_implicants(&on, &dc, n_vars)
        .into_iter()
        .filter(|c| on.iter().any(|&m| c.contains(m)))
        .collect();
    let chosen = CoverSearch::new(&on, &primes).solve();
    BooleanCover::new(n_vars, chosen.into_iter().map(|k| primes[k]).collect())
}

#[derive(Clone, PartialEq, Eq)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(len: usize) -> Self {
        Bits(vec![0; len.div_ceil(64)])
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    fn and_not(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a & !b).collect())
    }

    fn and(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }

    fn intersects(&self, other: &Bits) -> bool {
        self.0.iter().zip(&other.0).any(|(a, b)| a & b != 0)
    }

    /// `self ⊆ other` within `mask`.
    fn subset_within(&self, other: &Bits, mask: &Bits) -> bool {
        self.0
            .iter()
            .zip(&other.0)
            .zip(&mask.0)
            .all(|((a, b), m)| a & m & !b == 0)
    }

    fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(w, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    None
                } else {
                    let tz = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    Some(w * 64 + tz)
                }
            })
        })
    }
}

const SUBGRADIENT_ITERATIONS: usize = 200;

/// Smallest integer cover size compatible with a fractional bound.
fn bound_of(v: f64) -> usize {
    (v - 1e-6).ceil().max(0.0) as usize
}

struct CoverSearch {
    rows: usize,
    /// Rows covered by each column.
    cover: Vec<Bits>,
    /// Columns covering each row.
    row_cols: Vec<Vec<usize>>,
    /// Literal count of each column; orders branches and breaks dominance ties.
    literals: Vec<u32>,
    best: Option<(usize, Vec<usize>)>,
}

impl CoverSearch {
    fn new(on: &[u32], primes: &[Cube]) -> Self {
        let rows = on.len();
        let mut cover = vec![Bits::new(rows); primes.len()];
        let mut row_cols = vec![Vec::new(); rows];
        for (c, p) in primes.iter().enumerate() {
            for (r, &m) in on.iter().enumerate() {
                if p.contains(m) {
                    cover[c].set(r);
                    row_cols[r].push(c);
                }
            }
        }
        Self {
            rows,
            cover,
            row_cols,
            literals: primes.iter().map(Cube::literal_count).collect(),
            best: None,
        }
    }

    fn solve(mut self) -> Vec<usize> {
        let mut all = Bits::new(self.rows);
        (0..self.rows).for_each(|r| all.set(r));
        let cols: Vec<usize> = (0..self.cover.len()).collect();
        self.search(all, cols, Vec::new());
        let (_, mut chosen) = self.best.expect("primes cover every on-set minterm");
        chosen.sort_unstable();
        chosen
    }

    fn beaten(&self, products: usize) -> bool {
        matches!(&self.best, Some((best, _)) if products >= *best)
    }

    /// Lagrangian bound on the products still needed to cover `uncovered`
    /// with columns `cols`, plus each column's reduced cost.
    ///
    /// For row multipliers `y ≥ 0`, `Σ y + Σ_c min(0, 1 − Σ_{r∈c} y_r)` is
    /// below every cover size, and a cover using column `c` has size at least
    /// that plus `max(0, reduced cost of c)`. Multipliers start from a feasible
    /// dual (row weight `1 / widest column`) and follow subgradient steps
    /// towards `target`. Stops as soon as the bound reaches `target`.
    fn lagrangian(&self, uncovered: &Bits, cols: &[usize], target: usize) -> (f64, Vec<f64>) {
        let rows: Vec<usize> = uncovered.ones().collect();
        let mut local = vec![usize::MAX; self.rows];
        rows.iter().enumerate().for_each(|(i, &r)| local[r] = i);
        let col_rows: Vec<Vec<usize>> = cols
            .iter()
            .map(|&c| self.cover[c].and(uncovered).ones().map(|r| local[r]).collect())
            .collect();
        let mut widest = vec![1usize; rows.len()];
        for cr in &col_rows {
            for &i in cr {
                widest[i] = widest[i].max(cr.len());
            }
        }
        let mut y: Vec<f64> = widest.iter().map(|&w| 1.0 / w as f64).collect();
        let mut best = (f64::NEG_INFINITY, Vec::new());
        let mut lambda = 2.0;
        let mut stale = 0;
        let mut covers = vec![0i32; rows.len()];
        for _ in 0..SUBGRADIENT_ITERATIONS {
            let rc: Vec<f64> = col_rows.iter().map(|cr| 1.0 - cr.iter().map(|&i| y[i]).sum::<f64>()).collect();
            let value = y.iter().sum::<f64>() + rc.iter().map(|&v| v.min(0.0)).sum::<f64>();
            if value > best.0 + 1e-9 {
                best = (value, rc.clone());
                stale = 0;
            } else {
                stale += 1;
                if stale >= 10 {
                    lambda /= 2.0;
                    stale = 0;
                    if lambda < 1e-3 {
                        break;
                    }
                }
            }
            if bound_of(best.0) >= target {
                break;
            }
            covers.iter_mut().for_each(|v| *v = 1);
            for (cr, &v) in col_rows.iter().zip(&rc) {
                if v < 0.0 {
                    cr.iter().for_each(|&i| covers[i] -= 1);
                }
            }
            let norm: f64 = covers.iter().map(|&g| (g * g) as f64).sum();
            if norm == 0.0 {
                break;
            }
            let step = lambda * (target as f64 - value).max(0.05) / norm;
            for (yi, &g) in y.iter_mut().zip(&covers) {
                *yi = (*yi + step * g as f64).max(0.0);
            }
        }
        best
    }

    /// Size of the cover built by repeatedly taking the widest column.
    fn greedy(&self, uncovered: &Bits, cols: &[usize]) -> usize {
        let mut left = uncovered.clone();
        let mut n = 0;
        while !left.is_empty() {
            let c = cols
                .iter()
                .copied()
                .max_by_key(|&c| (self.cover[c].and(&left).ones().count(), std::cmp::Reverse(c)))
                .expect("columns cover every row");
            left = left.and_not(&self.cover[c]);
            n += 1;
        }
        n
    }

    /// Rows whose candidate columns include all candidates of another row
    /// are covered whenever that row is. Ties keep the lower row.
    fn drop_dominated_rows(&self, uncovered: &Bits, allowed: &[bool]) -> Option<Bits> {
        let rows: Vec<usize> = uncovered.ones().collect();
        let sets: Vec<Bits> = rows
            .iter()
            .map(|&r| {
                let mut b = Bits::new(self.cover.len());
                self.row_cols[r].iter().filter(|&&c| allowed[c]).for_each(|&c| b.set(c));
                b
            })
            .collect();
        let full = Bits(vec![u64::MAX; sets.first()?.0.len()]);
        let mut kept = uncovered.clone();
        let mut changed = false;
        for (i, &r) in rows.iter().enumerate() {
            let dominated = (0..rows.len()).any(|j| {
                j != i && sets[j].subset_within(&sets[i], &full) && (j < i || !sets[i].subset_within(&sets[j], &full))
            });
            if dominated {
                kept.0[r / 64] &= !(1 << (r % 64));
                changed = true;
            }
        }
        changed.then_some(kept)
    }

    fn search(&mut self, mut uncovered: Bits, mut cols: Vec<usize>, mut chosen: Vec<usize>) {
        // reduce: essential columns, row and column dominance, until stable
        loop {
            if self.beaten(chosen.len()) {
                return;
            }
            if uncovered.is_empty() {
                self.best = Some((chosen.len(), chosen));
                return;
            }
            cols.retain(|&c| self.cover[c].intersects(&uncovered));
            let mut allowed = vec![false; self.cover.len()];
            cols.iter().for_each(|&c| allowed[c] = true);

            let mut essential = None;
            for r in uncovered.ones() {
                let mut it = self.row_cols[r].iter().filter(|&&c| allowed[c]);
                match (it.next(), it.next()) {
                    (None, _) => return,
                    (Some(&c), None) => {
                        essential = Some(c);
                        break;
                    }
                    _ => {}
                }
            }
            if let Some(c) = essential {
                uncovered = uncovered.and_not(&self.cover[c]);
                chosen.push(c);
                cols.retain(|&k| k != c);
                continue;
            }

            if let Some(kept) = self.drop_dominated_rows(&uncovered, &allowed) {
                uncovered = kept;
                continue;
            }

            // Column a is dominated by b when b covers everything a does;
            // equal columns keep the fewer literals, then the lower index.
            // That is a strict order, so every dominated column goes in one pass.
            let key = |c: usize| (self.literals[c], c);
            let dominated: Vec<bool> = cols
                .iter()
                .map(|&a| {
                    cols.iter().any(|&b| {
                        b != a
                            && self.cover[a].subset_within(&self.cover[b], &uncovered)
                            && (!self.cover[b].subset_within(&self.cover[a], &uncovered) || key(b) < key(a))
                    })
                })
                .collect();
            if dominated.iter().any(|&d| d) {
                let mut k = 0;
                cols.retain(|_| {
                    k += 1;
                    !dominated[k - 1]
                });
                continue;
            }

            // Without an incumbent, aim just below the greedy cover size.
            let budget = match &self.best {
                Some((best, _)) => best - chosen.len(),
                None => self.greedy(&uncovered, &cols),
            };
            let (bound, reduced) = self.lagrangian(&uncovered, &cols, budget);
            if self.best.is_some() {
                if bound_of(bound) >= budget {
                    return;
                }
                // a column whose use forces the bound to the incumbent cannot help
                let before = cols.len();
                let mut k = 0;
                cols.retain(|_| {
                    k += 1;
                    bound_of(bound + reduced[k - 1].max(0.0)) < budget
                });
                if cols.len() < before {
                    continue;
                }
            }

            // branch on the row with the fewest candidate columns
            let row = uncovered
                .ones()
                .min_by_key(|&r| (self.row_cols[r].iter().filter(|&&c| allowed[c]).count(), r))
                .expect("uncovered is non-empty");
            let mut options: Vec<usize> = self.row_cols[row].iter().copied().filter(|&c| allowed[c]).collect();
            options.sort_by_key(|&c| (std::cmp::Reverse(self.cover[c].and(&uncovered).ones().count()), self.literals[c], c));
            let mut remaining = cols.clone();
            for c in options {
                remaining.retain(|&k| k != c);
                let mut next_chosen = chosen.clone();
                next_chosen.push(c);
                self.search(uncovered.and_not(&self.cover[c]), remaining.clone(), next_chosen);
            }
            return;
        }
    }
}

/// One mined output function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinedFunction {
    pub gamma: f64,
    pub output: usize,
    pub minterm_count: usize,
    pub n_products: usize,
    pub expression: String,
    #[serde(skip)]
    pub cover: Option<BooleanCover>,
}

/// Covers for every (γ, output) pair, γ-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiningReport {
    pub functions: Vec<MinedFunction>,
}

impl MiningReport {
    /// Functions with a non-empty on-set, for display.
    pub fn non_trivial(&self) -> impl Iterator<Item = &MinedFunction> {
        self.functions.iter().filter(|f| f.minterm_count > 0)
    }

    pub fn at_gamma(&self, gamma: f64) -> impl Iterator<Item = &MinedFunction> {
        self.functions.iter().filter(move |f| f.gamma == gamma)
    }

    /// Text summary grouped by γ, omitting constant-FALSE outputs.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let mut last = None;
        for f in self.non_trivial() {
            if last != Some(f.gamma) {
                out.push_str(&format!("gamma = {}\n", f.gamma));
                last = Some(f.gamma);
            }
            out.push_str(&format!("  O_{} = {}\n", f.output, f.expression));
        }
        if out.is_empty() {
            out.push_str("no output is 1 for any input at the given thresholds\n");
        }
        out
    }
}

/// Thresholds W at each γ and minimizes every output.
pub fn mine(w: &FrequencyTable, gammas: &[f64]) -> Result<MiningReport> {
    let names = default_names(w.ports());
    let mut functions = Vec::new();
    for &gamma in gammas {
        let tables = threshold_map(w, gamma);
        for (output, table) in tables.outputs.iter().enumerate() {
            let minterms = minterms_for_output(table)?;
            let cover = minimize(&minterms, w.ports())?;
            functions.push(MinedFunction {
                gamma,
                output,
                minterm_count: minterms.len(),
                n_products: cover.len(),
                expression: format_expression(&cover, &names),
                cover: Some(cover),
            });
        }
    }
    Ok(MiningReport { functions })
}
