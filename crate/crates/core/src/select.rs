//! Geometric column selection: pick at most `k` columns of a matrix whose
//! span reconstructs them within a tolerance `eta` at PCA rank `r`, while
//! maximizing the selected column energy.
//!
//! The solver alternates two exact pieces. A depth-first tree search solves
//! the binary problem "maximize the selected squared column norms subject to
//! a cardinality cap and a pool of no-good cuts"; a truncated-PCA separation
//! oracle then measures the reconstruction error of the winning subset. Every
//! subset that fails the tolerance becomes a no-good cut (no later support may
//! contain it in full) and the search re-runs. The reconstruction error is
//! monotone under adding columns, so excluding supersets of failed subsets
//! never discards a feasible support.
//!
//! Tolerances can be supplied or derived a priori from the classical PCA
//! residual: the sum of the `k` largest residual column energies is always
//! feasible for the first search iterate, so `Eta::Auto` converges without
//! cuts and still certifies the selection error.

use crate::pca::{pca_residual, projection_error_sq, PcaBasis};
use crate::tensor::Matrix;
use crate::{Error, Result};

/// Node budget for [`solve_blo`] and the selection loop default.
pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

/// Cut budget default for [`SelectorConfig`].
pub const DEFAULT_MAX_CUTS: usize = 500;

/// Guard for [`brute_force_select`]: enumeration stops being viable here.
pub const BRUTE_FORCE_MAX_COLUMNS: usize = 24;

/// Squared column norms, the objective coefficients of the selection problem.
#[derive(Clone, Debug)]
pub struct Weights {
    pub w: Vec<f64>,
}

impl Weights {
    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// Sum over a support (1-based indices), accumulated in index order.
    pub fn sum_over(&self, support: &Support) -> f64 {
        support.indices().iter().map(|&j| self.w[j - 1]).sum()
    }
}

/// `w[j] = ||column j||^2`.
pub fn column_weights(a: &Matrix) -> Weights {
    Weights {
        w: (0..a.cols()).map(|c| a.col_norm_sq(c)).collect(),
    }
}

/// A sorted set of distinct 1-based column indices out of `total` columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Support {
    selected: Vec<usize>,
    total: usize,
}

impl Support {
    pub fn new(mut selected: Vec<usize>, total: usize) -> Result<Self> {
        selected.sort_unstable();
        for pair in selected.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::InvalidConfig(format!(
                    "duplicate support index {}",
                    pair[0]
                )));
            }
        }
        if let Some(&bad) = selected.iter().find(|&&i| i == 0 || i > total) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                max: total,
            });
        }
        Ok(Self { selected, total })
    }

    pub fn empty(total: usize) -> Self {
        Self {
            selected: Vec::new(),
            total,
        }
    }

    pub fn all(total: usize) -> Self {
        Self {
            selected: (1..=total).collect(),
            total,
        }
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// Sorted 1-based indices.
    pub fn indices(&self) -> &[usize] {
        &self.selected
    }

    pub fn contains(&self, index: usize) -> bool {
        self.selected.binary_search(&index).is_ok()
    }
}

/// A forbidden combination: a support violates the cut iff it contains every
/// index of `sigma`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cut {
    sigma: Vec<usize>,
}

impl Cut {
    pub fn new(mut sigma: Vec<usize>) -> Result<Self> {
        if sigma.is_empty() {
            return Err(Error::InvalidConfig("empty cut".into()));
        }
        sigma.sort_unstable();
        sigma.dedup();
        Ok(Self { sigma })
    }

    pub fn from_support(s: &Support) -> Result<Self> {
        Cut::new(s.indices().to_vec())
    }

    pub fn indices(&self) -> &[usize] {
        &self.sigma
    }

    fn is_subset_of(&self, other: &[usize]) -> bool {
        // Both sorted; standard merge scan.
        let mut it = other.iter();
        'outer: for &x in &self.sigma {
            for &y in it.by_ref() {
                if y == x {
                    continue 'outer;
                }
                if y > x {
                    return false;
                }
            }
            return false;
        }
        true
    }

    /// True iff every cut index is selected.
    pub fn violated_by(&self, s: &Support) -> bool {
        self.is_subset_of(s.indices())
    }
}

/// Ordered family of cuts; dominated cuts (supersets of an existing cut) are
/// dropped on insertion since the subset cut already forbids them.
#[derive(Clone, Debug, Default)]
pub struct CutPool {
    cuts: Vec<Cut>,
}

impl CutPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Cut> {
        self.cuts.iter()
    }

    /// Inserts unless dominated; evicts cuts the new one dominates.
    pub fn add(&mut self, cut: Cut) {
        if self
            .cuts
            .iter()
            .any(|existing| existing.is_subset_of(cut.indices()))
        {
            return;
        }
        self.cuts.retain(|existing| !cut.is_subset_of(existing.indices()));
        self.cuts.push(cut);
    }

    pub fn allows(&self, s: &Support) -> bool {
        self.cuts.iter().all(|c| !c.violated_by(s))
    }
}

/// Tolerance rule for the selection loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Eta {
    /// Derive the tolerance from the classical PCA residual (always feasible
    /// for the first search iterate).
    Auto,
    /// Fixed nonnegative tolerance.
    Fixed(f64),
}

/// Knobs of one column-selection run.
#[derive(Clone, Debug)]
pub struct SelectorConfig {
    /// Cardinality cap on the selection.
    pub k: usize,
    /// PCA rank of the separation oracle.
    pub r: usize,
    pub eta: Eta,
    /// Cut budget before giving up with the best support seen.
    pub max_cuts: usize,
    /// Tree-search node budget per solve; exhaustion is an error.
    pub node_budget: u64,
}

impl SelectorConfig {
    pub fn new(k: usize, r: usize) -> Self {
        Self {
            k,
            r,
            eta: Eta::Auto,
            max_cuts: DEFAULT_MAX_CUTS,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }

    pub fn with_eta(mut self, eta: Eta) -> Self {
        self.eta = eta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.r == 0 {
            return Err(Error::InvalidConfig("k and r must be positive".into()));
        }
        if self.r > self.k {
            return Err(Error::InvalidConfig(format!(
                "rank r = {} exceeds sparsity k = {}",
                self.r, self.k
            )));
        }
        if self.max_cuts == 0 {
            return Err(Error::InvalidConfig("max_cuts must be positive".into()));
        }
        if self.node_budget == 0 {
            return Err(Error::InvalidConfig("node_budget must be positive".into()));
        }
        if let Eta::Fixed(v) = self.eta {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "eta must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SelectorStatus {
    Converged,
    CutBudgetExhausted,
    Infeasible,
}

impl std::fmt::Display for SelectorStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SelectorStatus::Converged => write!(f, "Converged"),
            SelectorStatus::CutBudgetExhausted => write!(f, "CutBudgetExhausted"),
            SelectorStatus::Infeasible => write!(f, "Infeasible"),
        }
    }
}

/// Outcome of [`select_columns`].
#[derive(Clone, Debug)]
pub struct SelectorResult {
    pub support: Support,
    pub basis: PcaBasis,
    /// Reconstruction error of the selected columns at rank `r`.
    pub eta_achieved: f64,
    /// Selected column energy minus `eta_achieved`.
    pub explained_variance: f64,
    /// Number of no-good cuts generated.
    pub cuts_used: usize,
    pub status: SelectorStatus,
    /// The tolerance the run actually used (resolved from `Eta::Auto`).
    pub eta_target: f64,
}

// ---------------------------------------------------------------------------
// Exact tree search
// ---------------------------------------------------------------------------

/// Sum of the `m` largest weights of every suffix, for the search bound.
struct SuffixTop {
    stride: usize,
    sums: Vec<f64>,
}

impl SuffixTop {
    fn build(weights: &[f64], cap: usize) -> Self {
        let n = weights.len();
        let stride = cap + 1;
        let mut sums = vec![0.0; (n + 1) * stride];
        let mut top: Vec<f64> = Vec::with_capacity(cap + 1);
        for t in (0..n).rev() {
            let w = weights[t];
            let at = top.partition_point(|&x| x > w);
            if at < cap {
                top.insert(at, w);
                top.truncate(cap);
            }
            let row = &mut sums[t * stride..(t + 1) * stride];
            let mut acc = 0.0;
            for m in 1..=cap {
                if m <= top.len() {
                    acc += top[m - 1];
                }
                row[m] = acc;
            }
        }
        Self { stride, sums }
    }

    #[inline]
    fn sum(&self, t: usize, m: usize) -> f64 {
        self.sums[t * self.stride + m.min(self.stride - 1)]
    }
}

struct SearchProblem<'a> {
    /// Overall 0-based indices of the searchable columns, ascending.
    pos: Vec<usize>,
    /// Weight of each searchable column, parallel to `pos`.
    weight: Vec<f64>,
    /// Max picks.
    kk: usize,
    /// Min picks for a node to count as a candidate.
    min_size: usize,
    top: SuffixTop,
    /// cuts[c] = sorted searchable-slot indices; cuts touching columns outside
    /// `pos` can never be completed and are omitted.
    cuts: Vec<Vec<usize>>,
    /// slot -> cut ids containing it.
    cuts_by_slot: Vec<Vec<usize>>,
    budget: u64,
    _marker: std::marker::PhantomData<&'a ()>,
}

struct SearchState {
    chosen: Vec<usize>,
    value: f64,
    counters: Vec<usize>,
    nodes: u64,
    best_value: f64,
    best_set: Option<Vec<usize>>,
}

impl SearchProblem<'_> {
    fn new(
        weights: &[f64],
        k: usize,
        min_size: usize,
        pool: &CutPool,
        budget: u64,
        include_zero: bool,
    ) -> Self {
        let pos: Vec<usize> = (0..weights.len())
            .filter(|&j| include_zero || weights[j] > 0.0)
            .collect();
        let weight: Vec<f64> = pos.iter().map(|&j| weights[j]).collect();
        let kk = k.min(pos.len());
        let slot_of: std::collections::HashMap<usize, usize> =
            pos.iter().enumerate().map(|(s, &j)| (j, s)).collect();
        let mut cuts = Vec::new();
        for cut in pool.iter() {
            let mut slots = Vec::with_capacity(cut.indices().len());
            let mut complete = true;
            for &idx in cut.indices() {
                match slot_of.get(&(idx - 1)) {
                    Some(&s) => slots.push(s),
                    None => {
                        complete = false;
                        break;
                    }
                }
            }
            if complete {
                slots.sort_unstable();
                cuts.push(slots);
            }
        }
        let mut cuts_by_slot = vec![Vec::new(); pos.len()];
        for (cid, slots) in cuts.iter().enumerate() {
            for &s in slots {
                cuts_by_slot[s].push(cid);
            }
        }
        let top = SuffixTop::build(&weight, kk.max(1));
        Self {
            pos,
            weight,
            kk,
            min_size,
            top,
            cuts,
            cuts_by_slot,
            budget,
            _marker: std::marker::PhantomData,
        }
    }

    fn cut_feasible_slots(&self, slots: &[usize]) -> bool {
        let set: std::collections::HashSet<usize> = slots.iter().copied().collect();
        !self
            .cuts
            .iter()
            .any(|cut| cut.iter().all(|s| set.contains(s)))
    }

    /// Lexicographic pruning at a value tie: can some completion of `chosen`
    /// (next slot >= `from`) beat `best` in index order?
    fn lex_can_beat(&self, chosen: &[usize], from: usize, best: &[usize]) -> bool {
        let limit = chosen.len().min(best.len());
        for i in 0..limit {
            let ci = self.pos[chosen[i]];
            let bi = self.pos[best[i]];
            if ci < bi {
                return true;
            }
            if ci > bi {
                return false;
            }
        }
        if chosen.len() >= best.len() {
            return false;
        }
        match self.pos.get(from) {
            Some(&next_idx) => next_idx <= self.pos[best[chosen.len()]],
            None => false,
        }
    }

    fn accept(&self, state: &mut SearchState) {
        if state.chosen.len() < self.min_size {
            return;
        }
        let better = match &state.best_set {
            None => true,
            Some(best) => {
                state.value > state.best_value
                    || (state.value == state.best_value
                        && lex_less(&state.chosen, best, &self.pos))
            }
        };
        if better {
            state.best_value = state.value;
            state.best_set = Some(state.chosen.clone());
        }
    }

    fn dfs(&self, state: &mut SearchState, from: usize) -> Result<()> {
        state.nodes += 1;
        if state.nodes > self.budget {
            return Err(Error::NodeBudgetExhausted {
                budget: self.budget,
            });
        }
        self.accept(state);
        let c = state.chosen.len();
        if c == self.kk {
            return Ok(());
        }
        let m = self.kk - c;
        for j in from..self.pos.len() {
            // Even taking every remaining slot cannot reach the minimum size.
            if c + (self.pos.len() - j) < self.min_size {
                break;
            }
            if self.cuts_by_slot[j]
                .iter()
                .any(|&cid| state.counters[cid] + 1 == self.cuts[cid].len())
            {
                continue;
            }
            let child_bound = state.value + self.weight[j] + self.top.sum(j + 1, m - 1);
            if state.best_set.is_some() {
                if child_bound < state.best_value {
                    continue;
                }
                if child_bound == state.best_value {
                    state.chosen.push(j);
                    let can = self.lex_can_beat(
                        &state.chosen,
                        j + 1,
                        state.best_set.as_ref().unwrap(),
                    );
                    state.chosen.pop();
                    if !can {
                        continue;
                    }
                }
            }
            for &cid in &self.cuts_by_slot[j] {
                state.counters[cid] += 1;
            }
            state.chosen.push(j);
            let saved = state.value;
            state.value += self.weight[j];
            self.dfs(state, j + 1)?;
            state.value = saved;
            state.chosen.pop();
            for &cid in &self.cuts_by_slot[j] {
                state.counters[cid] -= 1;
            }
        }
        Ok(())
    }

    fn run(&self) -> Result<Option<Vec<usize>>> {
        if self.kk < self.min_size {
            return Ok(None);
        }
        let mut state = SearchState {
            chosen: Vec::with_capacity(self.kk),
            value: 0.0,
            counters: vec![0; self.cuts.len()],
            nodes: 0,
            best_value: f64::NEG_INFINITY,
            best_set: None,
        };
        // Prime with the greedy top-k when it is cut-feasible: exact value
        // lower bound, so the search only explores provably competitive nodes.
        if self.min_size <= self.kk && self.kk > 0 {
            let mut order: Vec<usize> = (0..self.pos.len()).collect();
            order.sort_by(|&a, &b| {
                self.weight[b]
                    .partial_cmp(&self.weight[a])
                    .unwrap()
                    .then(self.pos[a].cmp(&self.pos[b]))
            });
            let mut greedy: Vec<usize> = order[..self.kk].to_vec();
            greedy.sort_unstable();
            if self.cut_feasible_slots(&greedy) {
                state.best_value = greedy.iter().map(|&s| self.weight[s]).sum();
                state.best_set = Some(greedy);
            }
        } else if self.min_size == 0 {
            state.best_value = 0.0;
            state.best_set = Some(Vec::new());
        }
        self.dfs(&mut state, 0)?;
        Ok(state
            .best_set
            .map(|slots| slots.into_iter().map(|s| self.pos[s]).collect()))
    }
}

/// Index-order lexicographic comparison of slot sets.
fn lex_less(a: &[usize], b: &[usize], pos: &[usize]) -> bool {
    a.iter().map(|&x| pos[x]).lt(b.iter().map(|&x| pos[x]))
}

/// Exact solve of the cut-constrained selection with a minimum size.
///
/// Zero-weight columns are only selected when needed to reach `min_size`,
/// padding with the lowest feasible indices. Returns `None` when no support
/// of size at least `min_size` satisfies the cuts.
fn solve_constrained(
    weights: &Weights,
    k: usize,
    min_size: usize,
    pool: &CutPool,
    budget: u64,
) -> Result<Option<Support>> {
    let p = weights.len();
    if min_size > p || min_size > k {
        return Ok(None);
    }
    let zero_count = weights.w.iter().filter(|&&w| w == 0.0).count();
    let min_positive = min_size.saturating_sub(zero_count);
    let problem = SearchProblem::new(&weights.w, k, min_positive, pool, budget, false);
    if let Some(chosen) = problem.run()? {
        let mut selected: Vec<usize> = chosen.iter().map(|&j| j + 1).collect();
        if selected.len() >= min_size {
            return Ok(Some(Support::new(selected, p)?));
        }
        // Pad with the lowest-index zero-weight columns that keep every cut
        // satisfied.
        let mut ok = true;
        for idx in 1..=p {
            if selected.len() == min_size {
                break;
            }
            if weights.w[idx - 1] != 0.0 || selected.contains(&idx) {
                continue;
            }
            selected.push(idx);
            selected.sort_unstable();
            let trial = Support::new(selected.clone(), p)?;
            if pool.allows(&trial) {
                continue;
            }
            selected.retain(|&x| x != idx);
        }
        if selected.len() < min_size {
            ok = false;
        }
        if ok {
            return Ok(Some(Support::new(selected, p)?));
        }
    }
    // Greedy padding failed or no positive-only candidate exists: search over
    // all columns with the size constraint enforced directly.
    let fallback = SearchProblem::new(&weights.w, k, min_size, pool, budget, true);
    match fallback.run()? {
        Some(chosen) => Ok(Some(Support::new(
            chosen.iter().map(|&j| j + 1).collect(),
            p,
        )?)),
        None => Ok(None),
    }
}

/// Maximizes the selected weight subject to `|s| <= k` and the cut pool.
///
/// Exact: matches exhaustive enumeration, with ties broken toward the
/// lexicographically smallest index set among supports that avoid
/// zero-weight columns.
pub fn solve_blo(weights: &Weights, k: usize, cuts: &CutPool) -> Result<Support> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be positive".into()));
    }
    Ok(solve_constrained(weights, k, 0, cuts, DEFAULT_NODE_BUDGET)?
        .expect("min_size 0 is always feasible"))
}

// ---------------------------------------------------------------------------
// Separation oracle and tolerance terms
// ---------------------------------------------------------------------------

/// Reconstruction error of the selected columns at rank `r`, with the basis
/// that achieves it.
pub fn eta_of_support(a: &Matrix, s: &Support, r: usize) -> Result<(f64, PcaBasis)> {
    if s.is_empty() {
        return Err(Error::EmptySupport);
    }
    let sub = a.gather_columns(s.indices())?;
    let basis = crate::pca::truncated_left_svd(&sub, r)?;
    let eta = projection_error_sq(&sub, &basis)?;
    Ok((eta.max(0.0), basis))
}

/// A-priori tolerance: the sum of the `k` largest column energies of the
/// rank-`r` classical PCA residual, together with the index set attaining it
/// (ties: lowest index).
pub fn default_eta(a: &Matrix, k: usize, r: usize) -> Result<(f64, Support)> {
    if k == 0 || k > a.cols() {
        return Err(Error::InvalidConfig(format!(
            "k = {k} out of range 1..={}",
            a.cols()
        )));
    }
    let (_, norms) = pca_residual(a, r)?;
    let mut order: Vec<usize> = (0..norms.len()).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap().then(i.cmp(&j)));
    let mut chosen: Vec<usize> = order[..k].iter().map(|&i| i + 1).collect();
    chosen.sort_unstable();
    let eta = chosen.iter().map(|&i| norms[i - 1]).sum();
    Ok((eta, Support::new(chosen, a.cols())?))
}

/// Residual energy of the classical rank-`r` PCA restricted to a support:
/// the tight middle term of the a-priori tolerance chain.
pub fn residual_energy_on(a: &Matrix, r: usize, s: &Support) -> Result<f64> {
    let (_, norms) = pca_residual(a, r)?;
    Ok(s.indices().iter().map(|&j| norms[j - 1]).sum())
}

// ---------------------------------------------------------------------------
// The cutting-plane selection loop
// ---------------------------------------------------------------------------

/// Runs the full selection: solve the binary problem, test the subset against
/// the tolerance, cut and re-solve until feasible or out of budget.
pub fn select_columns(a: &Matrix, config: &SelectorConfig) -> Result<SelectorResult> {
    config.validate()?;
    let p = a.cols();
    if config.r > a.rows() {
        return Err(Error::RankOutOfRange {
            r: config.r,
            max: a.rows(),
        });
    }
    if config.r > p {
        return Err(Error::RankOutOfRange { r: config.r, max: p });
    }
    let weights = column_weights(a);
    let eta_target = match config.eta {
        Eta::Fixed(v) => v,
        Eta::Auto => default_eta(a, config.k.min(p), config.r)?.0,
    };

    let mut pool = CutPool::new();
    let mut cuts_added = 0usize;
    let mut best: Option<(f64, Support, PcaBasis)> = None;

    loop {
        let candidate =
            solve_constrained(&weights, config.k, config.r, &pool, config.node_budget)?;
        let support = match candidate {
            Some(s) => s,
            None => {
                let (eta, support, basis) = best.ok_or_else(|| {
                    Error::InvalidConfig("selection infeasible with an empty cut pool".into())
                })?;
                let explained = weights.sum_over(&support) - eta;
                return Ok(SelectorResult {
                    support,
                    basis,
                    eta_achieved: eta,
                    explained_variance: explained,
                    cuts_used: cuts_added,
                    status: SelectorStatus::Infeasible,
                    eta_target,
                });
            }
        };
        let (eta, basis) = eta_of_support(a, &support, config.r)?;
        let improves = best.as_ref().map_or(true, |(b, _, _)| eta < *b);
        if improves {
            best = Some((eta, support.clone(), basis.clone()));
        }
        if eta <= eta_target {
            let explained = weights.sum_over(&support) - eta;
            return Ok(SelectorResult {
                support,
                basis,
                eta_achieved: eta,
                explained_variance: explained,
                cuts_used: cuts_added,
                status: SelectorStatus::Converged,
                eta_target,
            });
        }
        if cuts_added == config.max_cuts {
            let (eta, support, basis) = best.expect("at least one candidate was scored");
            let explained = weights.sum_over(&support) - eta;
            return Ok(SelectorResult {
                support,
                basis,
                eta_achieved: eta,
                explained_variance: explained,
                cuts_used: cuts_added,
                status: SelectorStatus::CutBudgetExhausted,
                eta_target,
            });
        }
        pool.add(Cut::from_support(&support)?);
        cuts_added += 1;
    }
}

/// Exhaustive oracle for the explained-variance objective: enumerates every
/// support of size up to `min(k, p)` and returns the maximizer of
/// `||A_s||_F^2 - eta(s)`, ties broken by the lexicographically smallest set.
///
/// Guarded to `p <= 24` columns.
pub fn brute_force_select(a: &Matrix, k: usize, r: usize) -> Result<(Support, f64, f64)> {
    let p = a.cols();
    if p > BRUTE_FORCE_MAX_COLUMNS {
        return Err(Error::TooManyColumns {
            p,
            max: BRUTE_FORCE_MAX_COLUMNS,
        });
    }
    if k == 0 || r == 0 {
        return Err(Error::InvalidConfig("k and r must be positive".into()));
    }
    if r > a.rows() {
        return Err(Error::RankOutOfRange { r, max: a.rows() });
    }
    let kk = k.min(p);
    let mut best: Option<(f64, f64, Vec<usize>)> = None;
    for size in 1..=kk {
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            let indices: Vec<usize> = combo.iter().map(|&i| i + 1).collect();
            let sub = a.gather_columns(&indices)?;
            let gram = {
                let mut g = Matrix::zeros(size, size);
                for i in 0..size {
                    for j in i..size {
                        let dot: f64 =
                            sub.col(i).iter().zip(sub.col(j)).map(|(x, y)| x * y).sum();
                        g.set(i, j, dot);
                        g.set(j, i, dot);
                    }
                }
                g
            };
            let (lambda, _) = crate::pca::sym_eigen_desc(&gram)?;
            let rr = r.min(size);
            let explained: f64 = lambda[..rr].iter().map(|&l| l.max(0.0)).sum();
            let eta: f64 = lambda[rr..].iter().map(|&l| l.max(0.0)).sum();
            let better = match &best {
                None => true,
                Some((be, _, bs)) => {
                    explained > *be || (explained == *be && indices.as_slice() < bs.as_slice())
                }
            };
            if better {
                best = Some((explained, eta, indices));
            }
            // Next combination in lexicographic order.
            let mut done = true;
            for i in (0..size).rev() {
                if combo[i] < p - size + i {
                    combo[i] += 1;
                    for j in i + 1..size {
                        combo[j] = combo[j - 1] + 1;
                    }
                    done = false;
                    break;
                }
            }
            if done {
                break;
            }
        }
    }
    let (explained, eta, indices) = best.expect("at least one support enumerated");
    Ok((Support::new(indices, p)?, eta, explained))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Xoshiro256PlusPlus;
    use proptest::prelude::*;

    fn weights(v: &[f64]) -> Weights {
        Weights { w: v.to_vec() }
    }

    fn pool_of(sets: &[&[usize]]) -> CutPool {
        let mut pool = CutPool::new();
        for s in sets {
            pool.add(Cut::new(s.to_vec()).unwrap());
        }
        pool
    }

    /// Independent enumeration of the binary problem over bitmasks, applying
    /// the documented tie rule directly.
    fn enumerate_blo(w: &[f64], k: usize, pool: &CutPool) -> Vec<usize> {
        let p = w.len();
        let mut best_value = f64::NEG_INFINITY;
        let mut best: Vec<usize> = Vec::new();
        for mask in 0u32..(1u32 << p) {
            let set: Vec<usize> = (0..p).filter(|&j| mask >> j & 1 == 1).collect();
            if set.len() > k {
                continue;
            }
            if set.iter().any(|&j| w[j] == 0.0) {
                continue;
            }
            let support = Support::new(set.iter().map(|&j| j + 1).collect(), p).unwrap();
            if !pool.allows(&support) {
                continue;
            }
            let value: f64 = set.iter().map(|&j| w[j]).sum();
            let indices: Vec<usize> = set.iter().map(|&j| j + 1).collect();
            if value > best_value || (value == best_value && indices < best) {
                best_value = value;
                best = indices;
            }
        }
        best
    }

    #[test]
    fn column_weights_examples() {
        let a = Matrix::from_rows(&[&[3.0, 0.0], &[4.0, 0.0]]).unwrap();
        assert_eq!(column_weights(&a).w, vec![25.0, 0.0]);
        let z = Matrix::zeros(3, 2);
        assert_eq!(column_weights(&z).w, vec![0.0, 0.0]);
        let b = Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]).unwrap();
        assert_eq!(column_weights(&b).w, vec![5.0, 5.0]);
    }

    #[test]
    fn blo_top_k_no_cuts() {
        let s = solve_blo(&weights(&[5.0, 4.0, 3.0, 2.0]), 2, &CutPool::new()).unwrap();
        assert_eq!(s.indices(), &[1, 2]);
    }

    #[test]
    fn blo_respects_cut() {
        let s = solve_blo(&weights(&[5.0, 4.0, 3.0, 2.0]), 2, &pool_of(&[&[1, 2]])).unwrap();
        assert_eq!(s.indices(), &[1, 3]);
    }

    #[test]
    fn blo_falls_back_to_singleton() {
        let pool = pool_of(&[&[1, 2], &[1, 3], &[2, 3]]);
        let s = solve_blo(&weights(&[5.0, 4.0, 3.0]), 2, &pool).unwrap();
        assert_eq!(s.indices(), &[1]);
    }

    #[test]
    fn blo_skips_zero_weight_columns() {
        let s = solve_blo(&weights(&[0.0, 5.0, 0.0]), 3, &CutPool::new()).unwrap();
        assert_eq!(s.indices(), &[2]);
    }

    #[test]
    fn blo_lex_tie_breaking() {
        // With {1,3} and {2,3} forbidden, the pair {1,2} (value 6) ties the
        // singleton {3} (value 6); the lex rule prefers {1,2}.
        let pool = pool_of(&[&[1, 3], &[2, 3]]);
        let s = solve_blo(&weights(&[3.0, 3.0, 6.0]), 2, &pool).unwrap();
        assert_eq!(s.indices(), &[1, 2]);
    }

    #[test]
    fn blo_tie_after_cuts() {
        // Cuts force a tie between {5,3}-style and lower-index sets; the
        // lexicographically smallest equal-value support must win.
        let w = [6.0, 4.0, 1.0, 0.5, 9.0];
        let pool = pool_of(&[&[5, 1], &[5, 2]]);
        let s = solve_blo(&weights(&w), 2, &pool).unwrap();
        // Value 10 is attained by {1,2} and {3,5}; lex picks {1,2}.
        assert_eq!(s.indices(), &[1, 2]);
    }

    #[test]
    fn blo_matches_enumeration_on_fixed_cases() {
        let cases: Vec<(Vec<f64>, usize, Vec<Vec<usize>>)> = vec![
            (vec![5.0, 4.0, 3.0, 2.0], 2, vec![vec![1, 2]]),
            (vec![1.0, 1.0, 1.0, 1.0, 1.0], 3, vec![]),
            (vec![2.0, 2.0, 2.0], 2, vec![vec![1, 2], vec![1, 3]]),
            (vec![0.0, 0.0, 1.0], 2, vec![]),
            (vec![7.0, 7.0, 7.0, 1.0], 2, vec![vec![1, 2], vec![2, 3], vec![1, 3]]),
        ];
        for (w, k, cuts) in cases {
            let mut pool = CutPool::new();
            for c in &cuts {
                pool.add(Cut::new(c.clone()).unwrap());
            }
            let got = solve_blo(&weights(&w), k, &pool).unwrap();
            let want = enumerate_blo(&w, k, &pool);
            assert_eq!(got.indices(), want.as_slice(), "w={w:?} k={k} cuts={cuts:?}");
        }
    }

    #[test]
    fn cut_pool_drops_dominated() {
        let mut pool = CutPool::new();
        pool.add(Cut::new(vec![1, 2]).unwrap());
        pool.add(Cut::new(vec![1, 2, 3]).unwrap()); // superset: dominated
        assert_eq!(pool.len(), 1);
        pool.add(Cut::new(vec![2]).unwrap()); // subsumes {1,2}
        assert_eq!(pool.len(), 1);
        assert_eq!(pool.iter().next().unwrap().indices(), &[2]);
    }

    #[test]
    fn eta_of_support_examples() {
        // Single column at r = 1 reconstructs exactly.
        let a = Matrix::from_rows(&[&[2.0, 0.0, 1.9], &[0.0, 2.0, 1.9]]).unwrap();
        let (eta, _) = eta_of_support(&a, &Support::new(vec![1], 3).unwrap(), 1).unwrap();
        assert!(eta <= 1e-18);

        // Identity columns at r = 1: error 1.
        let eye = Matrix::identity(2);
        let (eta, _) = eta_of_support(&eye, &Support::all(2), 1).unwrap();
        assert!((eta - 1.0).abs() < 1e-12);

        // Gram closed form: eta of {1,3} is the smaller eigenvalue of
        // [[4, 3.8], [3.8, 7.22]] = (11.22 - sqrt(68.1284)) / 2.
        let s = Support::new(vec![1, 3], 3).unwrap();
        let (eta, _) = eta_of_support(&a, &s, 1).unwrap();
        let expected = (11.22 - 68.1284f64.sqrt()) / 2.0;
        assert!((eta - expected).abs() < 1e-12, "eta {eta} vs {expected}");
    }

    #[test]
    fn default_eta_examples() {
        // Exactly rank-r matrix: zero tolerance.
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(41);
        let left = Matrix::new(4, 2, rng.normal_vec(8)).unwrap();
        let right = Matrix::new(2, 6, rng.normal_vec(12)).unwrap();
        let a = left.matmul(&right).unwrap();
        let (eta, sigma) = default_eta(&a, 3, 2).unwrap();
        assert!(eta <= 1e-18 * a.frobenius_norm_sq());
        assert_eq!(sigma.len(), 3);

        // Bit-exact zero residuals: the tie rule picks the lowest indices.
        let exact = Matrix::from_rows(&[&[2.0, 0.0, 0.0], &[0.0, 0.0, 0.0]]).unwrap();
        let (eta, sigma) = default_eta(&exact, 2, 1).unwrap();
        assert_eq!(eta, 0.0);
        assert_eq!(sigma.indices(), &[1, 2]);

        // diag(3,2,1), r=2, k=1: only column 3 has residual energy 1.
        let d = Matrix::from_rows(&[
            &[3.0, 0.0, 0.0],
            &[0.0, 2.0, 0.0],
            &[0.0, 0.0, 1.0],
        ])
        .unwrap();
        let (eta, sigma) = default_eta(&d, 1, 2).unwrap();
        assert!((eta - 1.0).abs() < 1e-10);
        assert_eq!(sigma.indices(), &[3]);
    }

    #[test]
    fn default_eta_is_top_k_residual_energy() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(43);
        let a = Matrix::new(5, 10, rng.normal_vec(50)).unwrap();
        let (eta, _) = default_eta(&a, 3, 2).unwrap();
        let (_, norms) = pca_residual(&a, 2).unwrap();
        let mut sorted = norms.clone();
        sorted.sort_by(|x, y| y.partial_cmp(x).unwrap());
        let expected: f64 = sorted[..3].iter().sum();
        assert!((eta - expected).abs() <= 1e-12 * expected.max(1.0));
    }

    #[test]
    fn select_rank_one_converges_immediately() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(47);
        let u: Vec<f64> = rng.normal_vec(4);
        let v: Vec<f64> = rng.normal_vec(7);
        let mut a = Matrix::zeros(4, 7);
        for i in 0..4 {
            for j in 0..7 {
                a.set(i, j, u[i] * v[j]);
            }
        }
        let res = select_columns(&a, &SelectorConfig::new(3, 1)).unwrap();
        assert_eq!(res.status, SelectorStatus::Converged);
        assert_eq!(res.cuts_used, 0);
        assert!(res.eta_achieved <= 1e-15 * a.frobenius_norm_sq());
        // Support is the top-3 columns by weight.
        let w = column_weights(&a);
        let mut order: Vec<usize> = (0..7).collect();
        order.sort_by(|&i, &j| w.w[j].partial_cmp(&w.w[i]).unwrap().then(i.cmp(&j)));
        let mut expected: Vec<usize> = order[..3].iter().map(|&i| i + 1).collect();
        expected.sort_unstable();
        assert_eq!(res.support.indices(), expected.as_slice());
    }

    #[test]
    fn select_cutting_plane_walkthrough() {
        // Column weights (4, 4, 7.22); eta = 1.0 forces three cuts before the
        // singleton {3} with zero error wins.
        let a = Matrix::from_rows(&[&[2.0, 0.0, 1.9], &[0.0, 2.0, 1.9]]).unwrap();
        let cfg = SelectorConfig::new(2, 1).with_eta(Eta::Fixed(1.0));
        let res = select_columns(&a, &cfg).unwrap();
        assert_eq!(res.status, SelectorStatus::Converged);
        assert_eq!(res.cuts_used, 3);
        assert_eq!(res.support.indices(), &[3]);
        assert!(res.eta_achieved <= 1e-15);
        assert!((res.explained_variance - 7.22).abs() < 1e-12);
    }

    #[test]
    fn select_auto_eta_accepts_first_iterate() {
        let a = Matrix::from_rows(&[&[2.0, 0.0, 1.9], &[0.0, 2.0, 1.9]]).unwrap();
        let res = select_columns(&a, &SelectorConfig::new(2, 1)).unwrap();
        assert_eq!(res.status, SelectorStatus::Converged);
        assert_eq!(res.cuts_used, 0);
        assert_eq!(res.support.indices(), &[1, 3]);
        // Auto tolerance is the top-2 residual column energies: 2 + 2 = 4.
        assert!((res.eta_target - 4.0).abs() < 1e-9);
        let expected_eta = (11.22 - 68.1284f64.sqrt()) / 2.0;
        assert!((res.eta_achieved - expected_eta).abs() < 1e-9);
    }

    #[test]
    fn select_infeasible_when_cuts_block_everything() {
        // A support of size exactly r reconstructs its own columns exactly in
        // real arithmetic, so infeasibility needs a zero tolerance plus
        // columns whose single-column reconstruction carries rounding noise:
        // every singleton gets cut in turn until the pool blocks all three.
        // Seed 1 is a pinned instance where all three singletons round to a
        // strictly positive error.
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(1);
        let a = Matrix::new(3, 3, rng.normal_vec(9)).unwrap();
        let cfg = SelectorConfig {
            k: 1,
            r: 1,
            eta: Eta::Fixed(0.0),
            max_cuts: 10,
            node_budget: DEFAULT_NODE_BUDGET,
        };
        let res = select_columns(&a, &cfg).unwrap();
        assert_eq!(res.status, SelectorStatus::Infeasible);
        assert_eq!(res.cuts_used, 3);
        assert_eq!(res.support.len(), 1);
        assert!(res.eta_achieved >= 0.0 && res.eta_achieved < 1e-30);
    }

    #[test]
    fn select_cut_budget_exhausted_returns_best() {
        // Identity at r = 1, k = 2: every pair has eta 1, so a cut budget of
        // 1 stops after two scored pairs; the best seen is the first pair.
        let a = Matrix::identity(3);
        let cfg = SelectorConfig {
            k: 2,
            r: 1,
            eta: Eta::Fixed(0.5),
            max_cuts: 1,
            node_budget: DEFAULT_NODE_BUDGET,
        };
        let res = select_columns(&a, &cfg).unwrap();
        assert_eq!(res.status, SelectorStatus::CutBudgetExhausted);
        assert_eq!(res.cuts_used, 1);
        assert_eq!(res.support.indices(), &[1, 2]);
        assert!((res.eta_achieved - 1.0).abs() < 1e-12);
    }

    #[test]
    fn brute_force_examples() {
        // Equal orthogonal columns, k = 1: tie resolved to {1}.
        let eye = Matrix::identity(3);
        let (s, eta, explained) = brute_force_select(&eye, 1, 1).unwrap();
        assert_eq!(s.indices(), &[1]);
        assert!(eta.abs() < 1e-12);
        assert!((explained - 1.0).abs() < 1e-12);

        // {1,3} and {2,3} tie; lex rule picks {1,3}.
        let a = Matrix::from_rows(&[&[2.0, 0.0, 1.9], &[0.0, 2.0, 1.9]]).unwrap();
        let (s, eta, explained) = brute_force_select(&a, 2, 1).unwrap();
        assert_eq!(s.indices(), &[1, 3]);
        let lam1 = (11.22 + 68.1284f64.sqrt()) / 2.0;
        assert!((explained - lam1).abs() < 1e-10);
        assert!((eta - (11.22 - lam1)).abs() < 1e-10);
    }

    #[test]
    fn brute_force_guard() {
        let a = Matrix::zeros(2, 25);
        assert!(matches!(
            brute_force_select(&a, 2, 1),
            Err(Error::TooManyColumns { p: 25, max: 24 })
        ));
    }

    #[test]
    fn select_matches_brute_force_through_eta_window() {
        // The loop with eta = brute-force eta* + 1e-9 attains the brute-force
        // explained variance.
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(53);
        for _ in 0..5 {
            let a = Matrix::new(6, 12, rng.normal_vec(72)).unwrap();
            let (_, eta_star, explained_star) = brute_force_select(&a, 3, 2).unwrap();
            let cfg = SelectorConfig::new(3, 2).with_eta(Eta::Fixed(eta_star + 1e-9));
            let res = select_columns(&a, &cfg).unwrap();
            assert_eq!(res.status, SelectorStatus::Converged);
            assert!(
                (res.explained_variance - explained_star).abs()
                    <= 1e-9 * explained_star.max(1.0),
                "explained {} vs {}",
                res.explained_variance,
                explained_star
            );
        }
    }

    #[test]
    fn theorem_chain_auto_eta() {
        // eta_achieved <= residual energy on the selected support <= the
        // auto tolerance, on random instances.
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(59);
        for _ in 0..20 {
            let a = Matrix::new(8, 20, rng.normal_vec(160)).unwrap();
            let res = select_columns(&a, &SelectorConfig::new(5, 2)).unwrap();
            assert_eq!(res.status, SelectorStatus::Converged);
            let tight = residual_energy_on(&a, 2, &res.support).unwrap();
            let slack = 1e-9 * a.frobenius_norm_sq().max(1.0);
            assert!(res.eta_achieved <= tight + slack);
            assert!(tight <= res.eta_target + slack);
        }
    }

    #[test]
    fn pythagoras_on_results() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(61);
        for _ in 0..10 {
            let a = Matrix::new(5, 9, rng.normal_vec(45)).unwrap();
            let res = select_columns(&a, &SelectorConfig::new(4, 2)).unwrap();
            let sub = a.gather_columns(res.support.indices()).unwrap();
            let total = sub.frobenius_norm_sq();
            assert!(
                (res.explained_variance + res.eta_achieved - total).abs() <= 1e-9 * total.max(1.0)
            );
        }
    }

    #[test]
    fn node_budget_aborts() {
        // A large all-ties instance with an unprimable cut pool forces node
        // visits; a budget of 1 must abort.
        let w: Vec<f64> = (0..20).map(|i| 1.0 + i as f64).collect();
        let pool = pool_of(&[&[1, 2]]);
        let problem = SearchProblem::new(&w, 10, 0, &pool, 1, false);
        assert!(matches!(
            problem.run(),
            Err(Error::NodeBudgetExhausted { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

        #[test]
        fn blo_exact_vs_enumeration(
            p in 1usize..=16,
            k_seed in 0usize..16,
            wseed in any::<u64>(),
            ncuts in 0usize..=10,
        ) {
            let k = 1 + k_seed % p;
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(wseed);
            let w: Vec<f64> = (0..p).map(|_| rng.next_f64()).collect();
            let mut pool = CutPool::new();
            for _ in 0..ncuts {
                let size = 1 + rng.next_index(p.min(4));
                let cut: Vec<usize> =
                    rng.choose_indices(p, size).into_iter().map(|i| i + 1).collect();
                pool.add(Cut::new(cut).unwrap());
            }
            let got = solve_blo(&Weights { w: w.clone() }, k, &pool).unwrap();
            let want = enumerate_blo(&w, k, &pool);
            prop_assert_eq!(got.indices(), want.as_slice());
            // Cut soundness: the returned support violates no cut.
            prop_assert!(pool.allows(&got));
        }

        #[test]
        fn eta_monotone_under_column_addition(seed in any::<u64>()) {
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
            let a = Matrix::new(4, 8, rng.normal_vec(32)).unwrap();
            let base = rng.choose_indices(8, 3);
            let mut with: Vec<usize> = base.iter().map(|&i| i + 1).collect();
            let extra = (0..8).find(|i| !base.contains(i)).unwrap() + 1;
            let small = Support::new(with.clone(), 8).unwrap();
            with.push(extra);
            let large = Support::new(with, 8).unwrap();
            let (eta_small, _) = eta_of_support(&a, &small, 2).unwrap();
            let (eta_large, _) = eta_of_support(&a, &large, 2).unwrap();
            prop_assert!(eta_large + 1e-9 * a.frobenius_norm_sq() >= eta_small);
        }
    }
}
