//! Pairwise-preference statistics.
//!
//! Covers the analysis side of a pairwise study: preference probabilities
//! with tie splitting, exact binomial significance thresholds under the
//! fair-coin null, Bradley-Terry strength scaling of win frequencies, and
//! the objective-score pairwise comparison table.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::metrics::{compensated_sum, Polarity};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("comparison graph is disconnected: strengths are not identifiable")]
    Disconnected,
    #[error("vote matrix: {0}")]
    InvalidVotes(String),
    #[error("incomplete score table, missing: {}", .0.join(", "))]
    IncompleteData(Vec<String>),
    #[error("vote csv row {row}: {detail}")]
    CsvRow { row: usize, detail: String },
}

/// Significance call for one method's vote count against an opponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Favored,
    Neutral,
    Disfavored,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Favored => "favored",
            Verdict::Neutral => "neutral",
            Verdict::Disfavored => "disfavored",
        })
    }
}

/// Scaled winning frequency: `w/n + tau/(2n)`; ties split evenly.
pub fn pref_prob(wins: f64, n: u32, ties: f64) -> Result<f64, StatsError> {
    if n == 0 {
        return Err(StatsError::Domain("n must be positive".into()));
    }
    if wins.is_nan() || wins < 0.0 || ties.is_nan() || ties < 0.0 {
        return Err(StatsError::Domain(format!(
            "wins {wins} and ties {ties} must be non-negative"
        )));
    }
    let n_f = f64::from(n);
    if wins + ties > n_f + 1e-9 {
        return Err(StatsError::Domain(format!(
            "wins {wins} + ties {ties} exceed n {n}"
        )));
    }
    // (2w + tau) / (2n), evaluated from whichever side of 1/2 is smaller so
    // that the two methods of a pair always sum to exactly 1.
    let numer = 2.0 * wins + ties;
    let denom = 2.0 * n_f;
    if numer <= n_f {
        Ok(numer / denom)
    } else {
        Ok(1.0 - (denom - numer) / denom)
    }
}

/// Exact binomial CDF `P(X <= k)` for `X ~ B(n, p)`, in log space.
pub fn binom_cdf(k: u64, n: u64, p: f64) -> Result<f64, StatsError> {
    if k > n {
        return Err(StatsError::Domain(format!("k {k} exceeds n {n}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(StatsError::Domain(format!("p {p} outside [0, 1]")));
    }
    if k == n || p == 0.0 {
        return Ok(1.0);
    }
    if p == 1.0 {
        // All mass sits at X = n, which k < n excludes.
        return Ok(0.0);
    }

    // ln(i!) table up to n.
    let mut ln_fact = vec![0.0f64; n as usize + 1];
    for i in 1..=n as usize {
        ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
    }
    let ln_p = p.ln();
    let ln_q = (1.0 - p).ln();
    let terms = (0..=k).map(|i| {
        let ln_choose =
            ln_fact[n as usize] - ln_fact[i as usize] - ln_fact[(n - i) as usize];
        (ln_choose + i as f64 * ln_p + (n - i) as f64 * ln_q).exp()
    });
    Ok(compensated_sum(terms).min(1.0))
}

/// Critical vote counts under the fair-coin null.
///
/// `k_lo` is the largest count with `cdf(k) <= alpha` (absent when even zero
/// votes are not that unlikely); `k_hi` is the smallest count with
/// `cdf(k) >= 1 - alpha`.
pub fn significance_thresholds(n: u64, alpha: f64) -> Result<(Option<u64>, u64), StatsError> {
    if n == 0 {
        return Err(StatsError::Domain("n must be at least 1".into()));
    }
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(StatsError::Domain(format!("alpha {alpha} outside (0, 0.5)")));
    }
    let mut k_lo = None;
    let mut k_hi = n;
    let mut found_hi = false;
    for k in 0..=n {
        let cdf = binom_cdf(k, n, 0.5)?;
        if cdf <= alpha {
            k_lo = Some(k);
        }
        if !found_hi && cdf >= 1.0 - alpha {
            k_hi = k;
            found_hi = true;
        }
    }
    Ok((k_lo, k_hi))
}

/// Classifies a vote count against the significance thresholds.
pub fn classify(wins: f64, n: u32, alpha: f64) -> Result<Verdict, StatsError> {
    if wins < 0.0 || wins > f64::from(n) + 1e-9 {
        return Err(StatsError::Domain(format!("wins {wins} outside [0, {n}]")));
    }
    let (k_lo, k_hi) = significance_thresholds(u64::from(n), alpha)?;
    if wins >= k_hi as f64 {
        Ok(Verdict::Favored)
    } else if k_lo.is_some_and(|lo| wins <= lo as f64) {
        Ok(Verdict::Disfavored)
    } else {
        Ok(Verdict::Neutral)
    }
}

/// Pairwise win/tie counts among methods.
///
/// `wins[a][b]` counts a's victories over b (half-counts allowed when the
/// caller pre-splits ties); `ties` is symmetric; every observed pair totals
/// `n_per_pair` comparisons.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteMatrix {
    methods: Vec<String>,
    wins: Vec<Vec<f64>>,
    ties: Vec<Vec<f64>>,
    n_per_pair: u32,
}

impl VoteMatrix {
    pub fn new(
        methods: Vec<String>,
        wins: Vec<Vec<f64>>,
        ties: Vec<Vec<f64>>,
        n_per_pair: u32,
    ) -> Result<Self, StatsError> {
        let m = methods.len();
        if m == 0 {
            return Err(StatsError::InvalidVotes("no methods".into()));
        }
        if n_per_pair == 0 {
            return Err(StatsError::InvalidVotes("n_per_pair must be positive".into()));
        }
        let square = |name: &str, mat: &Vec<Vec<f64>>| -> Result<(), StatsError> {
            if mat.len() != m || mat.iter().any(|row| row.len() != m) {
                return Err(StatsError::InvalidVotes(format!(
                    "{name} matrix is not {m}x{m}"
                )));
            }
            if mat.iter().flatten().any(|&v| v.is_nan() || v < 0.0) {
                return Err(StatsError::InvalidVotes(format!(
                    "{name} matrix has negative or NaN entries"
                )));
            }
            Ok(())
        };
        square("wins", &wins)?;
        square("ties", &ties)?;
        for a in 0..m {
            if wins[a][a] != 0.0 || ties[a][a] != 0.0 {
                return Err(StatsError::InvalidVotes(format!(
                    "nonzero self-comparison for {}",
                    methods[a]
                )));
            }
            for b in (a + 1)..m {
                if (ties[a][b] - ties[b][a]).abs() > 1e-9 {
                    return Err(StatsError::InvalidVotes(format!(
                        "ties not symmetric for ({}, {})",
                        methods[a], methods[b]
                    )));
                }
                let total = wins[a][b] + wins[b][a] + ties[a][b];
                if total > 0.0 && (total - f64::from(n_per_pair)).abs() > 1e-9 {
                    return Err(StatsError::InvalidVotes(format!(
                        "pair ({}, {}) totals {total} comparisons, expected {n_per_pair}",
                        methods[a], methods[b]
                    )));
                }
            }
        }
        Ok(Self {
            methods,
            wins,
            ties,
            n_per_pair,
        })
    }

    pub fn methods(&self) -> &[String] {
        &self.methods
    }

    pub fn len(&self) -> usize {
        self.methods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.methods.is_empty()
    }

    pub fn n_per_pair(&self) -> u32 {
        self.n_per_pair
    }

    pub fn wins(&self, a: usize, b: usize) -> f64 {
        self.wins[a][b]
    }

    pub fn ties(&self, a: usize, b: usize) -> f64 {
        self.ties[a][b]
    }

    /// Total comparisons observed between a and b.
    pub fn comparisons(&self, a: usize, b: usize) -> f64 {
        self.wins[a][b] + self.wins[b][a] + self.ties[a][b]
    }

    /// Wins with ties split as half-wins.
    pub fn effective_wins(&self, a: usize, b: usize) -> f64 {
        self.wins[a][b] + 0.5 * self.ties[a][b]
    }
}

/// Bradley-Terry strengths normalized to sum 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BtScores {
    pub strengths: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Methods pinned to the strength floor because they won nothing (their
    /// maximum-likelihood strength diverges to zero).
    pub floored: Vec<usize>,
}

/// Strength floor for methods with zero wins.
pub const BT_STRENGTH_FLOOR: f64 = 1e-12;
pub const BT_DEFAULT_TOL: f64 = 1e-8;
pub const BT_DEFAULT_MAX_ITER: usize = 10_000;

/// Fits Bradley-Terry strengths by minorization-maximization.
///
/// Ties enter as half-wins. Requires a connected comparison graph; methods
/// that won nothing are pinned to [`BT_STRENGTH_FLOOR`] and excluded from
/// the updates.
pub fn bradley_terry(
    votes: &VoteMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<BtScores, StatsError> {
    let m = votes.len();
    if m == 1 {
        return Ok(BtScores {
            strengths: vec![1.0],
            iterations: 0,
            converged: true,
            floored: vec![],
        });
    }
    check_connected(votes)?;

    let total_wins: Vec<f64> = (0..m)
        .map(|a| (0..m).map(|b| votes.effective_wins(a, b)).sum())
        .collect();
    let floored: Vec<usize> = (0..m).filter(|&a| total_wins[a] == 0.0).collect();
    let active: Vec<usize> = (0..m).filter(|&a| total_wins[a] > 0.0).collect();
    if active.is_empty() {
        return Err(StatsError::InvalidVotes(
            "every method has zero wins; no comparisons recorded".into(),
        ));
    }

    let floor_mass = BT_STRENGTH_FLOOR * floored.len() as f64;
    let active_mass = 1.0 - floor_mass;
    let mut strengths = vec![BT_STRENGTH_FLOOR; m];
    for &a in &active {
        strengths[a] = active_mass / active.len() as f64;
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let mut next = strengths.clone();
        for &a in &active {
            let mut denom = 0.0;
            for b in 0..m {
                if b == a {
                    continue;
                }
                let n_ab = votes.comparisons(a, b);
                if n_ab > 0.0 {
                    denom += n_ab / (strengths[a] + strengths[b]);
                }
            }
            if denom > 0.0 {
                next[a] = total_wins[a] / denom;
            }
        }
        // Renormalize the active mass, keeping floors pinned.
        let sum: f64 = active.iter().map(|&a| next[a]).sum();
        for &a in &active {
            next[a] *= active_mass / sum;
        }

        let max_rel_change = active
            .iter()
            .map(|&a| (next[a] - strengths[a]).abs() / strengths[a])
            .fold(0.0, f64::max);
        strengths = next;
        if max_rel_change < tol {
            converged = true;
            break;
        }
    }

    Ok(BtScores {
        strengths,
        iterations,
        converged,
        floored,
    })
}

fn check_connected(votes: &VoteMatrix) -> Result<(), StatsError> {
    let m = votes.len();
    let mut seen = vec![false; m];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(a) = stack.pop() {
        for b in 0..m {
            if !seen[b] && a != b && votes.comparisons(a, b) > 0.0 {
                seen[b] = true;
                stack.push(b);
            }
        }
    }
    if seen.iter().all(|&s| s) {
        Ok(())
    } else {
        Err(StatsError::Disconnected)
    }
}

/// A complete scene x method score table for one metric.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    methods: Vec<String>,
    scenes: Vec<String>,
    /// `values[scene][method]`.
    values: Vec<Vec<f64>>,
}

impl ScoreTable {
    pub fn new(
        methods: Vec<String>,
        scenes: Vec<String>,
        values: Vec<Vec<f64>>,
    ) -> Result<Self, StatsError> {
        if methods.len() < 2 {
            return Err(StatsError::Domain("need at least 2 methods".into()));
        }
        if scenes.is_empty() {
            return Err(StatsError::Domain("need at least 1 scene".into()));
        }
        if values.len() != scenes.len() || values.iter().any(|row| row.len() != methods.len()) {
            return Err(StatsError::Domain(format!(
                "value table is not {} x {}",
                scenes.len(),
                methods.len()
            )));
        }
        Ok(Self {
            methods,
            scenes,
            values,
        })
    }

    /// Builds the table from sparse `(scene, method) -> value` cells; every
    /// cell must be present.
    pub fn from_cells(cells: &HashMap<(String, String), f64>) -> Result<Self, StatsError> {
        let mut scenes: Vec<String> = Vec::new();
        let mut methods: Vec<String> = Vec::new();
        for (scene, method) in cells.keys() {
            if !scenes.contains(scene) {
                scenes.push(scene.clone());
            }
            if !methods.contains(method) {
                methods.push(method.clone());
            }
        }
        scenes.sort();
        methods.sort();
        let mut missing = Vec::new();
        let mut values = Vec::with_capacity(scenes.len());
        for scene in &scenes {
            let mut row = Vec::with_capacity(methods.len());
            for method in &methods {
                match cells.get(&(scene.clone(), method.clone())) {
                    Some(&v) => row.push(v),
                    None => missing.push(format!("{scene}/{method}")),
                }
            }
            values.push(row);
        }
        if !missing.is_empty() {
            missing.sort();
            return Err(StatsError::IncompleteData(missing));
        }
        Self::new(methods, scenes, values)
    }

    pub fn methods(&self) -> &[String] {
        &self.methods
    }

    pub fn scenes(&self) -> &[String] {
        &self.scenes
    }

    pub fn value(&self, scene: usize, method: usize) -> f64 {
        self.values[scene][method]
    }
}

/// Relative tolerance below which two objective scores count as a tie.
pub const SCORE_TIE_REL_TOL: f64 = 1e-9;

/// Pairwise preference percentages from objective scores.
///
/// Per scene and unordered method pair the better score earns one win and an
/// exact tie earns half a win each; a method's percentage is its win share
/// of all `scenes * C(methods, 2)` comparisons, so the output sums to 100.
pub fn objective_preference(table: &ScoreTable, polarity: Polarity) -> Result<Vec<f64>, StatsError> {
    let m = table.methods().len();
    let s = table.scenes().len();
    let mut wins = vec![0.0f64; m];
    for scene in 0..s {
        for a in 0..m {
            for b in (a + 1)..m {
                let va = table.value(scene, a);
                let vb = table.value(scene, b);
                if scores_tie(va, vb) {
                    wins[a] += 0.5;
                    wins[b] += 0.5;
                } else if polarity.prefers(va, vb) {
                    wins[a] += 1.0;
                } else {
                    wins[b] += 1.0;
                }
            }
        }
    }
    let comparisons = (s * m * (m - 1) / 2) as f64;
    Ok(wins.iter().map(|&w| 100.0 * w / comparisons).collect())
}

fn scores_tie(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= SCORE_TIE_REL_TOL * a.abs().max(b.abs())
}

/// One row of a vote CSV: votes for a method pair within one scene.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteRecord {
    pub scene: String,
    pub method_a: String,
    pub method_b: String,
    pub votes_a: f64,
    pub votes_b: f64,
    pub ties: f64,
}

/// Parses the vote CSV format (`scene,method_a,method_b,votes_a,votes_b,ties`).
pub fn parse_vote_csv(reader: impl std::io::Read) -> Result<Vec<VoteRecord>, StatsError> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    {
        let headers = csv_reader
            .headers()
            .map_err(|e| StatsError::CsvRow {
                row: 1,
                detail: e.to_string(),
            })?
            .clone();
        let expected = ["scene", "method_a", "method_b", "votes_a", "votes_b", "ties"];
        let got: Vec<&str> = headers.iter().collect();
        if got != expected {
            return Err(StatsError::CsvRow {
                row: 1,
                detail: format!("header {got:?}, expected {expected:?}"),
            });
        }
    }
    let mut records = Vec::new();
    for (i, row) in csv_reader.records().enumerate() {
        // +2: one for the header, one for 1-based numbering.
        let row_no = i + 2;
        let row = row.map_err(|e| StatsError::CsvRow {
            row: row_no,
            detail: e.to_string(),
        })?;
        if row.len() != 6 {
            return Err(StatsError::CsvRow {
                row: row_no,
                detail: format!("{} fields, expected 6", row.len()),
            });
        }
        let number = |idx: usize, name: &str| -> Result<f64, StatsError> {
            let v: f64 = row[idx].parse().map_err(|_| StatsError::CsvRow {
                row: row_no,
                detail: format!("{name} {:?} is not a number", &row[idx]),
            })?;
            if v.is_nan() || v < 0.0 {
                return Err(StatsError::CsvRow {
                    row: row_no,
                    detail: format!("{name} {v} is negative"),
                });
            }
            Ok(v)
        };
        if row[1] == row[2] {
            return Err(StatsError::CsvRow {
                row: row_no,
                detail: format!("method compared against itself: {:?}", &row[1]),
            });
        }
        records.push(VoteRecord {
            scene: row[0].to_string(),
            method_a: row[1].to_string(),
            method_b: row[2].to_string(),
            votes_a: number(3, "votes_a")?,
            votes_b: number(4, "votes_b")?,
            ties: number(5, "ties")?,
        });
    }
    Ok(records)
}

/// Accumulates vote records into one matrix. Methods appear in first-seen
/// order; pair totals must agree across the records.
pub fn vote_matrix_from_records(records: &[VoteRecord]) -> Result<VoteMatrix, StatsError> {
    if records.is_empty() {
        return Err(StatsError::InvalidVotes("no vote records".into()));
    }
    let mut methods: Vec<String> = Vec::new();
    for r in records {
        for name in [&r.method_a, &r.method_b] {
            if !methods.contains(name) {
                methods.push(name.clone());
            }
        }
    }
    let m = methods.len();
    let mut wins = vec![vec![0.0; m]; m];
    let mut ties = vec![vec![0.0; m]; m];
    for r in records {
        let a = methods.iter().position(|x| x == &r.method_a).unwrap();
        let b = methods.iter().position(|x| x == &r.method_b).unwrap();
        wins[a][b] += r.votes_a;
        wins[b][a] += r.votes_b;
        ties[a][b] += r.ties;
        ties[b][a] += r.ties;
    }
    // Every observed pair must total the same comparison count.
    let mut n_per_pair: Option<f64> = None;
    for a in 0..m {
        for b in (a + 1)..m {
            let total = wins[a][b] + wins[b][a] + ties[a][b];
            if total == 0.0 {
                continue;
            }
            match n_per_pair {
                None => n_per_pair = Some(total),
                Some(n) if (n - total).abs() > 1e-9 => {
                    return Err(StatsError::InvalidVotes(format!(
                        "pair ({}, {}) totals {total}, other pairs total {n}",
                        methods[a], methods[b]
                    )));
                }
                _ => {}
            }
        }
    }
    let n = n_per_pair.ok_or_else(|| StatsError::InvalidVotes("no comparisons".into()))?;
    if (n - n.round()).abs() > 1e-9 || n < 1.0 {
        return Err(StatsError::InvalidVotes(format!(
            "per-pair comparison count {n} is not a positive integer"
        )));
    }
    VoteMatrix::new(methods, wins, ties, n.round() as u32)
}

/// Per-opponent preference numbers for one method.
#[derive(Debug, Clone, Serialize)]
pub struct PairPreference {
    pub opponent: String,
    pub wins: f64,
    pub ties: f64,
    pub pref_prob: f64,
    pub verdict: Verdict,
}

/// Everything the analysis produces for one method.
#[derive(Debug, Clone, Serialize)]
pub struct MethodAnalysis {
    pub method: String,
    /// Preference probability against each opponent separately.
    pub per_pair: Vec<PairPreference>,
    /// Mean of the per-pair probabilities: one number per method, distinct
    /// from (and labeled differently to) the per-pair values.
    pub mean_pref_prob: f64,
    pub total_wins: f64,
    pub bt_strength: f64,
}

/// Full statistical readout of a vote matrix.
#[derive(Debug, Clone, Serialize)]
pub struct VoteAnalysis {
    pub n_per_pair: u32,
    pub alpha: f64,
    pub threshold_low: Option<u64>,
    pub threshold_high: u64,
    pub methods: Vec<MethodAnalysis>,
    pub bt_iterations: usize,
    pub bt_converged: bool,
}

/// Runs preference probabilities, verdicts and Bradley-Terry scaling on one
/// vote matrix.
pub fn analyze_votes(votes: &VoteMatrix, alpha: f64) -> Result<VoteAnalysis, StatsError> {
    let n = votes.n_per_pair();
    let (threshold_low, threshold_high) = significance_thresholds(u64::from(n), alpha)?;
    let bt = bradley_terry(votes, BT_DEFAULT_TOL, BT_DEFAULT_MAX_ITER)?;

    let mut methods = Vec::with_capacity(votes.len());
    for a in 0..votes.len() {
        let mut per_pair = Vec::new();
        let mut probs = Vec::new();
        for b in 0..votes.len() {
            if a == b || votes.comparisons(a, b) == 0.0 {
                continue;
            }
            let wins = votes.wins(a, b);
            let ties = votes.ties(a, b);
            let p = pref_prob(wins, n, ties)?;
            per_pair.push(PairPreference {
                opponent: votes.methods()[b].clone(),
                wins,
                ties,
                pref_prob: p,
                verdict: classify(wins, n, alpha)?,
            });
            probs.push(p);
        }
        let mean_pref_prob = if probs.is_empty() {
            0.5
        } else {
            compensated_sum(probs.iter().copied()) / probs.len() as f64
        };
        methods.push(MethodAnalysis {
            method: votes.methods()[a].clone(),
            total_wins: (0..votes.len()).map(|b| votes.wins(a, b)).sum(),
            per_pair,
            mean_pref_prob,
            bt_strength: bt.strengths[a],
        });
    }
    Ok(VoteAnalysis {
        n_per_pair: n,
        alpha,
        threshold_low,
        threshold_high,
        methods,
        bt_iterations: bt.iterations,
        bt_converged: bt.converged,
    })
}
