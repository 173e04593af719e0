//! Random search for matrices with a large quantum/classical ratio, i.e.
//! finite lower bounds on the constants `K(n, m)` whose limit is the
//! Grothendieck constant.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::classical::classical_bound;
use crate::error::{Error, Result};
use crate::matrix::{self, CoefficientMatrix};
use crate::quantum::{quantum_bound, QuantumOptions};

/// Largest side length accepted by the search.
pub const MAX_SEARCH_SIDE: usize = 12;

/// One evaluated matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchRecord {
    #[serde(with = "matrix::serde_format")]
    pub matrix: CoefficientMatrix,
    pub ratio: f64,
    pub classical: f64,
    pub quantum: f64,
    pub iteration_found: usize,
    pub seed: u64,
}

/// Search configuration. The defaults follow [`RatioSearch::new`].
#[derive(Debug, Clone)]
pub struct RatioSearch {
    pub rows: usize,
    pub cols: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Mix fresh samples with single-entry perturbations of the best matrix.
    pub hill_climb: bool,
    /// Every `fresh_period`-th iteration draws a fresh sample when climbing.
    pub fresh_period: usize,
    pub step_scale: f64,
    /// The step halves after every `shrink_after` iterations without improvement.
    pub shrink_after: usize,
    /// Quantum solver settings inside the loop.
    pub inner: QuantumOptions,
    /// Quantum solver settings for re-verifying the best record.
    pub verify: QuantumOptions,
    /// Matrices evaluated before the random stream, as iterations `0..k`.
    pub initial: Vec<CoefficientMatrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub best: SearchRecord,
    /// Records for the `initial` matrices, in order.
    pub initial: Vec<SearchRecord>,
    /// Every strict improvement of the running best, in order.
    pub improvements: Vec<SearchRecord>,
}

impl RatioSearch {
    pub fn new(rows: usize, cols: usize, iterations: usize, seed: u64) -> Self {
        Self {
            rows,
            cols,
            iterations,
            seed,
            hill_climb: true,
            fresh_period: 4,
            step_scale: 0.1,
            shrink_after: 10,
            inner: QuantumOptions {
                restarts: 4,
                tol: 1e-5,
                ..QuantumOptions::default()
            },
            verify: QuantumOptions::default(),
            initial: Vec::new(),
        }
    }

    pub fn with_initial(mut self, a: CoefficientMatrix) -> Self {
        self.initial.push(a);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.iterations == 0 && self.initial.is_empty() {
            return Err(Error::InvalidArgument("iteration budget is zero".into()));
        }
        if self.fresh_period == 0 || self.shrink_after == 0 {
            return Err(Error::InvalidArgument(
                "fresh period and shrink interval must be positive".into(),
            ));
        }
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidArgument(
                "matrix sides must be positive".into(),
            ));
        }
        if self.rows > MAX_SEARCH_SIDE || self.cols > MAX_SEARCH_SIDE {
            return Err(Error::SizeLimit(format!(
                "search is limited to {MAX_SEARCH_SIDE}x{MAX_SEARCH_SIDE}, got {}x{}",
                self.rows, self.cols
            )));
        }
        if let Some(a) = self
            .initial
            .iter()
            .find(|a| a.rows() != self.rows || a.cols() != self.cols)
        {
            return Err(Error::DimensionMismatch(format!(
                "initial matrix is {}x{}, search is {}x{}",
                a.rows(),
                a.cols(),
                self.rows,
                self.cols
            )));
        }
        Ok(())
    }

    fn evaluate(
        &self,
        a: CoefficientMatrix,
        iteration: usize,
        opts: &QuantumOptions,
    ) -> Result<Option<SearchRecord>> {
        let classical = classical_bound(&a)?.bound;
        if classical <= 0.0 {
            return Ok(None);
        }
        let quantum = quantum_bound(&a, opts)?.primal.objective;
        Ok(Some(SearchRecord {
            matrix: a,
            ratio: quantum / classical,
            classical,
            quantum,
            iteration_found: iteration,
            seed: self.seed,
        }))
    }

    fn iteration_rng(&self, iteration: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(iteration as u64);
        rng
    }

    /// Runs the search. Each iteration draws from its own seeded stream, so a
    /// longer run replays a shorter one exactly before continuing.
    pub fn run(&self) -> Result<SearchOutcome> {
        self.validate()?;
        let mut best: Option<SearchRecord> = None;
        let mut improvements = Vec::new();
        let mut initial = Vec::new();

        let mut consider = |rec: SearchRecord, best: &mut Option<SearchRecord>| {
            if best.as_ref().is_none_or(|b| rec.ratio > b.ratio) {
                improvements.push(rec.clone());
                *best = Some(rec);
            }
        };

        for (i, a) in self.initial.iter().enumerate() {
            let opts = QuantumOptions {
                seed: self.seed,
                ..self.verify.clone()
            };
            if let Some(rec) = self.evaluate(a.clone(), i, &opts)? {
                initial.push(rec.clone());
                consider(rec, &mut best);
            }
        }

        let offset = self.initial.len();
        let step = Normal::new(0.0, self.step_scale)
            .map_err(|e| Error::InvalidArgument(format!("step scale: {e}")))?;
        let mut stalled = 0usize;
        for t in 0..self.iterations {
            let iteration = offset + t;
            let mut rng = self.iteration_rng(iteration);
            let candidate = match &best {
                Some(b) if self.hill_climb && t % self.fresh_period != 0 => {
                    // climb on an rms-normalized copy so the step is relative
                    let mut entries = b.matrix.entries().to_vec();
                    let rms =
                        (entries.iter().map(|x| x * x).sum::<f64>() / entries.len() as f64).sqrt();
                    entries.iter_mut().for_each(|x| *x /= rms);
                    let pos = rng.random_range(0..entries.len());
                    let shrink = 0.5f64.powi((stalled / self.shrink_after) as i32);
                    entries[pos] += shrink * step.sample(&mut rng);
                    CoefficientMatrix::new(self.rows, self.cols, entries)?
                }
                _ => {
                    let entries = (0..self.rows * self.cols)
                        .map(|_| StandardNormal.sample(&mut rng))
                        .collect();
                    CoefficientMatrix::new(self.rows, self.cols, entries)?
                }
            };
            let opts = QuantumOptions {
                seed: rng.random(),
                ..self.inner.clone()
            };
            let before = best.as_ref().map(|b| b.ratio);
            if let Some(rec) = self.evaluate(candidate, iteration, &opts)? {
                consider(rec, &mut best);
            }
            if best.as_ref().map(|b| b.ratio) == before {
                stalled += 1;
            } else {
                stalled = 0;
            }
        }

        let mut best = best.ok_or_else(|| {
            Error::InvalidArgument("no candidate had a positive classical bound".into())
        })?;
        let verified = quantum_bound(
            &best.matrix,
            &QuantumOptions {
                seed: self.seed,
                ..self.verify.clone()
            },
        )?;
        if verified.primal.objective > best.quantum {
            best.quantum = verified.primal.objective;
            best.ratio = best.quantum / best.classical;
        }
        Ok(SearchOutcome {
            best,
            initial,
            improvements,
        })
    }
}

/// Best record of a default-configured search.
pub fn ratio_search(n: usize, m: usize, iterations: usize, seed: u64) -> Result<SearchRecord> {
    if iterations == 0 {
        return Err(Error::InvalidArgument("iteration budget is zero".into()));
    }
    Ok(RatioSearch::new(n, m, iterations, seed).run()?.best)
}

/// Appends one record as a JSON line.
pub fn append_record<W: Write>(record: &SearchRecord, mut sink: W) -> Result<()> {
    serde_json::to_writer(&mut sink, record).map_err(std::io::Error::from)?;
    sink.write_all(b"\n")?;
    Ok(())
}

/// Reads every non-blank line of a leaderboard.
pub fn read_ledger<R: BufRead>(source: R) -> Result<Vec<SearchRecord>> {
    let mut out = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SearchRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            location: format!("ledger line {}", i + 1),
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Literature constants for comparison with search results.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceConstants {
    /// Krivine's upper bound `π / (2 ln(1 + √2))`.
    pub grothendieck_upper: f64,
    /// Grothendieck's lower bound `π / 2`.
    pub grothendieck_lower: f64,
    /// Quoted approximate value and uncertainty `(1.73, 0.06)`.
    pub tsirelson_estimate: (f64, f64),
    /// Lower bound on `K_20`.
    pub k20_lower: f64,
}

impl ReferenceConstants {
    /// Fishburn-Reeds lower bound `K_{q(q-1)} >= (3q - 1) / (2q - 1)`.
    pub fn fishburn_reeds(&self, q: u32) -> Result<f64> {
        if q < 2 {
            return Err(Error::Domain(format!(
                "Fishburn-Reeds bound needs q >= 2, got {q}"
            )));
        }
        let q = f64::from(q);
        Ok((3.0 * q - 1.0) / (2.0 * q - 1.0))
    }
}

pub fn reference_constants() -> ReferenceConstants {
    ReferenceConstants {
        grothendieck_upper: PI / (2.0 * (1.0 + SQRT_2).ln()),
        grothendieck_lower: FRAC_PI_2,
        tsirelson_estimate: (1.73, 0.06),
        k20_lower: 10.0 / 7.0,
    }
}
